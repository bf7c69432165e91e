const p = document.getElementById('pw')
const label = "password field";
report(label);
