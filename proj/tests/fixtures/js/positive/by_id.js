var user = document.getElementById("INPUT_user");
var next = document.querySelector('.next');
