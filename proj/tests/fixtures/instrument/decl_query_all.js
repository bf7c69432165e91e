var els = document.querySelectorAll("input");
for (var i = 0; i < els.length; i++) {
  report(els[i].name);
}
