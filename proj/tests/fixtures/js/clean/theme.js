(function () {
  var rules = [
    "body { background: #111; color: #eee; }",
    "a { color: #8cf; }"
  ];
  var style = document.createElement("style");
  style.textContent = rules.join("\n");
  document.head.appendChild(style);
  // we never touch document.querySelectorAll("input") here
  var links = document.getElementsByTagName("a");
  for (var i = 0; i < links.length; i++) links[i].rel = "noopener";
})();
