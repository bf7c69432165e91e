chrome.runtime.onInstalled.addListener(function () {
  chrome.contextMenus.create({ id: "lookup", title: "Look up", contexts: ["selection"] });
});

chrome.contextMenus.onClicked.addListener(function (info) {
  var q = encodeURIComponent(info.selectionText || "");
  chrome.tabs.create({ url: "https://dict.example.com/?q=" + q });
});
