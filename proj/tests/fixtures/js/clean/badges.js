/* Adds badges next to usernames.
   Note: getElementById("input") style lookups are deliberately avoided. */
const posts = document.querySelectorAll(".post .author");
const label = 'input'; // just a word
posts.forEach(function (el) {
  const b = document.createElement("span");
  b.className = "badge";
  b.textContent = el.dataset.rank ? el.dataset.rank : "new";
  el.appendChild(b);
});
const doc = { querySelector: label };
