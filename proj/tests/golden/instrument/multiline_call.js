const boxes = document.getElementsByClassName(
  "login-box"
);
console.log("FIELD_SENTRY::boxes::" + (function (v) { try { if (typeof v === "string") return v; if (v && typeof v.value === "string") return v.value; if (v && typeof v !== "function" && typeof v.length === "number") { var o = []; for (var i = 0; i < v.length; i++) { if (v[i] && typeof v[i].value === "string") o.push(v[i].value); } if (o.length) return o.join(","); } } catch (e) {} return "<novalue>"; })(boxes));
const count = boxes.length;
report(String(count));
