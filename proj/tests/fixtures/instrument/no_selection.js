// nothing to instrument here
var total = 0;
[1, 2, 3].forEach(function (n) { total = total + n; });
report(String(total));
