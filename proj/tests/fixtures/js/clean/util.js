export function debounce(fn, ms) {
  let t = null;
  return function (...args) {
    clearTimeout(t);
    t = setTimeout(() => fn.apply(this, args), ms);
  };
}

export const pattern = /querySelector\("input"\)/;
export const tmpl = `${"input"}`;
export function evaluate(expr) { return expr.evaluated; }
