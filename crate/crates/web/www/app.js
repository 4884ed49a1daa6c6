import init, { poisson, value_curve, gap_trace } from "./pkg/ctmdp_reach_web.js";

const $ = (id) => document.getElementById(id);

const DEFAULT_PARAMS = { sjs: "2,1,2,3", detour: "1,10,2", choice: "2,1", birth: "3,1" };

function query() {
  return {
    kind: $("kind").value,
    params: $("params").value,
    variant: $("variant").value,
    objective: $("objective").value,
    eps: Number($("eps").value),
  };
}

function report(el, text, isError) {
  el.textContent = text;
  el.className = isError ? "err" : "";
}

// Draws series of [x, y] points. `logY` plots log10(y) and skips y <= 0.
function plot(canvas, series, { logY = false, bars = false, xLabel = "", yLabel = "" } = {}) {
  const ctx = canvas.getContext("2d");
  const W = canvas.width, H = canvas.height, pad = 44;
  ctx.clearRect(0, 0, W, H);
  const tf = (y) => (logY ? Math.log10(y) : y);
  const pts = series.flatMap((s) => s.points.filter(([, y]) => !logY || y > 0));
  if (pts.length === 0) return;
  let [x0, x1] = [Math.min(...pts.map((p) => p[0])), Math.max(...pts.map((p) => p[0]))];
  let [y0, y1] = [Math.min(...pts.map((p) => tf(p[1]))), Math.max(...pts.map((p) => tf(p[1])))];
  if (!logY) y0 = Math.min(0, y0);
  if (x1 === x0) x1 = x0 + 1;
  if (y1 === y0) y1 = y0 + 1;
  const sx = (x) => pad + ((x - x0) / (x1 - x0)) * (W - 2 * pad);
  const sy = (y) => H - pad - ((tf(y) - y0) / (y1 - y0)) * (H - 2 * pad);

  ctx.strokeStyle = "#999";
  ctx.fillStyle = "#444";
  ctx.font = "11px sans-serif";
  ctx.beginPath();
  ctx.moveTo(pad, pad / 2);
  ctx.lineTo(pad, H - pad);
  ctx.lineTo(W - pad / 2, H - pad);
  ctx.stroke();
  ctx.fillText(x0.toPrecision(3), pad, H - pad + 14);
  ctx.fillText(x1.toPrecision(3), W - pad - 20, H - pad + 14);
  ctx.fillText((logY ? "1e" + y1.toFixed(1) : y1.toPrecision(3)), 2, pad / 2 + 8);
  ctx.fillText((logY ? "1e" + y0.toFixed(1) : y0.toPrecision(3)), 2, H - pad);
  ctx.fillText(xLabel, W / 2, H - 8);
  ctx.fillText(yLabel, pad + 6, pad / 2 + 8);

  series.forEach((s, i) => {
    ctx.strokeStyle = ctx.fillStyle = s.color;
    const visible = s.points.filter(([, y]) => !logY || y > 0);
    if (bars) {
      const w = Math.max(1, (W - 2 * pad) / visible.length - 1);
      for (const [x, y] of visible) ctx.fillRect(sx(x) - w / 2, sy(y), w, H - pad - sy(y));
    } else {
      ctx.beginPath();
      visible.forEach(([x, y], j) => (j ? ctx.lineTo(sx(x), sy(y)) : ctx.moveTo(sx(x), sy(y))));
      ctx.stroke();
      for (const [x, y] of visible) ctx.fillRect(sx(x) - 2, sy(y) - 2, 4, 4);
    }
    if (s.label) ctx.fillText(s.label, W - pad - 90, pad / 2 + 14 * (i + 1));
  });
}

function runCurve() {
  const q = query();
  try {
    const c = JSON.parse(value_curve(q.kind, q.params, q.variant, q.objective, q.eps,
      Number($("tmax").value), Number($("points").value)));
    const pair = (ys) => c.times.map((t, i) => [t, ys[i]]);
    plot($("curve"), [
      { label: "lower", color: "#1f77b4", points: pair(c.lower) },
      { label: "upper", color: "#d62728", points: pair(c.upper) },
    ], { xLabel: "time bound T", yLabel: "probability" });
    const capped = c.converged.filter((ok) => !ok).length;
    report($("curve-info"),
      `${c.model}: ${c.states} states, up to ${Math.max(...c.rounds)} rounds` +
      (capped ? `, ${capped} points hit the rate cap` : ""), false);
  } catch (e) {
    report($("curve-info"), String(e), true);
  }
}

function runTrace() {
  const q = query();
  try {
    const t = JSON.parse(gap_trace(q.kind, q.params, q.variant, q.objective, q.eps, Number($("t").value)));
    plot($("trace"), [
      { label: "gap", color: "#2ca02c", points: t.rounds.map((r, i) => [i + 1, r.gap]) },
      { label: "target", color: "#888", points: t.rounds.map((_, i) => [i + 1, t.target]) },
    ], { logY: true, xLabel: "round", yLabel: "gap (log)" });
    const rows = t.rounds.map((r, i) => `${i + 1}\tlambda=${r.lambda}\tN=${r.depth}\tgap=${r.gap.toExponential(3)}`);
    report($("trace-info"),
      `${t.model}: value ${t.value.toFixed(8)} in [${t.lower.toFixed(8)}, ${t.upper.toFixed(8)}]` +
      (t.converged ? "" : " (rate cap reached)") + "\n" + rows.join("\n"), false);
  } catch (e) {
    report($("trace-info"), String(e), true);
  }
}

function runPoisson() {
  try {
    const w = JSON.parse(poisson(Number($("rt").value), Number($("delta").value)));
    const pts = w.weights.map((p, i) => [i, p]).slice(w.left);
    plot($("poisson"), [{ color: "#9467bd", points: pts }], { bars: true, xLabel: "steps i", yLabel: "weight" });
    report($("poisson-info"), `depth N = ${w.depth}, first stored index ${w.left}, tail mass ${w.tail_mass.toExponential(3)}`, false);
  } catch (e) {
    report($("poisson-info"), String(e), true);
  }
}

await init();
$("kind").addEventListener("change", () => ($("params").value = DEFAULT_PARAMS[$("kind").value]));
$("run-curve").addEventListener("click", runCurve);
$("run-trace").addEventListener("click", runTrace);
$("run-poisson").addEventListener("click", runPoisson);
runCurve();
runTrace();
runPoisson();
