import init, { skew_paths, local_time_curves, scale_function } from "./pkg/semilt_wasm.js";

const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

function plot(canvas, series, { hline } = {}) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  let lo = Infinity, hi = -Infinity;
  for (const s of series) for (const v of s.values) { lo = Math.min(lo, v); hi = Math.max(hi, v); }
  if (hline !== undefined) { lo = Math.min(lo, hline); hi = Math.max(hi, hline); }
  if (hi - lo < 1e-12) { hi += 1; lo -= 1; }
  const pad = 0.05 * (hi - lo);
  lo -= pad; hi += pad;
  const y = (v) => h - ((v - lo) / (hi - lo)) * h;
  if (hline !== undefined) {
    ctx.strokeStyle = "#999"; ctx.setLineDash([4, 4]); ctx.beginPath();
    ctx.moveTo(0, y(hline)); ctx.lineTo(w, y(hline)); ctx.stroke(); ctx.setLineDash([]);
  }
  series.forEach((s, i) => {
    const n = s.values.length;
    ctx.strokeStyle = s.color || COLORS[i % COLORS.length];
    ctx.lineWidth = 1;
    ctx.beginPath();
    s.values.forEach((v, k) => {
      const px = (k / (n - 1)) * w;
      k === 0 ? ctx.moveTo(px, y(v)) : ctx.lineTo(px, y(v));
    });
    ctx.stroke();
  });
  ctx.fillStyle = "#555";
  ctx.fillText(hi.toFixed(2), 4, 12);
  ctx.fillText(lo.toFixed(2), 4, h - 4);
}

function guard(errId, f) {
  const el = document.getElementById(errId);
  try { f(); el.textContent = ""; } catch (e) { el.textContent = String(e.message || e); }
}

const $ = (id) => document.getElementById(id);

function drawSkew() {
  guard("skew-err", () => {
    const beta = Number($("beta").value);
    $("beta-out").textContent = beta;
    const paths = Number($("skew-paths").value);
    const steps = 2048;
    const flat = skew_paths(beta, steps, paths, BigInt($("skew-seed").value));
    const series = [];
    let positive = 0;
    for (let i = 0; i < paths; i++) {
      const v = flat.subarray(i * (steps + 1), (i + 1) * (steps + 1));
      if (v[steps] > 0) positive++;
      series.push({ values: v });
    }
    plot($("skew"), series, { hline: 0 });
    $("skew-info").textContent = `${positive}/${paths} paths end above 0; the law gives P(X₁ > 0) = ${((1 + beta) / 2).toFixed(3)}`;
  });
}

function drawLocalTime() {
  guard("lt-err", () => {
    const level = Number($("level").value);
    $("level-out").textContent = level;
    const steps = Number($("lt-steps").value);
    const v = local_time_curves(level, steps, BigInt($("lt-seed").value));
    const n = steps + 1;
    const block = (i) => v.subarray(i * n, (i + 1) * n);
    plot($("lt-path"), [{ values: block(0), color: "#444" }], { hline: level });
    const names = ["occupation", "upcrossing", "symmetric Tanaka"];
    plot($("lt"), [1, 2, 3].map((i) => ({ values: block(i), color: COLORS[i - 1] })));
    $("lt-legend").innerHTML = names
      .map((name, i) => `<span style="color:${COLORS[i]}">■ ${name}: ${block(i + 1)[steps].toFixed(4)}</span>`)
      .join("");
  });
}

function drawScale() {
  guard("scale-err", () => {
    const v = scale_function($("measure").value, -2, 3, 501);
    plot($("scale"), [{ values: v }], { hline: 0 });
  });
}

await init();
for (const id of ["beta", "skew-paths", "skew-seed"]) $(id).addEventListener("input", drawSkew);
for (const id of ["level", "lt-steps", "lt-seed"]) $(id).addEventListener("input", drawLocalTime);
$("scale-go").addEventListener("click", drawScale);
$("measure").addEventListener("keydown", (e) => { if (e.key === "Enter") drawScale(); });
drawSkew();
drawLocalTime();
drawScale();
