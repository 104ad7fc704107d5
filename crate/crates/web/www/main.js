import init, { bound_curve, rayleigh_curve, ground_state } from "./pkg/brokenline_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => parseFloat($(id).value);

function fail(out, e) {
  out.className = "out err";
  out.textContent = String(e);
}

// Line plot of several series sharing one x axis; `logx` plots against log10(x).
function plot(canvas, xs, series, { logx = false } = {}) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = 50;
  ctx.clearRect(0, 0, w, h);
  const tx = xs.map((x) => (logx ? Math.log10(x) : x));
  const ys = series.flatMap((s) => s.y).filter(Number.isFinite);
  const [x0, x1] = [Math.min(...tx), Math.max(...tx)];
  let [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  if (y0 === y1) { y0 -= 1e-6; y1 += 1e-6; }
  const sx = (x) => pad + ((x - x0) / (x1 - x0)) * (w - 2 * pad);
  const sy = (y) => h - pad + ((y0 - y) / (y1 - y0)) * (h - 2 * pad);

  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#444";
  ctx.font = "11px sans-serif";
  ctx.fillText(y1.toPrecision(6), 2, pad + 4);
  ctx.fillText(y0.toPrecision(6), 2, h - pad);
  ctx.fillText((logx ? "1e" : "") + x0.toPrecision(3), pad, h - pad + 16);
  ctx.fillText((logx ? "1e" : "") + x1.toPrecision(3), w - pad - 30, h - pad + 16);

  series.forEach((s, k) => {
    ctx.strokeStyle = s.color;
    ctx.beginPath();
    s.y.forEach((y, i) => (i ? ctx.lineTo(sx(tx[i]), sy(y)) : ctx.moveTo(sx(tx[i]), sy(y))));
    ctx.stroke();
    ctx.fillStyle = s.color;
    ctx.fillText(s.label, w - pad - 160, pad + 14 + 14 * k);
  });
}

function runBound() {
  const out = $("b-out");
  try {
    const alpha = num("b-alpha");
    const r = JSON.parse(bound_curve(0.05, Math.PI / 2 - 0.05, 200, alpha));
    const threshold = r.theta.map(() => -alpha * alpha / 4);
    plot($("b-plot"), r.theta, [
      { y: r.bound, color: "#c33", label: "explicit upper bound" },
      { y: threshold, color: "#36c", label: "-α²/4" },
    ]);
    out.className = "out";
    out.textContent = `Λ(θ) from ${r.capital_lambda[0].toExponential(4)} down to ${r.capital_lambda.at(-1).toExponential(4)}`;
  } catch (e) {
    fail(out, e);
  }
}

function runRayleigh() {
  const out = $("r-out");
  try {
    const [theta, alpha, rho] = [num("r-theta"), num("r-alpha"), num("r-rho")];
    const scale = 1 / (alpha * Math.tan(theta));
    const r = JSON.parse(rayleigh_curve(theta, alpha, rho, 2 * scale, 1e4 * scale, 60));
    plot($("r-plot"), r.n, [
      { y: r.quotient, color: "#c33", label: "quotient" },
      { y: r.n.map(() => r.threshold), color: "#36c", label: "-α²/4" },
      { y: r.n.map(() => r.bound), color: "#3a3", label: "explicit bound" },
    ], { logx: true });
    const best = Math.min(...r.quotient);
    out.className = "out";
    out.textContent = `closed-form R(g_ρ) = ${r.closed_r.toPrecision(8)}\nlowest quotient on the curve = ${best.toPrecision(8)}`;
  } catch (e) {
    fail(out, e);
  }
}

function runGround() {
  const out = $("g-out");
  out.className = "out";
  out.textContent = "solving...";
  // Let the status text paint before the blocking solve.
  setTimeout(() => {
    try {
      const t0 = performance.now();
      const r = JSON.parse(ground_state(num("g-theta"), num("g-alpha"), num("g-box"), Math.round(num("g-cells"))));
      const ms = performance.now() - t0;
      drawField($("g-plot"), r.field, r.nodes);
      const bound = r.bound === null ? "n/a" : r.bound.toPrecision(8);
      out.textContent = `λ_h = ${r.eigenvalue.toPrecision(8)}  (single grid, ${r.nodes}² nodes, ${r.iterations} iterations, ${ms.toFixed(0)} ms)\n` +
        `explicit bound = ${bound}\n-α²/4 = ${r.threshold}`;
    } catch (e) {
      fail(out, e);
    }
  }, 10);
}

function drawField(canvas, field, nodes) {
  const ctx = canvas.getContext("2d");
  const img = ctx.createImageData(nodes, nodes);
  for (let j = 0; j < nodes; j++) {
    for (let i = 0; i < nodes; i++) {
      // Storage is x2-major; draw x2 upward.
      const v = Math.max(0, field[j * nodes + i]);
      const p = 4 * ((nodes - 1 - j) * nodes + i);
      img.data[p] = 255 * Math.sqrt(v);
      img.data[p + 1] = 255 * v * v;
      img.data[p + 2] = 80 * (1 - v);
      img.data[p + 3] = 255;
    }
  }
  const tmp = new OffscreenCanvas(nodes, nodes);
  tmp.getContext("2d").putImageData(img, 0, 0);
  ctx.imageSmoothingEnabled = true;
  ctx.drawImage(tmp, 0, 0, canvas.width, canvas.height);
}

await init();
$("b-run").onclick = runBound;
$("r-run").onclick = runRayleigh;
$("g-run").onclick = runGround;
runBound();
runRayleigh();
