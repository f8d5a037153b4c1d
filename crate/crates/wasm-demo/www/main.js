import init, { simulate, pivot_histogram, failure_curve } from "./pkg/unseen_wasm_demo.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function params() {
  return { env: $("env").value.trim(), n: num("n"), t: num("t"), m: num("m"), level: num("level"), seed: num("seed") };
}

function guard(out, fn) {
  try {
    out.classList.remove("err");
    fn();
  } catch (e) {
    out.classList.add("err");
    out.textContent = String(e);
  }
}

function axes(ctx, w, h, pad) {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#888";
  ctx.beginPath();
  ctx.moveTo(pad, pad / 2);
  ctx.lineTo(pad, h - pad);
  ctx.lineTo(w - pad / 2, h - pad);
  ctx.stroke();
}

function polyline(ctx, xs, ys, sx, sy, color) {
  ctx.strokeStyle = color;
  ctx.lineWidth = 2;
  ctx.beginPath();
  xs.forEach((x, i) => (i ? ctx.lineTo(sx(x), sy(ys[i])) : ctx.moveTo(sx(x), sy(ys[i]))));
  ctx.stroke();
  ctx.lineWidth = 1;
}

function runSimulation() {
  const p = params();
  const out = $("sim-out");
  guard(out, () => {
    const r = JSON.parse(simulate(p.env, p.n, p.t, p.m, p.level, p.seed));
    out.textContent = JSON.stringify(r, null, 2);
    const c = $("sim-canvas"), ctx = c.getContext("2d");
    ctx.clearRect(0, 0, c.width, c.height);
    const pr = r.prediction;
    if (pr.status !== "ok") return;
    // Log-scale axis: the interval has constant width here.
    const lo = Math.log10(Math.min(pr.lower, r.true_u) / 3), hi = Math.log10(Math.min(1, Math.max(pr.upper, r.true_u) * 3));
    const sx = (v) => 40 + ((Math.log10(v) - lo) / (hi - lo)) * (c.width - 80);
    ctx.fillStyle = "#cfe0f5";
    ctx.fillRect(sx(pr.lower), 30, sx(pr.upper) - sx(pr.lower), 40);
    ctx.fillStyle = "#1f5fa8";
    ctx.fillRect(sx(pr.point) - 1, 25, 3, 50);
    ctx.fillStyle = "#c0392b";
    ctx.fillRect(sx(r.true_u) - 1, 20, 3, 60);
    ctx.fillStyle = "#222";
    ctx.fillText(`interval [${pr.lower.toPrecision(3)}, ${pr.upper.toPrecision(3)}]  point ${pr.point.toPrecision(3)}  true U(t) ${r.true_u.toPrecision(3)} (red)  log10 scale`, 40, 100);
  });
}

function runHistogram() {
  const p = params();
  const out = $("hist-out");
  guard(out, () => {
    const h = JSON.parse(pivot_histogram(p.env, p.n, p.t, p.m, num("reps"), p.seed, 40));
    const c = $("hist-canvas"), ctx = c.getContext("2d"), pad = 40;
    axes(ctx, c.width, c.height, pad);
    const xmax = h.edges[h.edges.length - 1];
    const ymax = Math.max(...h.density, ...h.gamma_pdf) * 1.1 || 1;
    const sx = (x) => pad + (x / xmax) * (c.width - 1.5 * pad);
    const sy = (y) => c.height - pad - (y / ymax) * (c.height - 1.5 * pad);
    ctx.fillStyle = "#9ec1e8";
    h.density.forEach((d, i) => ctx.fillRect(sx(h.edges[i]), sy(d), sx(h.edges[i + 1]) - sx(h.edges[i]) - 1, sy(0) - sy(d)));
    polyline(ctx, h.gamma_x, h.gamma_pdf, sx, sy, "#c0392b");
    out.textContent = `${h.successes} of ${h.replicates} replicates succeeded; KS distance to Gamma(${p.m}, 1) = ${h.ks.toFixed(4)}`;
  });
}

function runCurve() {
  const p = params();
  const out = $("curve-out");
  guard(out, () => {
    const r = JSON.parse(failure_curve(p.env, p.n, p.m, p.level, num("curve-reps"), p.seed, num("points")));
    const c = $("curve-canvas"), ctx = c.getContext("2d"), pad = 40;
    axes(ctx, c.width, c.height, pad);
    const tmax = r.analytic_t[r.analytic_t.length - 1];
    const sx = (t) => pad + (t / tmax) * (c.width - 1.5 * pad);
    const sy = (y) => c.height - pad - y * (c.height - 1.5 * pad);
    polyline(ctx, r.analytic_t, r.analytic, sx, sy, "#c0392b");
    const dots = (key, color) => {
      ctx.fillStyle = color;
      r.rows.forEach((row) => ctx.fillRect(sx(row.t) - 3, sy(key(row)) - 3, 6, 6));
    };
    dots((row) => row.rate_cut_exceeds_sample, "#c0392b");
    dots((row) => 1 - row.rate_ok, "#1f5fa8");
    dots((row) => row.coverage ?? 0, "#2e8b57");
    ctx.fillStyle = "#222";
    ctx.fillText("red: cut-exceeds rate (line: analytic)   blue: total failure rate   green: coverage given success", pad, 14);
    out.textContent = `t from ${r.rows[0].t} to ${r.rows[r.rows.length - 1].t}; n = ${p.n}`;
  });
}

await init();
$("run-sim").addEventListener("click", runSimulation);
$("run-hist").addEventListener("click", runHistogram);
$("run-curve").addEventListener("click", runCurve);
runSimulation();
