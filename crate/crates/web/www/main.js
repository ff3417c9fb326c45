import init, { decay_profile, resolvent_landscape, scalar_conjugacy } from "./pkg/lattice_sternberg_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => parseFloat($(id).value);

function call(fn, ...args) {
  const out = JSON.parse(fn(...args));
  if (out.error) throw new Error(out.error);
  return out;
}

function frame(ctx, xs, ys) {
  const { width: w, height: h } = ctx.canvas;
  const pad = 40;
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  const [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  const sx = (x) => pad + ((x - x0) / (x1 - x0 || 1)) * (w - 2 * pad);
  const sy = (y) => h - pad - ((y - y0) / (y1 - y0 || 1)) * (h - 2 * pad);
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#444";
  ctx.fillText(y1.toPrecision(3), 2, pad);
  ctx.fillText(y0.toPrecision(3), 2, h - pad);
  ctx.fillText(x0.toPrecision(3), pad, h - pad + 14);
  ctx.fillText(x1.toPrecision(3), w - pad - 30, h - pad + 14);
  return { sx, sy };
}

function line(ctx, sx, sy, xs, ys, color) {
  ctx.strokeStyle = color;
  ctx.beginPath();
  let open = false;
  xs.forEach((x, i) => {
    if (ys[i] === null) { open = false; return; }
    if (open) ctx.lineTo(sx(x), sy(ys[i])); else ctx.moveTo(sx(x), sy(ys[i]));
    open = true;
  });
  ctx.stroke();
}

function drawDecay() {
  try {
    const d = call(decay_profile, num("d-alpha"), num("d-theta"), Math.round(num("d-radius")));
    const ctx = $("d-canvas").getContext("2d");
    const logs = d.gamma.map(Math.log10);
    const { sx, sy } = frame(ctx, d.r, logs);
    line(ctx, sx, sy, d.r, logs, "#1f77b4");
    $("d-info").textContent = `log₁₀ Γ(r); Γ(0) = ${d.amplitude.toExponential(3)}, certified: ${d.certified}, `
      + `sum margin ${d.sum_margin.toExponential(2)}, convolution margin ${d.conv_margin.toExponential(2)}`;
  } catch (e) { $("d-info").textContent = e.message; }
}

function drawLandscape() {
  try {
    const n = 80;
    const l = call(resolvent_landscape, num("r-l1"), num("r-l2"), num("r-c"), Math.round(num("r-radius")), -0.2, 1.0, -0.6, 0.6, n, n);
    const ctx = $("r-canvas").getContext("2d");
    const { width: w, height: h } = ctx.canvas;
    const finite = l.log_norm.filter((v) => v !== null);
    const lo = Math.min(...finite), hi = Math.max(...finite);
    const cw = w / n, ch = h / n;
    l.log_norm.forEach((v, k) => {
      const i = k % n, j = Math.floor(k / n);
      const t = v === null ? 1 : (v - lo) / (hi - lo || 1);
      ctx.fillStyle = `hsl(${240 - 240 * t}, 70%, ${30 + 40 * t}%)`;
      ctx.fillRect(i * cw, h - (j + 1) * ch, cw + 1, ch + 1);
    });
    ctx.strokeStyle = "#fff";
    for (const [re, im] of l.eigenvalues) {
      const x = ((re + 0.2) / 1.2) * w, y = h - ((im + 0.6) / 1.2) * h;
      ctx.beginPath(); ctx.moveTo(x - 4, y - 4); ctx.lineTo(x + 4, y + 4); ctx.moveTo(x + 4, y - 4); ctx.lineTo(x - 4, y + 4); ctx.stroke();
    }
    $("r-info").textContent = `log₁₀ ‖(A − λ)⁻¹‖_Γ from ${lo.toFixed(2)} to ${hi.toFixed(2)}; ${l.eigenvalues.length} eigenvalues marked.`;
  } catch (e) { $("r-info").textContent = e.message; }
}

function drawConjugacy() {
  try {
    const c = call(scalar_conjugacy, num("s-l"), num("s-c"), num("s-x"), 201);
    const ctx = $("s-canvas").getContext("2d");
    const ys = c.r.filter((v) => v !== null).concat(c.jet, c.x);
    const { sx, sy } = frame(ctx, c.x, ys);
    line(ctx, sx, sy, c.x, c.x, "#bbb");
    line(ctx, sx, sy, c.x, c.jet, "#ff7f0e");
    line(ctx, sx, sy, c.x, c.r, "#1f77b4");
    const dropped = c.r.filter((v) => v === null).length;
    $("s-info").textContent = `blue R(x), orange x + ${c.s0_quadratic.toPrecision(4)}x², grey identity; `
      + `certified radius ${c.certified_radius.toExponential(2)}; ${dropped} points escaped.`;
  } catch (e) { $("s-info").textContent = e.message; }
}

await init();
$("d-run").onclick = drawDecay;
$("r-run").onclick = drawLandscape;
$("s-run").onclick = drawConjugacy;
drawDecay();
drawLandscape();
drawConjugacy();
