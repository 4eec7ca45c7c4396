import init, { quon_spectra, pseudoboson_spectrum, oscillator_partner } from "./pkg/intertwine_browser.js";

const $ = (id) => document.getElementById(id);
const fmt = (x) => (Math.abs(x) < 1e-3 && x !== 0 ? x.toExponential(2) : x.toFixed(4));

function frame(canvas, xs, ys) {
  const ctx = canvas.getContext("2d");
  const pad = 36;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  const [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  const sx = (x) => pad + ((x - x0) / (x1 - x0 || 1)) * (canvas.width - 2 * pad);
  const sy = (y) => canvas.height - pad - ((y - y0) / (y1 - y0 || 1)) * (canvas.height - 2 * pad);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, canvas.width - 2 * pad, canvas.height - 2 * pad);
  ctx.fillStyle = "#555";
  ctx.font = "11px sans-serif";
  ctx.fillText(fmt(y1), 2, pad + 4);
  ctx.fillText(fmt(y0), 2, canvas.height - pad);
  ctx.fillText(fmt(x0), pad, canvas.height - pad + 14);
  ctx.fillText(fmt(x1), canvas.width - pad - 30, canvas.height - pad + 14);
  return { ctx, sx, sy };
}

function dots(ctx, pts, color, r) {
  ctx.fillStyle = color;
  for (const [x, y] of pts) {
    ctx.beginPath();
    ctx.arc(x, y, r, 0, 2 * Math.PI);
    ctx.fill();
  }
}

function legend(ctx, items) {
  items.forEach(([label, color], i) => {
    ctx.fillStyle = color;
    ctx.fillRect(50, 44 + 16 * i, 10, 10);
    ctx.fillStyle = "#222";
    ctx.fillText(label, 66, 53 + 16 * i);
  });
}

function guarded(textId, f) {
  try {
    f();
    $(textId).classList.remove("error");
  } catch (e) {
    $(textId).textContent = String(e);
    $(textId).classList.add("error");
  }
}

function drawQuon() {
  const q = Number($("quon-q").value);
  $("quon-q-value").textContent = q.toFixed(2);
  guarded("quon-text", () => {
    const r = JSON.parse(quon_spectra(Number($("quon-d").value), q));
    const series = [
      ["h1", "#1f77b4", r.h1],
      ["closed form", "#000", r.closed_form],
      ["partner along B†", "#2ca02c", r.partners.raise.eigenvalues.map((z) => z[0])],
    ];
    if (r.partners.lower) series.push(["partner along B", "#d62728", r.partners.lower.eigenvalues.map((z) => z[0])]);
    const all = series.flatMap((s) => s[2]);
    const { ctx, sx, sy } = frame($("quon-plot"), [0, r.dim - 1], all);
    series.forEach(([, color, vals], k) => dots(ctx, vals.map((v, n) => [sx(n) + 4 * (k - 1.5), sy(v)]), color, k === 1 ? 2 : 3.5));
    legend(ctx, series.map(([l, c]) => [l, c]));
    const lines = Object.entries(r.partners).map(([k, p]) => `${k}: ${p.mode}, intertwining residual ${fmt(p.intertwining)}`);
    $("quon-text").textContent = lines.join("\n");
  });
}

function drawPseudoboson() {
  const kappa = Number($("pb-kappa").value);
  $("pb-kappa-value").textContent = kappa;
  guarded("pb-text", () => {
    const r = JSON.parse(pseudoboson_spectrum(Number($("pb-d").value), Number($("pb-seed").value) >>> 0, kappa));
    const re = r.eigenvalues.map((z) => z[0]);
    const im = r.eigenvalues.map((z) => z[1]);
    const span = Math.max(1, ...im.map(Math.abs));
    const { ctx, sx, sy } = frame($("pb-plot"), re, [-span, span]);
    ctx.strokeStyle = "#ddd";
    ctx.beginPath();
    ctx.moveTo(sx(Math.min(...re)), sy(0));
    ctx.lineTo(sx(Math.max(...re)), sy(0));
    ctx.stroke();
    dots(ctx, r.eigenvalues.map(([x, y]) => [sx(x), sy(y)]), "#9467bd", 4);
    const res = Object.entries(r.residuals).map(([k, v]) => `  ${k}: ${fmt(v)}`);
    $("pb-text").textContent = [
      `frame bounds [${fmt(r.frame_bounds[0])}, ${fmt(r.frame_bounds[1])}]`,
      `non-hermiticity of theta1 ${fmt(r.nonhermiticity)}, |theta2 - theta1| ${fmt(r.theta2_theta1_distance)}`,
      `all residuals within tolerance: ${r.pass}`,
      ...res,
    ].join("\n");
  });
}

function drawOscillator() {
  const dir = document.querySelector("input[name=osc-dir]:checked").value;
  guarded("osc-text", () => {
    const r = JSON.parse(oscillator_partner(Number($("osc-d").value), dir));
    const canvas = $("osc-plot");
    const ctx = canvas.getContext("2d");
    const cell = canvas.width / r.dim;
    const top = Math.max(...r.theta2_magnitudes.flat(), 1e-300);
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    r.theta2_magnitudes.forEach((row, i) =>
      row.forEach((v, j) => {
        const shade = Math.round(255 * (1 - v / top));
        ctx.fillStyle = `rgb(${shade},${shade},255)`;
        ctx.fillRect(j * cell, i * cell, cell - 1, cell - 1);
      }),
    );
    ctx.strokeStyle = "#d62728";
    const band = (r.dim - r.guard) * cell;
    ctx.strokeRect(0, 0, band, band);
    $("osc-text").textContent = [
      `mode ${r.mode}; dropped indices {${r.dropped.join(", ")}}`,
      `diagonal of theta2: ${r.theta2_diagonal.map(fmt).join(", ")}`,
      `nu: ${r.nu.map(fmt).join(", ")}`,
      "red square: levels below the guard band",
    ].join("\n");
  });
}

await init();
for (const id of ["quon-d", "quon-q"]) $(id).addEventListener("input", drawQuon);
for (const id of ["pb-d", "pb-seed", "pb-kappa"]) $(id).addEventListener("input", drawPseudoboson);
$("osc-d").addEventListener("input", drawOscillator);
document.querySelectorAll("input[name=osc-dir]").forEach((el) => el.addEventListener("change", drawOscillator));
drawQuon();
drawPseudoboson();
drawOscillator();
