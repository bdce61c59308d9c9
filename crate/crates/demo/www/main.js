import init, { feature_curves, mfcc_image, mel_filterbank } from "./pkg/convofuse_demo.js";

const $ = (id) => document.getElementById(id);
const COLORS = { rms: "#1f77b4", zcr: "#ff7f0e", centroid_hz: "#2ca02c", rolloff_hz: "#d62728", flux: "#9467bd" };

function params() {
  return [$("shape").value, Number($("rate").value), Number($("f0").value), Number($("noise").value) / 100, Number($("seed").value)];
}

function clear(canvas) {
  const g = canvas.getContext("2d");
  g.clearRect(0, 0, canvas.width, canvas.height);
  return g;
}

function drawWave(canvas, cols) {
  const g = clear(canvas);
  const h = canvas.height, mid = h / 2, dx = canvas.width / cols.length;
  g.fillStyle = "#555";
  cols.forEach(([lo, hi], i) => g.fillRect(i * dx, mid - hi * mid, Math.max(dx, 1), Math.max((hi - lo) * mid, 1)));
}

// each curve scaled to its own range
function drawCurves(canvas, curves) {
  const g = clear(canvas);
  const w = canvas.width, h = canvas.height;
  for (const [name, ys] of Object.entries(curves)) {
    const lo = Math.min(...ys), hi = Math.max(...ys), span = hi - lo || 1;
    g.strokeStyle = COLORS[name];
    g.beginPath();
    ys.forEach((y, i) => {
      const px = (i / Math.max(ys.length - 1, 1)) * w, py = h - 4 - ((y - lo) / span) * (h - 8);
      i ? g.lineTo(px, py) : g.moveTo(px, py);
    });
    g.stroke();
  }
  $("legend").innerHTML = Object.keys(curves)
    .map((n) => `<span style="color:${COLORS[n]}">&#9632; ${n}</span>`).join(" &nbsp; ");
}

function heat(v) {
  const t = Math.max(0, Math.min(1, v));
  return `rgb(${Math.round(255 * t)},${Math.round(255 * (1 - Math.abs(2 * t - 1)))},${Math.round(255 * (1 - t))})`;
}

// one band per order, each normalised per coefficient row
function drawMfcc(canvas, m) {
  const g = clear(canvas);
  const rows = m.orders * m.n_coeffs, cw = canvas.width / m.frames, rh = canvas.height / rows;
  for (let r = 0; r < rows; r++) {
    const row = m.data.slice(r * m.frames, (r + 1) * m.frames);
    const lo = Math.min(...row), span = Math.max(...row) - lo || 1;
    row.forEach((v, f) => {
      g.fillStyle = heat((v - lo) / span);
      g.fillRect(f * cw, r * rh, cw + 0.5, rh + 0.5);
    });
  }
  g.strokeStyle = "#fff";
  for (let o = 1; o < m.orders; o++) {
    g.beginPath();
    g.moveTo(0, o * m.n_coeffs * rh);
    g.lineTo(canvas.width, o * m.n_coeffs * rh);
    g.stroke();
  }
}

function drawBank(canvas, bank) {
  const g = clear(canvas);
  const bins = bank.weights[0].length, w = canvas.width, h = canvas.height;
  bank.weights.forEach((tri, i) => {
    g.strokeStyle = `hsl(${(i * 47) % 360},70%,45%)`;
    g.beginPath();
    tri.forEach((v, k) => {
      const x = (k / (bins - 1)) * w, y = h - 2 - v * (h - 6);
      k ? g.lineTo(x, y) : g.moveTo(x, y);
    });
    g.stroke();
  });
}

function table(el, title, rows) {
  el.innerHTML = `<tr><th>${title}</th><th>value</th></tr>` +
    rows.map((r) => `<tr><td>${r.name}</td><td>${r.value.toPrecision(5)}</td></tr>`).join("");
}

function refresh() {
  $("f0v").textContent = $("f0").value;
  $("noisev").textContent = (Number($("noise").value) / 100).toFixed(2);
  $("melsv").textContent = $("mels").value;
  try {
    const p = params();
    const f = JSON.parse(feature_curves(...p));
    drawWave($("wave"), f.waveform);
    drawCurves($("curves"), f.curves);
    table($("time"), "time domain (30)", f.time_summary);
    table($("spectral"), "spectral (50)", f.spectral_summary);
    drawMfcc($("mfcc"), JSON.parse(mfcc_image(...p)));
    drawBank($("bank"), JSON.parse(mel_filterbank(p[1], f.frame_size, Number($("mels").value))));
    $("error").textContent = "";
  } catch (e) {
    $("error").textContent = String(e);
  }
}

await init();
for (const id of ["shape", "rate", "f0", "noise", "seed", "mels"]) $(id).addEventListener("input", refresh);
refresh();
