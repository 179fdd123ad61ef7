// Demo wiring: sliders -> wasm calls -> canvas. Build the wasm package
// first (see the repository README):
//
//   wasm-pack build crates/wasm --target web --out-dir www/pkg
//
// then serve this directory and open index.html.

import init, { error_set_demo, improve_demo, constants_demo } from "./pkg/prony_leaves_demo.js";

const fmt = (v, digits = 4) =>
  Math.abs(v) >= 1e-3 && Math.abs(v) < 1e4 ? v.toFixed(digits) : v.toExponential(2);

function makePlot(canvas) {
  const ctx = canvas.getContext("2d");
  const pad = 40;
  let bounds = { x0: -1, x1: 1, y0: -1, y1: 1 };

  const px = (x) => pad + ((x - bounds.x0) / (bounds.x1 - bounds.x0)) * (canvas.width - 2 * pad);
  const py = (y) => canvas.height - pad - ((y - bounds.y0) / (bounds.y1 - bounds.y0)) * (canvas.height - 2 * pad);

  return {
    setBounds(x0, x1, y0, y1) {
      bounds = { x0, x1, y0, y1 };
    },
    clear() {
      ctx.clearRect(0, 0, canvas.width, canvas.height);
      ctx.strokeStyle = "#e3e3ee";
      ctx.lineWidth = 1;
      // light grid with axis labels at the corners
      ctx.strokeRect(pad, pad, canvas.width - 2 * pad, canvas.height - 2 * pad);
      ctx.fillStyle = "#777";
      ctx.font = "11px system-ui";
      ctx.fillText(`x1: ${fmt(bounds.x0, 3)} … ${fmt(bounds.x1, 3)}`, pad, canvas.height - 14);
      ctx.save();
      ctx.translate(14, canvas.height - pad);
      ctx.rotate(-Math.PI / 2);
      ctx.fillText(`x2: ${fmt(bounds.y0, 3)} … ${fmt(bounds.y1, 3)}`, 0, 0);
      ctx.restore();
    },
    dots(points, color, r = 1.6) {
      ctx.fillStyle = color;
      for (const p of points) {
        const x = px(p.x1), y = py(p.x2);
        if (x < pad - 2 || x > canvas.width - pad + 2 || y < pad - 2 || y > canvas.height - pad + 2) continue;
        ctx.beginPath();
        ctx.arc(x, y, r, 0, 2 * Math.PI);
        ctx.fill();
      }
    },
    polyline(points, color, width = 1.5) {
      ctx.strokeStyle = color;
      ctx.lineWidth = width;
      ctx.beginPath();
      let started = false;
      for (const p of points) {
        const x = px(p.x1), y = py(p.x2);
        if (!started) { ctx.moveTo(x, y); started = true; } else { ctx.lineTo(x, y); }
      }
      ctx.stroke();
    },
    line(slope, intercept, color, width = 1.2) {
      this.polyline(
        [
          { x1: bounds.x0, x2: slope * bounds.x0 + intercept },
          { x1: bounds.x1, x2: slope * bounds.x1 + intercept },
        ],
        color,
        width
      );
    },
    wedge(lineA, lineB, color) {
      // fill the region between the two ratio boundaries (x2 <= A, x2 >= B)
      ctx.fillStyle = color;
      ctx.beginPath();
      ctx.moveTo(px(bounds.x0), py(lineA.slope * bounds.x0 + lineA.intercept));
      ctx.lineTo(px(bounds.x1), py(lineA.slope * bounds.x1 + lineA.intercept));
      ctx.lineTo(px(bounds.x1), py(lineB.slope * bounds.x1 + lineB.intercept));
      ctx.lineTo(px(bounds.x0), py(lineB.slope * bounds.x0 + lineB.intercept));
      ctx.closePath();
      ctx.fill();
    },
    marker(p, color, r = 5) {
      ctx.fillStyle = color;
      ctx.strokeStyle = "#fff";
      ctx.lineWidth = 1.5;
      ctx.beginPath();
      ctx.arc(px(p.x1), py(p.x2), r, 0, 2 * Math.PI);
      ctx.fill();
      ctx.stroke();
    },
  };
}

const $ = (id) => document.getElementById(id);

function bindSlider(id, outId, redraw, format = (v) => v) {
  const slider = $(id);
  const out = $(outId);
  const update = () => { out.textContent = format(parseFloat(slider.value)); };
  slider.addEventListener("input", () => { update(); redraw(); });
  update();
  return () => parseFloat(slider.value);
}

function quantileBounds(values, lo, hi, padFrac = 0.08) {
  const sorted = [...values].sort((a, b) => a - b);
  const q = (f) => sorted[Math.min(sorted.length - 1, Math.max(0, Math.floor(f * sorted.length)))];
  const a = q(lo), b = q(hi);
  const span = Math.max(b - a, 1e-9);
  return [a - padFrac * span, b + padFrac * span];
}

async function main() {
  await init();

  // --- panel 1: error set + Prony curve ---------------------------------
  const cloudPlot = makePlot($("cloudCanvas"));
  let redrawCloud = () => {};
  const getH = bindSlider("hSlider", "hOut", () => redrawCloud(), (v) => v.toFixed(3));
  const getP = bindSlider("pSlider", "pOut", () => redrawCloud(), (v) => v.toFixed(1));
  const getK = bindSlider("kSlider", "kOut", () => redrawCloud(), (v) => v.toFixed(1));
  const getN = bindSlider("nSlider", "nOut", () => redrawCloud());
  const getSeed = bindSlider("seedSlider", "seedOut", () => redrawCloud());

  redrawCloud = () => {
    const data = JSON.parse(error_set_demo(getH(), getP(), getK(), getN(), getSeed()));
    const stats = $("cloudStats");
    if (data.error) { stats.textContent = data.error; return; }
    const xs = data.cloud.map((p) => p.x1).concat(data.cloud.map((p) => p.x2));
    const [lo, hi] = quantileBounds(xs, 0.005, 0.995);
    const span = Math.max(hi - lo, 2.4);
    const mid = (hi + lo) / 2;
    cloudPlot.setBounds(mid - span / 2, mid + span / 2, mid - span / 2, mid + span / 2);
    cloudPlot.clear();
    cloudPlot.dots(data.cloud, "#4466dd");
    cloudPlot.polyline(data.curve, "#dd5544", 2);
    cloudPlot.marker({ x1: -1, x2: 1 }, "#111");
    stats.textContent =
      `eps = ${fmt(data.eps)}  (h^p)\n` +
      `worst-case over sample:\n` +
      `  rho   = ${fmt(data.rho)}   (full)\n` +
      `  rho_a = ${fmt(data.rho_a)}   (amplitudes)\n` +
      `  rho_x = ${fmt(data.rho_x)}   (nodes, original scale)\n` +
      `outer containment ratio = ${fmt(data.outer_ratio, 6)} (must stay <= 1)\n` +
      `failed inversions: ${data.failed}`;
  };
  redrawCloud();

  // --- panel 2: constrained reconstruction ------------------------------
  const improvePlot = makePlot($("improveCanvas"));
  let redrawImprove = () => {};
  const getIH = bindSlider("ihSlider", "ihOut", () => redrawImprove(), (v) => v.toFixed(3));
  const getG = bindSlider("gSlider", "gOut", () => redrawImprove(), (v) => v.toFixed(2));
  const getT = bindSlider("tSlider", "tOut", () => redrawImprove(), (v) => v.toFixed(2));

  redrawImprove = () => {
    const data = JSON.parse(improve_demo(getIH(), getG(), getT(), 7));
    const stats = $("improveStats");
    if (data.error) { stats.textContent = data.error; return; }
    const h = data.h;
    improvePlot.setBounds(-2.2 * h, 0.6 * h, -0.6 * h, 2.2 * h);
    improvePlot.clear();
    improvePlot.wedge(data.gamma_lines[0], data.gamma_lines[1], "#f2c14533");
    improvePlot.line(data.gamma_lines[0].slope, data.gamma_lines[0].intercept, "#c9a227");
    improvePlot.line(data.gamma_lines[1].slope, data.gamma_lines[1].intercept, "#c9a227");
    improvePlot.polyline(data.hyperbola, "#dd5544", 2);
    improvePlot.marker(data.truth, "#111");
    improvePlot.marker(data.point_solution, "#7744cc");
    improvePlot.marker(data.improved, "#22aa66");
    stats.textContent =
      `eps = h^3 = ${fmt(data.eps)}\n` +
      `chosen leaf q* = ${data.chosen_q}, feasible diameter ${fmt(data.feasible_diameter)}\n` +
      `node error, point solution: ${fmt(data.point_node_error)}\n` +
      `node error, improved:       ${fmt(data.improved_node_error)}\n` +
      `improvement factor: ${(data.point_node_error / Math.max(data.improved_node_error, 1e-300)).toFixed(1)}x`;
  };
  redrawImprove();

  // --- panel 3: constants table ------------------------------------------
  let redrawConstants = () => {};
  const getCD = bindSlider("cdSlider", "cdOut", () => redrawConstants());
  const getEta = bindSlider("cetaSlider", "cetaOut", () => redrawConstants(), (v) => v.toFixed(2));
  const getM = bindSlider("cmSlider", "cmOut", () => redrawConstants(), (v) => `${v.toFixed(2)}, 1.0`);
  const getCK = bindSlider("ckSlider", "ckOut", () => redrawConstants(), (v) => v.toFixed(1));

  redrawConstants = () => {
    const data = JSON.parse(constants_demo(getCD(), getEta(), getM(), 1.0, getCK()));
    const table = $("constantsTable");
    if (data.error) { table.innerHTML = `<tr><td>${data.error}</td></tr>`; return; }
    const keys = ["C1", "C2", "C3", "C4", "C5", "C6", "C7", "C8", "r", "R", "K3", "K4"];
    table.innerHTML =
      "<tr><th>constant</th><th>value</th></tr>" +
      keys
        .map((k) => `<tr><td>${k}</td><td>${data[k] === null ? "—" : fmt(data[k], 6)}</td></tr>`)
        .join("");
  };
  redrawConstants();
}

main();
