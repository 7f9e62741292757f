import init, { Explorer } from "./pkg/unproject_wasm.js";

const $ = (id) => document.getElementById(id);
const mapCanvas = $("map");
const ctx = mapCanvas.getContext("2d");
const bars = $("bars").getContext("2d");
const PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

let explorer = null;
let underlay = null; // offscreen canvas holding the current dense map

function status(msg) {
  $("status").textContent = msg;
}

// Defer heavy work one frame so the status text paints first.
function busy(msg, work) {
  status(msg);
  setTimeout(() => {
    try {
      const t0 = performance.now();
      work();
      status(`${msg.replace(/\.\.\.$/, "")} done in ${Math.round(performance.now() - t0)} ms`);
    } catch (e) {
      status(`error: ${e.message ?? e}`);
    }
  }, 20);
}

function toCanvas(x, y) {
  const [x0, x1, y0, y1] = explorer.extent();
  return [((x - x0) / (x1 - x0)) * mapCanvas.width, ((y1 - y) / (y1 - y0)) * mapCanvas.height];
}

function toData(px, py) {
  const [x0, x1, y0, y1] = explorer.extent();
  return [x0 + (px / mapCanvas.width) * (x1 - x0), y1 - (py / mapCanvas.height) * (y1 - y0)];
}

function draw(cursor) {
  ctx.fillStyle = "#fff";
  ctx.fillRect(0, 0, mapCanvas.width, mapCanvas.height);
  if (!explorer) return;
  if (underlay) {
    ctx.imageSmoothingEnabled = false;
    ctx.drawImage(underlay, 0, 0, mapCanvas.width, mapCanvas.height);
  }
  if ($("dots").checked) {
    const pts = explorer.points();
    const labels = explorer.labels();
    for (let i = 0; i < pts.length / 2; i++) {
      const [cx, cy] = toCanvas(pts[2 * i], pts[2 * i + 1]);
      ctx.fillStyle = PALETTE[(labels[i] ?? 0) % PALETTE.length];
      ctx.fillRect(cx - 1.5, cy - 1.5, 3, 3);
    }
  }
  if (cursor) {
    ctx.strokeStyle = "#000";
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.arc(cursor[0], cursor[1], 6, 0, 2 * Math.PI);
    ctx.stroke();
  }
}

function drawBars(values) {
  const { width, height } = bars.canvas;
  bars.clearRect(0, 0, width, height);
  bars.strokeStyle = "#999";
  bars.strokeRect(0.5, 0.5, width - 1, height - 1);
  const w = width / values.length;
  values.forEach((v, j) => {
    bars.fillStyle = "#4477aa";
    bars.fillRect(j * w + 2, height - v * (height - 20), w - 4, v * (height - 20));
    bars.fillStyle = "#222";
    bars.fillText(`f${j}`, j * w + 4, 12);
  });
}

function train() {
  busy("training...", () => {
    explorer?.free();
    explorer = new Explorer($("kind").value, +$("n").value, +$("seed").value, +$("epochs").value);
    underlay = null;
    drawBars(new Array(explorer.dim()).fill(0));
    draw();
  });
}

function renderMap() {
  if (!explorer) return;
  const kind = $("maptype").value;
  if (kind === "none") {
    underlay = null;
    draw();
    return;
  }
  busy(`rendering ${kind} map...`, () => {
    const r = +$("res").value;
    const rgba =
      kind === "gradient" ? explorer.gradient_map(r)
      : kind === "agreement" ? explorer.agreement_map(r, +$("ca").value, +$("cb").value)
      : explorer.roundtrip_map(r);
    underlay = document.createElement("canvas");
    underlay.width = underlay.height = r;
    underlay.getContext("2d").putImageData(new ImageData(new Uint8ClampedArray(rgba), r, r), 0, 0);
    draw();
  });
}

function probe(ev) {
  if (!explorer) return;
  const rect = mapCanvas.getBoundingClientRect();
  const px = ev.clientX - rect.left;
  const py = ev.clientY - rect.top;
  const [x, y] = toData(px, py);
  const v = explorer.infer(x, y);
  drawBars(Array.from(v));
  $("coords").textContent = `(${x.toFixed(3)}, ${y.toFixed(3)})`;
  draw([px, py]);
}

let dragging = false;
mapCanvas.addEventListener("mousedown", (e) => { dragging = true; probe(e); });
mapCanvas.addEventListener("mousemove", (e) => { if (dragging) probe(e); });
window.addEventListener("mouseup", () => { dragging = false; });
$("train").addEventListener("click", train);
$("render").addEventListener("click", renderMap);
$("dots").addEventListener("change", () => draw());

await init();
train();
