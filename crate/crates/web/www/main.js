import init, { viewFactor, heightSlice, filmRun } from "./pkg/thermoservo_web.js";

const num = (box, name) => parseFloat(box.querySelector(`[name=${name}]`).value);

function report(out, f) {
  try {
    f();
  } catch (e) {
    out.textContent = `error: ${e}`;
  }
}

function setupViewFactor() {
  const box = document.getElementById("vf");
  const out = box.querySelector("output");
  box.querySelector("button").onclick = () =>
    report(out, () => {
      const [p1, p2, p3, tx, ty, tz, r] = ["p1", "p2", "p3", "tx", "ty", "tz", "r"].map((n) => num(box, n));
      out.textContent = viewFactor(p1, p2, p3, tx, ty, tz, r).toFixed(6);
    });
}

// Black to orange to white.
function heat(v) {
  const r = Math.min(255, Math.round(510 * v));
  const g = Math.max(0, Math.min(255, Math.round(510 * v - 160)));
  const b = Math.max(0, Math.round(510 * v - 350));
  return `rgb(${r},${g},${b})`;
}

function setupSlice() {
  const box = document.getElementById("slice");
  const canvas = box.querySelector("canvas");
  const ctx = canvas.getContext("2d");
  box.querySelector("button").onclick = () => {
    const n = Math.round(num(box, "n"));
    let values;
    try {
      values = heightSlice(num(box, "z"), num(box, "w"), n, 1.5);
    } catch (e) {
      ctx.clearRect(0, 0, canvas.width, canvas.height);
      ctx.fillText(`error: ${e}`, 10, 20);
      return;
    }
    const max = Math.max(...values, 1e-12);
    const cell = canvas.width / n;
    for (let i = 0; i < n; i++) {
      for (let j = 0; j < n; j++) {
        ctx.fillStyle = heat(values[i * n + j] / max);
        // p1 runs left to right, p2 bottom to top
        ctx.fillRect(i * cell, canvas.height - (j + 1) * cell, cell + 0.5, cell + 0.5);
      }
    }
  };
}

function plot(ctx, xs, ys, color, lo, hi) {
  const { width, height } = ctx.canvas;
  const xmax = xs[xs.length - 1];
  ctx.strokeStyle = color;
  ctx.beginPath();
  xs.forEach((x, i) => {
    const px = (x / xmax) * (width - 20) + 10;
    const py = height - 10 - ((ys[i] - lo) / (hi - lo || 1)) * (height - 20);
    i ? ctx.lineTo(px, py) : ctx.moveTo(px, py);
  });
  ctx.stroke();
}

function setupRun() {
  const box = document.getElementById("run");
  const canvas = box.querySelector("canvas");
  const ctx = canvas.getContext("2d");
  const out = box.querySelector("output");
  box.querySelector("button").onclick = () =>
    report(out, () => {
      const target = num(box, "target");
      const flat = filmRun(target, num(box, "k"), num(box, "dur"));
      const t = [], temp = [], z = [];
      for (let i = 0; i < flat.length; i += 3) {
        t.push(flat[i]);
        temp.push(flat[i + 1]);
        z.push(flat[i + 2]);
      }
      ctx.clearRect(0, 0, canvas.width, canvas.height);
      const lo = Math.min(...temp, target), hi = Math.max(...temp, target);
      plot(ctx, t, t.map(() => target), "#999", lo, hi);
      plot(ctx, t, temp, "#d9480f", lo, hi);
      plot(ctx, t, z, "#1c7ed6", Math.min(...z), Math.max(...z));
      out.textContent =
        `final temperature ${temp[temp.length - 1].toFixed(2)} °C at height ${z[z.length - 1].toFixed(2)} cm ` +
        "(orange: temperature, grey: target, blue: height)";
    });
}

await init();
setupViewFactor();
setupSlice();
setupRun();
