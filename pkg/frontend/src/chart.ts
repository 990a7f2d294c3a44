// Minimal canvas line chart for one series of history buckets.

import type { HistoryBucket } from "./types.js";

export function drawBuckets(canvas: HTMLCanvasElement, buckets: HistoryBucket[]): void {
  const points = buckets.filter((b) => b.avg !== null);
  // test hook: jsdom has no 2d context, but the data must still be inspectable
  canvas.dataset.points = String(points.length);
  const ctx = canvas.getContext ? canvas.getContext("2d") : null;
  if (!ctx || points.length === 0) return;

  const w = canvas.width;
  const h = canvas.height;
  ctx.clearRect(0, 0, w, h);

  let lo = Infinity;
  let hi = -Infinity;
  for (const b of points) {
    lo = Math.min(lo, b.min ?? (b.avg as number));
    hi = Math.max(hi, b.max ?? (b.avg as number));
  }
  if (hi - lo < 1e-9) {
    lo -= 1;
    hi += 1;
  }
  const t0 = points[0]!.start_t;
  const t1 = points[points.length - 1]!.end_t;
  const x = (t: number) => ((t - t0) / (t1 - t0 || 1)) * (w - 20) + 10;
  const y = (v: number) => h - 14 - ((v - lo) / (hi - lo)) * (h - 28);

  // min/max band
  ctx.beginPath();
  for (let i = 0; i < points.length; i++) {
    const b = points[i]!;
    const px = x((b.start_t + b.end_t) / 2);
    if (i === 0) ctx.moveTo(px, y(b.max ?? (b.avg as number)));
    else ctx.lineTo(px, y(b.max ?? (b.avg as number)));
  }
  for (let i = points.length - 1; i >= 0; i--) {
    const b = points[i]!;
    ctx.lineTo(x((b.start_t + b.end_t) / 2), y(b.min ?? (b.avg as number)));
  }
  ctx.closePath();
  ctx.fillStyle = "rgba(88,166,255,0.15)";
  ctx.fill();

  // avg line
  ctx.beginPath();
  for (let i = 0; i < points.length; i++) {
    const b = points[i]!;
    const px = x((b.start_t + b.end_t) / 2);
    const py = y(b.avg as number);
    if (i === 0) ctx.moveTo(px, py);
    else ctx.lineTo(px, py);
  }
  ctx.strokeStyle = "#58a6ff";
  ctx.lineWidth = 1.5;
  ctx.stroke();

  ctx.fillStyle = "#8b949e";
  ctx.font = "10px monospace";
  ctx.fillText(String(hi.toFixed(2)), 4, 10);
  ctx.fillText(String(lo.toFixed(2)), 4, h - 4);
}
