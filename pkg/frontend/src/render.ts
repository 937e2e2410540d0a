/**
 * Canvas rendering: plan view, elevation view, and the Pareto scatter.
 * Pure drawing - all data comes from the view model.
 */

import { makeFrame, planeCoords, type Frame2D, type Plane, type Viewport } from "./geometry.js";
import { OBJECTIVE_NAMES, type SceneDoc, type Vec3 } from "./protocol.js";
import { displayedLayout, type ScatterState, type ViewModel } from "./state.js";

const COLORS = {
  region: "#e8f0fe",
  regionEdge: "#7a9cc6",
  widget: "#1a73e8",
  pendingWidget: "#e8710a",
  object: "#188038",
  user: "#d93025",
  chosen: "#9334e6",
  reference: "#d93025",
  point: "#5f8dc9",
};

export function drawScenePane(
  ctx: CanvasRenderingContext2D,
  view: ViewModel,
  plane: Plane,
  viewport: Viewport,
): Frame2D | null {
  ctx.clearRect(0, 0, viewport.width, viewport.height);
  const scene = view.scene;
  if (!scene) return null;
  const frame = makeFrame(scene, plane, viewport);

  for (const box of scene.region.boxes) {
    const [x0, y0] = frame.toPx(planeCoords(box.min, plane));
    const [x1, y1] = frame.toPx(planeCoords(box.max, plane));
    ctx.fillStyle = COLORS.region;
    ctx.strokeStyle = COLORS.regionEdge;
    ctx.fillRect(Math.min(x0, x1), Math.min(y0, y1), Math.abs(x1 - x0), Math.abs(y1 - y0));
    ctx.strokeRect(Math.min(x0, x1), Math.min(y0, y1), Math.abs(x1 - x0), Math.abs(y1 - y0));
  }

  for (const obj of scene.objects) {
    const [px, py] = frame.toPx(planeCoords(obj.position, plane));
    ctx.fillStyle = COLORS.object;
    ctx.beginPath();
    ctx.arc(px, py, 5, 0, Math.PI * 2);
    ctx.fill();
    ctx.fillStyle = "#111";
    ctx.font = "10px sans-serif";
    ctx.fillText(obj.id, px + 7, py + 3);
  }

  const [ux, uy] = frame.toPx(planeCoords(scene.user.eye_position, plane));
  ctx.fillStyle = COLORS.user;
  ctx.beginPath();
  ctx.arc(ux, uy, 6, 0, Math.PI * 2);
  ctx.fill();
  ctx.fillStyle = "#111";
  ctx.fillText("user", ux + 8, uy + 3);

  const layout = displayedLayout(view);
  for (const widget of scene.widgets) {
    const pos = layout[widget.id];
    if (!pos) continue;
    const [px, py] = frame.toPx(planeCoords(pos, plane));
    const w = Math.max(widget.extent[0] * frame.scale, 10);
    const h = Math.max(widget.extent[1] * frame.scale, 8);
    ctx.fillStyle = widget.id in view.pendingMoves ? COLORS.pendingWidget : COLORS.widget;
    ctx.globalAlpha = 0.85;
    ctx.fillRect(px - w / 2, py - h / 2, w, h);
    ctx.globalAlpha = 1.0;
    ctx.fillStyle = "#fff";
    ctx.font = "9px sans-serif";
    ctx.fillText(widget.id.slice(0, 12), px - w / 2 + 2, py + 3);
  }

  // Legend: one meter scale bar.
  const barPx = frame.scale;
  ctx.strokeStyle = "#111";
  ctx.beginPath();
  ctx.moveTo(viewport.margin, viewport.height - 8);
  ctx.lineTo(viewport.margin + barPx, viewport.height - 8);
  ctx.stroke();
  ctx.fillStyle = "#111";
  ctx.font = "10px sans-serif";
  ctx.fillText("1 m", viewport.margin + barPx + 4, viewport.height - 5);
  ctx.fillText(plane === "plan" ? "plan (x/z)" : "elevation (x/y)", viewport.margin, 12);
  return frame;
}

/** Hit-test a widget sprite for drag start; nearest within tolerance wins. */
export function widgetAt(
  scene: SceneDoc,
  layout: Record<string, Vec3>,
  frame: Frame2D,
  plane: Plane,
  px: [number, number],
  tolerance = 16,
): string | null {
  let best: string | null = null;
  let bestDist = tolerance;
  for (const widget of scene.widgets) {
    const pos = layout[widget.id];
    if (!pos) continue;
    const [wx, wy] = frame.toPx(planeCoords(pos, plane));
    const d = Math.hypot(wx - px[0], wy - px[1]);
    if (d < bestDist) {
      best = widget.id;
      bestDist = d;
    }
  }
  return best;
}

export function drawScatter(
  ctx: CanvasRenderingContext2D,
  scatter: ScatterState | null,
  viewport: Viewport,
): void {
  ctx.clearRect(0, 0, viewport.width, viewport.height);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(viewport.margin, viewport.margin,
                 viewport.width - 2 * viewport.margin, viewport.height - 2 * viewport.margin);
  if (!scatter) {
    ctx.fillStyle = "#666";
    ctx.font = "11px sans-serif";
    ctx.fillText("no archive yet - adapt to populate", viewport.margin + 8, viewport.height / 2);
    return;
  }
  const xs = scatter.points.map((p) => p[0]).concat(scatter.reference ? [scatter.reference[0]] : []);
  const ys = scatter.points.map((p) => p[1]).concat(scatter.reference ? [scatter.reference[1]] : []);
  const minX = Math.min(...xs, 0);
  const maxX = Math.max(...xs, 0.01);
  const minY = Math.min(...ys, 0);
  const maxY = Math.max(...ys, 0.01);
  const spanX = maxX - minX || 1;
  const spanY = maxY - minY || 1;
  const usableW = viewport.width - 2 * viewport.margin;
  const usableH = viewport.height - 2 * viewport.margin;
  const toPx = (p: [number, number]): [number, number] => [
    viewport.margin + ((p[0] - minX) / spanX) * usableW,
    viewport.height - viewport.margin - ((p[1] - minY) / spanY) * usableH,
  ];

  ctx.fillStyle = COLORS.point;
  for (const point of scatter.points) {
    const [px, py] = toPx(point);
    ctx.beginPath();
    ctx.arc(px, py, 3, 0, Math.PI * 2);
    ctx.fill();
  }
  if (scatter.chosen) {
    const [px, py] = toPx(scatter.chosen);
    ctx.strokeStyle = COLORS.chosen;
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.arc(px, py, 7, 0, Math.PI * 2);
    ctx.stroke();
    ctx.lineWidth = 1;
  }
  if (scatter.reference) {
    const [px, py] = toPx(scatter.reference);
    ctx.strokeStyle = COLORS.reference;
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.moveTo(px - 6, py);
    ctx.lineTo(px + 6, py);
    ctx.moveTo(px, py - 6);
    ctx.lineTo(px, py + 6);
    ctx.stroke();
    ctx.lineWidth = 1;
  }
  ctx.fillStyle = "#111";
  ctx.font = "10px sans-serif";
  ctx.fillText(OBJECTIVE_NAMES[scatter.pair[0]], viewport.width / 2 - 30, viewport.height - 4);
  ctx.save();
  ctx.translate(10, viewport.height / 2 + 30);
  ctx.rotate(-Math.PI / 2);
  ctx.fillText(OBJECTIVE_NAMES[scatter.pair[1]], 0, 0);
  ctx.restore();
}
