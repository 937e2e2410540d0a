/**
 * Meter/pixel mapping and region containment.
 *
 * The studio renders two orthographic projections: a top-down plan view
 * (x right, z up the screen) and a side elevation (x right, y up). These
 * helpers are the only geometry the client performs - layouts themselves
 * always come from the server.
 */

import type { SceneBox, SceneDoc, Vec3 } from "./protocol.js";

export interface Viewport {
  width: number;
  height: number;
  margin: number;
}

export interface Frame2D {
  /** meters -> pixels */
  toPx(point: [number, number]): [number, number];
  /** pixels -> meters */
  toMeters(px: [number, number]): [number, number];
  scale: number;
}

export type Plane = "plan" | "elevation";

function planeAxes(plane: Plane): [number, number] {
  return plane === "plan" ? [0, 2] : [0, 1];
}

export function sceneBounds(scene: SceneDoc, plane: Plane): { min: [number, number]; max: [number, number] } {
  const [ax, ay] = planeAxes(plane);
  const xs: number[] = [];
  const ys: number[] = [];
  const visit = (p: Vec3) => {
    xs.push(p[ax]);
    ys.push(p[ay]);
  };
  for (const box of scene.region.boxes) {
    visit(box.min);
    visit(box.max);
  }
  for (const obj of scene.objects) visit(obj.position);
  visit(scene.user.eye_position);
  return {
    min: [Math.min(...xs), Math.min(...ys)],
    max: [Math.max(...xs), Math.max(...ys)],
  };
}

export function makeFrame(scene: SceneDoc, plane: Plane, viewport: Viewport): Frame2D {
  const bounds = sceneBounds(scene, plane);
  const spanX = Math.max(bounds.max[0] - bounds.min[0], 1e-6);
  const spanY = Math.max(bounds.max[1] - bounds.min[1], 1e-6);
  const usableW = viewport.width - 2 * viewport.margin;
  const usableH = viewport.height - 2 * viewport.margin;
  const scale = Math.min(usableW / spanX, usableH / spanY);
  const offX = viewport.margin + (usableW - spanX * scale) / 2;
  const offY = viewport.margin + (usableH - spanY * scale) / 2;
  return {
    scale,
    toPx([mx, my]) {
      return [offX + (mx - bounds.min[0]) * scale, viewport.height - (offY + (my - bounds.min[1]) * scale)];
    },
    toMeters([px, py]) {
      return [bounds.min[0] + (px - offX) / scale, bounds.min[1] + (viewport.height - py - offY) / scale];
    },
  };
}

/** Replace the two plane coordinates of a 3D point with dragged values. */
export function withPlaneCoords(point: Vec3, plane: Plane, coords: [number, number]): Vec3 {
  const [ax, ay] = planeAxes(plane);
  const next: Vec3 = [...point];
  next[ax] = coords[0];
  next[ay] = coords[1];
  return next;
}

export function planeCoords(point: Vec3, plane: Plane): [number, number] {
  const [ax, ay] = planeAxes(plane);
  return [point[ax], point[ay]];
}

function insideBox(box: SceneBox, p: Vec3): boolean {
  return (
    p[0] >= box.min[0] && p[0] <= box.max[0] &&
    p[1] >= box.min[1] && p[1] <= box.max[1] &&
    p[2] >= box.min[2] && p[2] <= box.max[2]
  );
}

export function pointInRegion(scene: SceneDoc, p: Vec3): boolean {
  return scene.region.boxes.some((box) => insideBox(box, p));
}

/** validate_layout equivalent: ids match the scene and every point is inside. */
export function layoutViolations(scene: SceneDoc, layout: Record<string, Vec3>): string[] {
  const violations: string[] = [];
  const sceneIds = new Set(scene.widgets.map((w) => w.id));
  for (const id of sceneIds) {
    if (!(id in layout)) violations.push(`missing widget ${id}`);
  }
  for (const [id, pos] of Object.entries(layout)) {
    if (!sceneIds.has(id)) violations.push(`unknown widget ${id}`);
    else if (!pointInRegion(scene, pos)) violations.push(`widget ${id} outside region`);
  }
  return violations;
}
