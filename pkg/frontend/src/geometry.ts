/** mm <-> pixel mapping built exclusively from service-provided slice
 * geometry. The UI never derives spacing or orientation on its own: every
 * conversion goes through the metadata of the slice it happened on. */

import type { Box, SliceGeometry } from "./api.js";

export type Vec3 = [number, number, number];

function add(a: Vec3, b: Vec3): Vec3 {
  return [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
}

function sub(a: Vec3, b: Vec3): Vec3 {
  return [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
}

function scale(a: Vec3, s: number): Vec3 {
  return [a[0] * s, a[1] * s, a[2] * s];
}

function dot(a: Vec3, b: Vec3): number {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

/** World mm of a (possibly fractional) pixel position on a slice. */
export function pixelToWorld(geo: SliceGeometry, col: number, row: number): Vec3 {
  return add(geo.origin_mm, add(scale(geo.col_dir_mm, col), scale(geo.row_dir_mm, row)));
}

/** Pixel position of a world point projected onto the slice plane. */
export function worldToPixel(geo: SliceGeometry, world: Vec3): { col: number; row: number } {
  const d = sub(world, geo.origin_mm);
  return {
    col: dot(d, geo.col_dir_mm) / dot(geo.col_dir_mm, geo.col_dir_mm),
    row: dot(d, geo.row_dir_mm) / dot(geo.row_dir_mm, geo.row_dir_mm),
  };
}

export interface PixelRect {
  col0: number;
  row0: number;
  col1: number;
  row1: number;
}

/** World-mm axis-aligned bounds of a rectangle dragged on one slice.
 * Constrains only the two axes the slice spans; the through-plane axis gets
 * the slice position itself. */
export function dragToWorldRect(geo: SliceGeometry, rect: PixelRect): Box {
  const corners = [
    pixelToWorld(geo, rect.col0, rect.row0),
    pixelToWorld(geo, rect.col1, rect.row0),
    pixelToWorld(geo, rect.col0, rect.row1),
    pixelToWorld(geo, rect.col1, rect.row1),
  ];
  const min: Vec3 = [Infinity, Infinity, Infinity];
  const max: Vec3 = [-Infinity, -Infinity, -Infinity];
  for (const c of corners) {
    for (let i = 0; i < 3; i++) {
      min[i] = Math.min(min[i], c[i]);
      max[i] = Math.max(max[i], c[i]);
    }
  }
  return { min, max };
}

/** Combine two orthogonal drags into one 3D box (union per axis).
 * Each drag constrains the two in-plane axes; between them all three world
 * axes are covered. Returns null for degenerate (zero-extent) drags. */
export function roiFromDrags(a: { geo: SliceGeometry; rect: PixelRect }, b: { geo: SliceGeometry; rect: PixelRect }): Box | null {
  if (isDegenerate(a.rect) || isDegenerate(b.rect)) return null;
  if (a.geo.axis === b.geo.axis) return null; // need orthogonal views
  const ra = dragToWorldRect(a.geo, a.rect);
  const rb = dragToWorldRect(b.geo, b.rect);
  const axisIndex = { x: 0, y: 1, z: 2 } as const;
  const constrainedA = inPlaneAxes(a.geo.axis);
  const constrainedB = inPlaneAxes(b.geo.axis);
  const min: Vec3 = [0, 0, 0];
  const max: Vec3 = [0, 0, 0];
  for (let i = 0; i < 3; i++) {
    const inA = constrainedA.includes(i);
    const inB = constrainedB.includes(i);
    if (inA && inB) {
      min[i] = Math.min(ra.min[i], rb.min[i]);
      max[i] = Math.max(ra.max[i], rb.max[i]);
    } else if (inA) {
      min[i] = ra.min[i];
      max[i] = ra.max[i];
    } else if (inB) {
      min[i] = rb.min[i];
      max[i] = rb.max[i];
    } else {
      return null; // both views miss this axis: views were parallel
    }
  }
  void axisIndex;
  if (min.some((v, i) => v >= max[i])) return null;
  return { min, max };
}

function inPlaneAxes(axis: "x" | "y" | "z"): number[] {
  // matches the service slice layout: z -> cols x, rows y; y -> cols x,
  // rows z; x -> cols y, rows z
  switch (axis) {
    case "z":
      return [0, 1];
    case "y":
      return [0, 2];
    case "x":
      return [1, 2];
  }
}

export function isDegenerate(rect: PixelRect): boolean {
  return rect.col0 === rect.col1 || rect.row0 === rect.row1;
}

/** Pixel-space corners of a world box on a given slice (for rendering). */
export function boxToPixelRect(geo: SliceGeometry, box: Box): PixelRect {
  const a = worldToPixel(geo, box.min as Vec3);
  const b = worldToPixel(geo, box.max as Vec3);
  return {
    col0: Math.min(a.col, b.col),
    row0: Math.min(a.row, b.row),
    col1: Math.max(a.col, b.col),
    row1: Math.max(a.row, b.row),
  };
}
