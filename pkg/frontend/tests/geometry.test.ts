import { describe, expect, it } from "vitest";

import type { SliceGeometry } from "../src/api.js";
import {
  boxToPixelRect,
  dragToWorldRect,
  isDegenerate,
  pixelToWorld,
  roiFromDrags,
  worldToPixel,
} from "../src/geometry.js";

// fixture metadata in the exact shape the service returns: a z-slice of a
// 0.5 mm grid whose voxel (0,0,50) sits at world (0.25, 0.25, 25.25)
const geoZ: SliceGeometry = {
  axis: "z",
  index: 50,
  origin_mm: [0.25, 0.25, 25.25],
  col_dir_mm: [0.5, 0, 0],
  row_dir_mm: [0, 0.5, 0],
  mm_per_px: [0.5, 0.5],
  size_px: [120, 120],
};

const geoX: SliceGeometry = {
  axis: "x",
  index: 30,
  origin_mm: [15.25, 0.25, 0.25],
  col_dir_mm: [0, 0.5, 0],
  row_dir_mm: [0, 0, 0.5],
  mm_per_px: [0.5, 0.5],
  size_px: [120, 100],
};

describe("pixel/world mapping from service metadata", () => {
  it("maps pixel (0,0) to the slice origin", () => {
    expect(pixelToWorld(geoZ, 0, 0)).toEqual([0.25, 0.25, 25.25]);
  });

  it("round-trips pixel -> world -> pixel", () => {
    for (const [col, row] of [
      [0, 0],
      [10, 3],
      [57.5, 99.25],
    ]) {
      const world = pixelToWorld(geoZ, col, row);
      const back = worldToPixel(geoZ, world);
      expect(back.col).toBeCloseTo(col, 9);
      expect(back.row).toBeCloseTo(row, 9);
    }
  });

  it("never invents its own spacing: mapping scales with col_dir", () => {
    const doubled: SliceGeometry = { ...geoZ, col_dir_mm: [1.0, 0, 0] };
    expect(pixelToWorld(doubled, 10, 0)[0]).toBeCloseTo(10.25, 12);
    expect(pixelToWorld(geoZ, 10, 0)[0]).toBeCloseTo(5.25, 12);
  });

  it("handles rotated slice bases", () => {
    const rot: SliceGeometry = {
      ...geoZ,
      col_dir_mm: [0.35355339, 0.35355339, 0], // 0.5 mm at 45 degrees
      row_dir_mm: [-0.35355339, 0.35355339, 0],
    };
    const world = pixelToWorld(rot, 4, 2);
    const back = worldToPixel(rot, world);
    expect(back.col).toBeCloseTo(4, 6);
    expect(back.row).toBeCloseTo(2, 6);
  });
});

describe("ROI from two orthogonal drags", () => {
  const dragA = { geo: geoZ, rect: { col0: 40, row0: 40, col1: 80, row1: 78 } };
  const dragB = { geo: geoX, rect: { col0: 42, row0: 30, col1: 76, row1: 70 } };

  it("builds the 3D box from in-plane constraints", () => {
    const box = roiFromDrags(dragA, dragB);
    expect(box).not.toBeNull();
    // x only from drag A: cols 40..80 -> 0.25 + 0.5 * col
    expect(box!.min[0]).toBeCloseTo(20.25, 9);
    expect(box!.max[0]).toBeCloseTo(40.25, 9);
    // z only from drag B: rows 30..70 -> 0.25 + 0.5 * row
    expect(box!.min[2]).toBeCloseTo(15.25, 9);
    expect(box!.max[2]).toBeCloseTo(35.25, 9);
    // y constrained by both: union of 40..78 (A) and 42..76 (B)
    expect(box!.min[1]).toBeCloseTo(0.25 + 0.5 * 40, 9);
    expect(box!.max[1]).toBeCloseTo(0.25 + 0.5 * 78, 9);
  });

  it("rejects degenerate drags", () => {
    expect(isDegenerate({ col0: 5, row0: 5, col1: 5, row1: 9 })).toBe(true);
    const zero = { geo: geoZ, rect: { col0: 5, row0: 5, col1: 5, row1: 9 } };
    expect(roiFromDrags(zero, dragB)).toBeNull();
  });

  it("rejects two drags on the same axis", () => {
    expect(roiFromDrags(dragA, { ...dragA })).toBeNull();
  });

  it("drag world rect keeps the through-plane coordinate", () => {
    const rect = dragToWorldRect(geoZ, { col0: 0, row0: 0, col1: 10, row1: 10 });
    expect(rect.min[2]).toBeCloseTo(25.25, 12);
    expect(rect.max[2]).toBeCloseTo(25.25, 12);
  });
});

describe("box rendering rect", () => {
  it("projects a world box back to pixel corners consistently", () => {
    const box = { min: [10.25, 20.25, 0] as [number, number, number], max: [30.25, 40.25, 50] as [number, number, number] };
    const rect = boxToPixelRect(geoZ, box);
    expect(rect.col0).toBeCloseTo((10.25 - 0.25) / 0.5, 9);
    expect(rect.col1).toBeCloseTo((30.25 - 0.25) / 0.5, 9);
    expect(rect.row0).toBeCloseTo((20.25 - 0.25) / 0.5, 9);
  });
});
