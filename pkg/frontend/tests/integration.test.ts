/** UI round trip against a live service on a phantom session:
 * draw ROI -> effective box is the draft grown by 10 mm; segment -> overlay
 * lands inside the lesion bounds; one erase stroke empties the slice
 * overlay; export with ground truth yields pipeline-parseable metrics. */

import { execFile, spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join, resolve } from "node:path";
import { promisify } from "node:util";

import { PNG } from "pngjs";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { NavClient, type Box, type SliceGeometry } from "../src/api.js";
import { roiFromDrags, worldToPixel } from "../src/geometry.js";

const execFileP = promisify(execFile);

const REPO_ROOT = resolve(__dirname, "..", "..");
const PORT = 8700 + Math.floor(Math.random() * 400);
const BASE = `http://127.0.0.1:${PORT}`;

interface Fixture {
  volume: string;
  gt: string;
  lesion_box: Box;
  lesion_center_mm: [number, number, number];
  spacing_mm: [number, number, number];
}

let workDir: string;
let fixture: Fixture;
let server: ChildProcess;
const client = new NavClient(BASE);

async function waitForService(timeoutMs = 30000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const r = await fetch(`${BASE}/sessions/warmup-probe`);
      if (r.status === 404) return; // server answers -> ready
    } catch {
      /* not up yet */
    }
    await new Promise((r) => setTimeout(r, 250));
  }
  throw new Error("service did not come up in time");
}

beforeAll(async () => {
  workDir = mkdtempSync(join(tmpdir(), "segbench-ui-"));
  const { stdout } = await execFileP("python3", [
    join(__dirname, "fixtures", "make_phantom_case.py"),
    join(workDir, "case"),
  ]);
  fixture = JSON.parse(stdout.trim()) as Fixture;

  server = spawn(
    "python3",
    ["-c", `import sys; sys.path.insert(0, ${JSON.stringify(join(REPO_ROOT, "src"))}); from segbench.service import serve; serve(port=${PORT})`],
    { stdio: "ignore" },
  );
  await waitForService();
}, 60000);

afterAll(() => {
  server?.kill();
  rmSync(workDir, { recursive: true, force: true });
});

function decodePng(buf: ArrayBuffer): PNG {
  return PNG.sync.read(Buffer.from(buf));
}

/** Alpha-channel pixels with mask coverage (LA becomes RGBA on decode). */
function maskPixels(png: PNG): Array<{ col: number; row: number }> {
  const out: Array<{ col: number; row: number }> = [];
  for (let row = 0; row < png.height; row++) {
    for (let col = 0; col < png.width; col++) {
      if (png.data[(row * png.width + col) * 4 + 3] > 0) out.push({ col, row });
    }
  }
  return out;
}

describe("UI round trip against a live phantom session", () => {
  let sessionId: string;
  let zGeo: SliceGeometry;
  let centerIndex: number;

  it("opens a session on the phantom volume", async () => {
    const meta = await client.createSession({ volume_path: fixture.volume });
    sessionId = meta.session_id;
    expect(meta.dims.every((d) => d > 0)).toBe(true);
    centerIndex = Math.round(
      (fixture.lesion_center_mm[2] - meta.origin_mm[2]) / meta.spacing_mm[2],
    );
  }, 30000);

  it("draws the ROI on two orthogonal views; server grows it by 10 mm", async () => {
    const sliceZ = await client.fetchSlice(sessionId, "z", centerIndex);
    zGeo = sliceZ.geometry;
    const sliceX = await client.fetchSlice(sessionId, "x", 60);

    // drag the lesion box corners on each view, exactly as the canvas would
    const lo = fixture.lesion_box.min;
    const hi = fixture.lesion_box.max;
    const a0 = worldToPixel(zGeo, [lo[0], lo[1], 0]);
    const a1 = worldToPixel(zGeo, [hi[0], hi[1], 0]);
    const b0 = worldToPixel(sliceX.geometry, [0, lo[1], lo[2]]);
    const b1 = worldToPixel(sliceX.geometry, [0, hi[1], hi[2]]);
    const draft = roiFromDrags(
      { geo: zGeo, rect: { col0: a0.col, row0: a0.row, col1: a1.col, row1: a1.row } },
      { geo: sliceX.geometry, rect: { col0: b0.col, row0: b0.row, col1: b1.col, row1: b1.row } },
    );
    expect(draft).not.toBeNull();

    const resp = await client.setRoi(sessionId, draft!);
    expect(resp.margin_mm).toBe(10);
    // effective box = draft grown 10 mm per face (clipped to the extent);
    // this lesion sits far enough from the faces that nothing clips in x/y
    for (let i = 0; i < 3; i++) {
      expect(resp.effective_roi.min[i]).toBeCloseTo(Math.max(draft!.min[i] - 10, 0), 6);
      expect(resp.effective_roi.max[i]).toBeCloseTo(
        Math.min(draft!.max[i] + 10, [60, 60, 50][i]),
        6,
      );
    }
  }, 30000);

  it("segments and shows the overlay inside the lesion bounds", async () => {
    const summary = await client.segment(sessionId, { kind: "region_growing", params: {} });
    expect(summary.voxel_count).toBeGreaterThan(0);

    const slice = await client.fetchSlice(sessionId, "z", centerIndex);
    const png = decodePng(await slice.blob.arrayBuffer());
    const pixels = maskPixels(png);
    expect(pixels.length).toBeGreaterThan(0);

    // every overlay pixel maps inside the lesion box grown by a small
    // tolerance (region growing may add a thin boundary ring)
    const lo = fixture.lesion_box.min;
    const hi = fixture.lesion_box.max;
    const tol = 2.0;
    for (const px of pixels) {
      const colMm = slice.geometry.origin_mm[0] + px.col * slice.geometry.col_dir_mm[0];
      const rowMm = slice.geometry.origin_mm[1] + px.row * slice.geometry.row_dir_mm[1];
      expect(colMm).toBeGreaterThan(lo[0] - tol);
      expect(colMm).toBeLessThan(hi[0] + tol);
      expect(rowMm).toBeGreaterThan(lo[1] - tol);
      expect(rowMm).toBeLessThan(hi[1] + tol);
    }
  }, 60000);

  it("one erase stroke covering the lesion empties the slice overlay", async () => {
    await client.applyEdit(sessionId, "erase", fixture.lesion_center_mm, 30);
    const slice = await client.fetchSlice(sessionId, "z", centerIndex);
    const png = decodePng(await slice.blob.arrayBuffer());
    expect(maskPixels(png).length).toBe(0);
  }, 30000);

  it("re-runs segmentation after the destructive edit", async () => {
    const summary = await client.segment(sessionId, { kind: "region_growing", params: {} });
    expect(summary.voxel_count).toBeGreaterThan(0);
    expect(summary.n_edits).toBe(0); // rerun cleared the edit log
  }, 60000);

  let cleanPrecision: number;

  it("exports with ground truth; metrics JSON is pipeline-parseable", async () => {
    const outDir = join(workDir, "export");
    const resp = await client.exportCase(sessionId, outDir, fixture.gt);
    expect(resp.metrics).toBeDefined();

    const metrics = JSON.parse(readFileSync(join(outDir, "metrics.json"), "utf-8")) as Record<
      string,
      number | boolean | null
    >;
    for (const key of ["dice", "precision", "recall", "rvd", "hd95_mm", "detected", "elapsed_s"]) {
      expect(metrics).toHaveProperty(key);
    }
    expect(metrics.dice as number).toBeGreaterThan(0.5);
    expect(metrics.detected).toBe(true);
    cleanPrecision = metrics.precision as number;
  }, 30000);

  it("painting outside the lesion drops precision in the exported metrics", async () => {
    // a paint blob in parenchyma, inside the ROI but away from the lesion
    await client.applyEdit(sessionId, "paint", [16, 16, 25], 3);
    const resp = await client.exportCase(sessionId, join(workDir, "export2"), fixture.gt);
    const precision = resp.metrics!.precision as number;
    expect(precision).toBeLessThan(cleanPrecision);
  }, 30000);
});
