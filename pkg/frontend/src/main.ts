/** App bootstrap: three orthogonal views, ROI drawing across two of them,
 * segmentation trigger, brush corrections, export. All mask state lives on
 * the server; after every acknowledged mutation the views refetch. */

import { NavClient, type PredictorSpec, type SliceGeometry, ServiceError } from "./api.js";
import { pixelToWorld, roiFromDrags, isDegenerate, type PixelRect } from "./geometry.js";
import {
  acceptEffectiveRoi,
  afterSegmentation,
  browse,
  canEdit,
  canSegment,
  initialState,
  setBrush,
  setRoiDraft,
  setWindow,
  withError,
  type Axis,
  type ViewState,
} from "./state.js";
import { drawBox, drawSlice, DRAFT_STYLE, EFFECTIVE_STYLE } from "./overlay.js";

const ZOOM = 3;

interface View {
  axis: Axis;
  canvas: HTMLCanvasElement;
  geometry: SliceGeometry | null;
  dragStart: { col: number; row: number } | null;
  dragRect: PixelRect | null;
}

interface PendingRoi {
  first: { geo: SliceGeometry; rect: PixelRect } | null;
}

function $(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el;
}

export async function boot(): Promise<void> {
  const base = (new URLSearchParams(location.search).get("service") ?? "http://127.0.0.1:8077").trim();
  const client = new NavClient(base);

  const sourceInput = $("source-path") as HTMLInputElement;
  const openBtn = $("open-btn") as HTMLButtonElement;
  const isSweep = $("source-sweep") as HTMLInputElement;

  openBtn.addEventListener("click", async () => {
    try {
      const meta = await client.createSession(
        isSweep.checked ? { sweep_dir: sourceInput.value } : { volume_path: sourceInput.value },
      );
      await runSession(client, meta.session_id);
    } catch (e) {
      showBanner(e instanceof Error ? e.message : String(e));
    }
  });
}

async function runSession(client: NavClient, sessionId: string): Promise<void> {
  const meta = await client.getMeta(sessionId);
  let state: ViewState = initialState(meta);
  const pendingRoi: PendingRoi = { first: null };
  let queue: Promise<unknown> = Promise.resolve(); // one in-flight mutation at a time

  const views: View[] = (["z", "y", "x"] as Axis[]).map((axis) => ({
    axis,
    canvas: $(`view-${axis}`) as HTMLCanvasElement,
    geometry: null,
    dragStart: null,
    dragRect: null,
  }));

  const segmentBtn = $("segment-btn") as HTMLButtonElement;
  const exportBtn = $("export-btn") as HTMLButtonElement;
  const roiModeBtn = $("roi-mode") as HTMLInputElement;
  const brushMode = $("brush-mode") as HTMLSelectElement;
  const brushRadius = $("brush-radius") as HTMLInputElement;
  const levelInput = $("window-level") as HTMLInputElement;
  const widthInput = $("window-width") as HTMLInputElement;
  const panel = $("summary-panel");

  function setState(next: ViewState): void {
    state = next;
    segmentBtn.disabled = !canSegment(state); // mirrors the server's 409
    exportBtn.disabled = !canEdit(state);
    if (state.error) showBanner(state.error);
    else hideBanner();
  }

  async function refreshView(view: View): Promise<void> {
    const index = state.sliceIndex[view.axis];
    const { blob, geometry } = await client.fetchSlice(
      sessionId,
      view.axis,
      index,
      state.window?.level,
      state.window?.width,
    );
    view.geometry = geometry;
    const ctx = view.canvas.getContext("2d")!;
    await drawSlice(ctx, blob, state.overlayVisible, ZOOM);
    if (state.roiDraft) drawBox(ctx, geometry, state.roiDraft, ZOOM, DRAFT_STYLE, true);
    if (state.effectiveRoi) drawBox(ctx, geometry, state.effectiveRoi, ZOOM, EFFECTIVE_STYLE);
  }

  async function refreshAll(): Promise<void> {
    await Promise.all(views.map(refreshView));
  }

  for (const view of views) {
    view.canvas.addEventListener("wheel", (ev) => {
      ev.preventDefault();
      const delta = ev.deltaY > 0 ? 1 : -1;
      setState(browse(state, view.axis, state.sliceIndex[view.axis] + delta));
      void refreshView(view).catch((e) => setState(withError(state, String(e))));
    });

    view.canvas.addEventListener("mousedown", (ev) => {
      if (!roiModeBtn.checked) return;
      view.dragStart = canvasPx(view, ev);
    });

    view.canvas.addEventListener("mousemove", (ev) => {
      if (!view.dragStart) return;
      const cur = canvasPx(view, ev);
      view.dragRect = {
        col0: view.dragStart.col,
        row0: view.dragStart.row,
        col1: cur.col,
        row1: cur.row,
      };
    });

    view.canvas.addEventListener("mouseup", () => {
      if (!view.dragStart || !view.dragRect || !view.geometry) {
        view.dragStart = null;
        return;
      }
      const rect = view.dragRect;
      view.dragStart = null;
      view.dragRect = null;
      if (isDegenerate(rect)) {
        setState(withError(state, "ROI drag has zero extent; draw a rectangle"));
        return;
      }
      if (!pendingRoi.first) {
        pendingRoi.first = { geo: view.geometry, rect };
        showBanner("ROI: now drag on an orthogonal view", false);
        return;
      }
      const box = roiFromDrags(pendingRoi.first, { geo: view.geometry, rect });
      pendingRoi.first = null;
      if (!box) {
        setState(withError(state, "ROI drags must be on two different (orthogonal) views"));
        return;
      }
      setState(setRoiDraft(state, box));
      queue = queue.then(async () => {
        try {
          const resp = await client.setRoi(sessionId, box);
          setState(acceptEffectiveRoi(setRoiDraft(state, box), resp.effective_roi));
          await refreshAll();
        } catch (e) {
          setState(withError(state, e instanceof Error ? e.message : String(e)));
        }
      });
    });

    view.canvas.addEventListener("click", (ev) => {
      if (roiModeBtn.checked || !canEdit(state) || !view.geometry) return;
      const px = canvasPx(view, ev);
      const world = pixelToWorld(view.geometry, px.col, px.row);
      const mode = brushMode.value === "paint" ? "paint" : "erase";
      const radius = Number(brushRadius.value) || state.brush.radiusMm;
      setState(setBrush(state, mode, radius));
      queue = queue.then(async () => {
        try {
          const summary = await client.applyEdit(sessionId, mode, world, radius);
          panel.textContent = summaryText(summary);
          await refreshAll(); // overlay always reflects server truth
        } catch (e) {
          setState(withError(state, e instanceof Error ? e.message : String(e)));
          await refreshAll(); // re-sync after a rejected edit
        }
      });
    });
  }

  segmentBtn.addEventListener("click", () => {
    const predictor: PredictorSpec = { kind: "region_growing", params: {} };
    queue = queue.then(async () => {
      try {
        const summary = await client.segment(sessionId, predictor);
        panel.textContent = summaryText(summary);
        setState(afterSegmentation(state));
        await refreshAll();
      } catch (e) {
        // service 502 preserves the ROI; surface the diagnostic only
        const msg = e instanceof ServiceError ? e.message : String(e);
        setState(withError(state, msg));
      }
    });
  });

  exportBtn.addEventListener("click", () => {
    const outDir = prompt("Export directory on the service host:", "/tmp/segbench-export");
    if (!outDir) return;
    queue = queue.then(async () => {
      try {
        const resp = await client.exportCase(sessionId, outDir);
        panel.textContent = `exported: ${resp.files.join(", ")}`;
      } catch (e) {
        setState(withError(state, e instanceof Error ? e.message : String(e)));
      }
    });
  });

  const applyWindow = (): void => {
    setState(setWindow(state, Number(levelInput.value), Number(widthInput.value)));
    void refreshAll().catch((e) => setState(withError(state, String(e))));
  };
  levelInput.addEventListener("change", applyWindow);
  widthInput.addEventListener("change", applyWindow);

  setState(state);
  await refreshAll();
}

function canvasPx(view: View, ev: MouseEvent): { col: number; row: number } {
  const r = view.canvas.getBoundingClientRect();
  return { col: (ev.clientX - r.left) / ZOOM, row: (ev.clientY - r.top) / ZOOM };
}

function summaryText(s: { voxel_count: number; volume_ml: number; elapsed_s: number }): string {
  return `mask: ${s.voxel_count} voxels, ${s.volume_ml.toFixed(2)} mL, ${s.elapsed_s.toFixed(2)} s`;
}

function showBanner(message: string, isError = true): void {
  const banner = $("error-banner");
  banner.textContent = message;
  banner.className = isError ? "banner error" : "banner info";
  banner.style.display = "block";
}

function hideBanner(): void {
  $("error-banner").style.display = "none";
}

if (typeof document !== "undefined" && document.getElementById("open-btn")) {
  void boot();
}
