/** Typed client for the navigation service HTTP+JSON/PNG API. */

export interface Box {
  min: [number, number, number];
  max: [number, number, number];
}

export interface SessionMeta {
  session_id: string;
  dims: [number, number, number];
  spacing_mm: [number, number, number];
  origin_mm: [number, number, number];
  extent: Box;
  roi: Box | null;
  has_mask: boolean;
  timings_s: Record<string, number>;
}

/** Geometry metadata attached to every slice response (X-Slice-Geometry). */
export interface SliceGeometry {
  axis: "x" | "y" | "z";
  index: number;
  origin_mm: [number, number, number];
  col_dir_mm: [number, number, number];
  row_dir_mm: [number, number, number];
  mm_per_px: [number, number];
  size_px: [number, number];
}

export interface SliceResponse {
  blob: Blob;
  geometry: SliceGeometry;
}

export interface MaskSummary {
  voxel_count: number;
  volume_ml: number;
  elapsed_s: number;
  n_edits: number;
}

export interface RoiResponse {
  effective_roi: Box;
  margin_mm: number;
}

export interface ExportResponse {
  files: string[];
  metrics?: Record<string, number | boolean | null>;
}

export interface PredictorSpec {
  kind: string;
  params?: Record<string, unknown>;
}

export class ServiceError extends Error {
  constructor(public status: number, detail: string) {
    super(`service ${status}: ${detail}`);
  }
}

async function raiseForStatus(r: Response): Promise<void> {
  if (!r.ok) {
    let detail = r.statusText;
    try {
      const body = (await r.json()) as { detail?: string };
      if (body.detail) detail = body.detail;
    } catch {
      /* non-JSON error body */
    }
    throw new ServiceError(r.status, detail);
  }
}

export class NavClient {
  constructor(public baseUrl: string) {}

  private url(path: string): string {
    return `${this.baseUrl.replace(/\/$/, "")}${path}`;
  }

  async createSession(source: { sweep_dir?: string; volume_path?: string }): Promise<SessionMeta> {
    const r = await fetch(this.url("/sessions"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(source),
    });
    await raiseForStatus(r);
    return (await r.json()) as SessionMeta;
  }

  async getMeta(sessionId: string): Promise<SessionMeta> {
    const r = await fetch(this.url(`/sessions/${sessionId}`));
    await raiseForStatus(r);
    return (await r.json()) as SessionMeta;
  }

  sliceUrl(sessionId: string, axis: string, index: number, level?: number, width?: number): string {
    const params = new URLSearchParams({ axis, index: String(index) });
    if (level !== undefined && width !== undefined) {
      params.set("level", String(level));
      params.set("width", String(width));
    }
    return this.url(`/sessions/${sessionId}/slice?${params}`);
  }

  async fetchSlice(
    sessionId: string,
    axis: string,
    index: number,
    level?: number,
    width?: number,
  ): Promise<SliceResponse> {
    const r = await fetch(this.sliceUrl(sessionId, axis, index, level, width));
    await raiseForStatus(r);
    const header = r.headers.get("X-Slice-Geometry");
    if (!header) throw new ServiceError(500, "slice response lacks geometry metadata");
    return { blob: await r.blob(), geometry: JSON.parse(header) as SliceGeometry };
  }

  async setRoi(sessionId: string, box: Box): Promise<RoiResponse> {
    const r = await fetch(this.url(`/sessions/${sessionId}/roi`), {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(box),
    });
    await raiseForStatus(r);
    return (await r.json()) as RoiResponse;
  }

  async segment(sessionId: string, predictor: PredictorSpec, threshold = 0.5): Promise<MaskSummary> {
    const r = await fetch(this.url(`/sessions/${sessionId}/segment`), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ predictor, threshold }),
    });
    await raiseForStatus(r);
    return (await r.json()) as MaskSummary;
  }

  async applyEdit(
    sessionId: string,
    kind: "paint" | "erase",
    centerMm: [number, number, number],
    radiusMm: number,
  ): Promise<MaskSummary> {
    const r = await fetch(this.url(`/sessions/${sessionId}/edits`), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ kind, center_mm: centerMm, radius_mm: radiusMm }),
    });
    await raiseForStatus(r);
    return (await r.json()) as MaskSummary;
  }

  async exportCase(sessionId: string, outDir: string, gtMaskPath?: string): Promise<ExportResponse> {
    const r = await fetch(this.url(`/sessions/${sessionId}/export`), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ out_dir: outDir, gt_mask_path: gtMaskPath ?? null }),
    });
    await raiseForStatus(r);
    return (await r.json()) as ExportResponse;
  }
}
