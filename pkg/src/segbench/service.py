"""Local HTTP service for the interactive workflow: reconstruct, browse
slices, place the tumor ROI, segment, correct, export.

State machine per session: slice browsing is always available; segmentation
requires an ROI (409 otherwise); edits require a mask (409). The server, not
the client, applies the 10 mm ROI margin, so the cropping rule lives in
exactly one place. Mutating requests on one session are serialized; reads
and other sessions are unaffected.
"""

from __future__ import annotations

import io
import json
import threading
import time
import uuid
from dataclasses import dataclass, field as dfield
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Query, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from PIL import Image
from pydantic import BaseModel

from . import nrrdio
from .grid import BoundingBox, EmptyIntersectionError, Mask, Volume, embed_mask, sample_nearest
from .metrics import case_metrics
from .segment import (
    ROI_MARGIN_MM,
    PredictorError,
    PredictorHandle,
    binarize,
    postprocess,
    roi_with_margin,
    run_predictor,
)
from .sweep import load_sweep, reconstruct

_AXES = {"x": 0, "y": 1, "z": 2}


@dataclass
class EditOp:
    kind: str  # paint | erase
    center_mm: tuple[float, float, float]
    radius_mm: float

    def to_json(self) -> dict:
        return {"kind": self.kind, "center_mm": list(self.center_mm), "radius_mm": self.radius_mm}


@dataclass
class Session:
    session_id: str
    volume: Volume
    roi: BoundingBox | None = None
    probability: object = None
    mask: Mask | None = None
    base_mask: Mask | None = None  # post-prediction mask the edit log replays from
    edit_log: list[EditOp] = dfield(default_factory=list)
    timings: dict = dfield(default_factory=dict)
    lock: threading.RLock = dfield(default_factory=threading.RLock)


class CreateSessionBody(BaseModel):
    sweep_dir: str | None = None
    volume_path: str | None = None


class RoiBody(BaseModel):
    min: list[float]
    max: list[float]


class SegmentBody(BaseModel):
    predictor: dict = {"kind": "region_growing", "params": {}}
    threshold: float = 0.5


class EditBody(BaseModel):
    kind: str
    center_mm: list[float]
    radius_mm: float


class ExportBody(BaseModel):
    out_dir: str
    gt_mask_path: str | None = None


def _error(status: int, detail: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"detail": detail})


def _session_meta(s: Session) -> dict:
    g = s.volume.grid
    ext = g.extent()
    return {
        "session_id": s.session_id,
        "dims": list(g.dims),
        "spacing_mm": g.spacing.tolist(),
        "origin_mm": g.origin.tolist(),
        "extent": ext.to_json(),
        "roi": s.roi.to_json() if s.roi else None,
        "has_mask": s.mask is not None,
        "timings_s": dict(s.timings),
    }


def _mask_summary(s: Session) -> dict:
    assert s.mask is not None
    return {
        "voxel_count": s.mask.voxel_count,
        "volume_ml": s.mask.volume_mm3 / 1000.0,
        "elapsed_s": s.timings.get("segment_s", 0.0) + s.timings.get("corrections_s", 0.0),
        "n_edits": len(s.edit_log),
    }


def _apply_sphere(mask: Mask, op: EditOp) -> Mask:
    c_vox = mask.grid.world_to_voxel(np.asarray(op.center_mm, dtype=np.float64))
    sp = mask.grid.spacing
    dims = np.asarray(mask.grid.dims)
    lo = np.maximum(np.floor(c_vox - op.radius_mm / sp).astype(int), 0)
    hi = np.minimum(np.ceil(c_vox + op.radius_mm / sp).astype(int) + 1, dims)
    if np.any(lo >= hi):
        return mask
    data = mask.data.copy()
    xs = (np.arange(lo[0], hi[0]) - c_vox[0]) * sp[0]
    ys = (np.arange(lo[1], hi[1]) - c_vox[1]) * sp[1]
    zs = (np.arange(lo[2], hi[2]) - c_vox[2]) * sp[2]
    dist2 = zs[:, None, None] ** 2 + ys[None, :, None] ** 2 + xs[None, None, :] ** 2
    inside = dist2 <= op.radius_mm**2
    region = data[lo[2] : hi[2], lo[1] : hi[1], lo[0] : hi[0]]
    region[inside] = op.kind == "paint"
    data[lo[2] : hi[2], lo[1] : hi[1], lo[0] : hi[0]] = region
    return Mask(mask.grid, data)


def replay_edits(base: Mask, log: list[EditOp]) -> Mask:
    """Deterministic replay: base post-prediction mask + edit log -> current mask."""
    mask = base
    for op in log:
        mask = _apply_sphere(mask, op)
    return mask


def create_app() -> FastAPI:
    app = FastAPI(title="segbench navigation service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
        expose_headers=["X-Slice-Geometry"],
    )
    sessions: dict[str, Session] = {}
    registry_lock = threading.Lock()

    def get_session(session_id: str) -> Session | None:
        with registry_lock:
            return sessions.get(session_id)

    @app.post("/sessions")
    def create_session(body: CreateSessionBody):
        if bool(body.sweep_dir) == bool(body.volume_path):
            return _error(400, "provide exactly one of sweep_dir or volume_path")
        timings = {}
        try:
            if body.sweep_dir:
                sweep = load_sweep(body.sweep_dir)
                t0 = time.perf_counter()
                volume, _ = reconstruct(sweep)
                timings["reconstruct_s"] = time.perf_counter() - t0
            else:
                volume = nrrdio.read_volume(body.volume_path)
        except (OSError, ValueError) as e:
            return _error(400, f"cannot load source: {e}")
        session = Session(session_id=uuid.uuid4().hex, volume=volume, timings=timings)
        with registry_lock:
            sessions[session.session_id] = session
        return _session_meta(session)

    @app.get("/sessions/{session_id}")
    def meta(session_id: str):
        s = get_session(session_id)
        if s is None:
            return _error(404, "no such session")
        return _session_meta(s)

    @app.get("/sessions/{session_id}/slice")
    def get_slice(
        session_id: str,
        axis: str = Query(...),
        index: int = Query(...),
        level: float | None = None,
        width: float | None = None,
    ):
        s = get_session(session_id)
        if s is None:
            return _error(404, "no such session")
        if axis not in _AXES:
            return _error(404, f"axis must be one of {sorted(_AXES)}")
        ax = _AXES[axis]
        g = s.volume.grid
        if not (0 <= index < g.dims[ax]):
            return _error(404, f"index {index} out of range [0, {g.dims[ax]})")
        data = s.volume.data
        if axis == "z":
            img = data[index, :, :]
            row_axis, col_axis = 1, 0  # rows: y, cols: x
            vox = lambda i, j: (i, j, index)
        elif axis == "y":
            img = data[:, index, :]
            row_axis, col_axis = 2, 0  # rows: z, cols: x
            vox = lambda i, j: (i, index, j)
        else:
            img = data[:, :, index]
            row_axis, col_axis = 2, 1  # rows: z, cols: y
            vox = lambda i, j: (index, i, j)

        if level is None or width is None:
            lo, hi = float(data.min()), float(data.max())
            level = (hi + lo) / 2.0
            width = (hi - lo) or 1.0
        u8 = np.clip((img - (level - width / 2.0)) / width, 0.0, 1.0)
        u8 = (u8 * 255.0).astype(np.uint8)

        mask = s.mask
        if mask is not None:
            rows, cols = img.shape
            jj, ii = np.meshgrid(np.arange(rows), np.arange(cols), indexing="ij")
            vx, vy, vz = vox(ii.ravel().astype(np.float64), jj.ravel().astype(np.float64))
            if np.isscalar(vz):
                vz = np.full(ii.size, float(vz))
            if np.isscalar(vy):
                vy = np.full(ii.size, float(vy))
            if np.isscalar(vx):
                vx = np.full(ii.size, float(vx))
            world = g.voxel_to_world(np.column_stack([vx, vy, vz]))
            coords = mask.grid.world_to_voxel(world)
            overlay = sample_nearest(mask.data, coords, fill=False).reshape(rows, cols)
            png = Image.fromarray(np.stack([u8, overlay.astype(np.uint8) * 255], axis=-1), mode="LA")
        else:
            png = Image.fromarray(u8, mode="L")

        origin_px = g.voxel_to_world(np.asarray(vox(0.0, 0.0), dtype=np.float64))
        col_dir = g.orientation[:, col_axis] * g.spacing[col_axis]
        row_dir = g.orientation[:, row_axis] * g.spacing[row_axis]
        geometry = {
            "axis": axis,
            "index": index,
            "origin_mm": origin_px.tolist(),
            "col_dir_mm": col_dir.tolist(),
            "row_dir_mm": row_dir.tolist(),
            "mm_per_px": [float(g.spacing[col_axis]), float(g.spacing[row_axis])],
            "size_px": [int(img.shape[1]), int(img.shape[0])],
        }
        buf = io.BytesIO()
        png.save(buf, format="PNG")
        return Response(
            content=buf.getvalue(),
            media_type="image/png",
            headers={"X-Slice-Geometry": json.dumps(geometry)},
        )

    @app.put("/sessions/{session_id}/roi")
    def set_roi(session_id: str, body: RoiBody):
        s = get_session(session_id)
        if s is None:
            return _error(404, "no such session")
        try:
            box = BoundingBox(body.min, body.max)
            effective = roi_with_margin(box, ROI_MARGIN_MM, s.volume.grid.extent())
        except EmptyIntersectionError as e:
            return _error(422, str(e))
        except ValueError as e:
            return _error(422, str(e))
        with s.lock:
            s.roi = effective
        return {"effective_roi": effective.to_json(), "margin_mm": ROI_MARGIN_MM}

    @app.post("/sessions/{session_id}/segment")
    def run_segmentation(session_id: str, body: SegmentBody):
        s = get_session(session_id)
        if s is None:
            return _error(404, "no such session")
        with s.lock:
            if s.roi is None:
                return _error(409, "set an ROI before segmenting")
            try:
                handle = PredictorHandle(
                    kind=body.predictor.get("kind", "region_growing"),
                    params=body.predictor.get("params", {}),
                )
            except ValueError as e:
                return _error(422, f"bad predictor: {e}")
            t0 = time.perf_counter()
            try:
                pmap, _ = run_predictor(handle, s.volume, s.roi)
                mask = postprocess(binarize(pmap, body.threshold))
            except (PredictorError, ValueError) as e:
                return _error(502, f"predictor failed: {e}")
            s.probability = pmap
            s.mask = mask
            s.base_mask = mask
            s.edit_log = []
            s.timings["segment_s"] = time.perf_counter() - t0
            s.timings["corrections_s"] = 0.0
            return _mask_summary(s)

    @app.post("/sessions/{session_id}/edits")
    def apply_edit(session_id: str, body: EditBody):
        s = get_session(session_id)
        if s is None:
            return _error(404, "no such session")
        if body.kind not in ("paint", "erase"):
            return _error(422, "edit kind must be paint or erase")
        if body.radius_mm <= 0:
            return _error(422, "radius must be > 0")
        with s.lock:
            if s.mask is None:
                return _error(409, "run a segmentation before editing")
            t0 = time.perf_counter()
            op = EditOp(body.kind, tuple(body.center_mm), float(body.radius_mm))
            s.mask = _apply_sphere(s.mask, op)
            s.edit_log.append(op)
            s.timings["corrections_s"] = s.timings.get("corrections_s", 0.0) + (
                time.perf_counter() - t0
            )
            return _mask_summary(s)

    @app.post("/sessions/{session_id}/export")
    def export_case(session_id: str, body: ExportBody):
        s = get_session(session_id)
        if s is None:
            return _error(404, "no such session")
        with s.lock:
            if s.mask is None:
                return _error(409, "nothing to export: no mask")
            out = Path(body.out_dir)
            try:
                out.mkdir(parents=True, exist_ok=True)
                mask_path = out / "mask.nrrd"
                nrrdio.write_mask(mask_path, s.mask)
                timing_path = out / "timings.json"
                timing_path.write_text(json.dumps(dict(s.timings), indent=1))
                files = [str(mask_path), str(timing_path)]
                payload: dict = {"files": files}
                if body.gt_mask_path:
                    gt = nrrdio.read_mask(body.gt_mask_path)
                    full = embed_mask(s.mask, gt.grid)
                    cm = case_metrics(
                        full,
                        gt,
                        elapsed_s=s.timings.get("segment_s", 0.0)
                        + s.timings.get("corrections_s", 0.0),
                    )
                    metrics_path = out / "metrics.json"
                    metrics_path.write_text(json.dumps(cm.to_json(), indent=1))
                    files.append(str(metrics_path))
                    payload["metrics"] = cm.to_json()
            except OSError as e:
                return _error(500, f"export failed: {e}")
            return payload

    return app


def serve(host: str = "127.0.0.1", port: int = 8077) -> None:
    import uvicorn

    uvicorn.run(create_app(), host=host, port=port, log_level="warning")
