/** View state and its transitions. Pure functions over a plain object so the
 * behavior is unit-testable without a DOM; the mask itself is never cached
 * here - the server is the single source of truth. */

import type { Box, SessionMeta } from "./api.js";

export type Axis = "x" | "y" | "z";

export interface ViewState {
  sessionId: string;
  dims: [number, number, number];
  activeAxis: Axis;
  sliceIndex: Record<Axis, number>;
  window: { level: number; width: number } | null;
  roiDraft: Box | null;
  effectiveRoi: Box | null;
  overlayVisible: boolean;
  brush: { mode: "paint" | "erase"; radiusMm: number };
  hasMask: boolean;
  error: string | null;
}

const AXIS_DIM: Record<Axis, 0 | 1 | 2> = { x: 0, y: 1, z: 2 };

export function initialState(meta: SessionMeta): ViewState {
  return {
    sessionId: meta.session_id,
    dims: meta.dims,
    activeAxis: "z",
    sliceIndex: {
      x: Math.floor(meta.dims[0] / 2),
      y: Math.floor(meta.dims[1] / 2),
      z: Math.floor(meta.dims[2] / 2),
    },
    window: null,
    roiDraft: null,
    effectiveRoi: meta.roi,
    overlayVisible: true,
    brush: { mode: "erase", radiusMm: 3.0 },
    hasMask: meta.has_mask,
    error: null,
  };
}

export function clampIndex(state: ViewState, axis: Axis, index: number): number {
  const n = state.dims[AXIS_DIM[axis]];
  return Math.min(Math.max(index, 0), n - 1);
}

/** Scroll/browse: index clamps to the valid range instead of erroring. */
export function browse(state: ViewState, axis: Axis, index: number): ViewState {
  return {
    ...state,
    activeAxis: axis,
    sliceIndex: { ...state.sliceIndex, [axis]: clampIndex(state, axis, index) },
  };
}

/** Axis switch preserves per-axis indices. */
export function switchAxis(state: ViewState, axis: Axis): ViewState {
  return { ...state, activeAxis: axis };
}

/** Window changes rerender but never touch geometry or indices. */
export function setWindow(state: ViewState, level: number, width: number): ViewState {
  return { ...state, window: { level, width: Math.max(width, 1e-6) } };
}

export function setRoiDraft(state: ViewState, draft: Box | null): ViewState {
  return { ...state, roiDraft: draft };
}

export function acceptEffectiveRoi(state: ViewState, effective: Box): ViewState {
  return { ...state, effectiveRoi: effective, error: null };
}

export function afterSegmentation(state: ViewState): ViewState {
  return { ...state, hasMask: true, error: null };
}

export function canSegment(state: ViewState): boolean {
  return state.effectiveRoi !== null;
}

export function canEdit(state: ViewState): boolean {
  return state.hasMask;
}

export function setBrush(state: ViewState, mode: "paint" | "erase", radiusMm: number): ViewState {
  if (radiusMm <= 0) return state;
  return { ...state, brush: { mode, radiusMm } };
}

/** Errors surface in a banner; browsing state is preserved. */
export function withError(state: ViewState, message: string): ViewState {
  return { ...state, error: message };
}

export function clearError(state: ViewState): ViewState {
  return { ...state, error: null };
}
