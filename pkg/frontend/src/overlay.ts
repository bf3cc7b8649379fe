/** Canvas rendering helpers: slice bitmap, mask overlay, ROI boxes, brush. */

import type { Box, SliceGeometry } from "./api.js";
import { boxToPixelRect } from "./geometry.js";

export const DRAFT_STYLE = "rgba(255, 210, 60, 0.95)";
export const EFFECTIVE_STYLE = "rgba(80, 220, 120, 0.95)";
export const MASK_TINT: [number, number, number] = [235, 80, 160];

/** Paint the LA slice PNG: luminance to grayscale, alpha channel tinted as
 * the mask overlay when visible. */
export async function drawSlice(
  ctx: CanvasRenderingContext2D,
  blob: Blob,
  overlayVisible: boolean,
  zoom: number,
): Promise<void> {
  const bitmap = await createImageBitmap(blob);
  const w = bitmap.width;
  const h = bitmap.height;
  const off = new OffscreenCanvas(w, h);
  const octx = off.getContext("2d", { willReadFrequently: true })!;
  octx.drawImage(bitmap, 0, 0);
  const img = octx.getImageData(0, 0, w, h);
  const px = img.data;
  // browsers premultiply LA into RGBA; recover mask pixels from alpha < 255
  for (let i = 0; i < px.length; i += 4) {
    const alpha = px[i + 3];
    const masked = alpha < 255;
    if (masked && overlayVisible) {
      px[i] = Math.min(255, px[i] * 0.5 + MASK_TINT[0] * 0.5);
      px[i + 1] = Math.min(255, px[i + 1] * 0.35 + MASK_TINT[1] * 0.35);
      px[i + 2] = Math.min(255, px[i + 2] * 0.5 + MASK_TINT[2] * 0.5);
    }
    px[i + 3] = 255;
  }
  octx.putImageData(img, 0, 0);
  ctx.canvas.width = Math.round(w * zoom);
  ctx.canvas.height = Math.round(h * zoom);
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(off, 0, 0, ctx.canvas.width, ctx.canvas.height);
}

export function drawBox(
  ctx: CanvasRenderingContext2D,
  geo: SliceGeometry,
  box: Box,
  zoom: number,
  style: string,
  dashed = false,
): void {
  const rect = boxToPixelRect(geo, box);
  ctx.save();
  ctx.strokeStyle = style;
  ctx.lineWidth = 1.5;
  ctx.setLineDash(dashed ? [6, 4] : []);
  ctx.strokeRect(
    rect.col0 * zoom,
    rect.row0 * zoom,
    (rect.col1 - rect.col0) * zoom,
    (rect.row1 - rect.row0) * zoom,
  );
  ctx.restore();
}

export function drawBrushCursor(
  ctx: CanvasRenderingContext2D,
  colPx: number,
  rowPx: number,
  radiusPx: number,
  mode: "paint" | "erase",
): void {
  ctx.save();
  ctx.strokeStyle = mode === "paint" ? "rgba(120,220,120,0.9)" : "rgba(240,120,120,0.9)";
  ctx.lineWidth = 1;
  ctx.beginPath();
  ctx.arc(colPx, rowPx, radiusPx, 0, 2 * Math.PI);
  ctx.stroke();
  ctx.restore();
}
