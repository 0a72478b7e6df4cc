// Landolt ring rendering as vector graphics, scaled by the calibrated ppmm.
// The gap direction arrives from the server per ring and lives only in
// memory; grading happens server-side.

import type { LandoltRing } from "./types.js";

const DIRECTION_ANGLE_DEG: Record<string, number> = {
  right: 0,
  up_right: 45,
  up: 90,
  up_left: 135,
  left: 180,
  down_left: 225,
  down: 270,
  down_right: 315,
};

export function directionAngle(direction: string): number {
  const angle = DIRECTION_ANGLE_DEG[direction];
  if (angle === undefined) {
    throw new Error(`unknown gap direction: ${direction}`);
  }
  return angle;
}

export interface RingGeometry {
  sizePx: number;
  strokePx: number;
  gapPx: number;
  gapAngleDeg: number;
  color: string;
}

/**
 * Standard Landolt proportions: stroke and gap are one fifth of the outer
 * diameter. Contrast in [0,1] maps to a gray level on white background.
 */
export function ringGeometry(ring: LandoltRing, ppmm: number): RingGeometry {
  const sizePx = ring.diameter_mm * ppmm;
  const gray = Math.round(255 * (1 - ring.contrast));
  return {
    sizePx,
    strokePx: sizePx / 5,
    gapPx: sizePx / 5,
    gapAngleDeg: directionAngle(ring.orientation),
    color: `rgb(${gray},${gray},${gray})`,
  };
}

/** Self-contained SVG element markup for one ring. */
export function ringSvg(ring: LandoltRing, ppmm: number): string {
  const g = ringGeometry(ring, ppmm);
  const r = (g.sizePx - g.strokePx) / 2;
  const c = g.sizePx / 2;
  // the gap is an arc removed around gapAngleDeg; draw the ring as a full
  // circle and overlay a background-colored wedge line across the stroke
  const rad = (g.gapAngleDeg * Math.PI) / 180;
  const x1 = c + (r - g.strokePx) * Math.cos(rad);
  const y1 = c - (r - g.strokePx) * Math.sin(rad);
  const x2 = c + (r + g.strokePx) * Math.cos(rad);
  const y2 = c - (r + g.strokePx) * Math.sin(rad);
  return (
    `<svg width="${g.sizePx.toFixed(1)}" height="${g.sizePx.toFixed(1)}" ` +
    `viewBox="0 0 ${g.sizePx.toFixed(1)} ${g.sizePx.toFixed(1)}" role="img">` +
    `<circle cx="${c}" cy="${c}" r="${r}" fill="none" ` +
    `stroke="${g.color}" stroke-width="${g.strokePx}"/>` +
    `<line x1="${x1}" y1="${y1}" x2="${x2}" y2="${y2}" ` +
    `stroke="white" stroke-width="${g.gapPx}"/>` +
    `</svg>`
  );
}
