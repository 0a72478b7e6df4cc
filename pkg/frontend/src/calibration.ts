// Screen calibration: the participant resizes an on-screen rectangle until
// it matches a physical reference card; pixels-per-millimeter follows from
// the matched width. The same ppmm later fixes the rendered video size so
// every participant sees the video at identical physical dimensions.

export const CARD_WIDTH_MM = 85.6; // ID-1 bank card
export const PPMM_MIN = 1.0;
export const PPMM_MAX = 20.0;

export function computePpmm(matchedWidthPx: number, cardWidthMm: number = CARD_WIDTH_MM): number {
  if (matchedWidthPx <= 0 || cardWidthMm <= 0) {
    return NaN;
  }
  return matchedWidthPx / cardWidthMm;
}

export function ppmmPlausible(ppmm: number): boolean {
  return Number.isFinite(ppmm) && ppmm >= PPMM_MIN && ppmm <= PPMM_MAX;
}

/** Physical-size-locked video width in CSS pixels. */
export function videoWidthPx(targetWidthMm: number, ppmm: number): number {
  return Math.round(targetWidthMm * ppmm);
}

/**
 * Run the calibration dialogue until a plausible value comes back; the
 * latest attempt always wins.
 */
export async function calibrateUntilPlausible(
  readMatchedWidthPx: () => Promise<number>,
  onImplausible: (ppmm: number) => void,
  maxAttempts = 25,
): Promise<number> {
  for (let attempt = 0; attempt < maxAttempts; attempt++) {
    const ppmm = computePpmm(await readMatchedWidthPx());
    if (ppmmPlausible(ppmm)) {
      return ppmm;
    }
    onImplausible(ppmm);
  }
  throw new Error("calibration failed: no plausible value obtained");
}
