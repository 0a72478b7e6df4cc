import { describe, expect, it } from "vitest";

import {
  CARD_WIDTH_MM,
  calibrateUntilPlausible,
  computePpmm,
  ppmmPlausible,
  videoWidthPx,
} from "../src/calibration.js";

describe("computePpmm", () => {
  it("matches the worked example: 340 px over an 85.6 mm card", () => {
    expect(computePpmm(340, CARD_WIDTH_MM)).toBeCloseTo(3.9719, 3);
  });

  it("is linear in the matched width", () => {
    expect(computePpmm(680)).toBeCloseTo(2 * computePpmm(340), 9);
  });

  it("rejects nonsense sizes", () => {
    expect(computePpmm(0)).toBeNaN();
    expect(computePpmm(-5)).toBeNaN();
  });
});

describe("ppmmPlausible", () => {
  it("accepts the plausible band", () => {
    expect(ppmmPlausible(1.0)).toBe(true);
    expect(ppmmPlausible(3.97)).toBe(true);
    expect(ppmmPlausible(20.0)).toBe(true);
  });

  it("rejects out-of-band and non-finite values", () => {
    expect(ppmmPlausible(0.2)).toBe(false);
    expect(ppmmPlausible(25)).toBe(false);
    expect(ppmmPlausible(NaN)).toBe(false);
  });
});

describe("calibrateUntilPlausible", () => {
  it("re-prompts until plausible and the latest value wins", async () => {
    const attempts = [10, 30, 400]; // 0.12, 0.35, 4.67 px/mm
    let i = 0;
    const notices: number[] = [];
    const ppmm = await calibrateUntilPlausible(
      async () => attempts[i++],
      (bad) => notices.push(bad),
    );
    expect(ppmm).toBeCloseTo(400 / CARD_WIDTH_MM, 6);
    expect(notices).toHaveLength(2);
  });

  it("gives up after the attempt budget", async () => {
    await expect(
      calibrateUntilPlausible(async () => 1, () => undefined, 3),
    ).rejects.toThrow(/calibration failed/);
  });
});

describe("videoWidthPx", () => {
  it("locks the physical size across screens", () => {
    // a 520 mm target is the same number of millimeters on every screen
    expect(videoWidthPx(520, 4.0)).toBe(2080);
    expect(videoWidthPx(520, 2.5)).toBe(1300);
  });
});
