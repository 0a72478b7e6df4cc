import { describe, expect, it } from "vitest";

import {
  buildAnswers,
  emptyForm,
  itemsForPhase,
  missingItems,
  setAnswer,
} from "../src/questionnaire.js";
import type { Questionnaire } from "../src/types.js";

const schema: Questionnaire = {
  detail_loss: ["fine_detail", "distance_judgement"],
  drivability: ["obstacle_detection"],
  situational_awareness: ["scene_completeness"],
  reflection: ["information_loss", "assessment_revision"],
};

describe("itemsForPhase", () => {
  it("initial phase covers exactly dimensions 1-3", () => {
    const items = itemsForPhase(schema, "initial");
    expect(items.map((i) => i.dimension)).toEqual([
      "detail_loss", "detail_loss", "drivability", "situational_awareness",
    ]);
  });

  it("reflection phase covers dimension 4 only", () => {
    const items = itemsForPhase(schema, "reflection");
    expect(items.every((i) => i.dimension === "reflection")).toBe(true);
    expect(items).toHaveLength(2);
  });
});

describe("form validation", () => {
  it("blocks submission while any item is unanswered", () => {
    const items = itemsForPhase(schema, "initial");
    const form = emptyForm();
    setAnswer(form, items[0], 4);
    expect(missingItems(form, items)).toHaveLength(items.length - 1);
    expect(() => buildAnswers(form, items)).toThrow(/unanswered/);
  });

  it("builds a complete envelope once everything is answered", () => {
    const items = itemsForPhase(schema, "initial");
    const form = emptyForm();
    items.forEach((item, i) => setAnswer(form, item, ((i % 5) + 1)));
    const answers = buildAnswers(form, items);
    expect(answers).toHaveLength(items.length);
    expect(answers[0]).toEqual({
      dimension: "detail_loss", item_id: "fine_detail", value: 1,
    });
  });

  it("rejects out-of-scale values", () => {
    const form = emptyForm();
    expect(() => setAnswer(form, { dimension: "d", itemId: "i" }, 6)).toThrow(/1\.\.5/);
    expect(() => setAnswer(form, { dimension: "d", itemId: "i" }, 0)).toThrow(/1\.\.5/);
  });

  it("latest answer wins on re-selection", () => {
    const items = itemsForPhase(schema, "reflection");
    const form = emptyForm();
    setAnswer(form, items[0], 2);
    setAnswer(form, items[0], 5);
    setAnswer(form, items[1], 1);
    expect(buildAnswers(form, items)[0].value).toBe(5);
  });
});
