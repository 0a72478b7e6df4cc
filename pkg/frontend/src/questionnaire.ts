// Questionnaire form model: item listing per phase, completeness validation
// and envelope building. DOM rendering stays in main.ts; everything here is
// pure and unit-testable.

import type { Answer, Questionnaire } from "./types.js";
import { INITIAL_DIMENSIONS, REFLECTION_DIMENSIONS } from "./types.js";

export const LIKERT_VALUES = [1, 2, 3, 4, 5] as const;

export interface FormItem {
  dimension: string;
  itemId: string;
}

export function itemsForPhase(
  schema: Questionnaire,
  phase: "initial" | "reflection",
): FormItem[] {
  const dims = phase === "initial" ? INITIAL_DIMENSIONS : REFLECTION_DIMENSIONS;
  const items: FormItem[] = [];
  for (const dimension of dims) {
    for (const itemId of schema[dimension] ?? []) {
      items.push({ dimension, itemId });
    }
  }
  return items;
}

export interface FormState {
  values: Map<string, number>; // "dimension/item" -> 1..5
}

export function emptyForm(): FormState {
  return { values: new Map() };
}

export function setAnswer(form: FormState, item: FormItem, value: number): void {
  if (!LIKERT_VALUES.includes(value as (typeof LIKERT_VALUES)[number])) {
    throw new Error(`Likert value must be 1..5, got ${value}`);
  }
  form.values.set(`${item.dimension}/${item.itemId}`, value);
}

/** Items still unanswered; submission stays blocked until this is empty. */
export function missingItems(form: FormState, items: FormItem[]): FormItem[] {
  return items.filter((i) => !form.values.has(`${i.dimension}/${i.itemId}`));
}

export function buildAnswers(form: FormState, items: FormItem[]): Answer[] {
  const missing = missingItems(form, items);
  if (missing.length > 0) {
    const names = missing.map((i) => `${i.dimension}/${i.itemId}`).join(", ");
    throw new Error(`unanswered items: ${names}`);
  }
  return items.map((i) => ({
    dimension: i.dimension,
    item_id: i.itemId,
    value: form.values.get(`${i.dimension}/${i.itemId}`)!,
  }));
}
