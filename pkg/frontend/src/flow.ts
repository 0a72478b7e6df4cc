// Session flow engine: drives the whole study against the server state
// machine. The server phase is authoritative; every round starts by
// re-reading it, so a reloaded page resumes exactly where the server says.

import { ApiError, type StudyApiLike } from "./api.js";
import { calibrateUntilPlausible } from "./calibration.js";
import { buildAnswers, emptyForm, itemsForPhase, setAnswer, type FormItem } from "./questionnaire.js";
import type { Answer, Demographics, IshiharaPlate, LandoltRing, SessionView } from "./types.js";

export class PlaybackDenied extends Error {}

export interface ParticipantPorts {
  collectDemographics(): Promise<{ demographics: Demographics; screenDiagonal: number }>;
  /** Width in px of the on-screen rectangle after matching the card. */
  readMatchedWidthPx(): Promise<number>;
  answerLandolt(ring: LandoltRing, ppmm: number): Promise<string>;
  answerIshihara(plate: IshiharaPlate): Promise<string>;
  /** Stream the one-shot video to its end; throws PlaybackDenied on reuse. */
  playOnce(url: string, videoWidthPx: number): Promise<void>;
  answerQuestionnaire(items: FormItem[], scenarioIndex: number, phase: "initial" | "reflection"): Promise<Answer[]>;
  answerObjectCheck(options: string[]): Promise<string[]>;
  notify(kind: string, message: string): void;
}

export interface FlowResult {
  sessionId: string | null;
  phase: string;
  ppmm: number | null;
}

export class FlowEngine {
  ppmm: number | null = null;
  sessionId: string | null = null;

  constructor(
    private readonly api: StudyApiLike,
    private readonly ports: ParticipantPorts,
  ) {}

  async run(): Promise<FlowResult> {
    const { demographics, screenDiagonal } = await this.ports.collectDemographics();
    const created = await this.api.createSession(demographics, screenDiagonal);
    this.sessionId = created.session_id;
    if (created.phase === "rejected") {
      this.ports.notify("rejected", created.reason);
      return this.result("rejected");
    }

    this.ppmm = await calibrateUntilPlausible(
      () => this.ports.readMatchedWidthPx(),
      (ppmm) => this.ports.notify("calibration", `implausible value ${ppmm.toFixed(2)} px/mm, try again`),
    );

    const screening = created.screening!;
    const landoltAnswers: string[] = [];
    for (const ring of screening.landolt) {
      landoltAnswers.push(await this.ports.answerLandolt(ring, this.ppmm));
    }
    const ishiharaAnswers: string[] = [];
    for (const plate of screening.ishihara) {
      ishiharaAnswers.push(await this.ports.answerIshihara(plate));
    }
    const screened = await this.api.submitScreening(
      created.session_id, this.ppmm, landoltAnswers, ishiharaAnswers,
    );
    if (screened.phase === "rejected") {
      this.ports.notify("rejected", screened.reason);
      return this.result("rejected");
    }

    // scenario loop, re-synced from the server every round
    let guard = 0;
    for (;;) {
      const view = await this.api.assignments(created.session_id);
      if (view.phase === "done" || view.phase === "rejected") {
        return this.result(view.phase);
      }
      if (guard++ > view.n_scenarios * 2 + 4) {
        this.ports.notify("error", "session made no progress; aborting");
        return this.result(view.phase);
      }
      if (view.phase === "rating") {
        await this.scenarioStep(view, "compressed", "initial");
      } else if (view.phase === "reflecting") {
        await this.scenarioStep(view, "original", "reflection");
      } else {
        this.ports.notify("error", `unexpected phase ${view.phase}`);
        return this.result(view.phase);
      }
    }
  }

  private result(phase: string): FlowResult {
    return { sessionId: this.sessionId, phase, ppmm: this.ppmm };
  }

  private async scenarioStep(
    view: SessionView,
    which: "compressed" | "original",
    phase: "initial" | "reflection",
  ): Promise<void> {
    const index = view.index;
    const assignment = view.assignments[index];
    const issued = which === "compressed" ? assignment.compressed_issued : assignment.original_issued;
    const consumed = which === "compressed" ? assignment.compressed_consumed : assignment.original_consumed;
    const widthPx = Math.round(view.video_target_width_mm * (this.ppmm ?? 4));

    if (!issued) {
      const grant = await this.api.issuePlayback(view.session_id, index, which);
      try {
        await this.ports.playOnce(this.api.mediaUrl(grant), widthPx);
      } catch (err) {
        if (err instanceof PlaybackDenied) {
          this.ports.notify("playback", "the video cannot be replayed; continuing to the questionnaire");
        } else {
          throw err;
        }
      }
    } else if (consumed) {
      // page was reloaded after watching: single-use contract
      this.ports.notify("playback", "this video was already shown and cannot be replayed");
    } else {
      this.ports.notify("playback", "playback was interrupted before it started; the scenario cannot be replayed");
    }

    const items = itemsForPhase(view.questionnaire, phase);
    const answers = await this.ports.answerQuestionnaire(items, index, phase);
    // belt-and-braces: the form layer guarantees completeness
    const form = emptyForm();
    for (const a of answers) {
      setAnswer(form, { dimension: a.dimension, itemId: a.item_id }, a.value);
    }
    const complete = buildAnswers(form, items);

    let objectCheck: string[] | undefined;
    if (phase === "reflection") {
      objectCheck = await this.ports.answerObjectCheck(view.object_check_options ?? []);
    }
    try {
      await this.api.submit(view.session_id, index, phase, complete, objectCheck);
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        // server refused (e.g. unconsumed playback after a broken reload);
        // surface it and let the next resync decide
        this.ports.notify("error", err.detail);
        return;
      }
      throw err;
    }
  }
}
