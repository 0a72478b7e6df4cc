import { describe, expect, it } from "vitest";

import type { StudyApiLike } from "../src/api.js";
import { FlowEngine, PlaybackDenied, type ParticipantPorts } from "../src/flow.js";
import type { FormItem } from "../src/questionnaire.js";
import type {
  Answer,
  Demographics,
  PlaybackGrant,
  SessionView,
} from "../src/types.js";

const SCHEMA = {
  detail_loss: ["d1"],
  drivability: ["v1"],
  situational_awareness: ["s1"],
  reflection: ["r1"],
};

const DEMO: Demographics = {
  age: 30, gender: "female", license: true, years_driving: 10,
  teleop_experience: false,
};

/** In-memory stand-in reproducing the server's forward-only contract. */
class FakeServer implements StudyApiLike {
  phase = "created";
  index = 0;
  nScenarios = 2;
  issued = new Map<string, boolean>(); // token -> consumed
  perIndex: { ci: boolean; cc: boolean; oi: boolean; oc: boolean }[] = [
    { ci: false, cc: false, oi: false, oc: false },
    { ci: false, cc: false, oi: false, oc: false },
  ];
  log: string[] = [];
  rejectScreen = false;
  rejectVision = false;

  async createSession(_d: Demographics, diagonal: number) {
    if (this.rejectScreen || diagonal < 25) {
      this.phase = "rejected";
      return { session_id: "s1", phase: "rejected", reason: "screen too small" };
    }
    this.log.push("create");
    return {
      session_id: "s1",
      phase: "created",
      reason: "",
      screening: {
        landolt: [
          { index: 0, orientation: "up", diameter_mm: 9, contrast: 1 },
          { index: 1, orientation: "left", diameter_mm: 7, contrast: 1 },
        ],
        ishihara: [{ plate_id: "p1", image: "p1.svg", options: ["12", "8"] }],
        directions: ["up", "left"],
      },
    };
  }

  async submitScreening(_sid: string, ppmm: number, landolt: string[], ishihara: string[]) {
    this.log.push(`screening ppmm=${ppmm.toFixed(2)} ${landolt.join(",")} ${ishihara.join(",")}`);
    if (this.rejectVision || landolt[0] !== "up") {
      this.phase = "rejected";
      return { phase: "rejected", reason: "vision" };
    }
    this.phase = "rating";
    return { phase: "rating", reason: "" };
  }

  async assignments(_sid: string): Promise<SessionView> {
    return {
      session_id: "s1",
      phase: this.phase,
      index: this.index,
      reason: "",
      n_scenarios: this.nScenarios,
      assignments: this.perIndex.map((st, i) => ({
        index: i,
        content_id: `scene${i}`,
        asset_id: `scene${i}_crf36`,
        crf: 36,
        compressed_issued: st.ci,
        compressed_consumed: st.cc,
        original_issued: st.oi,
        original_consumed: st.oc,
      })),
      questionnaire: SCHEMA,
      object_check_options: ["car", "bike"],
      video_target_width_mm: 520,
    };
  }

  async issuePlayback(_sid: string, index: number, which: "compressed" | "original"): Promise<PlaybackGrant> {
    const st = this.perIndex[index];
    const already = which === "compressed" ? st.ci : st.oi;
    if (already) throw new Error("409 already issued");
    if (which === "compressed") st.ci = true;
    else st.oi = true;
    this.log.push(`issue ${which} ${index}`);
    return { token: `${which}-${index}`, url: `/media/${which}-${index}` };
  }

  consume(token: string) {
    const [which, idxStr] = token.split("-");
    const st = this.perIndex[Number(idxStr)];
    if (which === "compressed") st.cc = true;
    else st.oc = true;
    this.log.push(`consume ${token}`);
  }

  async submit(_sid: string, index: number, phase: "initial" | "reflection", answers: Answer[], objectCheck?: string[]) {
    const st = this.perIndex[index];
    if (phase === "initial" && (!st.cc || this.phase !== "rating" || index !== this.index)) {
      throw new Error("409 out of order");
    }
    if (phase === "reflection" && (!st.oc || this.phase !== "reflecting" || index !== this.index)) {
      throw new Error("409 out of order");
    }
    this.log.push(`submit ${phase} ${index} n=${answers.length} oc=${objectCheck?.join("|") ?? "-"}`);
    if (phase === "initial") {
      this.phase = "reflecting";
    } else if (index + 1 < this.nScenarios) {
      this.phase = "rating";
      this.index = index + 1;
    } else {
      this.phase = "done";
    }
    return { phase: this.phase, index: this.index };
  }

  mediaUrl(grant: PlaybackGrant): string {
    return grant.url;
  }
}

function scriptedPorts(server: FakeServer, opts: { matchedPx?: number[] } = {}): ParticipantPorts {
  const widths = opts.matchedPx ?? [340];
  let wi = 0;
  return {
    async collectDemographics() {
      return { demographics: DEMO, screenDiagonal: 27 };
    },
    async readMatchedWidthPx() {
      return widths[Math.min(wi++, widths.length - 1)];
    },
    async answerLandolt(ring) {
      return ring.orientation;
    },
    async answerIshihara(plate) {
      return plate.options[0];
    },
    async playOnce(url) {
      server.consume(url.split("/").pop()!);
    },
    async answerQuestionnaire(items: FormItem[]) {
      return items.map((i) => ({ dimension: i.dimension, item_id: i.itemId, value: 4 }));
    },
    async answerObjectCheck() {
      return ["car"];
    },
    notify(kind, message) {
      server.log.push(`notify ${kind}: ${message}`);
    },
  };
}

describe("FlowEngine", () => {
  it("completes the full two-scenario session in order", async () => {
    const server = new FakeServer();
    const result = await new FlowEngine(server, scriptedPorts(server)).run();
    expect(result.phase).toBe("done");
    expect(result.ppmm).toBeCloseTo(340 / 85.6, 4);
    const ops = server.log.filter((l) => !l.startsWith("notify"));
    expect(ops).toEqual([
      "create",
      "screening ppmm=3.97 up,left 12",
      "issue compressed 0",
      "consume compressed-0",
      "submit initial 0 n=3 oc=-",
      "issue original 0",
      "consume original-0",
      "submit reflection 0 n=1 oc=car",
      "issue compressed 1",
      "consume compressed-1",
      "submit initial 1 n=3 oc=-",
      "issue original 1",
      "consume original-1",
      "submit reflection 1 n=1 oc=car",
    ]);
  });

  it("stops with a notice when the screen is too small", async () => {
    const server = new FakeServer();
    server.rejectScreen = true;
    const result = await new FlowEngine(server, scriptedPorts(server)).run();
    expect(result.phase).toBe("rejected");
    expect(server.log.some((l) => l.includes("screen too small"))).toBe(true);
  });

  it("stops when vision screening fails", async () => {
    const server = new FakeServer();
    server.rejectVision = true;
    const result = await new FlowEngine(server, scriptedPorts(server)).run();
    expect(result.phase).toBe("rejected");
  });

  it("re-prompts implausible calibration and keeps the last value", async () => {
    const server = new FakeServer();
    const ports = scriptedPorts(server, { matchedPx: [5, 2000, 400] });
    const result = await new FlowEngine(server, ports).run();
    expect(result.ppmm).toBeCloseTo(400 / 85.6, 4);
    expect(server.log.filter((l) => l.startsWith("notify calibration"))).toHaveLength(2);
  });

  it("resumes after reload: consumed video is not replayed, questionnaire proceeds", async () => {
    const server = new FakeServer();
    // simulate a previous page that issued and consumed scenario 0's video
    server.perIndex[0] = { ci: true, cc: true, oi: false, oc: false };
    server.phase = "rating";
    const result = await new FlowEngine(server, scriptedPorts(server)).run();
    expect(result.phase).toBe("done");
    expect(server.log.filter((l) => l === "issue compressed 0")).toHaveLength(0);
    expect(server.log.some((l) => l.includes("already been") || l.includes("cannot be replayed"))).toBe(true);
    expect(server.log).toContain("submit initial 0 n=3 oc=-");
  });

  it("surfaces a denied refetch and still reaches the questionnaire", async () => {
    const server = new FakeServer();
    const ports = scriptedPorts(server);
    const denyOnce = { done: false };
    const origPlay = ports.playOnce;
    ports.playOnce = async (url, w) => {
      if (!denyOnce.done) {
        denyOnce.done = true;
        // consume server-side (the fetch reached the server), then fail locally
        server.consume(url.split("/").pop()!);
        throw new PlaybackDenied("stream interrupted");
      }
      return origPlay(url, w);
    };
    const result = await new FlowEngine(server, ports).run();
    expect(result.phase).toBe("done");
    expect(server.log.some((l) => l.startsWith("notify playback"))).toBe(true);
  });
});
