// Thin typed client over the study-service HTTP JSON API.

import type {
  Answer,
  Demographics,
  PlaybackGrant,
  SessionCreated,
  SessionView,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

type FetchLike = typeof fetch;

export interface StudyApiLike {
  createSession(demographics: Demographics, screenDiagonal: number): Promise<SessionCreated>;
  submitScreening(
    sessionId: string,
    ppmm: number,
    landoltAnswers: string[],
    ishiharaAnswers: string[],
  ): Promise<{ phase: string; reason: string }>;
  assignments(sessionId: string): Promise<SessionView>;
  issuePlayback(
    sessionId: string,
    index: number,
    which: "compressed" | "original",
  ): Promise<PlaybackGrant>;
  submit(
    sessionId: string,
    index: number,
    phase: "initial" | "reflection",
    answers: Answer[],
    objectCheck?: string[],
  ): Promise<{ phase: string; index: number }>;
  mediaUrl(grant: PlaybackGrant): string;
}

export class StudyApi implements StudyApiLike {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const res = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers: body === undefined ? {} : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!res.ok) {
      let detail = res.statusText;
      try {
        const doc = (await res.json()) as { detail?: string };
        if (doc.detail) detail = doc.detail;
      } catch {
        // error body was not JSON; keep the status text
      }
      throw new ApiError(res.status, detail);
    }
    return (await res.json()) as T;
  }

  createSession(demographics: Demographics, screenDiagonal: number): Promise<SessionCreated> {
    return this.request("POST", "/sessions", {
      demographics,
      screen_diagonal: screenDiagonal,
    });
  }

  submitScreening(
    sessionId: string,
    ppmm: number,
    landoltAnswers: string[],
    ishiharaAnswers: string[],
  ): Promise<{ phase: string; reason: string }> {
    return this.request("POST", `/sessions/${sessionId}/screening`, {
      ppmm,
      landolt_answers: landoltAnswers,
      ishihara_answers: ishiharaAnswers,
    });
  }

  assignments(sessionId: string): Promise<SessionView> {
    return this.request("GET", `/sessions/${sessionId}/assignments`);
  }

  issuePlayback(
    sessionId: string,
    index: number,
    which: "compressed" | "original",
  ): Promise<PlaybackGrant> {
    return this.request("POST", `/sessions/${sessionId}/playback/${index}/${which}`);
  }

  submit(
    sessionId: string,
    index: number,
    phase: "initial" | "reflection",
    answers: Answer[],
    objectCheck?: string[],
  ): Promise<{ phase: string; index: number }> {
    return this.request("POST", `/sessions/${sessionId}/submissions`, {
      index,
      phase,
      answers,
      object_check: objectCheck,
    });
  }

  mediaUrl(grant: PlaybackGrant): string {
    return this.baseUrl + grant.url;
  }
}
