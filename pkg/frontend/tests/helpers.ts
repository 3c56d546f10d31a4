import type { FetchLike } from "../src/api";
import type { MediaElementLike } from "../src/sync";

export interface RecordedRequest {
  url: string;
  method: string;
  body: unknown;
}

/** In-memory review service: same contracts as the HTTP backend. */
export class FakeServer {
  requests: RecordedRequest[] = [];
  ratings = new Map<string, string>(); // "rater:video" -> option
  judgments = new Map<string, { answer: string; placement: unknown }>();
  videos: string[];
  latencyMs = 0;
  failNext = false;

  constructor(videos: string[] = ["v1", "v2"]) {
    this.videos = videos;
  }

  fetch: FetchLike = async (url, init) => {
    const method = init?.method ?? "GET";
    const body = init?.body ? JSON.parse(init.body as string) : null;
    this.requests.push({ url, method, body });
    if (this.latencyMs) {
      await new Promise((r) => setTimeout(r, this.latencyMs));
    }
    if (this.failNext) {
      this.failNext = false;
      return json(503, { error: "Unavailable", detail: "try again" });
    }
    if (url.startsWith("/api/tasks/next")) {
      const params = new URLSearchParams(url.split("?")[1]);
      return json(200, this.nextTask(params.get("rater")!, params.get("kind")!));
    }
    if (url === "/api/ratings" && method === "POST") {
      this.ratings.set(`${body.rater_id}:${body.video_id}`, body.option);
      return json(200, { stored: true, score: 1 });
    }
    if (url === "/api/judgments" && method === "POST") {
      this.judgments.set(`${body.clinician_id}:${body.pair_id}`, {
        answer: body.answer,
        placement: body.placement,
      });
      return json(200, { stored: true, score: body.answer === "yes" ? 1 : 0 });
    }
    return json(404, { error: "NotFound", detail: url });
  };

  private nextTask(rater: string, kind: string) {
    const done = (v: string) =>
      kind === "realism"
        ? this.ratings.has(`${rater}:${v}`)
        : this.judgments.has(`${rater}:${v}`);
    const pending = this.videos.filter((v) => !done(v));
    if (!pending.length) {
      return { done: true, completed: this.videos.length };
    }
    return kind === "realism"
      ? { done: false, kind, video_id: pending[0] }
      : {
          done: false,
          kind,
          pair_id: pending[0],
          real_video: pending[0],
          syn_video: pending[0],
        };
  }
}

function json(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

/** Minimal media element with a frame-quantized clock. */
export class FakePlayer implements MediaElementLike {
  paused = true;
  private time = 0;

  constructor(
    readonly duration: number = 10,
    readonly fps: number = 25,
  ) {}

  get currentTime(): number {
    return this.time;
  }

  // real players land on a frame boundary, not the exact seek target
  set currentTime(t: number) {
    this.time = Math.round(t * this.fps) / this.fps;
  }

  play(): void {
    this.paused = false;
  }

  pause(): void {
    this.paused = true;
  }

  /** Advance this player's clock alone, simulating drift. */
  drift(seconds: number): void {
    this.time += seconds;
  }
}
