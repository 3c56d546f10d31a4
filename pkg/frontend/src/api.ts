/** Typed client for the review service HTTP API.
 *
 * Submissions are idempotent per (rater, item): a second submit for the
 * same key, whether from a double-click or a retry racing a slow
 * response, reuses the original request instead of posting again.
 */

export interface RealismTask {
  done: false;
  kind: "realism";
  video_id: string;
}

export interface PairedTask {
  done: false;
  kind: "paired";
  pair_id: string;
  real_video: string;
  syn_video: string;
}

export interface DoneTask {
  done: true;
  completed: number;
}

export type Task = RealismTask | PairedTask | DoneTask;

export interface SubmitResult {
  stored: boolean;
  score: number;
}

export interface Placement {
  left: "real" | "syn";
  right: "real" | "syn";
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`API error ${status}: ${detail}`);
  }
}

export class ApiClient {
  private inflight = new Map<string, Promise<SubmitResult>>();

  constructor(
    private baseUrl: string = "",
    private fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchImpl(this.baseUrl + path, init);
    if (!res.ok) {
      let detail = res.statusText;
      try {
        const body = await res.json();
        detail = body.detail ?? detail;
      } catch {
        /* non-JSON error body; keep the status text */
      }
      throw new ApiError(res.status, detail);
    }
    return (await res.json()) as T;
  }

  nextTask(rater: string, kind: "realism" | "paired"): Promise<Task> {
    const params = new URLSearchParams({ rater, kind });
    return this.request<Task>(`/api/tasks/next?${params}`);
  }

  /** POST once per (rater, video); duplicate calls share the result. */
  submitRating(
    raterId: string,
    videoId: string,
    option: string,
  ): Promise<SubmitResult> {
    return this.submitOnce(`rating:${raterId}:${videoId}`, "/api/ratings", {
      rater_id: raterId,
      video_id: videoId,
      option,
    });
  }

  /** POST once per (clinician, pair); placement always travels along. */
  submitJudgment(
    clinicianId: string,
    pairId: string,
    answer: "yes" | "no",
    placement: Placement,
  ): Promise<SubmitResult> {
    return this.submitOnce(
      `judgment:${clinicianId}:${pairId}`,
      "/api/judgments",
      { clinician_id: clinicianId, pair_id: pairId, answer, placement },
    );
  }

  private submitOnce(
    key: string,
    path: string,
    body: unknown,
  ): Promise<SubmitResult> {
    const existing = this.inflight.get(key);
    if (existing) return existing;
    const promise = this.request<SubmitResult>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    }).catch((err) => {
      // a failed submit must stay retryable
      this.inflight.delete(key);
      throw err;
    });
    this.inflight.set(key, promise);
    return promise;
  }

  realismReport(): Promise<Record<string, unknown>> {
    return this.request("/api/reports/realism");
  }

  pairedReport(): Promise<Record<string, unknown>> {
    return this.request("/api/reports/paired");
  }

  gate(): Promise<{ selected: string[]; incomplete: string[] }> {
    return this.request("/api/gate");
  }

  streamUrl(videoId: string, variant: "real" | "syn"): string {
    return `${this.baseUrl}/api/videos/${encodeURIComponent(videoId)}/stream?variant=${variant}`;
  }
}
