import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api";
import { FakeServer } from "./helpers";

describe("ApiClient submission idempotency", () => {
  it("collapses a double rating submit into one POST", async () => {
    const server = new FakeServer();
    const api = new ApiClient("", server.fetch);
    const [a, b] = await Promise.all([
      api.submitRating("r1", "v1", "A"),
      api.submitRating("r1", "v1", "A"),
    ]);
    expect(a.stored).toBe(true);
    expect(b.stored).toBe(true);
    const posts = server.requests.filter((r) => r.method === "POST");
    expect(posts).toHaveLength(1);
  });

  it("collapses duplicates even when the first response is slow", async () => {
    const server = new FakeServer();
    server.latencyMs = 20;
    const api = new ApiClient("", server.fetch);
    const first = api.submitJudgment("r1", "v1", "yes", {
      left: "syn",
      right: "real",
    });
    const second = api.submitJudgment("r1", "v1", "yes", {
      left: "syn",
      right: "real",
    });
    await Promise.all([first, second]);
    expect(server.requests.filter((r) => r.method === "POST")).toHaveLength(1);
  });

  it("keeps distinct (rater, item) submissions separate", async () => {
    const server = new FakeServer();
    const api = new ApiClient("", server.fetch);
    await api.submitRating("r1", "v1", "A");
    await api.submitRating("r1", "v2", "B");
    await api.submitRating("r2", "v1", "C");
    expect(server.requests.filter((r) => r.method === "POST")).toHaveLength(3);
    expect(server.ratings.get("r1:v1")).toBe("A");
    expect(server.ratings.get("r2:v1")).toBe("C");
  });

  it("allows a retry after a failed submit", async () => {
    const server = new FakeServer();
    server.failNext = true;
    const api = new ApiClient("", server.fetch);
    await expect(api.submitRating("r1", "v1", "A")).rejects.toBeInstanceOf(
      ApiError,
    );
    const result = await api.submitRating("r1", "v1", "A");
    expect(result.stored).toBe(true);
    expect(server.ratings.get("r1:v1")).toBe("A");
  });

  it("surfaces server error details", async () => {
    const server = new FakeServer();
    server.failNext = true;
    const api = new ApiClient("", server.fetch);
    await expect(api.nextTask("r1", "realism")).rejects.toThrow(
      "API error 503: try again",
    );
  });

  it("builds range-streamable video URLs", () => {
    const api = new ApiClient("http://host");
    expect(api.streamUrl("v1", "syn")).toBe(
      "http://host/api/videos/v1/stream?variant=syn",
    );
  });
});
