import { describe, expect, it, vi } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

describe("ApiClient", () => {
  it("requests the documented paths and decodes JSON", async () => {
    const fetchFn = vi.fn(async (url: string) => {
      expect(url).toBe("/api/classes/2/cam?agg=median&var=gini");
      return jsonResponse(200, { class_index: 2, impact: [0] });
    });
    const client = new ApiClient("", fetchFn);
    const cam = await client.classCam(2, "median", "gini");
    expect(cam.class_index).toBe(2);
    expect(fetchFn).toHaveBeenCalledTimes(1);
  });

  it("scopes histograms to a session when one is given", async () => {
    const urls: string[] = [];
    const fetchFn = vi.fn(async (url: string) => {
      urls.push(url);
      return jsonResponse(200, { feature_index: 7, bin_edges: [0, 1], counts: [3] });
    });
    const client = new ApiClient("", fetchFn);
    await client.histogram(0, 7, { sessionId: "s1", bins: 16 });
    await client.histogram(0, 7);
    expect(urls).toEqual([
      "/api/classes/0/features/7/histogram?session=s1&bins=16",
      "/api/classes/0/features/7/histogram",
    ]);
  });

  it("maps error bodies onto ApiError with the server's code", async () => {
    const fetchFn = vi.fn(async () =>
      jsonResponse(422, { code: "empty-selection", message: "nothing there" }),
    );
    const client = new ApiClient("", fetchFn);
    const failure = await client.pushFilter("s1", 0, 0.4, 0.5).catch((e) => e);
    expect(failure).toBeInstanceOf(ApiError);
    expect(failure.status).toBe(422);
    expect(failure.code).toBe("empty-selection");
    expect(failure.message).toBe("nothing there");
  });

  it("serializes filter bodies with snake_case field names", async () => {
    const fetchFn = vi.fn(async (_url: string, init?: RequestInit) => {
      expect(JSON.parse(String(init?.body))).toEqual({ feature_index: 4, lo: -0.5, hi: 0.25 });
      expect(init?.method).toBe("POST");
      return jsonResponse(200, { session_id: "s1", filters: [] });
    });
    const client = new ApiClient("", fetchFn);
    await client.pushFilter("s1", 4, -0.5, 0.25);
  });

  it("wraps network failures as status-0 ApiErrors", async () => {
    const client = new ApiClient("", async () => {
      throw new TypeError("connection refused");
    });
    const failure = await client.classes().catch((e) => e);
    expect(failure).toBeInstanceOf(ApiError);
    expect(failure.status).toBe(0);
    expect(failure.code).toBe("network");
  });
});
