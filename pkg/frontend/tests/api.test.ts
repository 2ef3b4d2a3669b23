import { describe, expect, it } from "vitest";

import { ApiClient, ApiError, ServiceUnreachableError } from "../src/api.js";
import { jsonResponse } from "./helpers.js";

interface Call {
  url: string;
  init?: RequestInit;
}

function recordingClient(body: unknown, status = 200): { client: ApiClient; calls: Call[] } {
  const calls: Call[] = [];
  const client = new ApiClient("", async (url, init) => {
    calls.push({ url, init });
    return jsonResponse(body, status);
  });
  return { client, calls };
}

describe("ApiClient", () => {
  it("keeps the + joiner literal in search queries", async () => {
    const { client, calls } = recordingClient({ query: [], results: [] });
    await client.search(["red", "sign up"]);
    expect(calls[0].url).toBe("/search?q=red%2Bsign%20up");
  });

  it("encodes design ids and tags in curation paths and posts", async () => {
    const { client, calls } = recordingClient({
      design: "d1",
      action: "accept",
      tag: "user interface",
      origin: "accepted",
    });
    await client.accept("d1", "user interface");
    expect(calls[0].url).toBe("/designs/d1/tags/user%20interface/accept");
    expect(calls[0].init?.method).toBe("POST");
  });

  it("passes page and tag filters as query parameters", async () => {
    const { client, calls } = recordingClient({ page: 2, page_size: 20, total: 0, designs: [] });
    await client.listDesigns(2, "red");
    expect(calls[0].url).toBe("/designs?page=2&tag=red");
  });

  it("surfaces the JSON error detail on non-2xx responses", async () => {
    const { client } = recordingClient({ detail: "no design with id 'nope'" }, 404);
    const failure = client.getDesign("nope");
    await expect(failure).rejects.toBeInstanceOf(ApiError);
    await expect(client.getDesign("nope")).rejects.toMatchObject({
      status: 404,
      message: "no design with id 'nope'",
    });
  });

  it("falls back to a status message when the error body is not JSON", async () => {
    const client = new ApiClient("", async () => new Response("boom", { status: 500 }));
    await expect(client.vocabulary()).rejects.toMatchObject({
      status: 500,
      message: "request failed with status 500",
    });
  });

  it("maps network failures to ServiceUnreachableError", async () => {
    const client = new ApiClient("http://127.0.0.1:1", async () => {
      throw new TypeError("fetch failed");
    });
    await expect(client.vocabulary()).rejects.toBeInstanceOf(ServiceUnreachableError);
  });

  it("prefixes every request with the base URL", async () => {
    const calls: Call[] = [];
    const client = new ApiClient("http://example.test:9", async (url, init) => {
      calls.push({ url, init });
      return jsonResponse({ categories: {}, groups: [] });
    });
    await client.vocabulary();
    expect(calls[0].url).toBe("http://example.test:9/vocabulary");
  });
});
