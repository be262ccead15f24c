import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";

function mockFetch(status: number, body: unknown) {
  const text = typeof body === "string" ? body : JSON.stringify(body);
  return vi.fn(async () => new Response(text, { status }));
}

afterEach(() => {
  vi.unstubAllGlobals();
});

describe("api client", () => {
  it("lists modules from GET /modules", async () => {
    const fetch = mockFetch(200, [{ id: "m", name: "M", domain: "d", version: "1" }]);
    vi.stubGlobal("fetch", fetch);
    const client = new ApiClient("http://host");
    const modules = await client.listModules();
    expect(fetch).toHaveBeenCalledWith("http://host/modules", undefined);
    expect(modules[0]!.id).toBe("m");
  });

  it("creates sessions with module id and context", async () => {
    const fetch = mockFetch(201, { session_id: "abc" });
    vi.stubGlobal("fetch", fetch);
    const client = new ApiClient("");
    const sid = await client.createSession("m", { sex: "female" });
    expect(sid).toBe("abc");
    const [url, init] = fetch.mock.calls[0]!;
    expect(url).toBe("/sessions");
    expect(init.method).toBe("POST");
    expect(JSON.parse(init.body)).toEqual({ module_id: "m", context: { sex: "female" } });
  });

  it("posts finding states", async () => {
    const fetch = mockFetch(200, {
      differential: [], vetoed: [], verdicts: [], goal: null,
      status: { state: "continue", reason: null }, step_count: 1,
    });
    vi.stubGlobal("fetch", fetch);
    const client = new ApiClient("");
    await client.postFinding("sid", "fever", "present");
    const [url, init] = fetch.mock.calls[0]!;
    expect(url).toBe("/sessions/sid/findings");
    expect(JSON.parse(init.body)).toEqual({ finding_id: "fever", state: "present" });
  });

  it("passes k through to the recommendations endpoint", async () => {
    const fetch = mockFetch(200, { recommendations: [], goal: null,
                                   status: { state: "done", reason: "all_resolved" } });
    vi.stubGlobal("fetch", fetch);
    await new ApiClient("").getRecommendations("sid", 7);
    expect(fetch.mock.calls[0]![0]).toBe("/sessions/sid/recommendations?k=7");
  });

  it("surfaces server error bodies verbatim", async () => {
    const fetch = mockFetch(404, { error: { code: "UNKNOWN_ID", message: "unknown session id 'x'" } });
    vi.stubGlobal("fetch", fetch);
    const client = new ApiClient("");
    const err = await client.getDifferential("x").catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(404);
    expect(err.code).toBe("UNKNOWN_ID");
    expect(err.message).toBe("unknown session id 'x'");
  });

  it("keeps transcript bytes untouched", async () => {
    const raw = '{"step_log": [{"kind": "started"}], "module_id": "m"}';
    vi.stubGlobal("fetch", mockFetch(200, raw));
    const text = await new ApiClient("").getTranscriptRaw("sid");
    expect(text).toBe(raw);
  });

  it("does not retry a failed mutation", async () => {
    const fetch = mockFetch(409, { error: { code: "ALREADY_OBSERVED", message: "dup" } });
    vi.stubGlobal("fetch", fetch);
    await new ApiClient("").postFinding("sid", "fever", "present").catch(() => null);
    expect(fetch).toHaveBeenCalledTimes(1);
  });
});
