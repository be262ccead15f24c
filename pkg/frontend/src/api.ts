import type {
  DifferentialResponse,
  ExplanationResponse,
  ModuleDocument,
  ModuleSummary,
  RecommendationsResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const response = await fetch(url, init);
  const text = await response.text();
  let body: unknown = null;
  try {
    body = text ? JSON.parse(text) : null;
  } catch {
    throw new ApiError(response.status, "BAD_RESPONSE", text.slice(0, 200));
  }
  if (!response.ok) {
    const err = (body as { error?: { code?: string; message?: string } })?.error;
    // surface the server's message verbatim; the UI never retries mutations
    throw new ApiError(response.status, err?.code ?? "HTTP_ERROR", err?.message ?? text);
  }
  return body as T;
}

export class ApiClient {
  constructor(public baseUrl: string) {}

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  listModules(): Promise<ModuleSummary[]> {
    return request(this.url("/modules"));
  }

  getModule(moduleId: string): Promise<ModuleDocument> {
    return request(this.url(`/modules/${encodeURIComponent(moduleId)}`));
  }

  async createSession(
    moduleId: string,
    context: Record<string, unknown>,
  ): Promise<string> {
    const body = await request<{ session_id: string }>(this.url("/sessions"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ module_id: moduleId, context }),
    });
    return body.session_id;
  }

  postFinding(
    sessionId: string,
    findingId: string,
    state: "present" | "absent",
  ): Promise<DifferentialResponse> {
    return request(this.url(`/sessions/${sessionId}/findings`), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ finding_id: findingId, state }),
    });
  }

  getDifferential(sessionId: string): Promise<DifferentialResponse> {
    return request(this.url(`/sessions/${sessionId}/differential`));
  }

  getRecommendations(sessionId: string, k: number): Promise<RecommendationsResponse> {
    return request(this.url(`/sessions/${sessionId}/recommendations?k=${k}`));
  }

  getExplanation(sessionId: string, nodeId: string): Promise<ExplanationResponse> {
    return request(
      this.url(`/sessions/${sessionId}/explanations/${encodeURIComponent(nodeId)}`),
    );
  }

  /** Raw transcript bytes, kept verbatim so an export is byte-identical. */
  async getTranscriptRaw(sessionId: string): Promise<string> {
    const response = await fetch(this.url(`/sessions/${sessionId}/transcript`));
    const text = await response.text();
    if (!response.ok) {
      throw new ApiError(response.status, "HTTP_ERROR", text);
    }
    return text;
  }

  async deleteSession(sessionId: string): Promise<void> {
    await request(this.url(`/sessions/${sessionId}`), { method: "DELETE" });
  }
}
