import type { FieldError, InsightReport, LaunchForm, RunDetail, RunSummary } from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
    public field: string = "",
  ) {
    super(message);
  }
}

async function parseError(resp: Response): Promise<ApiError> {
  let detail = `HTTP ${resp.status}`;
  let field = "";
  try {
    const body = await resp.json();
    if (typeof body.detail === "string") detail = body.detail;
    if (typeof body.field === "string") field = body.field;
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(resp.status, detail, field);
}

/** Thin typed client over the service REST endpoints. */
export class ApiClient {
  constructor(public baseUrl: string) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await fetch(`${this.baseUrl}${path}`, init);
    if (!resp.ok) {
      throw await parseError(resp);
    }
    return (await resp.json()) as T;
  }

  async launchRun(form: LaunchForm): Promise<string> {
    const body = await this.request<{ run_id: string }>("/runs", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(form),
    });
    return body.run_id;
  }

  listRuns(): Promise<{ runs: RunSummary[] }> {
    return this.request("/runs");
  }

  getRun(runId: string): Promise<RunDetail> {
    return this.request(`/runs/${runId}`);
  }

  explain(runId: string): Promise<InsightReport> {
    return this.request(`/runs/${runId}/explain`, { method: "POST" });
  }

  stop(runId: string): Promise<{ run_id: string; status: string }> {
    return this.request(`/runs/${runId}/stop`, { method: "POST" });
  }

  streamUrl(runId: string): string {
    return `${this.baseUrl}/runs/${runId}/stream`;
  }
}

/** Maps a 400 response onto the launch form fields (mirrors server names). */
export function toFieldError(err: unknown): FieldError | null {
  if (err instanceof ApiError && err.status === 400) {
    return { field: err.field || "config", message: err.message };
  }
  return null;
}
