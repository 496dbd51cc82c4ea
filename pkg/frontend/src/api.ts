// Service client. Only idempotent GETs are retried; submissions and
// assessments are sent exactly once and surface their failure to the caller.

import type { SubmissionBody } from "./schema.js";

export interface ApiError extends Error {
  status: number;
  code: string;
  field?: string;
}

export interface Assessment {
  sketch_id: string;
  logits: [number, number];
  probability_depressed: number;
  predicted_label: string;
  caption_used: Record<string, unknown> | null;
}

export interface PreviewFrame {
  index: number;
  width: number;
  height: number;
  pixels_b64: string;
}

export interface Preview {
  record_id: number;
  cumulative_counts: number[];
  frames: PreviewFrame[];
}

export interface StoredSubmission {
  record_id: number;
  participant_ref: string;
  sketch: unknown;
  phq9_summary: { total: number; label: number } | null;
  assessment: Assessment | null;
  created_at: string;
  assessed_at: string | null;
}

export interface Health {
  status: string;
  model_loaded: boolean;
  records: number;
}

function makeError(status: number, body: unknown): ApiError {
  const envelope = (body as { error?: { code?: string; message?: string; field?: string } })
    ?.error;
  const err = new Error(envelope?.message ?? `request failed with status ${status}`) as ApiError;
  err.name = "ApiError";
  err.status = status;
  err.code = envelope?.code ?? "Unknown";
  if (envelope?.field) err.field = envelope.field;
  return err;
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (...args) => fetch(...args),
    private readonly gETRetries = 2,
  ) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  private async parse<T>(resp: Response): Promise<T> {
    const body = await resp.json().catch(() => null);
    if (!resp.ok) throw makeError(resp.status, body);
    return body as T;
  }

  private async get<T>(path: string): Promise<T> {
    let lastError: unknown;
    for (let attempt = 0; attempt <= this.gETRetries; attempt++) {
      try {
        return await this.parse<T>(await this.fetchImpl(this.url(path)));
      } catch (err) {
        // HTTP errors are definitive; only network failures are retried.
        if ((err as ApiError).name === "ApiError") throw err;
        lastError = err;
      }
    }
    throw lastError;
  }

  private async post<T>(path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method: "POST" };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    return this.parse<T>(await this.fetchImpl(this.url(path), init));
  }

  health(): Promise<Health> {
    return this.get("/v1/health");
  }

  submit(body: SubmissionBody): Promise<{ record_id: number }> {
    return this.post("/v1/submissions", body);
  }

  assess(recordId: number): Promise<Assessment> {
    return this.post(`/v1/submissions/${recordId}/assess`);
  }

  getSubmission(recordId: number): Promise<StoredSubmission> {
    return this.get(`/v1/submissions/${recordId}`);
  }

  preview(recordId: number): Promise<Preview> {
    return this.get(`/v1/preview/${recordId}`);
  }
}
