// Typed client for the suggestion service HTTP API.

export type Method = "nn" | "bayes" | "apriori";

export interface SuggestRequest {
  provider_id: string;
  age: number;
  gender: "M" | "F";
  icds: string[];
  k: number;
  method: Method;
}

export interface Suggestion {
  cpt: string;
  score: number;
  filtered_count: number;
}

export interface SuggestResponse {
  suggestions: Suggestion[];
  model_version: string;
  warnings: string[];
}

export interface DraftRequest {
  provider_id: string;
  age: number;
  gender: "M" | "F";
  icds: string[];
  accepted: { cpt: string; score: number | null }[];
  method: Method;
}

export interface ApiError {
  status: number;
  message: string;
  fields?: Record<string, string>;
}

export class ApiFailure extends Error {
  readonly detail: ApiError;

  constructor(detail: ApiError) {
    super(detail.message);
    this.detail = detail;
  }
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  let resp: Response;
  try {
    resp = await fetch(base + path, {
      headers: { "content-type": "application/json" },
      ...init,
    });
  } catch (err) {
    throw new ApiFailure({ status: 0, message: `network error: ${err}` });
  }
  const body = await resp.json().catch(() => ({}));
  if (!resp.ok) {
    throw new ApiFailure({
      status: resp.status,
      message: typeof body.error === "string" ? body.error : `HTTP ${resp.status}`,
      fields: body.fields,
    });
  }
  return body as T;
}

export class ApiClient {
  constructor(readonly base: string) {}

  suggest(req: SuggestRequest): Promise<SuggestResponse> {
    return request(this.base, "/v1/suggest", { method: "POST", body: JSON.stringify(req) });
  }

  submitDraft(req: DraftRequest): Promise<{ draft_id: string }> {
    return request(this.base, "/v1/claims", { method: "POST", body: JSON.stringify(req) });
  }

  health(): Promise<{ status: string; methods: string[] }> {
    return request(this.base, "/v1/health");
  }
}
