/**
 * Typed client for the exploration gateway. Every displayed value in the
 * UI comes straight out of these response shapes; the client never
 * computes results of its own.
 */

export interface BindingView {
  token: string;
  node: string;
  kind: string;
}

export interface InterpretationView {
  ast: unknown;
  sql: string;
  nl_explanation: string;
  score: number;
  bindings: BindingView[];
  unmatched: string[];
}

export interface QueryResponse {
  interpretations: InterpretationView[];
}

export interface SetResult {
  kind: "set";
  base_table: string;
  size: number;
  ids: string[];
  headers: string[];
  rows: (string | number | null)[][];
}

export interface FacetBucketView {
  value: string;
  ids: string[];
  count: number;
}

export interface FacetResult {
  kind: "facet";
  table: string;
  attribute: string;
  buckets: FacetBucketView[];
}

export interface TableResult {
  kind: "table";
  headers: string[];
  rows: (string | number | null)[][];
}

export interface RankingEntryView {
  id?: string;
  distance?: number;
  set?: { base_table: string; label: string | null; ids: string[] };
  overlap?: number;
  candidate_index?: number;
  divergence?: number;
}

export interface RankingResult {
  kind: "ranking";
  entries: RankingEntryView[];
}

export interface CoverResult {
  kind: "cover";
  cover: number[];
  uncovered: { base_table: string; label: string | null; ids: string[] };
}

export type StepResult = SetResult | FacetResult | TableResult | RankingResult | CoverResult;

export interface StepMetricsView {
  step_id: string;
  op: string;
  latency_ms: number;
  memory_bytes_estimate: number;
  result_cardinality: number;
}

export interface StepResponse {
  step_id: string;
  result: StepResult;
  metrics: StepMetricsView;
}

export interface RecommendationView {
  kind: "starter_query" | "next_operator";
  payload: { op?: string; params?: Record<string, unknown> } | Record<string, unknown>;
  score: number;
  rationale: string;
  sql?: string;
  nl_explanation?: string;
}

export interface RecommendationsResponse {
  mode: "cold_start" | "warm_start";
  recommendations: RecommendationView[];
}

export interface PipelineStepView {
  id: string;
  op: string;
  params: Record<string, unknown>;
  inputs: string[];
}

export interface PipelineResponse {
  version: string;
  steps: PipelineStepView[];
  current_step: string | null;
}

export interface MetricsResponse {
  metrics: {
    steps: StepMetricsView[];
    total_latency_ms: number;
    peak_memory_bytes: number;
    step_count: number;
    backtrack_count: number;
  };
  controllability: number | null;
}

export class ApiError extends Error {
  constructor(
    public readonly code: string,
    message: string,
    public readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export class GatewayClient {
  constructor(private readonly baseUrl: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      headers: { "Content-Type": "application/json" },
      ...init,
    });
    const body = await response.json().catch(() => null);
    if (!response.ok) {
      const code = body && typeof body.code === "string" ? body.code : "HttpError";
      const message =
        body && typeof body.message === "string"
          ? body.message
          : `request failed with status ${response.status}`;
      throw new ApiError(code, message, response.status);
    }
    return body as T;
  }

  createSession(dataset = "fixture"): Promise<{ session_id: string }> {
    return this.request("/sessions", { method: "POST", body: JSON.stringify({ dataset }) });
  }

  query(sessionId: string, question: string, n = 3): Promise<QueryResponse> {
    return this.request(`/sessions/${sessionId}/query`, {
      method: "POST",
      body: JSON.stringify({ question, n }),
    });
  }

  choose(sessionId: string, interpretationIndex: number): Promise<StepResponse> {
    return this.request(`/sessions/${sessionId}/choose`, {
      method: "POST",
      body: JSON.stringify({ interpretation_index: interpretationIndex }),
    });
  }

  applyStep(
    sessionId: string,
    op: string,
    params: Record<string, unknown>,
  ): Promise<StepResponse> {
    return this.request(`/sessions/${sessionId}/steps`, {
      method: "POST",
      body: JSON.stringify({ op, params }),
    });
  }

  recommendations(
    sessionId: string,
    k: number,
    novelty: number,
  ): Promise<RecommendationsResponse> {
    return this.request(
      `/sessions/${sessionId}/recommendations?k=${k}&lambda=${novelty}`,
    );
  }

  acceptRecommendation(sessionId: string, index: number): Promise<StepResponse> {
    return this.request(`/sessions/${sessionId}/recommendations/accept`, {
      method: "POST",
      body: JSON.stringify({ index }),
    });
  }

  rejectRecommendation(sessionId: string, index: number): Promise<{ rejected: number }> {
    return this.request(`/sessions/${sessionId}/recommendations/reject`, {
      method: "POST",
      body: JSON.stringify({ index }),
    });
  }

  pipeline(sessionId: string): Promise<PipelineResponse> {
    return this.request(`/sessions/${sessionId}/pipeline`);
  }

  backtrack(sessionId: string, stepId: string): Promise<{ current_step: string; result: StepResult }> {
    return this.request(`/sessions/${sessionId}/backtrack`, {
      method: "POST",
      body: JSON.stringify({ step_id: stepId }),
    });
  }

  metrics(sessionId: string): Promise<MetricsResponse> {
    return this.request(`/sessions/${sessionId}/metrics`);
  }
}
