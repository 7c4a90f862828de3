/**
 * Thin fetch client for the serve API.
 *
 * Every number the console displays comes out of these responses; nothing
 * is recomputed locally, so the UI and the engine cannot disagree.
 */

import type {
  ConceptsPayload,
  ErrorEnvelope,
  GraphDetailPayload,
  GraphListPayload,
  InterventionParams,
  MetaPayload,
  MetricsPayload,
  PredictPayload,
  RawGraph,
  RevertPayload,
  WeightPlanPayload,
  WeightsPayload,
  WhatIfPayload,
} from "./types.js";

export class ApiError extends Error {
  readonly status: number;
  readonly code: string;
  readonly fields: Record<string, string>;

  constructor(status: number, code: string, message: string, fields: Record<string, string> = {}) {
    super(message);
    this.name = "ApiError";
    this.status = status;
    this.code = code;
    this.fields = fields;
  }

  /** 409: the engine declined the intervention (empty target set, near-zero activation) */
  get refused(): boolean {
    return this.status === 409;
  }
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  let res: Response;
  try {
    res = await fetch(base + path, init);
  } catch (err) {
    throw new ApiError(0, "unreachable", `cannot reach ${path}: ${String(err)}`);
  }
  const text = await res.text();
  let body: unknown = null;
  try {
    body = text ? JSON.parse(text) : null;
  } catch {
    // non-JSON body; the envelope below falls back to the status line
  }
  if (!res.ok) {
    const env = (body ?? {}) as Partial<ErrorEnvelope>;
    throw new ApiError(
      res.status,
      env.code ?? "http_error",
      env.message ?? `request to ${path} failed with status ${res.status}`,
      env.fields ?? {},
    );
  }
  return body as T;
}

function asPost(payload: unknown): RequestInit {
  return {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(payload),
  };
}

export class ApiClient {
  constructor(readonly base: string = "") {}

  meta(): Promise<MetaPayload> {
    return request(this.base, "/api/meta");
  }

  graphs(): Promise<GraphListPayload> {
    return request(this.base, "/api/graphs");
  }

  graph(id: number): Promise<GraphDetailPayload> {
    return request(this.base, `/api/graphs/${id}`);
  }

  concepts(): Promise<ConceptsPayload> {
    return request(this.base, "/api/concepts");
  }

  weights(): Promise<WeightsPayload> {
    return request(this.base, "/api/weights");
  }

  metrics(): Promise<MetricsPayload> {
    return request(this.base, "/api/metrics");
  }

  predictById(graphId: number): Promise<PredictPayload> {
    return request(this.base, "/api/predict", asPost({ graph_id: graphId }));
  }

  predictGraph(graph: RawGraph): Promise<PredictPayload> {
    return request(this.base, "/api/predict", asPost({ graph }));
  }

  /** Instance-level what-if: edits are [global concept index, new score] pairs. */
  whatIf(graphId: number, edits: [number, number][]): Promise<WhatIfPayload> {
    return request(
      this.base,
      "/api/intervene/concepts",
      asPost({ graph_id: graphId, edits }),
    );
  }

  /** Weight-plan intervention; dryRun previews the transcript without applying. */
  planWeights(
    conceptIndices: number[],
    opts: { dryRun?: boolean; params?: InterventionParams } = {},
  ): Promise<WeightPlanPayload> {
    const body: Record<string, unknown> = { concept_indices: conceptIndices };
    if (opts.dryRun) body.dry_run = true;
    if (opts.params && Object.keys(opts.params).length > 0) body.params = opts.params;
    return request(this.base, "/api/intervene/weights", asPost(body));
  }

  revert(): Promise<RevertPayload> {
    return request(this.base, "/api/revert", asPost({}));
  }
}
