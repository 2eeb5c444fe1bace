/** Thin typed client over the /v1 HTTP API. */

import type {
  ApiErrorBody,
  ClassifyResponse,
  CompareResponse,
  DatasetMeta,
  IntervalsResponse,
  MetricsResponse,
  ModelMeta,
  SweepResponse,
} from "./types.js";

export class ApiError extends Error {
  readonly code: string;
  readonly status: number;

  constructor(status: number, body: ApiErrorBody) {
    super(body.message);
    this.code = body.code;
    this.status = status;
  }
}

export class ApiClient {
  constructor(readonly baseUrl: string, private readonly fetchImpl: typeof fetch = fetch) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    if (!resp.ok) {
      let body: ApiErrorBody;
      try {
        body = (await resp.json()) as ApiErrorBody;
      } catch {
        body = { code: "http", message: `HTTP ${resp.status}`, detail: null };
      }
      throw new ApiError(resp.status, body);
    }
    return (await resp.json()) as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  datasetMeta(id: string): Promise<DatasetMeta> {
    return this.request(`/v1/datasets/${id}`);
  }

  modelMeta(id: string): Promise<ModelMeta> {
    return this.request(`/v1/models/${id}`);
  }

  classify(
    modelId: string,
    features: number[],
    rho: number,
    seed: number,
    policy?: { accept: number; retain: number; max_retained: number },
    nSamples = 5000,
  ): Promise<ClassifyResponse> {
    return this.post(`/v1/models/${modelId}/classify`, {
      features,
      rho,
      seed,
      n_samples: nSamples,
      policy,
    });
  }

  sweep(
    modelId: string,
    features: number[],
    rhoGrid: number[],
    seed: number,
    nSamples = 5000,
  ): Promise<SweepResponse> {
    return this.post(`/v1/models/${modelId}/sweep`, {
      features,
      rho_grid: rhoGrid,
      seed,
      n_samples: nSamples,
    });
  }

  sensitivity(
    modelId: string,
    features: number[],
    rho0: number,
    feature: number,
    sGrid: number[],
    seed: number,
    nSamples = 5000,
  ): Promise<SweepResponse> {
    return this.post(`/v1/models/${modelId}/sensitivity`, {
      features,
      rho0,
      feature,
      s_grid: sGrid,
      seed,
      n_samples: nSamples,
    });
  }

  intervals(modelId: string, features: number[]): Promise<IntervalsResponse> {
    return this.post(`/v1/models/${modelId}/intervals`, { features });
  }

  metrics(modelId: string, datasetId: string): Promise<MetricsResponse> {
    return this.request(`/v1/models/${modelId}/metrics?dataset=${datasetId}`);
  }

  compare(modelA: string, modelB: string, datasetId: string): Promise<CompareResponse> {
    return this.post("/v1/compare", {
      model_a: modelA,
      model_b: modelB,
      dataset_id: datasetId,
    });
  }

  buildJointModel(
    datasetId: string,
    groups: number[][],
    seed: number,
    hidden = 8,
  ): Promise<{ id: string }> {
    return this.post("/v1/models", {
      dataset_id: datasetId,
      kind: "joint",
      config: { groups, hidden, seed, epochs: 60, learning_rate: 0.3 },
    });
  }
}
