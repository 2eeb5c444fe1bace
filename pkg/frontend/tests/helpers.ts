/** Scripted API doubles: a fetch stub that serves canned /v1 payloads and
 * records every request for fidelity assertions. */

import type {
  ClassifyResponse,
  MetricsResponse,
  ModelMeta,
  SweepResponse,
} from "../src/types.js";

export interface RecordedCall {
  url: string;
  method: string;
  body: unknown;
}

export const MODEL_META: ModelMeta = {
  id: "m-1",
  kind: "mlp",
  class_names: ["AL", "PH", "LC", "CH"],
  dataset_id: "ds-1",
  features: [
    { name: "f0", kind: "continuous", min: 0, max: 2, codes: null },
    { name: "f1", kind: "continuous", min: -1, max: 1, codes: null },
  ],
};

export const CRISP_CLASSIFY: ClassifyResponse = {
  class_names: ["AL", "PH", "LC", "CH"],
  probabilities: [0.0, 1.0, 0.0, 0.0],
  stderr: [0, 0, 0, 0],
  rho: 0,
  verdict: {
    retained: [{ class: 1, prob: 1.0, name: "PH" }],
    eliminated: [
      { class: 0, prob: 0.0, name: "AL" },
      { class: 2, prob: 0.0, name: "LC" },
      { class: 3, prob: 0.0, name: "CH" },
    ],
    mode: "confident-single",
    trace: "accept: p(PH)=1.0000 >= 0.9",
  },
};

export const FUZZY_CLASSIFY: ClassifyResponse = {
  class_names: ["AL", "PH", "LC", "CH"],
  probabilities: [0.112345678, 0.523456789, 0.31, 0.054197533],
  stderr: [0.001, 0.002, 0.002, 0.0005],
  rho: 0.1,
  verdict: {
    retained: [
      { class: 1, prob: 0.523456789, name: "PH" },
      { class: 2, prob: 0.31, name: "LC" },
    ],
    eliminated: [
      { class: 0, prob: 0.112345678, name: "AL" },
      { class: 3, prob: 0.054197533, name: "CH" },
    ],
    mode: "subset",
    trace: "no accept (max p=0.5235 < 0.9); retained ['PH', 'LC'] at retain >= 0.2",
  },
};

export const SWEEP: SweepResponse = {
  class_names: ["AL", "PH", "LC", "CH"],
  points: [
    { abscissa: 0, probs: [0, 1, 0, 0], stderr: [0, 0, 0, 0] },
    { abscissa: 0.05, probs: [0.1, 0.7, 0.15, 0.05], stderr: [0.004, 0.004, 0.003, 0.002] },
    { abscissa: 0.1, probs: [0.15, 0.55, 0.2, 0.1], stderr: [0.005, 0.005, 0.004, 0.003] },
  ],
  flag: 0.05,
};

export const METRICS: MetricsResponse = {
  report: {
    p0: 340 / 370,
    kappa: 0.8896949956,
    tau: 0.8723404255,
    var_p0: 2.014e-4,
    var_tau: 3.171e-4,
    n: 370,
    base_rate: 135 / 370,
  },
  confusion: {
    class_names: ["AL", "PH", "LC", "CH"],
    counts: [
      [70, 6, 3, 3],
      [3, 121, 3, 1],
      [1, 8, 77, 2],
      [0, 0, 0, 72],
    ],
  },
  rejection_curve: [
    { threshold: 0, rejection_rate: 0, accuracy: 0.919 },
    { threshold: 0.5, rejection_rate: 0.1, accuracy: 0.95 },
    { threshold: 0.9, rejection_rate: 0.3, accuracy: 0.985 },
  ],
  confused_pairs: [
    { pair: [1, 2], names: ["PH", "LC"], score: 11 },
    { pair: [0, 1], names: ["AL", "PH"], score: 9 },
    { pair: [0, 2], names: ["AL", "LC"], score: 4 },
  ],
  relaxed_accuracy: { "1": 0.919, "2": 0.96, "3": 0.99, "4": 1 },
};

export function makeFetchStub(
  calls: RecordedCall[],
  overrides?: { classify?: (body: any) => ClassifyResponse },
): typeof fetch {
  return (async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = String(input);
    const method = init?.method ?? "GET";
    const body = init?.body ? JSON.parse(String(init.body)) : null;
    calls.push({ url, method, body });

    const respond = (payload: unknown) =>
      new Response(JSON.stringify(payload), {
        status: 200,
        headers: { "content-type": "application/json" },
      });

    if (url.endsWith("/v1/models/m-1") && method === "GET") return respond(MODEL_META);
    if (url.endsWith("/v1/models/m-1/classify")) {
      if (overrides?.classify) return respond(overrides.classify(body));
      return respond(body.rho === 0 ? CRISP_CLASSIFY : FUZZY_CLASSIFY);
    }
    if (url.endsWith("/v1/models/m-1/sweep")) return respond(SWEEP);
    if (url.endsWith("/v1/models/m-1/sensitivity")) return respond(SWEEP);
    if (url.endsWith("/v1/models/m-1/intervals")) {
      return respond({
        intervals: [
          { feature: 0, name: "f0", low: 0.25, high: 1.75 },
          { feature: 1, name: "f1", low: -0.9, high: 0.9 },
        ],
      });
    }
    if (url.includes("/v1/models/m-1/metrics")) return respond(METRICS);
    if (url.endsWith("/v1/compare")) {
      return respond({
        z: 0,
        significant: false,
        tau_a: 0.87,
        var_tau_a: 3.1e-4,
        tau_b: 0.87,
        var_tau_b: 3.1e-4,
      });
    }
    if (url.endsWith("/v1/datasets/ds-1")) {
      return respond({
        id: "ds-1",
        name: "demo",
        n_cases: 370,
        class_names: ["AL", "PH", "LC", "CH"],
        features: MODEL_META.features,
      });
    }
    if (url.endsWith("/v1/models") && method === "POST") {
      return respond({ id: "m-9", training_log: [] });
    }
    return new Response(
      JSON.stringify({ code: "not-found", message: `no stub for ${url}`, detail: null }),
      { status: 404, headers: { "content-type": "application/json" } },
    );
  }) as typeof fetch;
}

export function flushMicrotasks(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0));
}
