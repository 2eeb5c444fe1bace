/** Response shapes of the /v1 API. The UI renders these fields verbatim and
 * never derives probabilities of its own. */

export interface FeatureMeta {
  name: string;
  kind: "continuous" | "categorical";
  min: number | null;
  max: number | null;
  codes: string[] | null;
}

export interface DatasetMeta {
  id: string;
  name: string;
  n_cases: number;
  class_names: string[];
  features: FeatureMeta[];
}

export interface ModelMeta {
  id: string;
  kind: string;
  class_names: string[];
  dataset_id: string | null;
  features: FeatureMeta[] | null;
}

export interface VerdictEntry {
  class: number;
  prob: number;
  name?: string;
}

export interface Verdict {
  retained: VerdictEntry[];
  eliminated: VerdictEntry[];
  mode: "confident-single" | "subset" | "undecided";
  trace: string;
}

export interface ClassifyResponse {
  class_names: string[];
  probabilities: number[];
  stderr: number[];
  rho: number;
  verdict: Verdict;
}

export interface SweepPoint {
  abscissa: number;
  probs: number[];
  stderr: number[];
}

export interface SweepResponse {
  class_names: string[];
  points: SweepPoint[];
  flag: number | null;
}

export interface IntervalEntry {
  feature: number;
  name: string;
  low?: number;
  high?: number;
  error?: string;
  skipped?: string;
}

export interface IntervalsResponse {
  intervals: IntervalEntry[];
}

export interface MetricReport {
  p0: number;
  kappa: number;
  tau: number;
  var_p0: number;
  var_tau: number;
  n: number;
  base_rate: number;
}

export interface ConfusedPair {
  pair: [number, number];
  names: [string, string];
  score: number;
}

export interface RejectionPoint {
  threshold: number;
  rejection_rate: number;
  accuracy: number | null;
}

export interface MetricsResponse {
  report: MetricReport;
  confusion: { class_names: string[]; counts: number[][] };
  rejection_curve: RejectionPoint[];
  confused_pairs: ConfusedPair[];
  relaxed_accuracy: Record<string, number>;
}

export interface CompareResponse {
  z: number;
  significant: boolean;
  tau_a: number;
  var_tau_a: number;
  tau_b: number;
  var_tau_b: number;
}

export interface ApiErrorBody {
  code: string;
  message: string;
  detail: unknown;
}
