/** Case explorer: enter one case, watch its class probabilities respond to
 * the rho slider, inspect the elimination verdict, per-feature sensitivity
 * sparklines on demand, and confidence-interval whiskers.
 *
 * All probabilities shown are API response fields; the seed is pinned per
 * session so slider exploration resamples nothing.
 */

import { ApiClient } from "./api.js";
import { renderBars } from "./components/bars.js";
import { renderSweepCurve } from "./components/curve.js";
import { renderVerdict } from "./components/verdict.js";
import { debounce } from "./debounce.js";
import { latestOnly } from "./latest.js";
import type {
  ClassifyResponse,
  FeatureMeta,
  IntervalsResponse,
  ModelMeta,
  SweepResponse,
} from "./types.js";
import { validateCase } from "./validate.js";

export interface CaseSession {
  modelId: string;
  features: Array<number | null>;
  rho: number;
  seed: number;
  latest: {
    classify?: ClassifyResponse;
    sweep?: SweepResponse;
    intervals?: IntervalsResponse;
    sensitivity: Map<number, SweepResponse>;
  };
}

const RHO_GRID = [0, 0.02, 0.05, 0.1, 0.15, 0.2, 0.3];
const DEBOUNCE_MS = 150;

export class CaseExplorer {
  readonly session: CaseSession;
  private meta: ModelMeta | null = null;
  private readonly applyClassify: (features: number[], rho: number) => Promise<void>;
  private readonly applySweep: (features: number[]) => Promise<void>;
  private readonly debouncedRefresh: () => void;

  constructor(
    private readonly api: ApiClient,
    private readonly root: HTMLElement,
    modelId: string,
    seed = 1234,
    debounceMs = DEBOUNCE_MS,
  ) {
    this.session = {
      modelId,
      features: [],
      rho: 0,
      seed,
      latest: { sensitivity: new Map() },
    };
    this.applyClassify = latestOnly(
      (features: number[], rho: number) =>
        this.api.classify(modelId, features, rho, this.session.seed),
      (resp) => this.renderClassify(resp),
      (err) => this.showError(err),
    );
    this.applySweep = latestOnly(
      (features: number[]) =>
        this.api.sweep(modelId, features, RHO_GRID, this.session.seed),
      (resp) => this.renderSweep(resp),
      (err) => this.showError(err),
    );
    this.debouncedRefresh = debounce(() => void this.refresh(), debounceMs);
  }

  async mount(): Promise<void> {
    this.meta = await this.api.modelMeta(this.session.modelId);
    const features = this.meta.features ?? [];
    this.session.features = features.map((m) =>
      m.kind === "continuous" && m.min !== null && m.max !== null
        ? (m.min + m.max) / 2
        : 0,
    );
    this.buildSkeleton(features);
    await this.refresh();
  }

  private buildSkeleton(features: FeatureMeta[]): void {
    const doc = this.root.ownerDocument;
    this.root.innerHTML = `
      <div class="banner" id="case-banner" hidden></div>
      <div class="case-grid">
        <div class="case-inputs" id="case-inputs"></div>
        <div class="case-results">
          <div id="case-bars"></div>
          <div id="case-verdict"></div>
          <label class="rho-row">
            rho <input type="range" id="rho-slider" min="0" max="0.3" step="0.01" value="0">
            <span id="rho-value" data-full="0">0.00</span>
          </label>
          <div id="case-sweep"></div>
        </div>
      </div>`;
    const inputs = this.root.querySelector("#case-inputs") as HTMLElement;
    features.forEach((meta, i) => {
      const row = doc.createElement("label");
      row.className = "feature-row";
      const caption = doc.createElement("span");
      caption.textContent = meta.name;
      const input = doc.createElement("input");
      input.type = "number";
      input.step = "any";
      input.id = `feature-${i}`;
      input.value = String(this.session.features[i]);
      input.addEventListener("input", () => {
        this.session.features[i] = input.value === "" ? null : Number(input.value);
        this.debouncedRefresh();
      });
      const whisker = doc.createElement("span");
      whisker.className = "whisker";
      whisker.id = `whisker-${i}`;
      const spark = doc.createElement("button");
      spark.type = "button";
      spark.className = "spark-btn";
      spark.id = `spark-${i}`;
      spark.textContent = "sensitivity";
      spark.hidden = meta.kind !== "continuous";
      spark.addEventListener("click", () => void this.loadSensitivity(i));
      const sparkBox = doc.createElement("span");
      sparkBox.className = "sparkline";
      sparkBox.id = `spark-box-${i}`;
      row.append(caption, input, whisker, spark, sparkBox);
      inputs.appendChild(row);
    });
    const slider = this.root.querySelector("#rho-slider") as HTMLInputElement;
    slider.addEventListener("input", () => {
      this.session.rho = Number(slider.value);
      const label = this.root.querySelector("#rho-value") as HTMLElement;
      label.textContent = Number(slider.value).toFixed(2);
      label.dataset.full = slider.value;
      this.debouncedRefresh();
    });
  }

  /** Validate locally, then fetch classification + sweep for the case. */
  async refresh(): Promise<void> {
    if (!this.meta) return;
    const features = this.meta.features ?? [];
    const issues = validateCase(this.session.features, features);
    if (issues.length > 0) {
      this.showBanner(
        issues.map((i) => `${i.name}: ${i.message}`).join("; "),
      );
      return;
    }
    this.hideBanner();
    const values = this.session.features as number[];
    await Promise.all([
      this.applyClassify(values, this.session.rho),
      this.applySweep(values),
      this.loadIntervals(values),
    ]);
  }

  private renderClassify(resp: ClassifyResponse): void {
    this.session.latest.classify = resp;
    renderBars(
      this.root.querySelector("#case-bars") as HTMLElement,
      resp.class_names,
      resp.probabilities,
      resp.stderr,
    );
    renderVerdict(this.root.querySelector("#case-verdict") as HTMLElement, resp.verdict);
  }

  private renderSweep(resp: SweepResponse): void {
    this.session.latest.sweep = resp;
    renderSweepCurve(this.root.querySelector("#case-sweep") as HTMLElement, resp);
  }

  private async loadIntervals(values: number[]): Promise<void> {
    try {
      const resp = await this.api.intervals(this.session.modelId, values);
      this.session.latest.intervals = resp;
      for (const entry of resp.intervals) {
        const whisker = this.root.querySelector(`#whisker-${entry.feature}`);
        if (!whisker) continue;
        if (entry.low !== undefined && entry.high !== undefined) {
          (whisker as HTMLElement).textContent =
            `[${entry.low.toFixed(3)}, ${entry.high.toFixed(3)}]`;
          (whisker as HTMLElement).title = `${entry.low} .. ${entry.high}`;
        } else {
          (whisker as HTMLElement).textContent = entry.error ? "borderline" : "";
        }
      }
    } catch (err) {
      this.showError(err);
    }
  }

  /** Sensitivity curves are fetched lazily per feature to keep the slider
   * path light. */
  private async loadSensitivity(feature: number): Promise<void> {
    if (!this.meta?.features) return;
    const meta = this.meta.features[feature];
    const span =
      meta.min !== null && meta.max !== null && meta.max > meta.min
        ? meta.max - meta.min
        : 1;
    const grid = [0.05, 0.1, 0.2, 0.4].map((f) => f * span);
    try {
      const resp = await this.api.sensitivity(
        this.session.modelId,
        this.session.features as number[],
        this.session.rho,
        feature,
        grid,
        this.session.seed,
      );
      this.session.latest.sensitivity.set(feature, resp);
      const box = this.root.querySelector(`#spark-box-${feature}`) as HTMLElement;
      renderSweepCurve(box, resp);
    } catch (err) {
      this.showError(err);
    }
  }

  private showBanner(message: string): void {
    const banner = this.root.querySelector("#case-banner") as HTMLElement;
    banner.hidden = false;
    banner.textContent = message;
  }

  private hideBanner(): void {
    const banner = this.root.querySelector("#case-banner") as HTMLElement;
    banner.hidden = true;
    banner.textContent = "";
  }

  private showError(err: unknown): void {
    const message =
      err instanceof Error
        ? `${(err as { code?: string }).code ?? "error"}: ${err.message}`
        : String(err);
    this.showBanner(message);
  }
}
