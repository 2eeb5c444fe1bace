/** Model dashboard: confusion heatmap (rows predicted, columns true),
 * chance-corrected statistics with error bars, the rejection curve, the
 * confused-pair ranking with one-click joint-model training, and model
 * comparison. */

import { ApiClient } from "./api.js";
import { renderHeatmap } from "./components/heatmap.js";
import { renderRejectionCurve } from "./components/curve.js";
import { statSpan } from "./format.js";
import type { CompareResponse, MetricsResponse } from "./types.js";

export class Dashboard {
  constructor(
    private readonly api: ApiClient,
    private readonly root: HTMLElement,
    private readonly modelId: string,
    private readonly datasetId: string,
    private readonly seed = 1234,
  ) {}

  async mount(): Promise<void> {
    this.root.innerHTML = `
      <div class="banner" id="dash-banner" hidden></div>
      <div class="dash-grid">
        <div>
          <h3>confusion (rows predicted, columns true)</h3>
          <div id="dash-heatmap"></div>
          <div id="dash-pairs"></div>
        </div>
        <div>
          <h3>performance</h3>
          <div id="dash-stats"></div>
          <h3>accuracy vs rejection</h3>
          <div id="dash-curve"></div>
          <div id="dash-compare"></div>
        </div>
      </div>`;
    try {
      const metrics = await this.api.metrics(this.modelId, this.datasetId);
      this.render(metrics);
    } catch (err) {
      this.showError(err);
    }
  }

  private render(metrics: MetricsResponse): void {
    const doc = this.root.ownerDocument;
    const top = metrics.confused_pairs[0];
    renderHeatmap(
      this.root.querySelector("#dash-heatmap") as HTMLElement,
      metrics.confusion.class_names,
      metrics.confusion.counts,
      top ? top.pair : undefined,
    );

    const stats = this.root.querySelector("#dash-stats") as HTMLElement;
    stats.innerHTML = "";
    const report = metrics.report;
    const rows: Array<[string, number, number | null]> = [
      ["accuracy p0", report.p0, report.var_p0],
      ["kappa", report.kappa, null],
      ["tau", report.tau, report.var_tau],
    ];
    for (const [label, value, variance] of rows) {
      const row = doc.createElement("div");
      row.className = "stat-row";
      row.dataset.stat = label;
      const name = doc.createElement("span");
      name.className = "stat-name";
      name.textContent = label;
      row.appendChild(name);
      row.appendChild(statSpan(doc, value));
      if (variance !== null) {
        const err = doc.createElement("span");
        err.className = "stat-err";
        const sigma = Math.sqrt(variance);
        err.textContent = `± ${sigma.toFixed(4)}`;
        err.title = `variance ${variance}`;
        row.appendChild(err);
      }
      if (label === "kappa" && value === 1.0) {
        const badge = doc.createElement("span");
        badge.className = "perfect-badge";
        badge.textContent = "perfect";
        row.appendChild(badge);
      }
      stats.appendChild(row);
    }

    renderRejectionCurve(
      this.root.querySelector("#dash-curve") as HTMLElement,
      metrics.rejection_curve,
    );

    const pairs = this.root.querySelector("#dash-pairs") as HTMLElement;
    pairs.innerHTML = "<h3>confused pairs</h3>";
    metrics.confused_pairs.slice(0, 5).forEach((pair, rank) => {
      const row = doc.createElement("div");
      row.className = "pair-row";
      if (rank === 0) row.classList.add("top-pair");
      const label = doc.createElement("span");
      label.textContent = `${pair.names[0]} + ${pair.names[1]}`;
      const score = doc.createElement("span");
      score.className = "pair-score";
      score.textContent = String(pair.score);
      const build = doc.createElement("button");
      build.type = "button";
      build.textContent = "build joint model";
      build.addEventListener("click", () => void this.buildJoint(pair.pair, build));
      row.append(label, score, build);
      pairs.appendChild(row);
    });
  }

  /** Merge the pair into one output and train a second-stage model. */
  private async buildJoint(pair: [number, number], button: HTMLButtonElement): Promise<void> {
    try {
      button.disabled = true;
      const meta = await this.api.datasetMeta(this.datasetId);
      const merged = [pair[0], pair[1]].sort((a, b) => a - b);
      const rest = meta.class_names
        .map((_, i) => i)
        .filter((i) => !merged.includes(i))
        .map((i) => [i]);
      const groups = [merged, ...rest];
      const created = await this.api.buildJointModel(this.datasetId, groups, this.seed);
      button.textContent = `built ${created.id}`;
    } catch (err) {
      button.disabled = false;
      this.showError(err);
    }
  }

  async compareWith(otherModelId: string): Promise<CompareResponse | null> {
    const box = this.root.querySelector("#dash-compare") as HTMLElement;
    try {
      const result = await this.api.compare(this.modelId, otherModelId, this.datasetId);
      box.innerHTML = "";
      const doc = this.root.ownerDocument;
      const line = doc.createElement("div");
      line.className = "compare-line";
      const z = statSpan(doc, result.z, 3);
      z.id = "compare-z";
      line.append("Z = ", z);
      const verdict = doc.createElement("span");
      verdict.id = "compare-verdict";
      verdict.textContent =
        result.z === 0
          ? "no difference"
          : result.significant
            ? "significant at 95%"
            : "not significant";
      line.append(" — ", verdict);
      box.appendChild(line);
      return result;
    } catch (err) {
      this.showError(err);
      return null;
    }
  }

  private showError(err: unknown): void {
    const banner = this.root.querySelector("#dash-banner") as HTMLElement;
    banner.hidden = false;
    banner.textContent =
      err instanceof Error
        ? `${(err as { code?: string }).code ?? "error"}: ${err.message}`
        : String(err);
  }
}
