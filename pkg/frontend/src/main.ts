/** App bootstrap: point the console at a running API, choose a model (and a
 * dataset for the dashboard), and mount the two panels. */

import { ApiClient } from "./api.js";
import { CaseExplorer } from "./caseExplorer.js";
import { Dashboard } from "./dashboard.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

async function connect(): Promise<void> {
  const base = (el<HTMLInputElement>("api-base").value || "http://127.0.0.1:8765").replace(/\/$/, "");
  const modelId = el<HTMLInputElement>("model-id").value.trim();
  const datasetId = el<HTMLInputElement>("dataset-id").value.trim();
  const seed = Number(el<HTMLInputElement>("session-seed").value) || 1234;
  const api = new ApiClient(base);

  if (modelId) {
    const explorer = new CaseExplorer(api, el("case-panel"), modelId, seed);
    await explorer.mount();
  }
  if (modelId && datasetId) {
    const dashboard = new Dashboard(api, el("dashboard-panel"), modelId, datasetId, seed);
    await dashboard.mount();
    const otherId = el<HTMLInputElement>("compare-id").value.trim();
    if (otherId) await dashboard.compareWith(otherId);
  }
}

el<HTMLButtonElement>("connect-btn").addEventListener("click", () => {
  connect().catch((err) => {
    const banner = el("global-banner");
    banner.hidden = false;
    banner.textContent = err instanceof Error ? err.message : String(err);
  });
});
