/** Horizontal probability bars, one per class, sorted by probability.
 * Bar text and width come straight from the API values. */

import { formatProb } from "../format.js";

export function renderBars(
  root: HTMLElement,
  classNames: string[],
  probabilities: number[],
  stderr?: number[],
): void {
  root.innerHTML = "";
  const order = classNames
    .map((_, i) => i)
    .sort((a, b) => probabilities[b] - probabilities[a] || a - b);
  for (const i of order) {
    const row = root.ownerDocument.createElement("div");
    row.className = "bar-row";
    row.dataset.classIndex = String(i);

    const label = root.ownerDocument.createElement("div");
    label.className = "bar-label";
    label.textContent = classNames[i];

    const track = root.ownerDocument.createElement("div");
    track.className = "bar-track";
    const fill = root.ownerDocument.createElement("div");
    fill.className = "bar-fill";
    fill.style.width = `${probabilities[i] * 100}%`;
    track.appendChild(fill);

    const value = root.ownerDocument.createElement("div");
    value.className = "bar-value";
    value.textContent = formatProb(probabilities[i]);
    value.title = String(probabilities[i]);
    value.dataset.full = String(probabilities[i]);
    if (stderr && stderr[i] > 0) {
      value.title = `${probabilities[i]} ± ${stderr[i]} (1 SE)`;
    }

    row.append(label, track, value);
    root.appendChild(row);
  }
}
