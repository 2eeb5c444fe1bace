/** Elimination verdict panel: retained classes, eliminated classes, mode
 * badge, and the policy trace. */

import type { Verdict } from "../types.js";
import { formatProb } from "../format.js";

export function renderVerdict(root: HTMLElement, verdict: Verdict): void {
  const doc = root.ownerDocument;
  root.innerHTML = "";
  root.dataset.mode = verdict.mode;

  const badge = doc.createElement("span");
  badge.className = `verdict-badge verdict-${verdict.mode}`;
  badge.textContent =
    verdict.mode === "confident-single"
      ? "confident"
      : verdict.mode === "subset"
        ? "subset retained"
        : "undecided";
  root.appendChild(badge);

  const section = (title: string, entries: Verdict["retained"], cls: string) => {
    const wrap = doc.createElement("div");
    wrap.className = cls;
    const heading = doc.createElement("div");
    heading.className = "verdict-heading";
    heading.textContent = title;
    wrap.appendChild(heading);
    for (const entry of entries) {
      const chip = doc.createElement("span");
      chip.className = "class-chip";
      chip.dataset.classIndex = String(entry.class);
      chip.textContent = `${entry.name ?? `class ${entry.class}`} ${formatProb(entry.prob)}`;
      chip.title = String(entry.prob);
      chip.dataset.full = String(entry.prob);
      wrap.appendChild(chip);
    }
    root.appendChild(wrap);
  };

  section("retained", verdict.retained, "verdict-retained");
  if (verdict.eliminated.length > 0) {
    section("eliminated", verdict.eliminated, "verdict-eliminated");
  }

  const trace = doc.createElement("div");
  trace.className = "verdict-trace";
  trace.textContent = verdict.trace;
  root.appendChild(trace);
}
