/** Client-side case validation against the model's feature metadata, run
 * before any probability call is issued. */

import type { FeatureMeta } from "./types.js";

export interface ValidationIssue {
  feature: number;
  name: string;
  message: string;
}

export function validateCase(
  values: Array<number | null>,
  features: FeatureMeta[],
): ValidationIssue[] {
  const issues: ValidationIssue[] = [];
  features.forEach((meta, i) => {
    const value = values[i];
    if (value === null || value === undefined || Number.isNaN(value)) {
      issues.push({ feature: i, name: meta.name, message: "value required" });
      return;
    }
    if (meta.kind === "continuous") {
      if (meta.min !== null && meta.max !== null) {
        const span = meta.max - meta.min;
        const slack = span > 0 ? span : 1;
        if (value < meta.min - slack || value > meta.max + slack) {
          issues.push({
            feature: i,
            name: meta.name,
            message: `far outside the observed range [${meta.min}, ${meta.max}]`,
          });
        }
      }
    } else if (meta.codes) {
      if (!Number.isInteger(value) || value < 0 || value >= meta.codes.length) {
        issues.push({
          feature: i,
          name: meta.name,
          message: `must be a code in 0..${meta.codes.length - 1}`,
        });
      }
    }
  });
  return issues;
}
