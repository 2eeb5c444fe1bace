/** Display formatting. Visible text is rounded presentation of the exact API
 * value; the element's title and data-full attribute carry full precision. */

export function formatProb(value: number): string {
  return `${(value * 100).toFixed(1)}%`;
}

export function formatStat(value: number, digits = 4): string {
  return value.toFixed(digits);
}

/** Create a span whose text is rounded but whose tooltip is exact. */
export function statSpan(doc: Document, value: number, digits = 4): HTMLSpanElement {
  const span = doc.createElement("span");
  span.textContent = formatStat(value, digits);
  span.title = String(value);
  span.dataset.full = String(value);
  return span;
}
