/** Minimal SVG line charts: the accuracy-vs-rejection curve and class
 * probability curves over a sweep grid. */

import type { RejectionPoint, SweepResponse } from "../types.js";

const NS = "http://www.w3.org/2000/svg";
const WIDTH = 360;
const HEIGHT = 180;
const PAD = 28;

const PALETTE = ["#4c9be8", "#e8744c", "#52b788", "#b14ce8", "#e8c14c", "#4ce8dd"];

function svgRoot(doc: Document): SVGSVGElement {
  const svg = doc.createElementNS(NS, "svg") as SVGSVGElement;
  svg.setAttribute("viewBox", `0 0 ${WIDTH} ${HEIGHT}`);
  svg.setAttribute("width", String(WIDTH));
  svg.setAttribute("height", String(HEIGHT));
  return svg;
}

function polyline(
  doc: Document,
  xs: number[],
  ys: number[],
  color: string,
): SVGPolylineElement {
  const line = doc.createElementNS(NS, "polyline") as SVGPolylineElement;
  const points = xs
    .map((x, i) => {
      const px = PAD + x * (WIDTH - 2 * PAD);
      const py = HEIGHT - PAD - ys[i] * (HEIGHT - 2 * PAD);
      return `${px.toFixed(1)},${py.toFixed(1)}`;
    })
    .join(" ");
  line.setAttribute("points", points);
  line.setAttribute("fill", "none");
  line.setAttribute("stroke", color);
  line.setAttribute("stroke-width", "2");
  return line;
}

function axes(doc: Document, svg: SVGSVGElement, xLabel: string, yLabel: string): void {
  const axis = doc.createElementNS(NS, "path");
  axis.setAttribute(
    "d",
    `M ${PAD} ${PAD} L ${PAD} ${HEIGHT - PAD} L ${WIDTH - PAD} ${HEIGHT - PAD}`,
  );
  axis.setAttribute("stroke", "#8b949e");
  axis.setAttribute("fill", "none");
  svg.appendChild(axis);
  const xText = doc.createElementNS(NS, "text");
  xText.textContent = xLabel;
  xText.setAttribute("x", String(WIDTH / 2));
  xText.setAttribute("y", String(HEIGHT - 6));
  xText.setAttribute("class", "axis-label");
  svg.appendChild(xText);
  const yText = doc.createElementNS(NS, "text");
  yText.textContent = yLabel;
  yText.setAttribute("x", "4");
  yText.setAttribute("y", String(PAD - 8));
  yText.setAttribute("class", "axis-label");
  svg.appendChild(yText);
}

export function renderRejectionCurve(root: HTMLElement, points: RejectionPoint[]): void {
  const doc = root.ownerDocument;
  root.innerHTML = "";
  const svg = svgRoot(doc);
  axes(doc, svg, "rejection rate", "accuracy");
  const kept = points.filter((p) => p.accuracy !== null);
  svg.appendChild(
    polyline(
      doc,
      kept.map((p) => p.rejection_rate),
      kept.map((p) => p.accuracy as number),
      PALETTE[0],
    ),
  );
  root.appendChild(svg);
}

/** One probability line per class over the sweep abscissa; the flagged
 * change point is drawn as a vertical marker. */
export function renderSweepCurve(root: HTMLElement, sweep: SweepResponse): void {
  const doc = root.ownerDocument;
  root.innerHTML = "";
  const svg = svgRoot(doc);
  axes(doc, svg, "rho", "p");
  const xs = sweep.points.map((p) => p.abscissa);
  const lo = Math.min(...xs);
  const span = Math.max(...xs) - lo || 1;
  const scaled = xs.map((x) => (x - lo) / span);
  sweep.class_names.forEach((name, c) => {
    const line = polyline(
      doc,
      scaled,
      sweep.points.map((p) => p.probs[c]),
      PALETTE[c % PALETTE.length],
    );
    line.dataset.classIndex = String(c);
    const title = doc.createElementNS(NS, "title");
    title.textContent = name;
    line.appendChild(title);
    svg.appendChild(line);
  });
  if (sweep.flag !== null) {
    const fx = PAD + ((sweep.flag - lo) / span) * (WIDTH - 2 * PAD);
    const marker = doc.createElementNS(NS, "line");
    marker.setAttribute("x1", String(fx));
    marker.setAttribute("x2", String(fx));
    marker.setAttribute("y1", String(PAD));
    marker.setAttribute("y2", String(HEIGHT - PAD));
    marker.setAttribute("stroke", "#e8c14c");
    marker.setAttribute("stroke-dasharray", "4 3");
    marker.setAttribute("class", "flag-marker");
    svg.appendChild(marker);
  }
  root.appendChild(svg);
}
