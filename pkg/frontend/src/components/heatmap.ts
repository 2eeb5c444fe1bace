/** Confusion heatmap as a table: rows are predicted classes, columns true
 * classes. Cell shading scales with the count; the top confused pair can be
 * highlighted. */

export function renderHeatmap(
  root: HTMLElement,
  classNames: string[],
  counts: number[][],
  highlightPair?: [number, number],
): void {
  const doc = root.ownerDocument;
  root.innerHTML = "";
  const table = doc.createElement("table");
  table.className = "heatmap";

  const header = doc.createElement("tr");
  header.appendChild(doc.createElement("th")); // corner
  for (const name of classNames) {
    const th = doc.createElement("th");
    th.textContent = name;
    th.title = `true ${name}`;
    header.appendChild(th);
  }
  table.appendChild(header);

  const peak = Math.max(1, ...counts.flat());
  counts.forEach((row, i) => {
    const tr = doc.createElement("tr");
    const th = doc.createElement("th");
    th.textContent = classNames[i];
    th.title = `predicted ${classNames[i]}`;
    tr.appendChild(th);
    row.forEach((count, j) => {
      const td = doc.createElement("td");
      td.textContent = String(count);
      td.dataset.predicted = String(i);
      td.dataset.true = String(j);
      const strength = count / peak;
      td.style.background =
        i === j
          ? `rgba(46, 160, 67, ${0.15 + 0.6 * strength})`
          : `rgba(218, 54, 51, ${count === 0 ? 0 : 0.15 + 0.6 * strength})`;
      if (
        highlightPair &&
        i !== j &&
        ((i === highlightPair[0] && j === highlightPair[1]) ||
          (i === highlightPair[1] && j === highlightPair[0]))
      ) {
        td.classList.add("confused-cell");
      }
      tr.appendChild(td);
    });
    table.appendChild(tr);
  });
  root.appendChild(table);
}
