/** SVG drawing helpers for the three chart types. Pure DOM output; all
 * geometry comes from the layout modules. */

import type { CompositionMap } from "./ternary.js";
import type { HeatmapLayout } from "./heatmap.js";
import { heatColor } from "./heatmap.js";
import type { Series } from "./recon.js";

const SVG_NS = "http://www.w3.org/2000/svg";

function svgEl<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string | number>,
): SVGElementTagNameMap[K] {
  const el = document.createElementNS(SVG_NS, tag);
  for (const [key, val] of Object.entries(attrs)) {
    el.setAttribute(key, String(val));
  }
  return el;
}

export function drawCompositionMap(
  host: HTMLElement,
  map: CompositionMap,
  onPick: (sampleId: string) => void,
  selected: Set<string>,
): void {
  host.replaceChildren();
  const size = 360;
  const pad = 24;
  const svg = svgEl("svg", { width: size, height: size * 0.95 });
  if (map.notice) {
    const note = document.createElement("div");
    note.className = "notice";
    note.textContent = map.notice;
    host.appendChild(note);
  }
  if (!map.fallbackGrid) {
    const pts = map.corners
      .map(([x, y]) => `${pad + x * (size - 2 * pad)},${pad + y * (size - 2 * pad)}`)
      .join(" ");
    svg.appendChild(svgEl("polygon", { points: pts, fill: "none", stroke: "#999" }));
    map.corners.forEach(([x, y], i) => {
      const label = svgEl("text", {
        x: pad + x * (size - 2 * pad) + (i === 0 ? -16 : i === 1 ? 6 : 0),
        y: pad + y * (size - 2 * pad) + (i === 2 ? -8 : 14),
        "font-size": 11,
        fill: "#333",
      });
      label.textContent = map.elements[i] ?? `e${i}`;
      svg.appendChild(label);
    });
  }
  for (const p of map.points) {
    const c = svgEl("circle", {
      cx: pad + p.x * (size - 2 * pad),
      cy: pad + p.y * (size - 2 * pad),
      r: 2.5 + 4 * p.size,
      fill: p.color,
      stroke: selected.has(p.sampleId) ? "#000" : "none",
      "stroke-width": 1.5,
      cursor: "pointer",
    });
    const tip = svgEl("title", {});
    tip.textContent = p.value === null ? p.sampleId : `${p.sampleId}: ${p.value}`;
    c.appendChild(tip);
    c.addEventListener("click", () => onPick(p.sampleId));
    svg.appendChild(c);
  }
  host.appendChild(svg);
}

export function drawHeatmap(host: HTMLElement, layout: HeatmapLayout): void {
  host.replaceChildren();
  const width = 520;
  const rowH = Math.max(4, Math.min(18, 260 / layout.rows.length));
  const colW = width / layout.q.length;
  const svg = svgEl("svg", { width: width + 70, height: rowH * layout.rows.length + 8 });
  layout.cells.forEach((row, r) => {
    row.forEach((v, c) => {
      svg.appendChild(
        svgEl("rect", {
          x: 70 + c * colW,
          y: 4 + r * rowH,
          width: Math.ceil(colW),
          height: Math.ceil(rowH),
          fill: heatColor(v),
        }),
      );
    });
    const label = svgEl("text", { x: 2, y: 4 + r * rowH + rowH / 2 + 3, "font-size": 9 });
    label.textContent = layout.rows[r];
    svg.appendChild(label);
  });
  host.appendChild(svg);
}

export interface LinePlotOptions {
  logY?: boolean;
  width?: number;
  height?: number;
}

const SERIES_COLORS = ["#111", "#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

export function drawLines(host: HTMLElement, series: Series[], opts: LinePlotOptions = {}): void {
  host.replaceChildren();
  const width = opts.width ?? 560;
  const height = opts.height ?? 240;
  const pad = 30;
  const svg = svgEl("svg", { width, height });
  const xs = series.flatMap((s) => s.q);
  const ysRaw = series.flatMap((s) => s.y);
  const ys = opts.logY ? ysRaw.filter((v) => v > 0).map(Math.log10) : ysRaw;
  if (xs.length === 0 || ys.length === 0) {
    host.appendChild(svg);
    return;
  }
  const [xMin, xMax] = [Math.min(...xs), Math.max(...xs)];
  const [yMin, yMax] = [Math.min(...ys), Math.max(...ys)];
  const sx = (x: number) => pad + ((x - xMin) / (xMax - xMin || 1)) * (width - 2 * pad);
  const sy = (y: number) => {
    const t = opts.logY ? (y > 0 ? Math.log10(y) : yMin) : y;
    return height - pad - ((t - yMin) / (yMax - yMin || 1)) * (height - 2 * pad);
  };
  svg.appendChild(
    svgEl("line", { x1: pad, y1: height - pad, x2: width - pad, y2: height - pad, stroke: "#888" }),
  );
  svg.appendChild(svgEl("line", { x1: pad, y1: pad, x2: pad, y2: height - pad, stroke: "#888" }));
  series.forEach((s, i) => {
    const d = s.q.map((x, idx) => `${idx ? "L" : "M"}${sx(x)},${sy(s.y[idx])}`).join("");
    svg.appendChild(
      svgEl("path", {
        d,
        fill: "none",
        stroke: SERIES_COLORS[i % SERIES_COLORS.length],
        "stroke-width": i === 0 ? 1.6 : 1.1,
      }),
    );
    const label = svgEl("text", {
      x: width - pad - 110,
      y: pad + 12 * i,
      "font-size": 10,
      fill: SERIES_COLORS[i % SERIES_COLORS.length],
    });
    label.textContent = s.label;
    svg.appendChild(label);
  });
  host.appendChild(svg);
}
