/**
 * Minimal deterministic SVG charts: CDF step plots and bar charts.
 * No DOM, no external plotting dependency; strings in, strings out.
 */

import { CdfPoint } from "./stats.js";

const WIDTH = 640;
const HEIGHT = 420;
const MARGIN = { top: 28, right: 20, bottom: 48, left: 64 };

const PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd"];

const PLOT_W = WIDTH - MARGIN.left - MARGIN.right;
const PLOT_H = HEIGHT - MARGIN.top - MARGIN.bottom;

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function fmt(value: number): string {
  if (value === 0) return "0";
  const magnitude = Math.abs(value);
  if (magnitude >= 1000 || magnitude < 0.01) return value.toExponential(1);
  return Number(value.toPrecision(4)).toString();
}

/** Evenly spaced ticks covering [lo, hi]. */
export function ticks(lo: number, hi: number, count = 6): number[] {
  if (lo === hi) return [lo];
  const step = (hi - lo) / (count - 1);
  return Array.from({ length: count }, (_, i) => lo + i * step);
}

interface Scale {
  (value: number): number;
}

function linearScale(lo: number, hi: number, rangeLo: number, rangeHi: number): Scale {
  const span = hi - lo || 1;
  return (value) => rangeLo + ((value - lo) / span) * (rangeHi - rangeLo);
}

function axes(sx: Scale, sy: Scale, xTicks: number[], yTicks: number[], xLabel: string, yLabel: string): string {
  const parts: string[] = [];
  const x0 = MARGIN.left;
  const y0 = HEIGHT - MARGIN.bottom;
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${x0 + PLOT_W}" y2="${y0}" stroke="#333"/>`);
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${MARGIN.top}" stroke="#333"/>`);
  for (const t of xTicks) {
    const x = sx(t);
    parts.push(`<line x1="${x}" y1="${y0}" x2="${x}" y2="${y0 + 5}" stroke="#333"/>`);
    parts.push(
      `<text x="${x}" y="${y0 + 20}" text-anchor="middle" font-size="11">${esc(fmt(t))}</text>`,
    );
  }
  for (const t of yTicks) {
    const y = sy(t);
    parts.push(`<line x1="${x0 - 5}" y1="${y}" x2="${x0}" y2="${y}" stroke="#333"/>`);
    parts.push(`<line x1="${x0}" y1="${y}" x2="${x0 + PLOT_W}" y2="${y}" stroke="#eee"/>`);
    parts.push(
      `<text x="${x0 - 8}" y="${y + 4}" text-anchor="end" font-size="11">${esc(fmt(t))}</text>`,
    );
  }
  parts.push(
    `<text x="${x0 + PLOT_W / 2}" y="${HEIGHT - 10}" text-anchor="middle" font-size="13">${esc(xLabel)}</text>`,
  );
  parts.push(
    `<text x="16" y="${MARGIN.top + PLOT_H / 2}" text-anchor="middle" font-size="13" transform="rotate(-90 16 ${MARGIN.top + PLOT_H / 2})">${esc(yLabel)}</text>`,
  );
  return parts.join("\n");
}

function document(title: string, body: string): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="DejaVu Sans, Helvetica, sans-serif">`,
    `<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`,
    `<text x="${WIDTH / 2}" y="18" text-anchor="middle" font-size="14">${esc(title)}</text>`,
    body,
    "</svg>",
  ].join("\n");
}

/** Step plot of one empirical CDF per series, sharing the axes. */
export function renderCdfChart(
  series: Map<string, CdfPoint[]>,
  title: string,
  xLabel: string,
): string {
  const all = [...series.values()].flat();
  const xs = all.map((p) => p.x);
  const lo = Math.min(...xs);
  const hi = Math.max(...xs);
  const pad = (hi - lo || 1) * 0.03;
  const sx = linearScale(lo - pad, hi + pad, MARGIN.left, MARGIN.left + PLOT_W);
  const sy = linearScale(0, 1, HEIGHT - MARGIN.bottom, MARGIN.top);

  const body: string[] = [axes(sx, sy, ticks(lo, hi), ticks(0, 1), xLabel, "cumulative fraction of episodes")];
  let index = 0;
  for (const [name, points] of series) {
    const color = PALETTE[index % PALETTE.length];
    const path: string[] = [`M ${sx(points[0].x)} ${sy(0)}`];
    let prevY = 0;
    for (const point of points) {
      path.push(`L ${sx(point.x)} ${sy(prevY)}`);
      path.push(`L ${sx(point.x)} ${sy(point.y)}`);
      prevY = point.y;
    }
    path.push(`L ${sx(hi + pad)} ${sy(1)}`);
    body.push(
      `<path d="${path.join(" ")}" fill="none" stroke="${color}" stroke-width="1.8"/>`,
    );
    const ly = MARGIN.top + 16 + index * 16;
    body.push(`<line x1="${WIDTH - 150}" y1="${ly - 4}" x2="${WIDTH - 126}" y2="${ly - 4}" stroke="${color}" stroke-width="3"/>`);
    body.push(`<text x="${WIDTH - 120}" y="${ly}" font-size="12">${esc(name)}</text>`);
    index += 1;
  }
  return document(title, body.join("\n"));
}

/** Bar chart of one value per labelled category (zero bars stay visible). */
export function renderBarChart(
  labels: readonly string[],
  values: number[],
  title: string,
  yLabel: string,
): string {
  const hi = Math.max(...values, 1e-9);
  const sy = linearScale(0, hi, HEIGHT - MARGIN.bottom, MARGIN.top);
  const slot = PLOT_W / labels.length;
  const barWidth = slot * 0.55;
  const y0 = HEIGHT - MARGIN.bottom;

  const body: string[] = [
    axes((v) => v, sy, [], ticks(0, hi), "", yLabel),
  ];
  values.forEach((value, i) => {
    const x = MARGIN.left + slot * (i + 0.5) - barWidth / 2;
    const top = sy(value);
    body.push(
      `<rect x="${x}" y="${top}" width="${barWidth}" height="${Math.max(y0 - top, 0.5)}" fill="${PALETTE[0]}"/>`,
    );
    body.push(
      `<text x="${x + barWidth / 2}" y="${top - 6}" text-anchor="middle" font-size="11">${esc(fmt(value))}</text>`,
    );
    body.push(
      `<text x="${x + barWidth / 2}" y="${y0 + 20}" text-anchor="middle" font-size="12">${esc(labels[i])}</text>`,
    );
  });
  return document(title, body.join("\n"));
}
