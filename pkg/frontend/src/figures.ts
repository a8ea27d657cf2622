/**
 * Figure assembly: picks rows, computes the data series, renders SVG, and
 * rasterizes a PNG sibling for each figure.
 */

import { Resvg } from "@resvg/resvg-js";

import { EvalRow, MetricColumn, policiesIn } from "./csv.js";
import {
  ACTION_LABELS,
  CdfPoint,
  NormalizationMode,
  aggregateCounts,
  cdfSeries,
  selectionRates,
} from "./stats.js";
import { renderBarChart, renderCdfChart } from "./svg.js";

export interface Figure {
  name: string;
  svg: string;
  /** Data series underlying the figure, for inspection and tests. */
  series: Record<string, CdfPoint[]> | Record<string, number>;
}

const METRIC_TITLES: Record<MetricColumn, string> = {
  sum_r: "weighted reward sum per episode",
  sum_rC: "capacity sum per episode",
  sum_rP: "packet-rate sum per episode",
  sum_rL: "timed-out blocks per episode",
  sum_rL_ev: "timed-out EV blocks per episode",
};

/** Cumulative histogram (empirical CDF) of one metric, one curve per policy. */
export function cumulativeHistogramFigure(
  rows: EvalRow[],
  metric: MetricColumn,
  policies?: string[],
  normalization: NormalizationMode = "none",
): Figure {
  if (rows.length === 0) {
    throw new Error("no rows in the evaluation CSV");
  }
  const selected = policies && policies.length > 0 ? policies : policiesIn(rows);
  const series = cdfSeries(rows, metric, selected, normalization);
  const label =
    normalization === "max-reward-sum"
      ? `${metric} / best achieved reward sum`
      : metric;
  const svg = renderCdfChart(series, METRIC_TITLES[metric], label);
  return {
    name: normalization === "max-reward-sum" ? `${metric}_normalized` : metric,
    svg,
    series: Object.fromEntries(series),
  };
}

/** Relative selection rate of the four schedulers under the DQN policy. */
export function selectionRateFigure(rows: EvalRow[], policy = "dqn"): Figure {
  const rates = selectionRates(aggregateCounts(rows, policy));
  const svg = renderBarChart(
    ACTION_LABELS,
    rates,
    `relative selection rate (${policy})`,
    "selection rate",
  );
  const series: Record<string, number> = {};
  ACTION_LABELS.forEach((label, i) => {
    series[label] = rates[i];
  });
  return { name: "selection_rates", svg, series };
}

/** Rasterize a figure's SVG; DejaVu is available wherever the sim runs. */
export function toPng(svg: string): Buffer {
  const renderer = new Resvg(svg, { fitTo: { mode: "width", value: 1280 } });
  return Buffer.from(renderer.render().asPng());
}
