/**
 * Statistics behind the figures: empirical CDFs and selection rates.
 * Pure functions; the rendering layer consumes their outputs verbatim.
 */

import { COUNT_COLUMNS, EvalRow, MetricColumn } from "./csv.js";

export interface CdfPoint {
  x: number;
  y: number;
}

/**
 * Empirical CDF of the samples: sorted values paired with i/n.
 * The last point always has y = 1.
 */
export function ecdf(values: number[]): CdfPoint[] {
  if (values.length === 0) {
    throw new Error("cannot build a CDF from no data");
  }
  const sorted = [...values].sort((a, b) => a - b);
  return sorted.map((x, i) => ({ x, y: (i + 1) / sorted.length }));
}

export type NormalizationMode = "none" | "max-reward-sum";

/**
 * Per-policy CDF series for one metric column.
 *
 * With `max-reward-sum` every value is divided by the highest sum_r found
 * across all rows (the convention used for the reward figure, which puts the
 * best episode at x = 1).
 */
export function cdfSeries(
  rows: EvalRow[],
  metric: MetricColumn,
  policies: string[],
  normalization: NormalizationMode = "none",
): Map<string, CdfPoint[]> {
  let divisor = 1;
  if (normalization === "max-reward-sum") {
    divisor = Math.max(...rows.map((row) => row.sum_r));
    if (!(divisor > 0)) {
      throw new Error("max-reward-sum normalization needs a positive best reward sum");
    }
  }
  const series = new Map<string, CdfPoint[]>();
  for (const policy of policies) {
    const values = rows.filter((row) => row.policy === policy).map((row) => row[metric]);
    if (values.length === 0) {
      throw new Error(`no rows for policy '${policy}'`);
    }
    series.set(policy, ecdf(values.map((v) => v / divisor)));
  }
  return series;
}

export const ACTION_LABELS = ["MT", "MMF", "DS", "EV P"] as const;

/** Relative selection rate of each scheduler, n_k / sum(n). */
export function selectionRates(counts: number[]): number[] {
  if (counts.length !== COUNT_COLUMNS.length) {
    throw new Error(`expected ${COUNT_COLUMNS.length} counts, got ${counts.length}`);
  }
  const total = counts.reduce((a, b) => a + b, 0);
  if (total <= 0) {
    throw new Error("selection counts sum to zero");
  }
  return counts.map((c) => c / total);
}

/** Aggregate the per-episode selection counters of one policy's rows. */
export function aggregateCounts(rows: EvalRow[], policy = "dqn"): number[] {
  const block = rows.filter((row) => row.policy === policy);
  if (block.length === 0) {
    throw new Error(`no rows for policy '${policy}'`);
  }
  const totals = [0, 0, 0, 0];
  for (const row of block) {
    totals[0] += row.n_MT;
    totals[1] += row.n_MMF;
    totals[2] += row.n_DS;
    totals[3] += row.n_EVP;
  }
  return totals;
}
