/**
 * Reader for the evaluation CSV written by the simulator's `eval` command.
 *
 * Schema (one row per policy and episode):
 *   policy, episode, seed, sum_r, sum_rC, sum_rP, sum_rL, sum_rL_ev,
 *   n_MT, n_MMF, n_DS, n_EVP
 */

import Papa from "papaparse";

export const METRIC_COLUMNS = [
  "sum_r",
  "sum_rC",
  "sum_rP",
  "sum_rL",
  "sum_rL_ev",
] as const;

export const COUNT_COLUMNS = ["n_MT", "n_MMF", "n_DS", "n_EVP"] as const;

export type MetricColumn = (typeof METRIC_COLUMNS)[number];

export interface EvalRow {
  policy: string;
  episode: number;
  seed: number;
  sum_r: number;
  sum_rC: number;
  sum_rP: number;
  sum_rL: number;
  sum_rL_ev: number;
  n_MT: number;
  n_MMF: number;
  n_DS: number;
  n_EVP: number;
}

const REQUIRED = ["policy", "episode", "seed", ...METRIC_COLUMNS, ...COUNT_COLUMNS];

export class CsvError extends Error {}

/** Parse evaluation CSV text, checking the full column schema. */
export function parseEvalCsv(text: string): EvalRow[] {
  const parsed = Papa.parse<Record<string, string>>(text.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0];
    throw new CsvError(`malformed CSV: ${first.message} (row ${first.row})`);
  }
  const fields = parsed.meta.fields ?? [];
  for (const column of REQUIRED) {
    if (!fields.includes(column)) {
      throw new CsvError(`missing required column '${column}'`);
    }
  }
  return parsed.data.map((raw, index) => {
    const row: Partial<EvalRow> = { policy: raw.policy };
    for (const column of REQUIRED.slice(1)) {
      const value = Number(raw[column]);
      if (!Number.isFinite(value)) {
        throw new CsvError(`row ${index + 1}: column '${column}' is not a number`);
      }
      (row as Record<string, number | string>)[column] = value;
    }
    return row as EvalRow;
  });
}

/** Distinct policies in first-appearance order. */
export function policiesIn(rows: EvalRow[]): string[] {
  return [...new Set(rows.map((row) => row.policy))];
}
