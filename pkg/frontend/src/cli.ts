#!/usr/bin/env node
/**
 * Render evaluation figures from an adaptsched eval CSV.
 *
 *   adaptsched-plots --csv results/eval.csv --out-dir figures
 *   adaptsched-plots --csv eval.csv --out-dir f --metric sum_rL_ev --policies dqn,ds
 *
 * Without --metric, the full set is rendered: one cumulative histogram per
 * submetric, the normalized reward histogram, and the selection-rate bars.
 * Each figure is written as both .svg and .png.
 */

import { mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";
import { parseArgs } from "node:util";

import { CsvError, METRIC_COLUMNS, MetricColumn, parseEvalCsv } from "./csv.js";
import { Figure, cumulativeHistogramFigure, selectionRateFigure, toPng } from "./figures.js";

function usageError(message: string): never {
  console.error(`error: ${message}`);
  console.error(
    "usage: adaptsched-plots --csv FILE --out-dir DIR [--metric NAME] [--policies a,b] [--no-normalize]",
  );
  process.exit(2);
}

export function main(argv: string[]): void {
  let args;
  try {
    args = parseArgs({
      args: argv,
      options: {
        csv: { type: "string" },
        "out-dir": { type: "string" },
        metric: { type: "string" },
        policies: { type: "string" },
        "no-normalize": { type: "boolean", default: false },
      },
    });
  } catch (error) {
    usageError((error as Error).message);
  }
  const { csv, "out-dir": outDir, metric, policies } = args.values;
  if (!csv || !outDir) {
    usageError("--csv and --out-dir are required");
  }

  let rows;
  try {
    rows = parseEvalCsv(readFileSync(csv, "utf-8"));
  } catch (error) {
    if (error instanceof CsvError || (error as NodeJS.ErrnoException).code === "ENOENT") {
      console.error(`error: ${(error as Error).message}`);
      process.exit(1);
    }
    throw error;
  }
  const wanted = policies ? policies.split(",").map((p) => p.trim()) : undefined;
  const normalize = !args.values["no-normalize"];

  const figures: Figure[] = [];
  try {
    if (metric) {
      if (!METRIC_COLUMNS.includes(metric as MetricColumn)) {
        usageError(`unknown metric '${metric}' (choose from ${METRIC_COLUMNS.join(", ")})`);
      }
      const mode = metric === "sum_r" && normalize ? "max-reward-sum" : "none";
      figures.push(cumulativeHistogramFigure(rows, metric as MetricColumn, wanted, mode));
    } else {
      for (const column of METRIC_COLUMNS) {
        if (column !== "sum_r") {
          figures.push(cumulativeHistogramFigure(rows, column, wanted));
        }
      }
      figures.push(
        cumulativeHistogramFigure(rows, "sum_r", wanted, normalize ? "max-reward-sum" : "none"),
      );
      figures.push(selectionRateFigure(rows));
    }
  } catch (error) {
    console.error(`error: ${(error as Error).message}`);
    process.exit(1);
  }

  mkdirSync(outDir, { recursive: true });
  for (const figure of figures) {
    const svgPath = join(outDir, `${figure.name}.svg`);
    writeFileSync(svgPath, figure.svg);
    writeFileSync(join(outDir, `${figure.name}.png`), toPng(figure.svg));
    console.log(svgPath);
  }
}

const invokedDirectly = process.argv[1]?.endsWith("cli.js") || process.argv[1]?.endsWith("cli.ts");
if (invokedDirectly) {
  main(process.argv.slice(2));
}
