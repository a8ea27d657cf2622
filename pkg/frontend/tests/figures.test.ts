import { execFileSync } from "node:child_process";
import { existsSync, mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import { parseEvalCsv } from "../src/csv.js";
import { CdfPoint } from "../src/stats.js";
import { cumulativeHistogramFigure, selectionRateFigure, toPng } from "../src/figures.js";

const HEADER = "policy,episode,seed,sum_r,sum_rC,sum_rP,sum_rL,sum_rL_ev,n_MT,n_MMF,n_DS,n_EVP";
const SAMPLE = [
  HEADER,
  "dqn,0,1,40,6,8,3,1,10,0,5,35",
  "dqn,1,1,30,5,9,4,0,10,0,10,30",
  "mt,0,1,10,2,7,9,3,50,0,0,0",
  "mt,1,1,20,3,6,8,2,50,0,0,0",
].join("\n");

describe("cumulative histogram figure", () => {
  const rows = parseEvalCsv(SAMPLE);

  it("exposes the exact CDF data series it draws", () => {
    const figure = cumulativeHistogramFigure(rows, "sum_rL");
    const series = figure.series as Record<string, CdfPoint[]>;
    expect(series.dqn).toEqual([
      { x: 3, y: 0.5 },
      { x: 4, y: 1 },
    ]);
    expect(series.mt).toEqual([
      { x: 8, y: 0.5 },
      { x: 9, y: 1 },
    ]);
    expect(figure.svg).toContain("<svg");
  });

  it("normalized reward figure tops out at x = 1", () => {
    const figure = cumulativeHistogramFigure(rows, "sum_r", undefined, "max-reward-sum");
    const xs = Object.values(figure.series as Record<string, CdfPoint[]>)
      .flat()
      .map((p) => p.x);
    expect(Math.max(...xs)).toBe(1);
  });

  it("does not mutate its input rows", () => {
    const before = JSON.stringify(rows);
    cumulativeHistogramFigure(rows, "sum_r", undefined, "max-reward-sum");
    expect(JSON.stringify(rows)).toBe(before);
  });

  it("same input gives identical rendered output", () => {
    const a = cumulativeHistogramFigure(rows, "sum_rP").svg;
    const b = cumulativeHistogramFigure(rows, "sum_rP").svg;
    expect(a).toBe(b);
  });
});

describe("selection rate figure", () => {
  it("computes rates from the dqn rows including zero bars", () => {
    const rows = parseEvalCsv(SAMPLE);
    const figure = selectionRateFigure(rows);
    expect(figure.series).toEqual({ MT: 0.2, MMF: 0, DS: 0.15, "EV P": 0.65 });
    expect(figure.svg).toContain("MMF");
  });

  it("fails without dqn rows", () => {
    const rows = parseEvalCsv([HEADER, "mt,0,1,1,1,1,1,1,50,0,0,0"].join("\n"));
    expect(() => selectionRateFigure(rows)).toThrow(/dqn/);
  });
});

describe("png rendering", () => {
  it("produces a PNG byte stream", () => {
    const rows = parseEvalCsv(SAMPLE);
    const png = toPng(cumulativeHistogramFigure(rows, "sum_rC").svg);
    expect(png.subarray(0, 4)).toEqual(Buffer.from([0x89, 0x50, 0x4e, 0x47]));
  });
});

describe("cli", () => {
  it("writes svg and png files for every figure", () => {
    const dir = mkdtempSync(join(tmpdir(), "plots-"));
    const csvPath = join(dir, "eval.csv");
    writeFileSync(csvPath, SAMPLE);
    execFileSync("node", [
      join(__dirname, "..", "dist", "cli.js"),
      "--csv", csvPath,
      "--out-dir", join(dir, "figs"),
    ]);
    for (const name of ["sum_rC", "sum_rP", "sum_rL", "sum_rL_ev", "sum_r_normalized", "selection_rates"]) {
      expect(existsSync(join(dir, "figs", `${name}.svg`))).toBe(true);
      expect(existsSync(join(dir, "figs", `${name}.png`))).toBe(true);
    }
    const svg = readFileSync(join(dir, "figs", "selection_rates.svg"), "utf-8");
    expect(svg).toContain("selection rate");
  });

  it("exits nonzero on a bad metric", () => {
    const dir = mkdtempSync(join(tmpdir(), "plots-"));
    const csvPath = join(dir, "eval.csv");
    writeFileSync(csvPath, SAMPLE);
    expect(() =>
      execFileSync(
        "node",
        [join(__dirname, "..", "dist", "cli.js"), "--csv", csvPath, "--out-dir", dir, "--metric", "nope"],
        { stdio: "pipe" },
      ),
    ).toThrow();
  });
});
