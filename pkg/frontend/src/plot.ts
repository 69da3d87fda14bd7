#!/usr/bin/env node
/**
 * phnls-plot <kind> --in PATH --out PATH
 *
 * kinds:
 *   growth        GrowthReport JSON (+ sibling .csv series) -> SVG
 *   scaling       EstimateReport JSON -> SVG
 *   conservation  observables CSV -> SVG
 *
 * Renders from files only; never recomputes physics.  Output is
 * deterministic for fixed input.
 */

import { writeFileSync } from "fs";
import { renderConservation, renderGrowth, renderScaling } from "./charts.js";
import { ParseError, loadCsv, loadEstimateReport, loadGrowthReport } from "./data.js";

const KINDS = ["growth", "scaling", "conservation"];

function usage(): never {
  process.stderr.write(
    `usage: phnls-plot <${KINDS.join("|")}> --in PATH --out PATH [--series PATH]\n`,
  );
  process.exit(2);
}

export function run(argv: string[]): number {
  if (argv.length < 1 || !KINDS.includes(argv[0])) usage();
  const kind = argv[0];
  let input = "";
  let output = "";
  let seriesPath = "";
  for (let i = 1; i < argv.length; i++) {
    if (argv[i] === "--in") input = argv[++i] ?? "";
    else if (argv[i] === "--out") output = argv[++i] ?? "";
    else if (argv[i] === "--series") seriesPath = argv[++i] ?? "";
    else usage();
  }
  if (!input || !output) usage();
  try {
    let svg: string;
    if (kind === "growth") {
      const report = loadGrowthReport(input);
      const series = loadCsv(seriesPath || input.replace(/\.json$/, ".csv"));
      svg = renderGrowth(report, series);
    } else if (kind === "scaling") {
      svg = renderScaling(loadEstimateReport(input));
    } else {
      svg = renderConservation(loadCsv(input));
    }
    writeFileSync(output, svg);
    process.stdout.write(output + "\n");
    return 0;
  } catch (err) {
    if (err instanceof ParseError || err instanceof SyntaxError) {
      process.stderr.write(`parse error: ${(err as Error).message}\n`);
      return 1;
    }
    throw err;
  }
}

const isMain = process.argv[1] && process.argv[1].endsWith("plot.js");
if (isMain) {
  process.exit(run(process.argv.slice(2)));
}
