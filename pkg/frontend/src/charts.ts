/**
 * The three figure kinds: growth curves against the analytic bound
 * slope, estimate scaling fits with the expected-slope reference, and
 * conservation drift dashboards.  All render from files only.
 */

import {
  Columns,
  EstimateReport,
  GrowthReport,
  ParseError,
  requireColumn,
} from "./data.js";
import { HEIGHT, MARGIN, Svg, WIDTH, logFrame, scale } from "./svg.js";

const DATA_COLOR = "#1f6fb2";
const FIT_COLOR = "#d1495b";
const BOUND_COLOR = "#2e933c";

function log10(x: number): number {
  return Math.log(Math.max(x, 1e-300)) / Math.LN10;
}

/** Growth curve: ||u||_{H^{2k}} against <t> in log-log, fitted exponent
 * line, and the analytic bound slope (2/3)(2k-1) drawn for reference. */
export function renderGrowth(report: GrowthReport, series: Columns): string {
  const t = requireColumn(series, "t", "growth series");
  const tracked = requireColumn(series, "tracked", "growth series");
  if (t.length !== tracked.length || t.length < 2) {
    throw new ParseError("growth series needs matching t/tracked columns");
  }
  const lx = t.map((v) => log10(Math.sqrt(1 + v * v)));
  const ly = tracked.map(log10);
  // skip the t=0 point cluster for axis limits (log <t> starts at 0)
  const xlo = Math.min(...lx);
  const xhi = Math.max(...lx) + 0.05;
  const spread = Math.max(...ly) - Math.min(...ly);
  const pad = Math.max(0.1, 0.2 * spread);
  const ylo = Math.min(...ly) - pad;
  const yhi = Math.max(...ly) + pad + Math.max(0, report.bound * (xhi - xlo) * 0.35);
  const svg = new Svg();
  const { px, py } = logFrame(
    svg,
    xlo,
    xhi,
    ylo,
    yhi,
    "<t>",
    `H^${2 * report.k} norm`,
    `Sobolev growth (k=${report.k}, sign=${report.sign >= 0 ? "+1" : "-1"})`,
  );
  svg.polyline(lx.map((v, i) => [px(v), py(ly[i])] as [number, number]), DATA_COLOR, 1.6);
  // fitted line through the second-half anchor point
  const half = Math.floor(t.length / 2);
  const x0 = lx[half];
  const y0 = ly[half];
  const fitY = (x: number) => y0 + report.alpha * (x - x0);
  svg.polyline(
    [
      [px(x0), py(fitY(x0))],
      [px(xhi), py(fitY(xhi))],
    ],
    FIT_COLOR,
    1.4,
  );
  // analytic bound slope reference through the same anchor
  const boundY = (x: number) => y0 + report.bound * (x - x0);
  svg.polyline(
    [
      [px(x0), py(boundY(x0))],
      [px(xhi), py(boundY(xhi))],
    ],
    BOUND_COLOR,
    1.4,
  );
  svg.text(WIDTH - MARGIN.right - 8, MARGIN.top + 16, `fitted alpha = ${report.alpha.toFixed(4)}`, {
    anchor: "end",
    fill: FIT_COLOR,
  });
  svg.text(
    WIDTH - MARGIN.right - 8,
    MARGIN.top + 34,
    `bound slope (2/3)(2k-1) = ${report.bound.toFixed(4)}`,
    { anchor: "end", fill: BOUND_COLOR },
  );
  svg.text(WIDTH - MARGIN.right - 8, MARGIN.top + 52, `H1 max/min = ${report.h1_ratio.toFixed(3)}`, {
    anchor: "end",
  });
  return svg.render();
}

/** Scaling plot: per-cell mean/max ratios against the dyadic parameter,
 * least-squares fit, and the expected-slope reference line. */
export function renderScaling(report: EstimateReport): string {
  const key = report.cells[0]["N"] !== undefined ? "N" : "lambda0";
  const xs: number[] = [];
  const means: number[] = [];
  const maxes: number[] = [];
  for (const cell of report.cells) {
    const x = cell[key];
    if (typeof x !== "number") {
      throw new ParseError(`estimate cells lack a numeric "${key}" field`);
    }
    xs.push(x);
    if (key === "lambda0") {
      means.push(Number(cell["log10_mean"]));
      maxes.push(Number(cell["log10_max"]));
    } else {
      means.push(log10(Number(cell["mean"])));
      maxes.push(log10(Number(cell["max"])));
    }
  }
  if (report.fit === null) throw new ParseError("estimate report carries no fit block");
  const lx = xs.map(log10);
  const all = means.concat(maxes);
  const xlo = Math.min(...lx) - 0.1;
  const xhi = Math.max(...lx) + 0.1;
  const pad = Math.max(0.3, 0.15 * (Math.max(...all) - Math.min(...all)));
  const ylo = Math.min(...all) - pad;
  const yhi = Math.max(...all) + pad;
  const svg = new Svg();
  const { px, py } = logFrame(
    svg,
    xlo,
    xhi,
    ylo,
    yhi,
    key,
    "ratio",
    `${report.experiment} scaling (${report.verdict})`,
  );
  for (let i = 0; i < xs.length; i++) {
    svg.circle(px(lx[i]), py(means[i]), 4, DATA_COLOR);
    svg.circle(px(lx[i]), py(maxes[i]), 3, "#888888");
  }
  // fitted line (slopes are in natural-log space; identical in log10)
  const xm = lx.reduce((a, b) => a + b, 0) / lx.length;
  const ym = means.reduce((a, b) => a + b, 0) / means.length;
  const fitY = (x: number) => ym + report.fit!.slope * (x - xm);
  svg.polyline(
    [
      [px(xlo), py(fitY(xlo))],
      [px(xhi), py(fitY(xhi))],
    ],
    FIT_COLOR,
    1.4,
  );
  const refY = (x: number) => ym + report.fit!.expected * (x - xm);
  svg.polyline(
    [
      [px(xlo), py(refY(xlo))],
      [px(xhi), py(refY(xhi))],
    ],
    BOUND_COLOR,
    1.4,
    );
  svg.text(WIDTH - MARGIN.right - 8, MARGIN.top + 16, `fitted slope = ${report.fit.slope.toFixed(3)}`, {
    anchor: "end",
    fill: FIT_COLOR,
  });
  svg.text(
    WIDTH - MARGIN.right - 8,
    MARGIN.top + 34,
    `expected slope = ${report.fit.expected.toFixed(3)}`,
    { anchor: "end", fill: BOUND_COLOR },
  );
  svg.text(WIDTH - MARGIN.right - 8, MARGIN.top + 52, `R^2 = ${report.fit.r2.toFixed(3)}`, {
    anchor: "end",
  });
  return svg.render();
}

/** Conservation dashboard: relative drifts of mass/energy/H1 over time. */
export function renderConservation(series: Columns): string {
  const t = requireColumn(series, "t", "observables");
  const names = ["mass", "energy", "h1"];
  const colors = [DATA_COLOR, FIT_COLOR, BOUND_COLOR];
  const drifts = names.map((n) => {
    const col = requireColumn(series, n, "observables");
    const ref = Math.abs(col[0]) || 1;
    return col.map((v) => Math.abs(v - col[0]) / ref + 1e-18);
  });
  const ly = drifts.map((d) => d.map(log10));
  const flat = ly.flat();
  const svg = new Svg();
  const xscale = scale(t[0], t[t.length - 1] || 1, MARGIN.left, WIDTH - MARGIN.right);
  const ylo = Math.min(...flat) - 0.5;
  const yhi = Math.max(...flat, -1) + 0.5;
  const yscale = scale(ylo, yhi, HEIGHT - MARGIN.bottom, MARGIN.top);
  svg.line(MARGIN.left, HEIGHT - MARGIN.bottom, WIDTH - MARGIN.right, HEIGHT - MARGIN.bottom, "#222222");
  svg.line(MARGIN.left, MARGIN.top, MARGIN.left, HEIGHT - MARGIN.bottom, "#222222");
  for (let e = Math.ceil(ylo); e <= Math.floor(yhi); e += 2) {
    svg.text(MARGIN.left - 9, yscale(e) + 4, `1e${e}`, { anchor: "end", size: 11 });
    svg.line(MARGIN.left - 5, yscale(e), MARGIN.left, yscale(e), "#222222");
  }
  svg.text((MARGIN.left + WIDTH - MARGIN.right) / 2, HEIGHT - 14, "t", { anchor: "middle" });
  svg.text(20, HEIGHT / 2, "relative drift", { anchor: "middle", rotate: true });
  svg.text((MARGIN.left + WIDTH - MARGIN.right) / 2, 22, "conservation drift", {
    anchor: "middle",
    size: 14,
  });
  names.forEach((n, i) => {
    svg.polyline(
      t.map((v, j) => [xscale(v), yscale(ly[i][j])] as [number, number]),
      colors[i],
      1.4,
    );
    svg.text(WIDTH - MARGIN.right - 8, MARGIN.top + 16 + 18 * i, n, {
      anchor: "end",
      fill: colors[i],
    });
  });
  return svg.render();
}
