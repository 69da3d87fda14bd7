/**
 * Parsers for the simulator's published file formats, with field-naming
 * errors on schema mismatches.  These are the only coupling points with
 * the Python package: the growth/estimate report JSON and the CSV
 * column files it writes.
 */

import { readFileSync } from "fs";

export class ParseError extends Error {}

export interface GrowthReport {
  k: number;
  sign: number;
  seed: number;
  horizon: number;
  alpha: number;
  bound: number;
  h1_ratio: number;
  verdict: string;
  version: string;
}

export interface EstimateFit {
  slope: number;
  intercept: number;
  r2: number;
  expected: number;
  tolerance: number;
}

export interface EstimateReport {
  experiment: string;
  cells: Array<Record<string, unknown>>;
  fit: EstimateFit | null;
  stability: Record<string, number> | null;
  verdict: string;
  version: string;
}

function requireNumber(obj: Record<string, unknown>, field: string, where: string): number {
  const v = obj[field];
  if (typeof v !== "number" || !isFinite(v)) {
    throw new ParseError(`${where}: missing or non-numeric field "${field}"`);
  }
  return v;
}

function requireString(obj: Record<string, unknown>, field: string, where: string): string {
  const v = obj[field];
  if (typeof v !== "string") {
    throw new ParseError(`${where}: missing or non-string field "${field}"`);
  }
  return v;
}

export function loadGrowthReport(path: string): GrowthReport {
  const raw = JSON.parse(readFileSync(path, "utf-8")) as Record<string, unknown>;
  return {
    k: requireNumber(raw, "k", path),
    sign: requireNumber(raw, "sign", path),
    seed: requireNumber(raw, "seed", path),
    horizon: requireNumber(raw, "horizon", path),
    alpha: requireNumber(raw, "alpha", path),
    bound: requireNumber(raw, "bound", path),
    h1_ratio: requireNumber(raw, "h1_ratio", path),
    verdict: requireString(raw, "verdict", path),
    version: requireString(raw, "version", path),
  };
}

export function loadEstimateReport(path: string): EstimateReport {
  const raw = JSON.parse(readFileSync(path, "utf-8")) as Record<string, unknown>;
  const experiment = requireString(raw, "experiment", path);
  const cells = raw["cells"];
  if (!Array.isArray(cells) || cells.length === 0) {
    throw new ParseError(`${path}: field "cells" must be a non-empty array`);
  }
  let fit: EstimateFit | null = null;
  if (raw["fit"] !== null && raw["fit"] !== undefined) {
    const f = raw["fit"] as Record<string, unknown>;
    fit = {
      slope: requireNumber(f, "slope", `${path}#fit`),
      intercept: requireNumber(f, "intercept", `${path}#fit`),
      r2: requireNumber(f, "r2", `${path}#fit`),
      expected: requireNumber(f, "expected", `${path}#fit`),
      tolerance: requireNumber(f, "tolerance", `${path}#fit`),
    };
  }
  return {
    experiment,
    cells: cells as Array<Record<string, unknown>>,
    fit,
    stability: (raw["stability"] as Record<string, number>) ?? null,
    verdict: requireString(raw, "verdict", path),
    version: requireString(raw, "version", path),
  };
}

export type Columns = Record<string, number[]>;

export function loadCsv(path: string): Columns {
  const text = readFileSync(path, "utf-8").trim();
  const lines = text.split(/\r?\n/);
  if (lines.length < 2) throw new ParseError(`${path}: CSV has no data rows`);
  const names = lines[0].split(",");
  const cols: Columns = {};
  for (const n of names) cols[n] = [];
  for (let i = 1; i < lines.length; i++) {
    const parts = lines[i].split(",");
    if (parts.length !== names.length) {
      throw new ParseError(`${path}: row ${i} has ${parts.length} fields, expected ${names.length}`);
    }
    for (let c = 0; c < names.length; c++) {
      const v = Number(parts[c]);
      if (!isFinite(v)) throw new ParseError(`${path}: non-numeric value in column "${names[c]}"`);
      cols[names[c]].push(v);
    }
  }
  return cols;
}

export function requireColumn(cols: Columns, name: string, where: string): number[] {
  const v = cols[name];
  if (!v) throw new ParseError(`${where}: missing CSV column "${name}"`);
  return v;
}
