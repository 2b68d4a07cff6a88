/**
 * CSV parsing for the two artifact schemas consumed by the figures:
 *
 *   scaling.csv   d,regime,repeat,T,roots,mse_mean,log_z
 *   sequence.csv  observations,log_ml,pred_score,mean_0..,var_0..
 *
 * Column problems surface as CsvError with the offending column named.
 */

import Papa from "papaparse";

export class CsvError extends Error {}

export interface ScalingRow {
  d: number;
  regime: string;
  T: number;
  roots: number;
  mse_mean: number;
  log_z: number;
}

export interface SequenceRow {
  observations: number;
  mean: number[];
  sd: number[];
}

interface Table {
  fields: string[];
  rows: Record<string, string>[];
}

function parseTable(text: string): Table {
  const parsed = Papa.parse<Record<string, string>>(text, {
    header: true,
    skipEmptyLines: "greedy",
  });
  const fields = parsed.meta.fields ?? [];
  if (fields.length === 0) throw new CsvError("empty CSV: no header row");
  if (parsed.data.length === 0) throw new CsvError("empty CSV: no data rows");
  return { fields, rows: parsed.data };
}

function requireColumns(fields: string[], needed: string[]): void {
  for (const name of needed) {
    if (!fields.includes(name)) throw new CsvError(`missing column: ${name}`);
  }
}

function num(row: Record<string, string>, field: string): number {
  const raw = row[field];
  if (raw === undefined || raw === "" || Number.isNaN(Number(raw))) {
    throw new CsvError(`non-numeric value in column ${field}: ${JSON.stringify(raw)}`);
  }
  return Number(raw);
}

export function parseScalingCsv(text: string): ScalingRow[] {
  const { fields, rows } = parseTable(text);
  requireColumns(fields, ["d", "regime", "T", "roots", "mse_mean", "log_z"]);
  return rows.map((row) => ({
    d: num(row, "d"),
    regime: row.regime ?? "",
    T: num(row, "T"),
    roots: num(row, "roots"),
    mse_mean: num(row, "mse_mean"),
    log_z: num(row, "log_z"),
  }));
}

export function parseSequenceCsv(text: string): SequenceRow[] {
  const { fields, rows } = parseTable(text);
  requireColumns(fields, ["observations"]);
  const coords = fields
    .map((f) => /^mean_(\d+)$/.exec(f))
    .filter((m): m is RegExpExecArray => m !== null)
    .map((m) => Number(m[1]))
    .sort((a, b) => a - b);
  if (coords.length === 0) throw new CsvError("missing column: mean_0");
  requireColumns(fields, coords.map((j) => `var_${j}`));
  return rows.map((row) => ({
    observations: num(row, "observations"),
    mean: coords.map((j) => num(row, `mean_${j}`)),
    sd: coords.map((j) => Math.sqrt(num(row, `var_${j}`))),
  }));
}
