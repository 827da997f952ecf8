/**
 * Loaders for fracwave run directories: ledger.csv + manifest.json + report.json.
 * All reads are strictly read-only; any mismatch between the CSV and its
 * manifest surfaces as a MissingColumnsError naming the absent columns.
 */

import { readFileSync, existsSync } from "fs";
import { join } from "path";

export class MissingColumnsError extends Error {
  readonly missing: string[];
  constructor(missing: string[], where: string) {
    super(`missing columns in ${where}: [${missing.join(", ")}]`);
    this.name = "MissingColumnsError";
    this.missing = missing;
  }
}

export class RunDirectoryError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "RunDirectoryError";
  }
}

export interface ManifestColumn {
  name: string;
  description: string;
}

export interface Manifest {
  columns: ManifestColumn[];
  meta: Record<string, unknown>;
}

export interface Ledger {
  columns: string[];
  descriptions: Map<string, string>;
  rows: number[][];
}

export interface Criterion {
  name: string;
  passed: boolean;
  value: number;
  tolerance: string;
  detail: string;
}

export interface Report {
  kind: string;
  passed: boolean;
  criteria: Criterion[];
  fitted: Record<string, unknown>;
  ledgers: string[];
  config_hash: string;
}

export function loadManifest(runDir: string): Manifest {
  const path = join(runDir, "manifest.json");
  if (!existsSync(path)) {
    throw new RunDirectoryError(`no manifest.json in ${runDir}`);
  }
  return JSON.parse(readFileSync(path, "utf-8")) as Manifest;
}

export function loadReport(runDir: string): Report {
  const path = join(runDir, "report.json");
  if (!existsSync(path)) {
    throw new RunDirectoryError(`no report.json in ${runDir}`);
  }
  return JSON.parse(readFileSync(path, "utf-8")) as Report;
}

/** Parse a ledger CSV and validate it against the manifest column set. */
export function loadLedger(csvPath: string, manifest: Manifest): Ledger {
  if (!existsSync(csvPath)) {
    throw new RunDirectoryError(`no ledger at ${csvPath}`);
  }
  const text = readFileSync(csvPath, "utf-8");
  const lines = text.split("\n").filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new MissingColumnsError(
      manifest.columns.map((c) => c.name),
      csvPath,
    );
  }
  const header = lines[0].split(",");
  const expected = manifest.columns.map((c) => c.name);
  const missing = expected.filter((name) => !header.includes(name));
  if (missing.length > 0) {
    throw new MissingColumnsError(missing, csvPath);
  }
  const rows: number[][] = [];
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i].split(",");
    if (cells.length !== header.length) {
      // a truncated row loses its trailing columns
      const absent = header.slice(cells.length);
      throw new MissingColumnsError(absent, `${csvPath} (row ${i})`);
    }
    const row = cells.map(Number);
    if (row.some((v) => Number.isNaN(v))) {
      throw new RunDirectoryError(`non-numeric cell in ${csvPath} row ${i}`);
    }
    rows.push(row);
  }
  const descriptions = new Map<string, string>();
  for (const c of manifest.columns) descriptions.set(c.name, c.description);
  return { columns: header, descriptions, rows };
}

export function column(ledger: Ledger, name: string): number[] {
  const idx = ledger.columns.indexOf(name);
  if (idx < 0) {
    throw new MissingColumnsError([name], "ledger");
  }
  return ledger.rows.map((r) => r[idx]);
}

export function numbers(report: Report, key: string): number[] {
  const value = report.fitted[key];
  if (!Array.isArray(value)) {
    throw new RunDirectoryError(`report fitted field ${key} is not an array`);
  }
  return value as number[];
}
