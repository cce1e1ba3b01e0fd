/**
 * Minimal CSV handling for the benchmark schemas. Values never contain
 * commas or quotes (the producer separates list-like fields with "|"),
 * so splitting on commas is exact.
 */

import { readFileSync } from "fs";

export type Row = Record<string, string>;

export class SchemaError extends Error {}

export function parseCsv(text: string): { columns: string[]; rows: Row[] } {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new SchemaError("empty CSV input");
  }
  const columns = lines[0].split(",");
  const rows = lines.slice(1).map((line, i) => {
    const parts = line.split(",");
    if (parts.length !== columns.length) {
      throw new SchemaError(
        `row ${i + 1} has ${parts.length} fields, expected ${columns.length}`,
      );
    }
    const row: Row = {};
    columns.forEach((c, j) => (row[c] = parts[j]));
    return row;
  });
  return { columns, rows };
}

export function loadCsv(path: string): { columns: string[]; rows: Row[] } {
  return parseCsv(readFileSync(path, "utf8"));
}

/** Throw a SchemaError naming the first missing column. */
export function requireColumns(columns: string[], needed: string[]): void {
  for (const col of needed) {
    if (!columns.includes(col)) {
      throw new SchemaError(`missing required column "${col}"`);
    }
  }
}

export function num(row: Row, col: string): number {
  const v = Number(row[col]);
  if (!Number.isFinite(v)) {
    throw new SchemaError(`column "${col}" holds non-numeric value "${row[col]}"`);
  }
  return v;
}

/** Stable unique values in first-appearance order. */
export function uniq<T>(values: T[]): T[] {
  const out: T[] = [];
  for (const v of values) {
    if (!out.includes(v)) out.push(v);
  }
  return out;
}
