/**
 * CLI: render --spec <figure.json> [--spec <more.json> ...]
 *
 * A figure spec is a JSON file:
 *   { "kind": "validation" | "convergence" | "sweep" | "fairness" | "timing",
 *     "input": "path.csv" | ["a.csv", "b.csv"],
 *     "output": "figure.svg",
 *     "title": "...", "xLabel": "...", "yLabel": "..." }
 *
 * Inputs must follow the documented benchmark CSV schemas. Re-rendering
 * overwrites outputs idempotently and byte-identically.
 */

import { readFileSync, writeFileSync } from "fs";
import { dirname, resolve } from "path";
import { loadCsv, Row, SchemaError } from "./csv.js";
import { FigureSpec, renderFigure } from "./figures.js";

export function renderSpecFile(specPath: string): string {
  const spec = JSON.parse(readFileSync(specPath, "utf8")) as FigureSpec;
  if (!spec.kind || !spec.input || !spec.output) {
    throw new SchemaError("figure spec needs kind, input and output");
  }
  const base = dirname(resolve(specPath));
  const inputs = Array.isArray(spec.input) ? spec.input : [spec.input];
  let columns: string[] | null = null;
  const rows: Row[] = [];
  for (const input of inputs) {
    const parsed = loadCsv(resolve(base, input));
    if (columns === null) {
      columns = parsed.columns;
    } else if (columns.join(",") !== parsed.columns.join(",")) {
      throw new SchemaError(`input "${input}" has a different column set`);
    }
    rows.push(...parsed.rows);
  }
  const svg = renderFigure(spec, columns ?? [], rows);
  const outPath = resolve(base, spec.output);
  writeFileSync(outPath, svg);
  return outPath;
}

function main(argv: string[]): number {
  const specs: string[] = [];
  for (let i = 0; i < argv.length; i++) {
    if (argv[i] === "--spec") {
      const v = argv[++i];
      if (!v) {
        console.error("error: --spec needs a path");
        return 2;
      }
      specs.push(v);
    }
  }
  if (specs.length === 0) {
    console.error("usage: render --spec <figure.json> [--spec ...]");
    return 2;
  }
  try {
    for (const s of specs) {
      const out = renderSpecFile(s);
      console.log(`wrote ${out}`);
    }
    return 0;
  } catch (err) {
    const name = err instanceof SchemaError ? "schema error" : "error";
    console.error(`${name}: ${(err as Error).message}`);
    return 1;
  }
}

if (process.argv[1] && /render\.(ts|js)$/.test(process.argv[1])) {
  process.exit(main(process.argv.slice(2)));
}
