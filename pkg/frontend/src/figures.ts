/**
 * The five figure kinds, each consuming one of the documented CSV schemas:
 *
 *   validation  <- pmax_dbm, n_elements, approx_sum_rate, mc_sum_rate, mc_stderr
 *   convergence <- benchmark rows with sweep_name == "iteration"
 *   sweep       <- benchmark rows: one line per algorithm over sweep_value
 *   fairness    <- benchmark rows: jfi bars per algorithm (or sweep value)
 *   timing      <- algorithm, n_elements, median_ms, sum_rate_ratio_pct
 */

import { num, requireColumns, Row, SchemaError, uniq } from "./csv.js";
import { color, MARGIN, MARKERS } from "./style.js";
import {
  linearScale,
  logScale,
  padDomain,
  plotArea,
  SvgDoc,
  ticks,
  tickLabel,
  fmt,
} from "./svg.js";

export interface FigureSpec {
  kind: "validation" | "convergence" | "sweep" | "fairness" | "timing";
  input: string | string[];
  output: string;
  title?: string;
  xLabel?: string;
  yLabel?: string;
}

export const BENCH_COLUMNS = [
  "experiment", "algorithm", "seed", "sweep_name", "sweep_value",
  "sum_rate_bps_hz", "jfi", "wall_time_ms",
];

function mean(xs: number[]): number {
  return xs.reduce((a, b) => a + b, 0) / xs.length;
}

function spread(xs: number[]): number {
  if (xs.length < 2) return 0;
  const m = mean(xs);
  return Math.sqrt(xs.reduce((a, b) => a + (b - m) ** 2, 0) / (xs.length - 1));
}

export function renderValidation(columns: string[], rows: Row[],
                                 spec: FigureSpec): string {
  requireColumns(columns, ["pmax_dbm", "n_elements", "approx_sum_rate",
                           "mc_sum_rate", "mc_stderr"]);
  if (rows.length === 0) throw new SchemaError("validation CSV has no rows");
  const doc = new SvgDoc(spec.title ?? "Closed form vs Monte-Carlo");
  const area = plotArea();
  const xs = rows.map((r) => num(r, "pmax_dbm"));
  const ys = rows.flatMap((r) => [num(r, "approx_sum_rate"), num(r, "mc_sum_rate")]);
  const x = linearScale(padDomain(Math.min(...xs), Math.max(...xs)), area.x);
  const y = linearScale(padDomain(0, Math.max(...ys)), area.y);
  doc.axes(x, y, spec.xLabel ?? "transmit power (dBm)",
           spec.yLabel ?? "sum rate (bit/s/Hz)", ticks(x.domain), ticks(y.domain));

  const nValues = uniq(rows.map((r) => r.n_elements));
  const legend: Array<{ name: string; color: string; dashed?: boolean }> = [];
  nValues.forEach((nEl, i) => {
    const sub = rows
      .filter((r) => r.n_elements === nEl)
      .sort((a, b) => num(a, "pmax_dbm") - num(b, "pmax_dbm"));
    const c = color(i);
    doc.polyline(sub.map((r) => [x(num(r, "pmax_dbm")), y(num(r, "approx_sum_rate"))]),
                 c, "approx-line");
    doc.polyline(sub.map((r) => [x(num(r, "pmax_dbm")), y(num(r, "mc_sum_rate"))]),
                 c, "mc-line", true);
    for (const r of sub) {
      const xx = x(num(r, "pmax_dbm"));
      const mc = num(r, "mc_sum_rate");
      const se = num(r, "mc_stderr");
      doc.errorBar(xx, y(mc - 3 * se), y(mc + 3 * se), c);
      doc.marker(xx, y(mc), "circle", c);
    }
    legend.push({ name: `N=${nEl} closed form`, color: c });
    legend.push({ name: `N=${nEl} Monte-Carlo`, color: c, dashed: true });
  });
  doc.legend(legend);
  return doc.finish();
}

function benchRows(columns: string[], rows: Row[]): void {
  requireColumns(columns, BENCH_COLUMNS);
  if (rows.length === 0) throw new SchemaError("benchmark CSV has no rows");
  if (uniq(rows.map((r) => r.algorithm)).length === 0) {
    throw new SchemaError("benchmark CSV names no algorithms");
  }
}

export function renderConvergence(columns: string[], rows: Row[],
                                  spec: FigureSpec): string {
  benchRows(columns, rows);
  const sub = rows.filter((r) => r.sweep_name === "iteration");
  if (sub.length === 0) {
    throw new SchemaError('convergence needs rows with sweep_name "iteration"');
  }
  const doc = new SvgDoc(spec.title ?? "Solver convergence");
  const area = plotArea();
  const xs = sub.map((r) => num(r, "sweep_value"));
  const ys = sub.map((r) => num(r, "sum_rate_bps_hz"));
  const x = linearScale(padDomain(0, Math.max(...xs)), area.x);
  const y = linearScale(padDomain(Math.min(...ys), Math.max(...ys)), area.y);
  doc.axes(x, y, spec.xLabel ?? "iteration",
           spec.yLabel ?? "objective (bit/s/Hz)", ticks(x.domain), ticks(y.domain));
  const seeds = uniq(sub.map((r) => r.seed));
  seeds.forEach((seed, i) => {
    const line = sub
      .filter((r) => r.seed === seed)
      .sort((a, b) => num(a, "sweep_value") - num(b, "sweep_value"));
    doc.polyline(line.map((r) => [x(num(r, "sweep_value")),
                                  y(num(r, "sum_rate_bps_hz"))]),
                 color(i), "trace-line");
  });
  doc.legend(seeds.map((s, i) => ({ name: `seed ${s}`, color: color(i) })));
  return doc.finish();
}

export function renderSweep(columns: string[], rows: Row[],
                            spec: FigureSpec): string {
  benchRows(columns, rows);
  const doc = new SvgDoc(spec.title ?? "Performance sweep");
  const area = plotArea();
  const sweepName = rows[0].sweep_name;
  const xs = rows.map((r) => num(r, "sweep_value"));
  const ys = rows.map((r) => num(r, "sum_rate_bps_hz"));
  const x = linearScale(padDomain(Math.min(...xs), Math.max(...xs)), area.x);
  const y = linearScale(padDomain(0, Math.max(...ys)), area.y);
  doc.axes(x, y, spec.xLabel ?? sweepName,
           spec.yLabel ?? "sum rate (bit/s/Hz)", ticks(x.domain), ticks(y.domain));

  const algos = uniq(rows.map((r) => r.algorithm));
  algos.forEach((algo, i) => {
    const sub = rows.filter((r) => r.algorithm === algo);
    const values = uniq(sub.map((r) => num(r, "sweep_value"))).sort((a, b) => a - b);
    const pts: Array<[number, number]> = [];
    for (const v of values) {
      const cell = sub.filter((r) => num(r, "sweep_value") === v)
        .map((r) => num(r, "sum_rate_bps_hz"));
      const m = mean(cell);
      const s = spread(cell);
      pts.push([x(v), y(m)]);
      if (s > 0) doc.errorBar(x(v), y(m - s), y(m + s), color(i));
    }
    doc.polyline(pts, color(i), "algo-line");
    pts.forEach(([px, py]) => doc.marker(px, py, MARKERS[i % MARKERS.length], color(i)));
  });
  doc.legend(algos.map((a, i) => ({ name: a, color: color(i) })));
  return doc.finish();
}

export function renderFairness(columns: string[], rows: Row[],
                               spec: FigureSpec): string {
  benchRows(columns, rows);
  const doc = new SvgDoc(spec.title ?? "Fairness comparison");
  const area = plotArea();
  // one bar per (algorithm, sweep_value) group, mean fairness over seeds
  const groups = uniq(rows.map((r) => `${r.algorithm}@${r.sweep_value}`));
  const labels = groups.map((g) => {
    const [algo, v] = g.split("@");
    const sweepName = rows[0].sweep_name;
    return sweepName ? `${algo} (${sweepName}=${v})` : algo;
  });
  const means = groups.map((g) =>
    mean(rows.filter((r) => `${r.algorithm}@${r.sweep_value}` === g)
      .map((r) => num(r, "jfi"))));
  const y = linearScale([0, 1.05], area.y);
  const x0 = area.x[0];
  const width = area.x[1] - area.x[0];
  const slot = width / groups.length;
  const barW = slot * 0.6;
  doc.axes(linearScale([0, 1], area.x), y, "", spec.yLabel ?? "fairness index",
           [], ticks([0, 1.05], 5));
  groups.forEach((_, i) => {
    const cx = x0 + slot * (i + 0.5);
    doc.bar(cx - barW / 2, y(means[i]), barW, y(0) - y(means[i]), color(i),
            "jfi-bar");
    doc.label(cx, y(means[i]) - 6, means[i].toFixed(3), "middle");
    doc.label(cx, area.y[0] + 20, labels[i], "middle");
  });
  return doc.finish();
}

export function renderTiming(columns: string[], rows: Row[],
                             spec: FigureSpec): string {
  requireColumns(columns, ["algorithm", "n_elements", "median_ms",
                           "sum_rate_ratio_pct"]);
  if (rows.length === 0) throw new SchemaError("timing CSV has no rows");
  const doc = new SvgDoc(spec.title ?? "Median runtime (log scale)");
  const area = plotArea();
  const times = rows.map((r) => num(r, "median_ms"));
  const lo = Math.min(...times);
  const hi = Math.max(...times);
  const x = logScale([lo / 2, hi * 2], area.x);
  const slot = (area.y[0] - area.y[1]) / rows.length;
  const barH = Math.min(slot * 0.6, 40);
  // log-decade ticks
  const decades: number[] = [];
  for (let d = Math.floor(Math.log10(lo / 2)); d <= Math.ceil(Math.log10(hi * 2)); d++) {
    decades.push(Math.pow(10, d));
  }
  for (const t of decades) {
    doc.raw(`<line x1="${fmt(x(t))}" y1="${area.y[1]}" x2="${fmt(x(t))}" y2="${area.y[0]}" stroke="#dddddd" stroke-width="1"/>`);
    doc.label(x(t), area.y[0] + 16, tickLabel(t), "middle");
  }
  rows.forEach((r, i) => {
    const cy = area.y[1] + slot * (i + 0.5);
    const w = x(num(r, "median_ms")) - area.x[0];
    doc.bar(area.x[0], cy - barH / 2, Math.max(w, 1), barH, color(i), "time-bar");
    doc.label(area.x[0] + Math.max(w, 1) + 6, cy + 4,
              `${r.algorithm} N=${r.n_elements}: ${num(r, "median_ms").toFixed(2)} ms` +
              ` (${num(r, "sum_rate_ratio_pct").toFixed(1)}%)`);
  });
  doc.label((area.x[0] + area.x[1]) / 2, area.y[0] + 36,
            spec.xLabel ?? "median wall time (ms)", "middle");
  return doc.finish();
}

export function renderFigure(spec: FigureSpec, columns: string[],
                             rows: Row[]): string {
  switch (spec.kind) {
    case "validation":
      return renderValidation(columns, rows, spec);
    case "convergence":
      return renderConvergence(columns, rows, spec);
    case "sweep":
      return renderSweep(columns, rows, spec);
    case "fairness":
      return renderFairness(columns, rows, spec);
    case "timing":
      return renderTiming(columns, rows, spec);
    default:
      throw new SchemaError(`unknown figure kind "${(spec as FigureSpec).kind}"`);
  }
}
