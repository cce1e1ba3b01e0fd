/**
 * Deterministic SVG assembly: fixed-precision coordinates, no timestamps,
 * no randomness. Figures are built from these primitives only.
 */

import {
  AXIS_COLOR,
  BACKGROUND,
  FONT_FAMILY,
  FONT_SIZE_AXIS,
  FONT_SIZE_LABEL,
  FONT_SIZE_TITLE,
  GRID_COLOR,
  HEIGHT,
  MARGIN,
  WIDTH,
} from "./style.js";

const FP = 2; // decimal places for all coordinates

export function fmt(x: number): string {
  // normalize negative zero so output is byte-stable
  const v = Number(x.toFixed(FP));
  return (Object.is(v, -0) ? 0 : v).toFixed(FP);
}

export interface Scale {
  (x: number): number;
  domain: [number, number];
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 === 0 ? 1 : d1 - d0;
  const fn = ((x: number) => r0 + ((x - d0) / span) * (r1 - r0)) as Scale;
  fn.domain = domain;
  return fn;
}

export function logScale(domain: [number, number], range: [number, number]): Scale {
  const lo = Math.log10(Math.max(domain[0], 1e-12));
  const hi = Math.log10(Math.max(domain[1], 1e-12));
  const inner = linearScale([lo, hi], range);
  const fn = ((x: number) => inner(Math.log10(Math.max(x, 1e-12)))) as Scale;
  fn.domain = domain;
  return fn;
}

/** Round-ish tick positions covering the domain. */
export function ticks(domain: [number, number], count = 6): number[] {
  const [lo, hi] = domain;
  if (lo === hi) return [lo];
  const span = hi - lo;
  const step = Math.pow(10, Math.floor(Math.log10(span / count)));
  const err = (span / count) / step;
  const mult = err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1;
  const s = step * mult;
  const start = Math.ceil(lo / s) * s;
  const out: number[] = [];
  for (let v = start; v <= hi + 1e-9 * span; v += s) {
    out.push(Number(v.toFixed(10)));
  }
  return out;
}

export function tickLabel(v: number): string {
  if (v !== 0 && (Math.abs(v) >= 1e4 || Math.abs(v) < 1e-2)) {
    return v.toExponential(1);
  }
  return Number(v.toFixed(4)).toString();
}

export class SvgDoc {
  private parts: string[] = [];

  constructor(title: string) {
    this.parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}">`,
      `<rect x="0" y="0" width="${WIDTH}" height="${HEIGHT}" fill="${BACKGROUND}"/>`,
      `<text x="${WIDTH / 2}" y="${MARGIN.top - 20}" text-anchor="middle" font-family="${FONT_FAMILY}" font-size="${FONT_SIZE_TITLE}" fill="${AXIS_COLOR}">${escapeXml(title)}</text>`,
    );
  }

  raw(s: string): void {
    this.parts.push(s);
  }

  axes(x: Scale, y: Scale, xLabel: string, yLabel: string,
       xTicks: number[], yTicks: number[]): void {
    const x0 = MARGIN.left;
    const x1 = WIDTH - MARGIN.right;
    const y0 = HEIGHT - MARGIN.bottom;
    const y1 = MARGIN.top;
    for (const t of yTicks) {
      const yy = fmt(y(t));
      this.parts.push(
        `<line x1="${x0}" y1="${yy}" x2="${x1}" y2="${yy}" stroke="${GRID_COLOR}" stroke-width="1"/>`,
        `<text x="${x0 - 8}" y="${fmt(y(t) + 4)}" text-anchor="end" font-family="${FONT_FAMILY}" font-size="${FONT_SIZE_AXIS}" fill="${AXIS_COLOR}">${tickLabel(t)}</text>`,
      );
    }
    for (const t of xTicks) {
      const xx = fmt(x(t));
      this.parts.push(
        `<line x1="${xx}" y1="${y0}" x2="${xx}" y2="${y0 + 5}" stroke="${AXIS_COLOR}" stroke-width="1"/>`,
        `<text x="${xx}" y="${y0 + 20}" text-anchor="middle" font-family="${FONT_FAMILY}" font-size="${FONT_SIZE_AXIS}" fill="${AXIS_COLOR}">${tickLabel(t)}</text>`,
      );
    }
    this.parts.push(
      `<line x1="${x0}" y1="${y0}" x2="${x1}" y2="${y0}" stroke="${AXIS_COLOR}" stroke-width="1.5"/>`,
      `<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${y1}" stroke="${AXIS_COLOR}" stroke-width="1.5"/>`,
      `<text x="${(x0 + x1) / 2}" y="${HEIGHT - 12}" text-anchor="middle" font-family="${FONT_FAMILY}" font-size="${FONT_SIZE_LABEL}" fill="${AXIS_COLOR}">${escapeXml(xLabel)}</text>`,
      `<text x="18" y="${(y0 + y1) / 2}" text-anchor="middle" font-family="${FONT_FAMILY}" font-size="${FONT_SIZE_LABEL}" fill="${AXIS_COLOR}" transform="rotate(-90 18 ${(y0 + y1) / 2})">${escapeXml(yLabel)}</text>`,
    );
  }

  polyline(points: Array<[number, number]>, stroke: string, cls: string,
           dashed = false): void {
    const pts = points.map(([a, b]) => `${fmt(a)},${fmt(b)}`).join(" ");
    const dash = dashed ? ` stroke-dasharray="6,4"` : "";
    this.parts.push(
      `<polyline class="${cls}" points="${pts}" fill="none" stroke="${stroke}" stroke-width="2"${dash}/>`,
    );
  }

  marker(x: number, y: number, kind: string, color: string): void {
    const r = 3.5;
    if (kind === "square") {
      this.parts.push(
        `<rect x="${fmt(x - r)}" y="${fmt(y - r)}" width="${fmt(2 * r)}" height="${fmt(2 * r)}" fill="${color}"/>`,
      );
    } else if (kind === "diamond") {
      this.parts.push(
        `<path d="M ${fmt(x)} ${fmt(y - r - 1)} L ${fmt(x + r + 1)} ${fmt(y)} L ${fmt(x)} ${fmt(y + r + 1)} L ${fmt(x - r - 1)} ${fmt(y)} Z" fill="${color}"/>`,
      );
    } else if (kind === "triangle") {
      this.parts.push(
        `<path d="M ${fmt(x)} ${fmt(y - r - 1)} L ${fmt(x + r + 1)} ${fmt(y + r)} L ${fmt(x - r - 1)} ${fmt(y + r)} Z" fill="${color}"/>`,
      );
    } else {
      this.parts.push(`<circle cx="${fmt(x)}" cy="${fmt(y)}" r="${r}" fill="${color}"/>`);
    }
  }

  errorBar(x: number, yLo: number, yHi: number, color: string): void {
    this.parts.push(
      `<line x1="${fmt(x)}" y1="${fmt(yLo)}" x2="${fmt(x)}" y2="${fmt(yHi)}" stroke="${color}" stroke-width="1"/>`,
      `<line x1="${fmt(x - 3)}" y1="${fmt(yLo)}" x2="${fmt(x + 3)}" y2="${fmt(yLo)}" stroke="${color}" stroke-width="1"/>`,
      `<line x1="${fmt(x - 3)}" y1="${fmt(yHi)}" x2="${fmt(x + 3)}" y2="${fmt(yHi)}" stroke="${color}" stroke-width="1"/>`,
    );
  }

  bar(x: number, y: number, w: number, h: number, color: string, cls: string): void {
    this.parts.push(
      `<rect class="${cls}" x="${fmt(x)}" y="${fmt(y)}" width="${fmt(w)}" height="${fmt(h)}" fill="${color}"/>`,
    );
  }

  label(x: number, y: number, text: string, anchor = "start"): void {
    this.parts.push(
      `<text x="${fmt(x)}" y="${fmt(y)}" text-anchor="${anchor}" font-family="${FONT_FAMILY}" font-size="${FONT_SIZE_AXIS}" fill="${AXIS_COLOR}">${escapeXml(text)}</text>`,
    );
  }

  legend(entries: Array<{ name: string; color: string; dashed?: boolean }>): void {
    const x0 = MARGIN.left + 10;
    let y = MARGIN.top + 8;
    for (const e of entries) {
      const dash = e.dashed ? ` stroke-dasharray="6,4"` : "";
      this.parts.push(
        `<line x1="${x0}" y1="${fmt(y)}" x2="${x0 + 26}" y2="${fmt(y)}" stroke="${e.color}" stroke-width="2"${dash}/>`,
        `<text x="${x0 + 32}" y="${fmt(y + 4)}" font-family="${FONT_FAMILY}" font-size="${FONT_SIZE_AXIS}" fill="${AXIS_COLOR}">${escapeXml(e.name)}</text>`,
      );
      y += 18;
    }
  }

  finish(): string {
    return this.parts.join("\n") + "\n</svg>\n";
  }
}

export function escapeXml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function plotArea(): { x: [number, number]; y: [number, number] } {
  return {
    x: [MARGIN.left, WIDTH - MARGIN.right],
    y: [HEIGHT - MARGIN.bottom, MARGIN.top],
  };
}

export function padDomain(lo: number, hi: number, frac = 0.06): [number, number] {
  if (lo === hi) {
    const pad = lo === 0 ? 1 : Math.abs(lo) * frac;
    return [lo - pad, hi + pad];
  }
  const pad = (hi - lo) * frac;
  return [lo - pad, hi + pad];
}
