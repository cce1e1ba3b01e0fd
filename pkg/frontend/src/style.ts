/**
 * The fixed figure style. Every visual constant lives here so rendered
 * SVGs are diffable across runs and machines.
 */

export const WIDTH = 720;
export const HEIGHT = 480;
export const MARGIN = { top: 48, right: 24, bottom: 56, left: 72 };

export const FONT_FAMILY = "Helvetica, Arial, sans-serif";
export const FONT_SIZE_AXIS = 12;
export const FONT_SIZE_LABEL = 14;
export const FONT_SIZE_TITLE = 16;

export const BACKGROUND = "#ffffff";
export const AXIS_COLOR = "#333333";
export const GRID_COLOR = "#dddddd";

/** Series palette, assigned in first-appearance order of the series key. */
export const PALETTE = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#8c564b",
  "#17becf",
  "#7f7f7f",
];

export const MARKERS = ["circle", "square", "diamond", "triangle"] as const;

export function color(i: number): string {
  return PALETTE[i % PALETTE.length];
}
