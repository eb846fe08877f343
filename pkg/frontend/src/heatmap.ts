// Color mapping for the dashboard. Every function here is pure: cell colors
// are a fixed function of the server-provided values, nothing else.

import type { ConfidenceMatrixDto } from "./types.js";

const EMPTY_CELL = "transparent";

function channel(v: number): string {
  return Math.round(v).toString(16).padStart(2, "0");
}

/** White at 0 to a deep blue at 1; null (no output in the bin) stays blank. */
export function confidenceColor(value: number | null): string {
  if (value === null) return EMPTY_CELL;
  const v = Math.min(1, Math.max(0, value));
  const r = 255 - v * (255 - 21);
  const g = 255 - v * (255 - 78);
  const b = 255 - v * (255 - 158);
  return `#${channel(r)}${channel(g)}${channel(b)}`;
}

// Workload shading: light / medium / dark for the three states.
const WORKLOAD_SHADE: Record<string, string> = {
  underload: "#fecaca",
  optimal: "#f87171",
  overload: "#991b1b"
};

export function workloadColor(category: string): string {
  return WORKLOAD_SHADE[category] ?? "#e5e7eb";
}

export type HeatmapCell = { value: number | null; color: string };
export type HeatmapRow = { stepId: string; cells: HeatmapCell[] };

export type HeatmapGrid = {
  rows: HeatmapRow[];
  binWidthS: number;
  nBins: number;
};

/** Confidence matrix to one colored cell per (step, time bin). */
export function heatmapGrid(matrix: ConfidenceMatrixDto): HeatmapGrid {
  const rows = matrix.step_ids.map((stepId, i) => ({
    stepId,
    cells: (matrix.cells[i] ?? []).map((value) => ({
      value,
      color: confidenceColor(value)
    }))
  }));
  return { rows, binWidthS: matrix.bin_width_s, nBins: matrix.n_bins };
}
