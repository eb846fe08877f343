// Analyst dashboard view model. Strictly a reshaping of server aggregates:
// segment positions become percentages of the session span and matrix
// seconds become pie fractions of their row, but no metric is recomputed
// from raw events client-side.

import { heatmapGrid, workloadColor } from "./heatmap.js";
import type { HeatmapGrid } from "./heatmap.js";
import type {
  ConfidenceMatrixDto,
  SegmentRow,
  SummaryMatrixDto,
  TimelineReport
} from "./types.js";

export type TimelineBar = {
  label: string;
  leftPct: number;
  widthPct: number;
  color?: string;
};

export type TimelineRow = { title: string; bars: TimelineBar[] };

export type SummaryCell = {
  step: string;
  category: string;
  seconds: number;
  fraction: number; // of the step's total, for the pie wedge
  tooltip: string; // includes the server's association coefficient
};

export type DashboardViewModel = {
  sessionId: string;
  durationS: number;
  heatmap: HeatmapGrid;
  timeline: TimelineRow[];
  workloadShare: { category: string; share: number; color: string }[];
  promptCounts: Record<string, number>;
  summaryCells: SummaryCell[];
  errorCount: number;
};

function bars(
  segments: SegmentRow[],
  t0: number,
  spanNs: number,
  colorOf?: (label: string) => string
): TimelineBar[] {
  if (spanNs <= 0) return [];
  return segments.map((seg) => ({
    label: seg.label,
    leftPct: ((seg.t_start_ns - t0) / spanNs) * 100,
    widthPct: ((seg.t_end_ns - seg.t_start_ns) / spanNs) * 100,
    color: colorOf ? colorOf(seg.label) : undefined
  }));
}

export function buildDashboard(
  sessionId: string,
  timeline: TimelineReport,
  confidence: ConfidenceMatrixDto,
  summary: SummaryMatrixDto
): DashboardViewModel {
  const all = [
    ...timeline.steps,
    ...timeline.workload,
    ...timeline.phases,
    ...timeline.procedures
  ];
  const t0 = all.length ? Math.min(...all.map((s) => s.t_start_ns)) : 0;
  const t1 = all.length ? Math.max(...all.map((s) => s.t_end_ns)) : 0;
  const span = t1 - t0;

  const rows: TimelineRow[] = [
    { title: "steps", bars: bars(timeline.steps, t0, span) },
    {
      title: "workload",
      bars: bars(timeline.workload, t0, span, workloadColor)
    },
    { title: "phases", bars: bars(timeline.phases, t0, span) }
  ];
  if (timeline.procedures.length) {
    rows.push({ title: "procedures", bars: bars(timeline.procedures, t0, span) });
  }

  const summaryCells: SummaryCell[] = [];
  summary.steps.forEach((step, i) => {
    const row = summary.matrix[i] ?? [];
    const total = row.reduce((a, b) => a + b, 0);
    summary.categories.forEach((category, j) => {
      const seconds = row[j] ?? 0;
      const phi = summary.phi[step]?.[category];
      summaryCells.push({
        step,
        category,
        seconds,
        fraction: total > 0 ? seconds / total : 0,
        tooltip:
          phi === undefined
            ? `${step} x ${category}: ${seconds.toFixed(1)}s`
            : `${step} x ${category}: ${seconds.toFixed(1)}s, phi=${phi.toFixed(3)}`
      });
    });
  });

  return {
    sessionId,
    durationS: timeline.duration_s,
    heatmap: heatmapGrid(confidence),
    timeline: rows,
    workloadShare: Object.entries(timeline.distribution).map(
      ([category, share]) => ({
        category,
        share,
        color: workloadColor(category)
      })
    ),
    promptCounts: timeline.prompt_counts,
    summaryCells,
    errorCount: timeline.errors.length
  };
}
