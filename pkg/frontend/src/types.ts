// Wire types for the session service HTTP API.

export type TaskStep = {
  id: string;
  instruction: string;
  required_objects: string[];
  expected_duration_s?: number;
};

export type TaskDoc = {
  task_id: string;
  name: string;
  objects: { class: string; states: string[] }[];
  steps: TaskStep[];
  edges: { from: string; to: string; goal: { class: string; state: string } }[];
};

export type TaskListing = { task_id: string; name: string; steps: number };

export type ArrowTarget = {
  object_id: number;
  class: string;
  xyz: number[];
  hint?: string;
};

export type GuidancePrompt = {
  tag: "guidance_prompt";
  kind:
    | "instruction"
    | "simplified_instruction"
    | "warning"
    | "arrow"
    | "completion";
  text: string;
  step_id: string;
  target?: ArrowTarget;
};

export type StepEstimate = {
  tag: "step_estimate";
  step_id: string;
  confidence: number;
  source: string;
};

export type ErrorEvent = {
  tag: "error_event";
  kind: string;
  message: string;
  step_id: string;
};

export type TrackletDto = {
  object_id: number;
  class: string;
  status: string;
  positions: { ts_ns: number; xyz: number[] }[];
};

export type TrackletSet = {
  tag: "tracklet_set";
  tracklets: TrackletDto[];
};

export type DerivedPayload =
  | GuidancePrompt
  | StepEstimate
  | ErrorEvent
  | TrackletSet;

// One SSE record from /sessions/{id}/outputs or /guidance.
export type FeedRecord = {
  topic: string;
  seq: number;
  ts_ns: number;
  payload: DerivedPayload;
};

export type EventAck = {
  session_id: string;
  topic: string;
  seq: number;
  derived: number;
};

export type SessionCreated = {
  session_id: string;
  task_id: string;
  current_step: string;
};

export type SegmentRow = { label: string; t_start_ns: number; t_end_ns: number };

export type TimelineReport = {
  steps: SegmentRow[];
  workload: SegmentRow[];
  phases: SegmentRow[];
  procedures: SegmentRow[];
  errors: Record<string, unknown>[];
  distribution: Record<string, number>;
  prompt_counts: Record<string, number>;
  duration_s: number;
};

export type ConfidenceMatrixDto = {
  step_ids: string[];
  first_ts_ns: number;
  bin_width_s: number;
  n_bins: number;
  cells: (number | null)[][];
};

export type SummaryMatrixDto = {
  steps: string[];
  categories: string[];
  matrix: number[][];
  phi: Record<string, Record<string, number>>;
};
