// Performer HUD state. A pure reducer over the session's derived-record
// stream: the server is the only source of step progress, so every field
// here traces back to a task document or a received record.

import type { DerivedPayload, FeedRecord, TaskDoc } from "./types.js";

export type ObjectLocation = {
  xyz: number[];
  status: string;
  hint?: string;
};

export type HudState = {
  taskName: string;
  stepOrder: string[];
  stepText: Record<string, string>;
  stepObjects: Record<string, string[]>;
  currentStepId: string;
  instructionFull: string;
  // set when the server simplified the current step's instruction (overload)
  instructionSimplified: string | null;
  // user toggle forcing the full text even when a simplified one exists
  showFull: boolean;
  locations: Record<string, ObjectLocation>;
  warning: string | null;
  completionCue: string | null;
  statusLine: string;
  finished: boolean;
};

export type RequiredObject = {
  label: string;
  located: boolean;
  hint?: string;
  xyz?: number[];
};

export function initialHud(task: TaskDoc, startStepId: string): HudState {
  const stepText: Record<string, string> = {};
  const stepObjects: Record<string, string[]> = {};
  for (const step of task.steps) {
    stepText[step.id] = step.instruction;
    stepObjects[step.id] = step.required_objects;
  }
  return {
    taskName: task.name,
    stepOrder: task.steps.map((s) => s.id),
    stepText,
    stepObjects,
    currentStepId: startStepId,
    instructionFull: stepText[startStepId] ?? "",
    instructionSimplified: null,
    showFull: false,
    locations: {},
    warning: null,
    completionCue: null,
    statusLine: "connecting",
    finished: false
  };
}

function withLocation(
  state: HudState,
  cls: string,
  loc: ObjectLocation
): HudState {
  const prev = state.locations[cls];
  const hint = loc.hint ?? prev?.hint;
  return {
    ...state,
    locations: { ...state.locations, [cls]: { ...loc, hint } }
  };
}

function applyPayload(state: HudState, payload: DerivedPayload): HudState {
  switch (payload.tag) {
    case "step_estimate": {
      // server-authoritative: a step id outside the task is never displayed
      if (!state.stepOrder.includes(payload.step_id)) return state;
      if (payload.step_id === state.currentStepId) return state;
      return {
        ...state,
        currentStepId: payload.step_id,
        instructionFull: state.stepText[payload.step_id] ?? "",
        instructionSimplified: null
      };
    }
    case "guidance_prompt": {
      let next = state;
      if (payload.target) {
        next = withLocation(next, payload.target.class, {
          xyz: payload.target.xyz,
          status: "visible",
          hint: payload.target.hint
        });
      }
      switch (payload.kind) {
        case "instruction":
          return { ...next, instructionFull: payload.text };
        case "simplified_instruction":
          return { ...next, instructionSimplified: payload.text };
        case "completion":
          return { ...next, completionCue: payload.text };
        case "warning":
          return { ...next, warning: payload.text };
        case "arrow":
          return next;
      }
      return next;
    }
    case "tracklet_set": {
      let next = state;
      for (const t of payload.tracklets) {
        const xyz = t.positions[t.positions.length - 1]?.xyz;
        if (!xyz) continue;
        next = withLocation(next, t.class, { xyz, status: t.status });
      }
      return next;
    }
    case "error_event":
      // the pipeline pairs every error with a warning prompt; nothing extra
      return state;
  }
}

export function applyRecord(state: HudState, record: FeedRecord): HudState {
  return applyPayload(state, record.payload);
}

export function acknowledgeWarning(state: HudState): HudState {
  return state.warning === null ? state : { ...state, warning: null };
}

export function consumeCompletionCue(state: HudState): HudState {
  return state.completionCue === null ? state : { ...state, completionCue: null };
}

export function toggleInstructionDetail(state: HudState): HudState {
  return { ...state, showFull: !state.showFull };
}

export function setStatus(state: HudState, line: string): HudState {
  return state.statusLine === line ? state : { ...state, statusLine: line };
}

export function markFinished(state: HudState): HudState {
  return { ...state, finished: true, statusLine: "session ended" };
}

export function stepIndex(state: HudState): number {
  return state.stepOrder.indexOf(state.currentStepId) + 1;
}

export function hudHeading(state: HudState): string {
  return `Step ${stepIndex(state)} / ${state.stepOrder.length}`;
}

export function visibleInstruction(state: HudState): string {
  if (!state.showFull && state.instructionSimplified !== null) {
    return state.instructionSimplified;
  }
  return state.instructionFull;
}

export function requiredObjects(state: HudState): RequiredObject[] {
  const classes = state.stepObjects[state.currentStepId] ?? [];
  return classes.map((label) => {
    const loc = state.locations[label];
    if (!loc) return { label, located: false };
    return { label, located: true, hint: loc.hint, xyz: loc.xyz };
  });
}
