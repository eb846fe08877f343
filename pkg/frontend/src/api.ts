// Thin typed wrappers over the service HTTP API. The console is served from
// /app on the same origin, so paths are root-relative.

import type {
  ConfidenceMatrixDto,
  EventAck,
  SessionCreated,
  SummaryMatrixDto,
  TaskDoc,
  TaskListing,
  TimelineReport
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string
  ) {
    super(`${status}: ${detail}`);
  }
}

async function request<T>(path: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(path, init);
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const body = await resp.json();
      // FastAPI error bodies carry the message under "detail"
      if (typeof body?.detail === "string") detail = body.detail;
      else detail = JSON.stringify(body);
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(resp.status, detail);
  }
  return (await resp.json()) as T;
}

export function listTasks(): Promise<TaskListing[]> {
  return request("/tasks");
}

export function getTask(taskId: string): Promise<TaskDoc> {
  return request(`/tasks/${encodeURIComponent(taskId)}`);
}

export function listSessions(): Promise<{ live: string[]; persisted: string[] }> {
  return request("/sessions");
}

export function createSession(
  taskId: string,
  sessionId?: string
): Promise<SessionCreated> {
  return request("/sessions", {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(
      sessionId ? { task_id: taskId, session_id: sessionId } : { task_id: taskId }
    )
  });
}

export function postEvent(
  sessionId: string,
  tsNs: number,
  payload: Record<string, unknown>
): Promise<EventAck> {
  return request(`/sessions/${encodeURIComponent(sessionId)}/events`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify({ ts_ns: tsNs, payload })
  });
}

export function finalizeSession(sessionId: string): Promise<unknown> {
  return request(`/sessions/${encodeURIComponent(sessionId)}/finalize`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: "{}"
  });
}

export function fetchTimeline(sessionId: string): Promise<TimelineReport> {
  return request(`/sessions/${encodeURIComponent(sessionId)}/analytics/timeline`);
}

export function fetchConfidenceMatrix(
  sessionId: string
): Promise<ConfidenceMatrixDto> {
  return request(
    `/sessions/${encodeURIComponent(sessionId)}/analytics/confidence-matrix`
  );
}

export function fetchSummaryMatrix(sessionId: string): Promise<SummaryMatrixDto> {
  return request(
    `/sessions/${encodeURIComponent(sessionId)}/analytics/summary-matrix`
  );
}

export function guidanceStreamUrl(sessionId: string): string {
  return `/sessions/${encodeURIComponent(sessionId)}/outputs`;
}
