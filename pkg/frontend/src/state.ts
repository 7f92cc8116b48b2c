// Session state: a pure projection of server snapshots plus the live event
// stream. Reloading the page and re-fetching the snapshot must reconstruct
// the same views, so events only ever (a) fill the transient per-segment
// generation phases or (b) request a snapshot refresh; no client-only
// bookkeeping survives that matters.

import type { SessionEvent, SessionView, SmallTable } from "./types.js";

export interface GenerationPhases {
  objective?: string | null;
  reason?: string;
  script?: string;
  attempts?: number;
  table?: SmallTable | null;
  narrative?: string;
  spans?: [number, number][];
}

export interface SessionState {
  session: SessionView | null;
  lastSeq: number;
  phases: Record<string, GenerationPhases>;
  needsRefresh: boolean;
}

export function initialState(): SessionState {
  return { session: null, lastSeq: 0, phases: {}, needsRefresh: false };
}

export function applySnapshot(state: SessionState, view: SessionView): SessionState {
  return {
    session: view,
    lastSeq: Math.max(state.lastSeq, view.event_seq),
    phases: state.phases,
    needsRefresh: false,
  };
}

export function applyEvent(state: SessionState, event: SessionEvent): SessionState {
  if (event.seq <= state.lastSeq) {
    return state; // replayed duplicate
  }
  const next: SessionState = {
    ...state,
    lastSeq: event.seq,
    phases: { ...state.phases },
  };
  const payload = event.payload as Record<string, any>;
  const segment = typeof payload.segment === "string" ? payload.segment : null;

  switch (event.kind) {
    case "generation.objective":
      if (segment) {
        next.phases[segment] = {
          objective: payload.objective ?? null,
          reason: payload.reason,
        };
      }
      break;
    case "generation.code":
      if (segment) {
        next.phases[segment] = {
          ...next.phases[segment],
          script: payload.script,
          attempts: payload.attempts,
        };
      }
      break;
    case "generation.artifacts":
      if (segment) {
        next.phases[segment] = {
          ...next.phases[segment],
          table: payload.table ?? null,
        };
      }
      break;
    case "generation.narrative":
      if (segment) {
        next.phases[segment] = {
          ...next.phases[segment],
          narrative: payload.narrative,
          spans: payload.spans ?? [],
        };
      }
      break;
    case "segment.updated":
    case "graph.updated":
    case "outline.updated":
    case "export.ready":
      next.needsRefresh = true;
      break;
    default:
      break;
  }
  return next;
}

// Which of the four generation stages have landed, in display order.
export function stagesReached(phases: GenerationPhases | undefined): string[] {
  if (!phases) return [];
  const reached: string[] = [];
  if (phases.objective !== undefined) reached.push("objective");
  if (phases.script !== undefined) reached.push("code");
  if (phases.table !== undefined) reached.push("artifacts");
  if (phases.narrative !== undefined) reached.push("narrative");
  return reached;
}
