/**
 * View-model reducer: folds protocol messages into a UiSessionView.
 *
 * The view derives solely from messages received; there is no client-side
 * inference. Applying the same message sequence always yields the same view.
 */

import type {
  Conclusion,
  FrameBeliefs,
  QuestionMessage,
  SessionMessage,
} from "./protocol.js";

export interface TraceRow {
  kind: "answer" | "volunteer" | "fired" | "descend" | "propagate";
  text: string;
}

export interface PendingQuestion {
  kind: "ask" | "volunteer";
  attribute: string | null;
  text: string;
  values: string[];
  acceptsConfidence: boolean;
}

export interface UiSessionView {
  sessionId: string | null;
  question: PendingQuestion | null;
  frames: Record<string, FrameBeliefs>;
  partition: string | null;
  focus: string[];
  trace: TraceRow[];
  status: "awaiting-input" | "concluded" | "exhausted" | null;
  conclusions: Conclusion[];
  error: string | null;
}

export function emptyView(): UiSessionView {
  return {
    sessionId: null,
    question: null,
    frames: {},
    partition: null,
    focus: [],
    trace: [],
    status: null,
    conclusions: [],
    error: null,
  };
}

function subsetLabel(values: string[]): string {
  return `{${values.join(", ")}}`;
}

function questionOf(msg: QuestionMessage): PendingQuestion {
  return {
    kind: msg.kind,
    attribute: msg.attribute,
    text: msg.text,
    values: msg.values,
    acceptsConfidence: msg.accepts_confidence,
  };
}

export function applyMessage(
  view: UiSessionView,
  msg: SessionMessage,
): UiSessionView {
  const next: UiSessionView = {
    ...view,
    trace: view.trace,
    error: null,
  };
  if ("session" in msg && msg.session) {
    next.sessionId = msg.session;
  }
  switch (msg.type) {
    case "question":
      next.question = questionOf(msg);
      next.partition = msg.partition;
      next.focus = msg.focus;
      next.status = "awaiting-input";
      return next;
    case "beliefs":
      next.frames = msg.frames;
      next.partition = msg.partition ?? view.partition;
      next.focus = msg.focus;
      return next;
    case "answer": {
      const text =
        msg.response !== undefined
          ? `${msg.attribute}: ${msg.response}`
          : `${msg.attribute} = ${msg.value} @ ${msg.confidence ?? 1}`;
      next.trace = [...view.trace, { kind: "answer", text: `answered ${text}` }];
      return next;
    }
    case "volunteer": {
      const text = msg.declined
        ? "volunteered nothing"
        : `volunteered ${(msg.evidence ?? [])
            .map((e) => `${e.attribute} = ${e.value} @ ${e.confidence}`)
            .join(", ")}`;
      next.trace = [...view.trace, { kind: "volunteer", text }];
      return next;
    }
    case "fired": {
      const parts = msg.conclusions
        .map((row) => `${subsetLabel(row.subset)} ${row.mass.toFixed(3)}`)
        .join(" / ");
      next.trace = [
        ...view.trace,
        { kind: "fired", text: `${msg.rule}: ${msg.frame} ${parts}` },
      ];
      return next;
    }
    case "descend":
      next.trace = [
        ...view.trace,
        {
          kind: "descend",
          text: `descend into ${msg.attribute} seeking ${subsetLabel(msg.target)} (${msg.rule})`,
        },
      ];
      return next;
    case "propagate": {
      const text = msg.empty
        ? `${msg.attribute}: nothing to propagate`
        : `${msg.attribute} = ${msg.value} propagated at ${msg.belief?.toFixed(3)}` +
          (msg.sub_threshold ? " (below threshold)" : "");
      next.trace = [...view.trace, { kind: "propagate", text }];
      return next;
    }
    case "done":
      next.status = msg.status === "awaiting-input" ? null : msg.status;
      next.conclusions = msg.conclusions;
      next.question = null;
      return next;
    case "error":
      // keep the rest of the view intact; surface the banner only
      return { ...view, error: msg.error };
    default:
      return view;
  }
}

export function applyAll(
  view: UiSessionView,
  messages: SessionMessage[],
): UiSessionView {
  return messages.reduce(applyMessage, view);
}

/** Rendered masses of one frame, which the server guarantees sum to 1. */
export function massTotal(frame: FrameBeliefs): number {
  return frame.masses.reduce((acc, row) => acc + row.mass, 0);
}

/** Client-side guard for the volunteer form; the server re-validates. */
export function volunteerRowProblem(attribute: string, value: string): string | null {
  if (!attribute.trim() || !value.trim()) {
    return "attribute and value are both required";
  }
  return null;
}
