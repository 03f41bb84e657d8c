/**
 * Wire types for the consultation session protocol (schema 1).
 *
 * Every server response is newline-delimited JSON; each line is one of the
 * message shapes below. The client renders exactly what the server says and
 * performs no belief arithmetic of its own.
 */

export interface MassRow {
  subset: string[];
  mass: number;
}

export interface SingletonRow {
  value: string;
  bel: number;
  pl: number;
}

export interface FrameBeliefs {
  masses: MassRow[];
  ignorance: number;
  singletons: SingletonRow[];
}

export interface QuestionMessage {
  schema: 1;
  type: "question";
  session: string;
  kind: "ask" | "volunteer";
  attribute: string | null;
  text: string;
  values: string[];
  accepts_confidence: boolean;
  partition: string;
  focus: string[];
}

export interface BeliefsMessage {
  schema: 1;
  type: "beliefs";
  session: string;
  frames: Record<string, FrameBeliefs>;
  partition: string | null;
  focus: string[];
}

export interface AnswerMessage {
  schema: 1;
  type: "answer";
  session: string;
  attribute: string;
  value?: string;
  confidence?: number;
  response?: "unknown" | "irrelevant";
}

export interface VolunteerMessage {
  schema: 1;
  type: "volunteer";
  session: string;
  evidence?: { attribute: string; value: string; confidence: number }[];
  declined?: boolean;
}

export interface FiredMessage {
  schema: 1;
  type: "fired";
  session: string;
  rule: string;
  frame: string;
  partition: string;
  lhs_belief: number;
  conclusions: MassRow[];
  before: MassRow[];
  after: MassRow[];
}

export interface DescendMessage {
  schema: 1;
  type: "descend";
  session: string;
  attribute: string;
  target: string[];
  rule: string;
}

export interface PropagateMessage {
  schema: 1;
  type: "propagate";
  session: string;
  attribute: string;
  value?: string;
  belief?: number;
  sub_threshold?: boolean;
  empty?: boolean;
}

export interface Conclusion {
  attribute: string;
  value: string;
  belief: number;
  met_threshold: boolean;
}

export interface DoneMessage {
  schema: 1;
  type: "done";
  session: string;
  status: "concluded" | "exhausted" | "awaiting-input";
  conclusions: Conclusion[];
}

export interface ErrorMessage {
  schema: 1;
  type: "error";
  error: string;
  status: number;
}

export type SessionMessage =
  | QuestionMessage
  | BeliefsMessage
  | AnswerMessage
  | VolunteerMessage
  | FiredMessage
  | DescendMessage
  | PropagateMessage
  | DoneMessage
  | ErrorMessage;

export function parseNdjson(text: string): SessionMessage[] {
  return text
    .split("\n")
    .filter((line) => line.trim().length > 0)
    .map((line) => JSON.parse(line) as SessionMessage);
}
