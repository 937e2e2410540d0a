/**
 * Wire types for the adaptation service (see ../PROTOCOL.md).
 *
 * Frames are JSON objects {kind, session_id, payload}. This module only
 * describes and validates the schema; it performs no layout math.
 */

export const PROTOCOL_VERSION = 1;

export type Vec3 = [number, number, number];

export type ModeName = "manual" | "pareto_select" | "preference";

export const MODES: ModeName[] = ["manual", "pareto_select", "preference"];

export const MAX_OPTIMIZER_MOVES = 3;

export const OBJECTIVE_NAMES = [
  "neck_strain",
  "shoulder_load",
  "distance_comfort",
  "field_of_view",
  "semantic_agreement",
] as const;

export type ObjectiveName = (typeof OBJECTIVE_NAMES)[number];

export const OBJECTIVE_LABELS: Record<ObjectiveName, string> = {
  neck_strain: "neck strain",
  shoulder_load: "shoulder load",
  distance_comfort: "distance comfort",
  field_of_view: "field of view",
  semantic_agreement: "semantic agreement",
};

export interface WireMessage {
  kind: string;
  session_id?: string | null;
  payload?: Record<string, unknown>;
}

export interface SceneBox {
  min: Vec3;
  max: Vec3;
}

export interface SceneDoc {
  user: { eye_position: Vec3; gaze_direction: Vec3; shoulder_position: Vec3 };
  widgets: { id: string; extent: [number, number]; p_obs: number; p_int: number }[];
  objects: { id: string; position: Vec3 }[];
  semantics: Record<string, Record<string, number>>;
  region: { boxes: SceneBox[] };
}

export interface StatePayload {
  scene: string;
  mode: ModeName;
  iteration: number;
  pending: number;
  layout: Record<string, Vec3>;
}

export interface ProgressPayload {
  generation: number;
  total_generations: number;
  evaluations: number;
  best_rank_vector: number[];
  front_size: number;
}

export interface Projection {
  points: [number, number][];
  chosen: [number, number];
  reference: [number, number];
}

export interface AdaptedPayload {
  layout: Record<string, Vec3>;
  iteration: number;
  priorities: {
    groups: number[][];
    labels: string[];
    by_objective: Record<string, string>;
  } | null;
  delta: number[] | null;
  distance: number;
  candidate_index: number;
  archive_size: number;
  reference: number[];
  projections: Record<string, Projection>;
}

export interface ErrorPayload {
  error: string;
  message: string;
}

export function parseMessage(raw: string): WireMessage {
  let value: unknown;
  try {
    value = JSON.parse(raw);
  } catch {
    throw new Error("frame is not valid JSON");
  }
  if (typeof value !== "object" || value === null || Array.isArray(value)) {
    throw new Error("frame must be a JSON object");
  }
  const message = value as WireMessage;
  if (typeof message.kind !== "string") {
    throw new Error("frame must carry a string 'kind'");
  }
  if (message.payload !== undefined && (typeof message.payload !== "object" || message.payload === null)) {
    throw new Error("'payload' must be an object when present");
  }
  return message;
}

export function projectionKey(pair: [number, number]): string {
  return `${pair[0]}-${pair[1]}`;
}
