/**
 * The studio view model and its pure reducers.
 *
 * Everything on screen is a projection of the last server state/adapted
 * message plus local pending drags; replaying a recorded message log through
 * applyServer reproduces the same view.
 */

import { pointInRegion } from "./geometry.js";
import {
  MAX_OPTIMIZER_MOVES,
  OBJECTIVE_NAMES,
  projectionKey,
  type AdaptedPayload,
  type ErrorPayload,
  type ModeName,
  type ProgressPayload,
  type Projection,
  type SceneDoc,
  type StatePayload,
  type Vec3,
  type WireMessage,
} from "./protocol.js";

export interface ScatterState {
  pair: [number, number];
  points: [number, number][];
  chosen: [number, number] | null;
  reference: [number, number] | null;
}

export interface ViewModel {
  connected: boolean;
  protocolVersion: number | null;
  scenes: string[];
  sceneName: string | null;
  scene: SceneDoc | null;
  sessionId: string | null;
  mode: ModeName;
  iteration: number;
  layout: Record<string, Vec3>;
  pendingMoves: Record<string, Vec3>;
  adaptInFlight: boolean;
  progress: ProgressPayload | null;
  badges: Record<string, string> | null;
  delta: number[] | null;
  distance: number | null;
  candidateIndex: number | null;
  archiveSize: number | null;
  projections: Record<string, Projection>;
  scatter: ScatterState | null;
  warning: string | null;
  lastError: ErrorPayload | null;
  report: Record<string, unknown> | null;
}

export function initialView(): ViewModel {
  return {
    connected: false,
    protocolVersion: null,
    scenes: [],
    sceneName: null,
    scene: null,
    sessionId: null,
    mode: "preference",
    iteration: 0,
    layout: {},
    pendingMoves: {},
    adaptInFlight: false,
    progress: null,
    badges: null,
    delta: null,
    distance: null,
    candidateIndex: null,
    archiveSize: null,
    projections: {},
    scatter: null,
    warning: null,
    lastError: null,
    report: null,
  };
}

export function pendingCount(view: ViewModel): number {
  return Object.keys(view.pendingMoves).length;
}

export function canAdapt(view: ViewModel): boolean {
  return (
    view.sessionId !== null &&
    view.mode !== "manual" &&
    !view.adaptInFlight &&
    pendingCount(view) >= 1 &&
    pendingCount(view) <= MAX_OPTIMIZER_MOVES
  );
}

/** Layout with local pending drags overlaid (display only). */
export function displayedLayout(view: ViewModel): Record<string, Vec3> {
  return { ...view.layout, ...view.pendingMoves };
}

function scatterFrom(projections: Record<string, Projection>, pair: [number, number]): ScatterState | null {
  const projection = projections[projectionKey(pair)];
  if (!projection) return null;
  return {
    pair,
    points: projection.points.map((p) => [...p] as [number, number]),
    chosen: [...projection.chosen] as [number, number],
    reference: [...projection.reference] as [number, number],
  };
}

export function applyServer(view: ViewModel, message: WireMessage): ViewModel {
  const next: ViewModel = { ...view, lastError: null };
  switch (message.kind) {
    case "hello": {
      const payload = message.payload as { version: number; scenes: string[] };
      next.protocolVersion = payload.version;
      next.scenes = payload.scenes ?? [];
      return next;
    }
    case "scene_data": {
      const payload = message.payload as unknown as { name: string; scene: SceneDoc };
      next.sceneName = payload.name;
      next.scene = payload.scene;
      return next;
    }
    case "state": {
      const payload = message.payload as unknown as StatePayload;
      next.sessionId = (message.session_id as string) ?? view.sessionId;
      next.mode = payload.mode;
      next.iteration = payload.iteration;
      next.layout = payload.layout;
      next.pendingMoves = {};
      next.warning = null;
      return next;
    }
    case "progress": {
      next.progress = message.payload as unknown as ProgressPayload;
      next.adaptInFlight = true;
      return next;
    }
    case "adapted": {
      const payload = message.payload as unknown as AdaptedPayload;
      next.layout = payload.layout;
      next.iteration = payload.iteration;
      next.pendingMoves = {};
      next.adaptInFlight = false;
      next.progress = null;
      next.badges = payload.priorities ? payload.priorities.by_objective : null;
      next.delta = payload.delta;
      next.distance = payload.distance;
      next.candidateIndex = payload.candidate_index;
      next.archiveSize = payload.archive_size;
      next.projections = payload.projections ?? {};
      const currentPair = view.scatter?.pair ?? ([3, 4] as [number, number]);
      next.scatter = scatterFrom(next.projections, currentPair) ??
        firstProjection(next.projections);
      return next;
    }
    case "finish": {
      next.report = (message.payload as { report: Record<string, unknown> }).report;
      return next;
    }
    case "error": {
      next.lastError = message.payload as unknown as ErrorPayload;
      next.adaptInFlight = false;
      next.progress = null;
      return next;
    }
    default:
      return next;
  }
}

function firstProjection(projections: Record<string, Projection>): ScatterState | null {
  const keys = Object.keys(projections);
  if (keys.length === 0) return null;
  const [a, b] = keys[0].split("-").map(Number);
  return scatterFrom(projections, [a, b]);
}

export function setConnected(view: ViewModel, connected: boolean): ViewModel {
  return { ...view, connected };
}

/**
 * Stage a local drag. Rejects (with a warning on the view) positions outside
 * the placement region (snap-back) and a fourth distinct widget in the
 * optimizer modes; the committed move set is always 1..3 there.
 */
export function stageMove(view: ViewModel, widgetId: string, position: Vec3): ViewModel {
  if (!view.scene) return { ...view, warning: "no scene loaded" };
  if (!(widgetId in view.layout)) return { ...view, warning: `unknown widget ${widgetId}` };
  if (!pointInRegion(view.scene, position)) {
    return { ...view, warning: `widget ${widgetId}: outside the placement region (snapped back)` };
  }
  const staged = { ...view.pendingMoves };
  if (
    view.mode !== "manual" &&
    !(widgetId in staged) &&
    Object.keys(staged).length >= MAX_OPTIMIZER_MOVES
  ) {
    return { ...view, warning: `at most ${MAX_OPTIMIZER_MOVES} widgets per iteration` };
  }
  staged[widgetId] = position;
  return { ...view, pendingMoves: staged, warning: null };
}

export function clearPending(view: ViewModel): ViewModel {
  return { ...view, pendingMoves: {}, warning: null };
}

export function selectPair(view: ViewModel, pair: [number, number]): ViewModel {
  const scatter = scatterFrom(view.projections, pair);
  if (!scatter) {
    return { ...view, warning: `no projection recorded for ${pair[0]}-${pair[1]}` };
  }
  return { ...view, scatter, warning: null };
}

export function objectivePairs(): [number, number][] {
  const pairs: [number, number][] = [];
  for (let i = 0; i < OBJECTIVE_NAMES.length; i += 1) {
    for (let j = i + 1; j < OBJECTIVE_NAMES.length; j += 1) {
      pairs.push([i, j]);
    }
  }
  return pairs;
}

/** Fold a recorded message log into a view (replay invariant). */
export function replayLog(log: { direction: string; message: WireMessage }[]): ViewModel {
  let view = setConnected(initialView(), true);
  for (const entry of log) {
    if (entry.direction === "recv") {
      view = applyServer(view, entry.message);
    }
  }
  return view;
}
