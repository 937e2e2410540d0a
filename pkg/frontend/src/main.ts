/**
 * Studio bootstrap: DOM wiring, drag handling, and the render loop.
 */

import { StudioClient } from "./client.js";
import { withPlaneCoords, type Frame2D, type Plane } from "./geometry.js";
import { MODES, OBJECTIVE_LABELS, OBJECTIVE_NAMES, type ModeName, type Vec3 } from "./protocol.js";
import { canAdapt, objectivePairs, pendingCount, selectPair, stageMove } from "./state.js";
import { drawScenePane, drawScatter, widgetAt } from "./render.js";

const client = new StudioClient();

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const planCanvas = el<HTMLCanvasElement>("plan");
const elevationCanvas = el<HTMLCanvasElement>("elevation");
const scatterCanvas = el<HTMLCanvasElement>("scatter");
const sceneSelect = el<HTMLSelectElement>("scene-select");
const modeSelect = el<HTMLSelectElement>("mode-select");
const seedInput = el<HTMLInputElement>("seed-input");
const startButton = el<HTMLButtonElement>("start-button");
const adaptButton = el<HTMLButtonElement>("adapt-button");
const pairSelect = el<HTMLSelectElement>("pair-select");
const statusLine = el<HTMLDivElement>("status");
const banner = el<HTMLDivElement>("banner");
const badgeList = el<HTMLDivElement>("badges");
const progressBar = el<HTMLProgressElement>("progress");
const moveCounter = el<HTMLSpanElement>("move-counter");

const VIEWPORT = { width: 460, height: 340, margin: 18 };
const SCATTER_VIEWPORT = { width: 300, height: 300, margin: 28 };

for (const mode of MODES) {
  const option = document.createElement("option");
  option.value = mode;
  option.textContent = mode;
  modeSelect.appendChild(option);
}
modeSelect.value = "preference";

for (const [a, b] of objectivePairs()) {
  const option = document.createElement("option");
  option.value = `${a},${b}`;
  option.textContent = `${OBJECTIVE_LABELS[OBJECTIVE_NAMES[a]]} vs ${OBJECTIVE_LABELS[OBJECTIVE_NAMES[b]]}`;
  pairSelect.appendChild(option);
}
pairSelect.value = "3,4";

function wsUrl(): string {
  const proto = location.protocol === "https:" ? "wss" : "ws";
  return `${proto}://${location.host}/ws`;
}

function connect(): void {
  const socket = new WebSocket(wsUrl());
  client.attach({
    send: (data) => socket.send(data),
    close: () => socket.close(),
    set onmessage(handler: (event: { data: string }) => void) {
      socket.onmessage = (event) => handler({ data: String(event.data) });
    },
    set onopen(handler: () => void) {
      socket.onopen = handler;
    },
    set onclose(handler: () => void) {
      socket.onclose = handler;
    },
  });
}

let frames: { plan: Frame2D | null; elevation: Frame2D | null } = { plan: null, elevation: null };

function render(): void {
  const view = client.view;
  banner.textContent = view.connected ? (view.warning ?? "") : "disconnected - reconnecting...";
  banner.className = view.connected ? (view.warning ? "warn" : "hidden") : "error";
  if (view.lastError) {
    banner.textContent = `server error [${view.lastError.error}]: ${view.lastError.message}`;
    banner.className = "error";
  }

  sceneSelect.innerHTML = "";
  for (const name of view.scenes) {
    const option = document.createElement("option");
    option.value = name;
    option.textContent = name;
    sceneSelect.appendChild(option);
  }
  if (view.sceneName) sceneSelect.value = view.sceneName;

  const count = pendingCount(view);
  moveCounter.textContent = view.mode === "manual" ? `${count}` : `${count}/3`;
  adaptButton.disabled = view.mode === "manual" ? count === 0 : !canAdapt(view);
  adaptButton.textContent = view.mode === "manual" ? "place" : "adapt";

  progressBar.hidden = !view.adaptInFlight;
  if (view.progress) {
    progressBar.max = view.progress.total_generations;
    progressBar.value = view.progress.generation;
  }

  const parts = [];
  if (view.sessionId) parts.push(`session ${view.sessionId}`, `mode ${view.mode}`, `iteration ${view.iteration}`);
  if (view.distance !== null) parts.push(`candidate distance ${view.distance.toFixed(4)}`);
  if (view.archiveSize !== null) parts.push(`archive ${view.archiveSize}`);
  statusLine.textContent = parts.join(" | ");

  badgeList.innerHTML = "";
  if (view.badges) {
    OBJECTIVE_NAMES.forEach((name, index) => {
      const badge = document.createElement("span");
      const label = view.badges![name] ?? "mid";
      badge.className = `badge ${label}`;
      const value = view.delta ? ` ${view.delta[index] >= 0 ? "+" : ""}${view.delta[index].toFixed(3)}` : "";
      badge.textContent = `${OBJECTIVE_LABELS[name]}: ${label.toUpperCase()}${value}`;
      badgeList.appendChild(badge);
    });
  }

  const planCtx = planCanvas.getContext("2d")!;
  const elevationCtx = elevationCanvas.getContext("2d")!;
  frames = {
    plan: drawScenePane(planCtx, view, "plan", VIEWPORT),
    elevation: drawScenePane(elevationCtx, view, "elevation", VIEWPORT),
  };
  drawScatter(scatterCanvas.getContext("2d")!, view.scatter, SCATTER_VIEWPORT);
}

client.onChange(render);

let drag: { widget: string; plane: Plane } | null = null;

function canvasPoint(canvas: HTMLCanvasElement, event: PointerEvent): [number, number] {
  const rect = canvas.getBoundingClientRect();
  return [event.clientX - rect.left, event.clientY - rect.top];
}

function bindDrag(canvas: HTMLCanvasElement, plane: Plane): void {
  canvas.addEventListener("pointerdown", (event) => {
    const view = client.view;
    if (!view.scene || !view.sessionId) return;
    const frame = frames[plane];
    if (!frame) return;
    const layout = { ...view.layout, ...view.pendingMoves };
    const widget = widgetAt(view.scene, layout, frame, plane, canvasPoint(canvas, event));
    if (widget) {
      drag = { widget, plane };
      canvas.setPointerCapture(event.pointerId);
    }
  });
  canvas.addEventListener("pointermove", (event) => {
    if (!drag || drag.plane !== plane) return;
    const frame = frames[plane];
    const view = client.view;
    if (!frame || !view.scene) return;
    const meters = frame.toMeters(canvasPoint(canvas, event));
    const current = (view.pendingMoves[drag.widget] ?? view.layout[drag.widget]) as Vec3;
    const target = withPlaneCoords(current, plane, meters);
    client.view = stageMove(view, drag.widget, target);
    render();
  });
  canvas.addEventListener("pointerup", () => {
    drag = null;
  });
}

bindDrag(planCanvas, "plan");
bindDrag(elevationCanvas, "elevation");

sceneSelect.addEventListener("change", () => client.requestScene(sceneSelect.value));

startButton.addEventListener("click", () => {
  const scene = sceneSelect.value || "coffee_shop";
  client.requestScene(scene);
  client.startSession({
    scene,
    mode: modeSelect.value as ModeName,
    seed: Number(seedInput.value) || 0,
  });
});

adaptButton.addEventListener("click", () => {
  const [a, b] = pairSelect.value.split(",").map(Number);
  client.commitMovesAndAdapt([[a, b] as [number, number]]);
  render();
});

pairSelect.addEventListener("change", () => {
  const [a, b] = pairSelect.value.split(",").map(Number);
  client.view = selectPair(client.view, [a, b]);
  render();
});

connect();
render();
