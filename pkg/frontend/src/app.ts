import { ApiClient, toFieldError } from "./api.js";
import { buildChartModel, DEFAULT_GEOMETRY } from "./chart.js";
import {
  addReport,
  applyEpisode,
  applySnapshot,
  applyStatus,
  FORM_DEFAULTS,
  newRunView,
  RunView,
  sourceBadge,
  validateForm,
} from "./model.js";
import { subscribe, StreamHandle } from "./sse.js";
import type { EpisodeEvent, LaunchForm } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

const state: {
  api: ApiClient;
  view: RunView | null;
  stream: StreamHandle | null;
  snapshotBuffer: EpisodeEvent[];
  connected: boolean;
} = {
  api: new ApiClient(sessionStorage.getItem("antijam.server") ?? "http://127.0.0.1:8787"),
  view: null,
  stream: null,
  snapshotBuffer: [],
  connected: false,
};

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function readForm(): LaunchForm {
  const num = (id: string) => Number((el<HTMLInputElement>(id)).value);
  return {
    episodes: num("f-episodes"),
    num_channels: num("f-num-channels"),
    steps_per_episode: num("f-steps"),
    switching_cost: num("f-switching-cost"),
    jammer_kind: el<HTMLSelectElement>("f-jammer-kind").value,
    solved_threshold: num("f-threshold"),
    rolling_window: num("f-window"),
    seed: num("f-seed"),
  };
}

function showFieldErrors(errors: { field: string; message: string }[]): void {
  document.querySelectorAll(".field-error").forEach((n) => (n.textContent = ""));
  for (const err of errors) {
    const slot = document.querySelector(`[data-error-for="${err.field}"]`);
    if (slot) slot.textContent = err.message;
  }
  el<HTMLButtonElement>("launch").disabled = errors.length > 0;
}

function banner(text: string): void {
  const node = el("banner");
  node.textContent = text;
  node.classList.toggle("hidden", text === "");
}

function setStatusBadge(status: string): void {
  const badge = el("status-badge");
  badge.textContent = status;
  badge.dataset.status = status;
}

function syncExplainButton(): void {
  if (!state.view) return;
  const button = el<HTMLButtonElement>("explain");
  const empty = state.view.episodes.length === 0;
  button.disabled = empty;
  button.title = empty ? "no episodes recorded yet" : "";
}

function renderChart(): void {
  if (!state.view) return;
  syncExplainButton();
  const model = buildChartModel(state.view, DEFAULT_GEOMETRY);
  (el("path-return") as unknown as SVGPathElement).setAttribute("d", model.returnPath);
  (el("path-rolling") as unknown as SVGPathElement).setAttribute("d", model.rollingPath);
  (el("path-epsilon") as unknown as SVGPathElement).setAttribute("d", model.epsilonPath);
  const threshold = el("path-threshold") as unknown as SVGLineElement;
  threshold.setAttribute("y1", String(model.thresholdY));
  threshold.setAttribute("y2", String(model.thresholdY));
  el("episode-count").textContent = `${model.pointCount} episodes`;

  const axes = el("axes");
  axes.innerHTML = "";
  for (const tick of model.xTicks) {
    const label = document.createElementNS(SVG_NS, "text");
    label.setAttribute("x", String(tick.x));
    label.setAttribute("y", String(DEFAULT_GEOMETRY.height - 8));
    label.setAttribute("class", "tick");
    label.textContent = tick.label;
    axes.appendChild(label);
  }
  for (const tick of model.leftTicks) {
    const label = document.createElementNS(SVG_NS, "text");
    label.setAttribute("x", "4");
    label.setAttribute("y", String(tick.y + 4));
    label.setAttribute("class", "tick");
    label.textContent = tick.label;
    axes.appendChild(label);
  }
  for (const tick of model.rightTicks) {
    const label = document.createElementNS(SVG_NS, "text");
    label.setAttribute("x", String(DEFAULT_GEOMETRY.width - 36));
    label.setAttribute("y", String(tick.y + 4));
    label.setAttribute("class", "tick");
    label.textContent = tick.label;
    axes.appendChild(label);
  }
}

function renderReports(): void {
  if (!state.view) return;
  const container = el("reports");
  container.innerHTML = "";
  for (const report of state.view.reports) {
    const card = document.createElement("div");
    card.className = "report";
    const badge = document.createElement("span");
    badge.className = `badge badge-${report.source}`;
    badge.textContent = sourceBadge(report);
    const narrative = document.createElement("p");
    narrative.textContent = report.narrative;
    const details = document.createElement("details");
    const summary = document.createElement("summary");
    summary.textContent = "prompt";
    const prompt = document.createElement("pre");
    prompt.textContent = report.prompt;
    details.append(summary, prompt);
    card.append(badge, narrative, details);
    container.appendChild(card);
  }
}

function openStream(runId: string): void {
  state.stream?.close();
  state.snapshotBuffer = [];
  state.stream = subscribe(state.api.streamUrl(runId), {
    onConnect() {
      // the server replays every prior record on (re)connect
      state.connected = true;
      if (state.view) applySnapshot(state.view, []);
      renderChart();
    },
    onEvent(ev) {
      if (!state.view) return;
      if (ev.event === "episode") {
        applyEpisode(state.view, JSON.parse(ev.data) as EpisodeEvent);
        renderChart();
      } else if (ev.event === "status") {
        applyStatus(state.view, (JSON.parse(ev.data) as { status: string }).status);
        setStatusBadge(state.view.status);
      }
    },
    onError() {
      banner("stream interrupted, reconnecting…");
    },
    onClose() {
      state.connected = false;
    },
  });
}

async function launch(): Promise<void> {
  const form = readForm();
  const errors = validateForm(form);
  showFieldErrors(errors);
  if (errors.length > 0) return;
  banner("");
  try {
    const runId = await state.api.launchRun(form);
    state.view = newRunView(runId, form.solved_threshold);
    el("run-id").textContent = runId;
    setStatusBadge("running");
    renderReports();
    renderChart();
    el("run-panel").classList.remove("hidden");
    openStream(runId);
  } catch (err) {
    const fieldError = toFieldError(err);
    if (fieldError) {
      showFieldErrors([fieldError]);
    } else if ((err as { status?: number }).status === 429) {
      banner("at capacity: the server is already executing its maximum number of runs");
    } else {
      banner(`launch failed: ${(err as Error).message}`);
    }
  }
}

async function explain(): Promise<void> {
  if (!state.view || state.view.episodes.length === 0) return;
  try {
    const report = await state.api.explain(state.view.runId);
    addReport(state.view, report);
    renderReports();
  } catch (err) {
    banner(`explanation failed: ${(err as Error).message}`);
  }
}

async function stopRun(): Promise<void> {
  if (!state.view) return;
  try {
    await state.api.stop(state.view.runId);
  } catch (err) {
    banner(`stop failed: ${(err as Error).message}`);
  }
}

function wireUp(): void {
  const defaults = FORM_DEFAULTS;
  el<HTMLInputElement>("f-episodes").value = String(defaults.episodes);
  el<HTMLInputElement>("f-num-channels").value = String(defaults.num_channels);
  el<HTMLInputElement>("f-steps").value = String(defaults.steps_per_episode);
  el<HTMLInputElement>("f-switching-cost").value = String(defaults.switching_cost);
  el<HTMLSelectElement>("f-jammer-kind").value = defaults.jammer_kind;
  el<HTMLInputElement>("f-threshold").value = String(defaults.solved_threshold);
  el<HTMLInputElement>("f-window").value = String(defaults.rolling_window);
  el<HTMLInputElement>("f-seed").value = String(defaults.seed);

  el<HTMLInputElement>("server-url").value = state.api.baseUrl;
  el<HTMLInputElement>("server-url").addEventListener("change", (e) => {
    state.api = new ApiClient((e.target as HTMLInputElement).value.replace(/\/$/, ""));
    sessionStorage.setItem("antijam.server", state.api.baseUrl);
  });

  document.querySelectorAll("#launch-form input, #launch-form select").forEach((input) => {
    input.addEventListener("input", () => showFieldErrors(validateForm(readForm())));
  });
  el("launch").addEventListener("click", (e) => {
    e.preventDefault();
    void launch();
  });
  el("explain").addEventListener("click", () => void explain());
  el("stop").addEventListener("click", () => void stopRun());
}

if (typeof document !== "undefined") {
  wireUp();
}
