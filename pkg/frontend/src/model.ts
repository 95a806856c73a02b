import type {
  EpisodeEvent,
  FieldError,
  InsightReport,
  LaunchForm,
  RunDetail,
} from "./types.js";

/**
 * Client-side state for one run: the charted series plus report history.
 * Episodes arrive from the SSE stream; a reconnect replays the server
 * snapshot, so appends are deduplicated by episode index.
 */
export interface RunView {
  runId: string;
  status: string;
  solvedThreshold: number;
  episodes: number[];
  returns: number[];
  rolling: number[];
  epsilon: number[];
  reports: InsightReport[];
  lastEventAt: number;
}

export function newRunView(runId: string, solvedThreshold: number): RunView {
  return {
    runId,
    status: "running",
    solvedThreshold,
    episodes: [],
    returns: [],
    rolling: [],
    epsilon: [],
    reports: [],
    lastEventAt: 0,
  };
}

/** Append one episode; duplicates (snapshot replays) are ignored. */
export function applyEpisode(view: RunView, ev: EpisodeEvent, now = Date.now()): boolean {
  const n = view.episodes.length;
  if (n > 0 && ev.index <= view.episodes[n - 1]) {
    return false;
  }
  view.episodes.push(ev.index);
  view.returns.push(ev.return);
  view.rolling.push(ev.rolling_average);
  view.epsilon.push(ev.epsilon);
  view.lastEventAt = now;
  return true;
}

export function applyStatus(view: RunView, status: string): void {
  view.status = status;
}

/** Reset and replay a full snapshot (used after a stream reconnect). */
export function applySnapshot(view: RunView, events: EpisodeEvent[], now = Date.now()): void {
  view.episodes = [];
  view.returns = [];
  view.rolling = [];
  view.epsilon = [];
  for (const ev of events) {
    applyEpisode(view, ev, now);
  }
}

export function addReport(view: RunView, report: InsightReport): void {
  view.reports.unshift(report); // newest first
}

export function sourceBadge(report: Pick<InsightReport, "source" | "model_name">): string {
  return report.source === "llm" ? `model: ${report.model_name}` : "offline summary";
}

export function statusBadge(status: string): string {
  return status;
}

export function fromDetail(detail: RunDetail): RunView {
  const view = newRunView(detail.run_id, detail.solved_threshold);
  view.status = detail.status;
  return view;
}

export const FORM_DEFAULTS: LaunchForm = {
  episodes: 200,
  num_channels: 10,
  steps_per_episode: 100,
  switching_cost: 0.1,
  jammer_kind: "sweep",
  solved_threshold: 90,
  rolling_window: 10,
  seed: 0,
};

const JAMMER_KINDS = ["fixed", "sweep", "random_uniform", "markov"];

/** Mirrors the server-side rules; messages key on the same field names. */
export function validateForm(form: LaunchForm): FieldError[] {
  const errors: FieldError[] = [];
  const intField = (field: string, value: number, min: number) => {
    if (!Number.isInteger(value) || value < min) {
      errors.push({ field, message: `must be an integer >= ${min}` });
    }
  };
  intField("episodes", form.episodes, 1);
  intField("num_channels", form.num_channels, 2);
  intField("steps_per_episode", form.steps_per_episode, 1);
  intField("rolling_window", form.rolling_window, 1);
  intField("seed", form.seed, 0);
  if (!(form.switching_cost >= 0 && form.switching_cost < 1)) {
    errors.push({ field: "switching_cost", message: "must be in [0, 1)" });
  }
  if (!JAMMER_KINDS.includes(form.jammer_kind)) {
    errors.push({ field: "jammer_kind", message: `must be one of ${JAMMER_KINDS.join(", ")}` });
  }
  if (form.rolling_window > form.episodes) {
    errors.push({ field: "rolling_window", message: "must be <= episodes" });
  }
  if (form.solved_threshold > form.steps_per_episode) {
    errors.push({
      field: "solved_threshold",
      message: "must be <= max attainable return (steps per episode)",
    });
  }
  return errors;
}
