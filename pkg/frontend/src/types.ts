export interface EpisodeEvent {
  index: number;
  return: number;
  rolling_average: number;
  epsilon: number;
  steps: number;
  jam_hits: number;
  switches: number;
  wall_time_ms: number;
}

export interface InsightReport {
  run_id: string;
  prompt: string;
  narrative: string;
  source: "llm" | "fallback";
  model_name: string;
  generated_at_ms: number;
  warning: string;
}

export interface RunSummary {
  run_id: string;
  status: string;
  episodes_done: number;
  created_at_ms: number;
  latest: EpisodeEvent | null;
}

export interface RunDetail extends RunSummary {
  config: Record<string, string>;
  solved_threshold: number;
}

/** Editable subset of the training config exposed by the launch form. */
export interface LaunchForm {
  episodes: number;
  num_channels: number;
  steps_per_episode: number;
  switching_cost: number;
  jammer_kind: string;
  solved_threshold: number;
  rolling_window: number;
  seed: number;
}

export interface FieldError {
  field: string;
  message: string;
}
