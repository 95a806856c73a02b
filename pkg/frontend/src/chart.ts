import type { RunView } from "./model.js";

/**
 * Pure chart geometry: three series against episode index, returns and
 * rolling average on the left axis (0-100), epsilon on the right (0-1),
 * plus a horizontal solved-threshold line. The DOM layer only has to drop
 * the computed paths into an SVG.
 */

export interface ChartGeometry {
  width: number;
  height: number;
  padLeft: number;
  padRight: number;
  padTop: number;
  padBottom: number;
}

export const DEFAULT_GEOMETRY: ChartGeometry = {
  width: 720,
  height: 320,
  padLeft: 44,
  padRight: 44,
  padTop: 12,
  padBottom: 28,
};

export const LEFT_AXIS_MAX = 100; // returns live on the 0-100 episode-reward scale
export const RIGHT_AXIS_MAX = 1; // epsilon

export interface ChartModel {
  returnPath: string;
  rollingPath: string;
  epsilonPath: string;
  thresholdY: number;
  pointCount: number;
  xTicks: { x: number; label: string }[];
  leftTicks: { y: number; label: string }[];
  rightTicks: { y: number; label: string }[];
}

export function xScale(episode: number, maxEpisode: number, g: ChartGeometry): number {
  const span = g.width - g.padLeft - g.padRight;
  const denom = Math.max(maxEpisode, 1);
  return g.padLeft + (episode / denom) * span;
}

export function yLeft(value: number, g: ChartGeometry): number {
  const span = g.height - g.padTop - g.padBottom;
  const clamped = Math.max(0, Math.min(LEFT_AXIS_MAX, value));
  return g.padTop + (1 - clamped / LEFT_AXIS_MAX) * span;
}

export function yRight(value: number, g: ChartGeometry): number {
  const span = g.height - g.padTop - g.padBottom;
  const clamped = Math.max(0, Math.min(RIGHT_AXIS_MAX, value));
  return g.padTop + (1 - clamped / RIGHT_AXIS_MAX) * span;
}

function path(points: [number, number][]): string {
  if (points.length === 0) return "";
  return points
    .map(([x, y], i) => `${i === 0 ? "M" : "L"}${x.toFixed(1)},${y.toFixed(1)}`)
    .join(" ");
}

export function buildChartModel(view: RunView, g: ChartGeometry = DEFAULT_GEOMETRY): ChartModel {
  const maxEpisode = view.episodes.length > 0 ? view.episodes[view.episodes.length - 1] : 1;
  const xs = view.episodes.map((e) => xScale(e, maxEpisode, g));
  const returnPts: [number, number][] = xs.map((x, i) => [x, yLeft(view.returns[i], g)]);
  const rollingPts: [number, number][] = xs.map((x, i) => [x, yLeft(view.rolling[i], g)]);
  const epsilonPts: [number, number][] = xs.map((x, i) => [x, yRight(view.epsilon[i], g)]);

  const tickCount = 5;
  const xTicks = [];
  for (let i = 0; i <= tickCount; i++) {
    const ep = Math.round((maxEpisode * i) / tickCount);
    xTicks.push({ x: xScale(ep, maxEpisode, g), label: String(ep) });
  }
  const leftTicks = [0, 25, 50, 75, 100].map((v) => ({ y: yLeft(v, g), label: String(v) }));
  const rightTicks = [0, 0.25, 0.5, 0.75, 1].map((v) => ({ y: yRight(v, g), label: v.toFixed(2) }));

  return {
    returnPath: path(returnPts),
    rollingPath: path(rollingPts),
    epsilonPath: path(epsilonPts),
    thresholdY: yLeft(view.solvedThreshold, g),
    pointCount: view.episodes.length,
    xTicks,
    leftTicks,
    rightTicks,
  };
}
