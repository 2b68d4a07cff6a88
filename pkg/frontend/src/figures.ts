/**
 * Figure catalogue. Four dimension-scaling figures (one line per
 * sizing regime, dimension on a log-scaled axis) and the sequential
 * logistic-inference trace (posterior mean +/- sd per coordinate
 * against observations assimilated).
 */

import { aggregateScaling, Aggregation, GroupPoint, Metric, regimesOf } from "./aggregate.js";
import { parseScalingCsv, parseSequenceCsv } from "./csv.js";
import { BandSeries, renderChart, Series } from "./svg.js";

export const FIGURE_KINDS = ["steps", "roots", "mse", "logzvar", "sequence"] as const;
export type FigureKind = (typeof FIGURE_KINDS)[number];

const PALETTE = ["#4467c4", "#c44e52", "#2e8b57", "#8a5cb8", "#c98a1e", "#4aa3a3"];

interface ScalingFigure {
  metric: Metric;
  aggregation: Aggregation;
  title: string;
  yLabel: string;
}

const SCALING_FIGURES: Record<Exclude<FigureKind, "sequence">, ScalingFigure> = {
  steps: {
    metric: "T",
    aggregation: "mean",
    title: "Bridging steps vs dimension",
    yLabel: "mean number of steps T",
  },
  roots: {
    metric: "roots",
    aggregation: "mean",
    title: "Terminal lineage diversity vs dimension",
    yLabel: "mean distinct roots",
  },
  mse: {
    metric: "mse_mean",
    aggregation: "mean",
    title: "Mean estimate error vs dimension",
    yLabel: "mean squared error",
  },
  logzvar: {
    metric: "log_z",
    aggregation: "variance",
    title: "log Z variability vs dimension",
    yLabel: "sample variance of log Z",
  },
};

/** Aggregated points behind a scaling figure, for independent checks. */
export function scalingFigureData(kind: Exclude<FigureKind, "sequence">, csvText: string): GroupPoint[] {
  const fig = SCALING_FIGURES[kind];
  return aggregateScaling(parseScalingCsv(csvText), fig.metric, fig.aggregation);
}

function renderScalingFigure(kind: Exclude<FigureKind, "sequence">, csvText: string): string {
  const fig = SCALING_FIGURES[kind];
  const points = scalingFigureData(kind, csvText);
  const series: Series[] = regimesOf(points).map((regime, i) => ({
    label: regime,
    color: PALETTE[i % PALETTE.length],
    points: points
      .filter((p) => p.regime === regime)
      .map((p) => ({ x: p.d, y: p.value })),
  }));
  return renderChart({
    title: fig.title,
    xLabel: "dimension d",
    yLabel: fig.yLabel,
    xScale: "log2",
    series,
  });
}

function renderSequenceFigure(csvText: string): string {
  const rows = parseSequenceCsv(csvText);
  const dim = rows[0].mean.length;
  const series: Series[] = [];
  const bands: BandSeries[] = [];
  for (let j = 0; j < dim; j++) {
    const color = PALETTE[j % PALETTE.length];
    series.push({
      label: `coordinate ${j}`,
      color,
      points: rows.map((r) => ({ x: r.observations, y: r.mean[j] })),
    });
    bands.push({
      label: `coordinate ${j}`,
      color,
      points: rows.map((r) => ({
        x: r.observations,
        lo: r.mean[j] - r.sd[j],
        hi: r.mean[j] + r.sd[j],
      })),
    });
  }
  return renderChart({
    title: "Posterior mean +/- sd vs observations assimilated",
    xLabel: "observations assimilated",
    yLabel: "posterior mean",
    xScale: "linear",
    series,
    bands,
  });
}

export function renderFigure(kind: FigureKind, csvText: string): string {
  if (kind === "sequence") return renderSequenceFigure(csvText);
  return renderScalingFigure(kind, csvText);
}
