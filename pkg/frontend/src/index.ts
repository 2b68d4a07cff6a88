export { CsvError, parseScalingCsv, parseSequenceCsv } from "./csv.js";
export type { ScalingRow, SequenceRow } from "./csv.js";
export { aggregateScaling, mean, sampleVariance, regimesOf } from "./aggregate.js";
export type { Aggregation, GroupPoint, Metric } from "./aggregate.js";
export { renderChart, niceTicks } from "./svg.js";
export type { ChartSpec, Series, BandSeries } from "./svg.js";
export { FIGURE_KINDS, renderFigure, scalingFigureData } from "./figures.js";
export type { FigureKind } from "./figures.js";
export { run } from "./cli.js";
