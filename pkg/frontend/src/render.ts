/**
 * From an input list and a chart kind to an SVG on disk.
 */

import * as fs from 'fs';
import * as path from 'path';

import {
  BarSeries,
  CdfSeries,
  groupedBars,
  ratioLine,
  tailCdf,
} from './charts.js';
import { keyValueTable, numberColumn, parseCsv } from './csv.js';

export type ChartKind = 'bars' | 'cdf' | 'line';

export interface PlotSpec {
  kind: ChartKind;
  inputs: string[];
  out: string;
  /** bars only; must exist in every input summary */
  metrics?: string[];
  title?: string;
}

export const DEFAULT_METRICS = ['avg_slowdown', 'avg_fct_ns', 'p99_fct_ns'];

/**
 * Variant name for a file: the parent directory when the file has one
 * of the standard names the CLI writes, otherwise the file stem.
 */
export function labelFor(input: string): string {
  const base = path.basename(input);
  if (base === 'summary.csv' || base === 'tail.csv') {
    const dir = path.basename(path.dirname(input));
    if (dir && dir !== '.') return dir;
  }
  return base.replace(/\.csv$/, '');
}

export function buildSvg(spec: PlotSpec): string {
  if (spec.inputs.length === 0) throw new Error('no input files');
  if (spec.kind === 'bars') {
    const metrics = spec.metrics ?? DEFAULT_METRICS;
    const series: BarSeries[] = spec.inputs.map((input) => {
      const values = keyValueTable(input);
      for (const m of metrics) {
        if (!values.has(m)) {
          throw new Error(`${input}: no metric '${m}' in summary`);
        }
      }
      return { label: labelFor(input), values };
    });
    return groupedBars(series, metrics, spec.title ?? 'Transport comparison');
  }
  if (spec.kind === 'cdf') {
    const series: CdfSeries[] = spec.inputs.map((input) => {
      const table = parseCsv(input);
      const percentiles = numberColumn(table, 'percentile');
      const values = numberColumn(table, 'fct_ns');
      return {
        label: labelFor(input),
        points: percentiles.map((p, i) => ({ percentile: p, value: values[i]! })),
      };
    });
    return tailCdf(series, spec.title ?? 'Single-packet completion tail');
  }
  const input = spec.inputs[0]!;
  const table = parseCsv(input);
  const xs = numberColumn(table, 'fan_in');
  const ratios = numberColumn(table, 'ratio');
  return ratioLine(
    xs.map((x, i) => ({ x, value: ratios[i]! })),
    spec.title ?? 'Burst completion ratio',
  );
}

export function render(spec: PlotSpec): string {
  const svg = buildSvg(spec);
  fs.mkdirSync(path.dirname(path.resolve(spec.out)), { recursive: true });
  fs.writeFileSync(spec.out, svg);
  return svg;
}
