/**
 * plotkit: turn simulator CSVs into SVG figures.
 *
 * Usage:
 *   plotkit bars --out fig.svg run/irn/summary.csv run/roce_pfc/summary.csv
 *   plotkit cdf  --out tail.svg run/irn/tail.csv run/roce_pfc/tail.csv
 *   plotkit line --out incast.svg incast/rct_ratio.csv
 *
 * Options:
 *   --out FILE        output SVG path (required)
 *   --metrics a,b,c   bars: metrics to panel (default: the three
 *                     headline metrics)
 *   --title TEXT      figure title
 */

import { ChartKind, PlotSpec, render } from './render.js';

const KINDS: ChartKind[] = ['bars', 'cdf', 'line'];

export function parseArgs(argv: string[]): PlotSpec {
  const kind = argv[0];
  if (!kind || !KINDS.includes(kind as ChartKind)) {
    throw new Error(`usage: plotkit <${KINDS.join('|')}> --out FILE input.csv...`);
  }
  const spec: PlotSpec = { kind: kind as ChartKind, inputs: [], out: '' };
  for (let i = 1; i < argv.length; i++) {
    const arg = argv[i]!;
    if (arg === '--out') {
      spec.out = argv[++i] ?? '';
    } else if (arg === '--metrics') {
      spec.metrics = (argv[++i] ?? '').split(',').filter((m) => m.length > 0);
    } else if (arg === '--title') {
      spec.title = argv[++i];
    } else if (arg.startsWith('--')) {
      throw new Error(`unknown option ${arg}`);
    } else {
      spec.inputs.push(arg);
    }
  }
  if (!spec.out) throw new Error('--out is required');
  if (spec.inputs.length === 0) throw new Error('no input files');
  return spec;
}

export function main(argv: string[]): number {
  try {
    const spec = parseArgs(argv);
    render(spec);
    console.log(`wrote ${spec.out}`);
    return 0;
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 2;
  }
}

