/**
 * The contract under test: every number drawn in a figure is exactly a
 * number from the input CSV. Values are re-extracted from the rendered
 * SVG's data-* attributes and compared against the files.
 */

import * as fs from 'fs';

import { describe, expect, it } from 'vitest';

import { parseCsv } from '../src/csv';
import { DEFAULT_METRICS, buildSvg, labelFor } from '../src/render';
import { parseArgs, main } from '../src/cli';

const GOLDEN = {
  summaries: ['test/golden/irn/summary.csv', 'test/golden/roce_pfc/summary.csv'],
  tails: ['test/golden/irn/tail.csv', 'test/golden/roce_pfc/tail.csv'],
  rct: 'test/golden/rct_ratio.csv',
};

function extract(svg: string, tag: string): Record<string, string>[] {
  const out: Record<string, string>[] = [];
  const tagRe = new RegExp(`<${tag} ([^>]*data-[^>]*)/>`, 'g');
  for (const m of svg.matchAll(tagRe)) {
    const attrs: Record<string, string> = {};
    for (const a of m[1]!.matchAll(/data-([a-z]+)="([^"]*)"/g)) {
      attrs[a[1]!] = a[2]!;
    }
    out.push(attrs);
  }
  return out;
}

function summaryValue(path: string, metric: string): number {
  const t = parseCsv(path);
  const row = t.rows.find((r) => r[0] === metric);
  if (!row) throw new Error(`${path}: no ${metric}`);
  return Number(row[1]);
}

describe('grouped bars from golden summaries', () => {
  const svg = buildSvg({ kind: 'bars', inputs: GOLDEN.summaries, out: '' });
  const bars = extract(svg, 'rect');

  it('plots one bar per metric per variant', () => {
    expect(bars.length).toBe(DEFAULT_METRICS.length * GOLDEN.summaries.length);
  });

  it('plots exactly the CSV values', () => {
    for (const input of GOLDEN.summaries) {
      const label = labelFor(input);
      for (const metric of DEFAULT_METRICS) {
        const bar = bars.find(
          (b) => b.label === label && b.metric === metric,
        );
        expect(bar, `${label}/${metric}`).toBeDefined();
        expect(Number(bar!.value)).toBe(summaryValue(input, metric));
      }
    }
  });

  it('fails loudly when a metric is absent', () => {
    expect(() =>
      buildSvg({
        kind: 'bars',
        inputs: GOLDEN.summaries,
        out: '',
        metrics: ['avg_slowdown', 'nope'],
      }),
    ).toThrowError(/no metric 'nope'/);
  });
});

describe('tail cdf from golden tails', () => {
  const svg = buildSvg({ kind: 'cdf', inputs: GOLDEN.tails, out: '' });
  const marks = extract(svg, 'circle');

  it('plots every percentile row of every variant', () => {
    for (const input of GOLDEN.tails) {
      const t = parseCsv(input);
      const label = labelFor(input);
      const mine = marks.filter((m) => m.label === label);
      expect(mine.length).toBe(t.rows.length);
      for (const row of t.rows) {
        const mark = mine.find((m) => Number(m.percentile) === Number(row[0]));
        expect(mark, `${label} p${row[0]}`).toBeDefined();
        expect(Number(mark!.value)).toBe(Number(row[1]));
      }
    }
  });

  it('spans p90 to p99.9', () => {
    const ps = marks.map((m) => Number(m.percentile));
    expect(Math.min(...ps)).toBe(90);
    expect(Math.max(...ps)).toBe(99.9);
  });
});

describe('burst ratio line from golden ratios', () => {
  const svg = buildSvg({ kind: 'line', inputs: [GOLDEN.rct], out: '' });
  const marks = extract(svg, 'circle');

  it('plots the ratio for each fan-in', () => {
    const t = parseCsv(GOLDEN.rct);
    expect(marks.length).toBe(t.rows.length);
    for (const row of t.rows) {
      const mark = marks.find((m) => Number(m.x) === Number(row[0]));
      expect(mark, `fan-in ${row[0]}`).toBeDefined();
      expect(Number(mark!.value)).toBe(Number(row[3]));
    }
  });
});

describe('rendering is deterministic', () => {
  it('same inputs, same bytes', () => {
    const spec = { kind: 'bars' as const, inputs: GOLDEN.summaries, out: '' };
    expect(buildSvg(spec)).toBe(buildSvg(spec));
  });
});

describe('cli', () => {
  it('parses kind, output, metrics, and inputs', () => {
    const spec = parseArgs([
      'bars', '--out', 'x.svg', '--metrics', 'a,b', 'one.csv', 'two.csv',
    ]);
    expect(spec).toEqual({
      kind: 'bars',
      out: 'x.svg',
      metrics: ['a', 'b'],
      inputs: ['one.csv', 'two.csv'],
    });
  });

  it('rejects unknown kinds and options', () => {
    expect(() => parseArgs(['pie', '--out', 'x.svg', 'a.csv'])).toThrowError(/usage/);
    expect(() => parseArgs(['bars', '--wat', 'a.csv'])).toThrowError(/unknown option/);
    expect(() => parseArgs(['bars', 'a.csv'])).toThrowError(/--out is required/);
  });

  it('writes the figure end to end', () => {
    const out = 'test/tmp/bars.svg';
    fs.rmSync('test/tmp', { recursive: true, force: true });
    expect(main(['bars', '--out', out, ...GOLDEN.summaries])).toBe(0);
    const svg = fs.readFileSync(out, 'utf-8');
    expect(svg).toContain('<svg');
    expect(extract(svg, 'rect').length).toBe(6);
    fs.rmSync('test/tmp', { recursive: true, force: true });
  });

  it('turns errors into exit code 2', () => {
    expect(main(['bars', '--out', 'x.svg', 'no/such/file.csv'])).toBe(2);
  });
});
