/**
 * Deterministic SVG figures for simulator results.
 *
 * Every plotted datum is annotated with data-* attributes carrying the
 * exact number parsed from the CSV (via String(value)); the test suite
 * re-extracts those and compares against the source files, so a chart
 * can never silently rescale or reinterpret a result.
 */

export interface BarSeries {
  label: string;
  values: Map<string, number>;
}

export interface CdfPoint {
  percentile: number;
  value: number;
}

export interface CdfSeries {
  label: string;
  points: CdfPoint[];
}

export interface LinePoint {
  x: number;
  value: number;
}

const PALETTE = ['#2563eb', '#dc2626', '#16a34a', '#9333ea', '#ea580c', '#0891b2'];

const FONT = 'font-family="Helvetica, Arial, sans-serif"';

function esc(s: string): string {
  return s
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}

function color(i: number): string {
  return PALETTE[i % PALETTE.length]!;
}

/** Short human label; the exact value lives in the data-value attribute. */
function fmt(v: number): string {
  if (v === 0) return '0';
  const abs = Math.abs(v);
  if (abs >= 1e9) return `${(v / 1e9).toPrecision(3)}G`;
  if (abs >= 1e6) return `${(v / 1e6).toPrecision(3)}M`;
  if (abs >= 1e3) return `${(v / 1e3).toPrecision(3)}k`;
  return `${Number(v.toPrecision(3))}`;
}

function svgOpen(width: number, height: number, title: string): string {
  return (
    `<?xml version="1.0" encoding="UTF-8"?>\n` +
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
    `viewBox="0 0 ${width} ${height}" ${FONT}>\n` +
    `<rect width="100%" height="100%" fill="white"/>\n` +
    `<text x="${width / 2}" y="22" text-anchor="middle" font-size="15" font-weight="bold">${esc(title)}</text>\n`
  );
}

function legend(labels: string[], x: number, y: number): string {
  let out = '';
  labels.forEach((label, i) => {
    const ly = y + i * 18;
    out += `<rect x="${x}" y="${ly}" width="12" height="12" fill="${color(i)}"/>\n`;
    out += `<text x="${x + 17}" y="${ly + 10}" font-size="11">${esc(label)}</text>\n`;
  });
  return out;
}

/**
 * One panel per metric, one bar per series within it. Bars are scaled
 * to the panel's own maximum since the metrics live on different
 * scales.
 */
export function groupedBars(
  series: BarSeries[],
  metrics: string[],
  title = 'Transport comparison',
): string {
  if (series.length === 0) throw new Error('no series to plot');
  for (const s of series) {
    for (const m of metrics) {
      if (!s.values.has(m)) {
        throw new Error(`series '${s.label}' is missing metric '${m}'`);
      }
    }
  }
  const panelW = 170;
  const panelH = 180;
  const margin = { top: 40, left: 45, gap: 30, bottom: 50 };
  const width = margin.left + metrics.length * (panelW + margin.gap) + 130;
  const height = margin.top + panelH + margin.bottom;
  let svg = svgOpen(width, height, title);

  metrics.forEach((metric, mi) => {
    const x0 = margin.left + mi * (panelW + margin.gap);
    const y0 = margin.top;
    const max = Math.max(...series.map((s) => s.values.get(metric)!));
    const scale = max > 0 ? panelH / max : 0;
    const slot = panelW / series.length;
    const barW = slot * 0.7;

    svg += `<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${y0 + panelH}" stroke="#444"/>\n`;
    svg += `<line x1="${x0}" y1="${y0 + panelH}" x2="${x0 + panelW}" y2="${y0 + panelH}" stroke="#444"/>\n`;
    for (const f of [0.25, 0.5, 0.75, 1.0]) {
      const gy = y0 + panelH - panelH * f;
      svg += `<line x1="${x0}" y1="${gy}" x2="${x0 + panelW}" y2="${gy}" stroke="#ddd"/>\n`;
      svg += `<text x="${x0 - 4}" y="${gy + 3}" text-anchor="end" font-size="9" fill="#666">${fmt(max * f)}</text>\n`;
    }
    svg += `<text x="${x0 + panelW / 2}" y="${y0 + panelH + 34}" text-anchor="middle" font-size="11">${esc(metric)}</text>\n`;

    series.forEach((s, si) => {
      const v = s.values.get(metric)!;
      const h = v * scale;
      const bx = x0 + si * slot + (slot - barW) / 2;
      const by = y0 + panelH - h;
      svg +=
        `<rect x="${bx.toFixed(2)}" y="${by.toFixed(2)}" width="${barW.toFixed(2)}" ` +
        `height="${h.toFixed(2)}" fill="${color(si)}" ` +
        `data-metric="${esc(metric)}" data-label="${esc(s.label)}" data-value="${v}"/>\n`;
      svg += `<text x="${(bx + barW / 2).toFixed(2)}" y="${(by - 3).toFixed(2)}" text-anchor="middle" font-size="8" fill="#333">${fmt(v)}</text>\n`;
    });
  });

  svg += legend(series.map((s) => s.label), width - 120, margin.top);
  return svg + '</svg>\n';
}

/**
 * Tail percentiles as a CDF: x is the measured value, y the percentile.
 * Each marker carries the exact (percentile, value) pair it encodes.
 */
export function tailCdf(
  series: CdfSeries[],
  title = 'Single-packet completion tail',
  xLabel = 'fct_ns',
): string {
  if (series.length === 0) throw new Error('no series to plot');
  const points = series.flatMap((s) => s.points);
  if (points.length === 0) throw new Error('no tail points to plot');
  const plotW = 420;
  const plotH = 220;
  const margin = { top: 40, left: 60, bottom: 50 };
  const width = margin.left + plotW + 150;
  const height = margin.top + plotH + margin.bottom;

  const xMax = Math.max(...points.map((p) => p.value));
  const pMin = Math.min(...points.map((p) => p.percentile));
  const pMax = Math.max(...points.map((p) => p.percentile));
  const px = (v: number) => margin.left + (xMax > 0 ? (v / xMax) * plotW : 0);
  const py = (p: number) =>
    margin.top + plotH - (pMax > pMin ? ((p - pMin) / (pMax - pMin)) * plotH : 0);

  let svg = svgOpen(width, height, title);
  svg += `<line x1="${margin.left}" y1="${margin.top}" x2="${margin.left}" y2="${margin.top + plotH}" stroke="#444"/>\n`;
  svg += `<line x1="${margin.left}" y1="${margin.top + plotH}" x2="${margin.left + plotW}" y2="${margin.top + plotH}" stroke="#444"/>\n`;
  for (const f of [0, 0.25, 0.5, 0.75, 1.0]) {
    const gx = margin.left + plotW * f;
    svg += `<line x1="${gx}" y1="${margin.top}" x2="${gx}" y2="${margin.top + plotH}" stroke="#eee"/>\n`;
    svg += `<text x="${gx}" y="${margin.top + plotH + 16}" text-anchor="middle" font-size="9" fill="#666">${fmt(xMax * f)}</text>\n`;
  }
  svg += `<text x="${margin.left + plotW / 2}" y="${margin.top + plotH + 36}" text-anchor="middle" font-size="11">${esc(xLabel)}</text>\n`;
  svg += `<text x="16" y="${margin.top + plotH / 2}" font-size="11" transform="rotate(-90 16 ${margin.top + plotH / 2})" text-anchor="middle">percentile</text>\n`;

  series.forEach((s, si) => {
    const sorted = [...s.points].sort((a, b) => a.percentile - b.percentile);
    const path = sorted
      .map((p, i) => `${i === 0 ? 'M' : 'L'}${px(p.value).toFixed(2)} ${py(p.percentile).toFixed(2)}`)
      .join(' ');
    svg += `<path d="${path}" fill="none" stroke="${color(si)}" stroke-width="1.5"/>\n`;
    for (const p of sorted) {
      svg +=
        `<circle cx="${px(p.value).toFixed(2)}" cy="${py(p.percentile).toFixed(2)}" r="3" fill="${color(si)}" ` +
        `data-label="${esc(s.label)}" data-percentile="${p.percentile}" data-value="${p.value}"/>\n`;
      svg += `<text x="${(px(p.value) + 5).toFixed(2)}" y="${(py(p.percentile) - 5).toFixed(2)}" font-size="8" fill="#555">p${p.percentile}</text>\n`;
    }
  });

  svg += legend(series.map((s) => s.label), margin.left + plotW + 20, margin.top);
  return svg + '</svg>\n';
}

/**
 * A single series over an integer x axis (burst fan-in), with a
 * reference line at y=1 when ratios are being plotted.
 */
export function ratioLine(
  points: LinePoint[],
  title = 'Burst completion ratio',
  xLabel = 'fan_in',
  yLabel = 'ratio',
): string {
  if (points.length === 0) throw new Error('no points to plot');
  const plotW = 360;
  const plotH = 200;
  const margin = { top: 40, left: 60, bottom: 50 };
  const width = margin.left + plotW + 40;
  const height = margin.top + plotH + margin.bottom;

  const xs = points.map((p) => p.x);
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  const yTop = Math.max(1.2, ...points.map((p) => p.value)) * 1.05;
  const px = (x: number) =>
    margin.left + (xMax > xMin ? ((x - xMin) / (xMax - xMin)) * plotW : plotW / 2);
  const py = (v: number) => margin.top + plotH - (v / yTop) * plotH;

  let svg = svgOpen(width, height, title);
  svg += `<line x1="${margin.left}" y1="${margin.top}" x2="${margin.left}" y2="${margin.top + plotH}" stroke="#444"/>\n`;
  svg += `<line x1="${margin.left}" y1="${margin.top + plotH}" x2="${margin.left + plotW}" y2="${margin.top + plotH}" stroke="#444"/>\n`;
  const one = py(1);
  svg += `<line x1="${margin.left}" y1="${one.toFixed(2)}" x2="${margin.left + plotW}" y2="${one.toFixed(2)}" stroke="#999" stroke-dasharray="5,4"/>\n`;
  svg += `<text x="${margin.left + plotW + 4}" y="${(one + 3).toFixed(2)}" font-size="9" fill="#666">1.0</text>\n`;
  svg += `<text x="${margin.left + plotW / 2}" y="${margin.top + plotH + 34}" text-anchor="middle" font-size="11">${esc(xLabel)}</text>\n`;
  svg += `<text x="16" y="${margin.top + plotH / 2}" font-size="11" transform="rotate(-90 16 ${margin.top + plotH / 2})" text-anchor="middle">${esc(yLabel)}</text>\n`;

  const sorted = [...points].sort((a, b) => a.x - b.x);
  const path = sorted
    .map((p, i) => `${i === 0 ? 'M' : 'L'}${px(p.x).toFixed(2)} ${py(p.value).toFixed(2)}`)
    .join(' ');
  svg += `<path d="${path}" fill="none" stroke="${color(0)}" stroke-width="1.5"/>\n`;
  for (const p of sorted) {
    svg += `<text x="${px(p.x).toFixed(2)}" y="${margin.top + plotH + 16}" text-anchor="middle" font-size="9" fill="#666">${p.x}</text>\n`;
    svg +=
      `<circle cx="${px(p.x).toFixed(2)}" cy="${py(p.value).toFixed(2)}" r="3.5" fill="${color(0)}" ` +
      `data-x="${p.x}" data-value="${p.value}"/>\n`;
    svg += `<text x="${px(p.x).toFixed(2)}" y="${(py(p.value) - 8).toFixed(2)}" text-anchor="middle" font-size="9" fill="#333">${fmt(p.value)}</text>\n`;
  }
  return svg + '</svg>\n';
}
