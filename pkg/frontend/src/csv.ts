/**
 * Strict reader for the simulator's CSV outputs.
 *
 * All files are plain comma-separated with a header row and no quoting
 * (the writers never emit commas inside fields). Errors carry file and
 * line context so a bad path or a schema drift is diagnosable from the
 * message alone.
 */

import * as fs from 'fs';

export interface Table {
  path: string;
  header: string[];
  rows: string[][];
}

export class CsvError extends Error {}

export function parseCsv(path: string, text?: string): Table {
  const content = text ?? fs.readFileSync(path, 'utf-8');
  // csv.writer emits \r\n regardless of platform
  const lines = content.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) throw new CsvError(`${path}: empty file`);
  const header = lines[0]!.split(',');
  const rows: string[][] = [];
  for (let i = 1; i < lines.length; i++) {
    const fields = lines[i]!.split(',');
    if (fields.length !== header.length) {
      throw new CsvError(
        `${path}:${i + 1}: expected ${header.length} fields, got ${fields.length}`,
      );
    }
    rows.push(fields);
  }
  return { path, header, rows };
}

export function columnIndex(table: Table, name: string): number {
  const idx = table.header.indexOf(name);
  if (idx < 0) {
    throw new CsvError(
      `${table.path}: no column '${name}' (have: ${table.header.join(', ')})`,
    );
  }
  return idx;
}

function toNumber(table: Table, row: number, col: number): number {
  const raw = table.rows[row]![col]!;
  const value = Number(raw);
  if (!Number.isFinite(value)) {
    throw new CsvError(
      `${table.path}:${row + 2}: '${raw}' in column '${table.header[col]}' is not a number`,
    );
  }
  return value;
}

export function numberColumn(table: Table, name: string): number[] {
  const idx = columnIndex(table, name);
  return table.rows.map((_, i) => toNumber(table, i, idx));
}

export function stringColumn(table: Table, name: string): string[] {
  const idx = columnIndex(table, name);
  return table.rows.map((r) => r[idx]!);
}

/**
 * Read a metric,value file (the run summary schema) into a map.
 * 'undefined' values (empty runs) are omitted.
 */
export function keyValueTable(path: string): Map<string, number> {
  const table = parseCsv(path);
  const metric = columnIndex(table, 'metric');
  const value = columnIndex(table, 'value');
  const out = new Map<string, number>();
  for (let i = 0; i < table.rows.length; i++) {
    const raw = table.rows[i]![value]!;
    if (raw === 'undefined') continue;
    out.set(table.rows[i]![metric]!, toNumber(table, i, value));
  }
  return out;
}
