/**
 * CSV reading for the frozen artifact schemas.
 *
 * Cell tokens are kept verbatim so the dump mode can re-emit plotted
 * series exactly as they appeared in the input file.
 */

export class CsvSchemaError extends Error {}

export interface CsvTable {
  path: string;
  header: string[];
  rows: string[][];
}

export function parseCsv(text: string, path = "<memory>"): CsvTable {
  const lines = text.split("\n").filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new CsvSchemaError(`${path}: empty file`);
  }
  const header = lines[0].split(",");
  const rows = lines.slice(1).map((line, i) => {
    const cells = line.split(",");
    if (cells.length !== header.length) {
      throw new CsvSchemaError(
        `${path}: row ${i + 1} has ${cells.length} cells, header has ${header.length}`
      );
    }
    return cells;
  });
  return { path, header, rows };
}

export function requireColumns(table: CsvTable, names: string[]): void {
  for (const name of names) {
    if (!table.header.includes(name)) {
      throw new CsvSchemaError(
        `${table.path}: missing column '${name}' (header: ${table.header.join(",")})`
      );
    }
  }
}

/** Raw string tokens of one column. */
export function rawColumn(table: CsvTable, name: string): string[] {
  requireColumns(table, [name]);
  const idx = table.header.indexOf(name);
  return table.rows.map((row) => row[idx]);
}

/** Parsed numeric values of one column. */
export function numericColumn(table: CsvTable, name: string): number[] {
  return rawColumn(table, name).map((tok, i) => {
    const v = Number(tok);
    if (!Number.isFinite(v)) {
      throw new CsvSchemaError(
        `${table.path}: column '${name}' row ${i + 1} is not finite: '${tok}'`
      );
    }
    return v;
  });
}

export function toCsvText(header: string[], rows: string[][]): string {
  return [header.join(","), ...rows.map((r) => r.join(","))].join("\n") + "\n";
}
