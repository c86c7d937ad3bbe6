import * as fs from "fs";

/** Parsed CSV with leading `# key=value` metadata lines. */
export interface Table {
  meta: Record<string, string>;
  columns: string[];
  /** Numeric view of every cell (NaN where not numeric). */
  numeric: Record<string, number[]>;
  /** Raw string view of every cell. */
  text: Record<string, string[]>;
  rowCount: number;
}

export function parseCsv(content: string): Table {
  const meta: Record<string, string> = {};
  const lines = content.split(/\r?\n/);
  let i = 0;
  for (; i < lines.length; i++) {
    const line = lines[i].trim();
    if (line === "") continue;
    if (line.startsWith("#")) {
      const body = line.slice(1).trim();
      const eq = body.indexOf("=");
      if (eq > 0) {
        meta[body.slice(0, eq).trim()] = body.slice(eq + 1).trim();
      }
      continue;
    }
    break;
  }
  if (i >= lines.length) {
    throw new Error("empty CSV: no header line");
  }
  const columns = lines[i].split(",").map((c) => c.trim());
  const numeric: Record<string, number[]> = {};
  const text: Record<string, string[]> = {};
  for (const c of columns) {
    numeric[c] = [];
    text[c] = [];
  }
  let rowCount = 0;
  for (i += 1; i < lines.length; i++) {
    const line = lines[i].trim();
    if (line === "" || line.startsWith("#")) continue;
    const cells = line.split(",");
    if (cells.length !== columns.length) {
      throw new Error(
        `row ${rowCount + 1} has ${cells.length} cells, expected ${columns.length}`,
      );
    }
    columns.forEach((c, idx) => {
      const raw = cells[idx].trim();
      text[c].push(raw);
      numeric[c].push(raw === "" ? NaN : Number(raw));
    });
    rowCount++;
  }
  return { meta, columns, numeric, text, rowCount };
}

export function readCsv(path: string): Table {
  return parseCsv(fs.readFileSync(path, "utf-8"));
}

/** Throws naming the first missing column. */
export function requireColumns(table: Table, names: string[]): void {
  for (const name of names) {
    if (!table.columns.includes(name)) {
      throw new Error(`missing column: ${name}`);
    }
  }
}

export function requireRows(table: Table): void {
  if (table.rowCount === 0) {
    throw new Error("CSV has a header but no data rows");
  }
}

export function metaNumber(table: Table, key: string): number {
  const raw = table.meta[key];
  if (raw === undefined) {
    throw new Error(`missing metadata: ${key}`);
  }
  const value = Number(raw);
  if (!Number.isFinite(value)) {
    throw new Error(`metadata ${key} is not numeric: ${raw}`);
  }
  return value;
}
