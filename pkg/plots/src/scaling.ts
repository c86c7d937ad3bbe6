import * as fs from "fs";
import * as path from "path";

import { PALETTE, Series, renderChart } from "./chart";
import { readCsv, requireColumns, requireRows } from "./csv";

/** Discrepancy-vs-k scaling across algorithms: median with interquartile
 * bars per (alg, n, k) cell, plus c*sqrt(k) and c*sqrt(k ln n) reference
 * curves least-squares fitted to the walk series. */

function quantile(sorted: number[], q: number): number {
  if (sorted.length === 1) return sorted[0];
  const pos = (sorted.length - 1) * q;
  const lo = Math.floor(pos);
  const hi = Math.ceil(pos);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo);
}

interface Cell {
  alg: string;
  n: number;
  k: number;
  median: number;
  q1: number;
  q3: number;
}

export function plotScaling(csvPath: string, outDir: string): string[] {
  const table = readCsv(csvPath);
  requireColumns(table, ["alg", "n", "k", "seed", "disc"]);
  requireRows(table);

  const groups = new Map<string, number[]>();
  for (let i = 0; i < table.rowCount; i++) {
    const key = `${table.text["alg"][i]}|${table.numeric["n"][i]}|${table.numeric["k"][i]}`;
    if (!groups.has(key)) groups.set(key, []);
    groups.get(key)!.push(table.numeric["disc"][i]);
  }
  const cells: Cell[] = [];
  for (const [key, discs] of groups) {
    const [alg, n, k] = key.split("|");
    const sorted = [...discs].sort((a, b) => a - b);
    cells.push({
      alg,
      n: Number(n),
      k: Number(k),
      median: quantile(sorted, 0.5),
      q1: quantile(sorted, 0.25),
      q3: quantile(sorted, 0.75),
    });
  }
  cells.sort((a, b) =>
    a.alg.localeCompare(b.alg) || a.n - b.n || a.k - b.k,
  );

  const seriesKeys = [...new Set(cells.map((c) => `${c.alg}|${c.n}`))];
  const series: Series[] = seriesKeys.map((key, idx) => {
    const [alg, n] = key.split("|");
    const pts = cells.filter((c) => c.alg === alg && c.n === Number(n));
    return {
      label: seriesKeys.length > [...new Set(cells.map((c) => c.alg))].length
        ? `${alg} n=${n}`
        : alg,
      xs: pts.map((c) => c.k),
      ys: pts.map((c) => c.median),
      barLo: pts.map((c) => c.q1),
      barHi: pts.map((c) => c.q3),
      color: PALETTE[idx % PALETTE.length],
      markers: true,
    };
  });

  // Reference curves fitted on the walk cells (if any).
  const walkCells = cells.filter((c) => c.alg === "walk");
  if (walkCells.length > 0) {
    const fit = (f: (c: Cell) => number) => {
      let num = 0;
      let den = 0;
      for (const c of walkCells) {
        num += c.median * f(c);
        den += f(c) ** 2;
      }
      return den > 0 ? num / den : 0;
    };
    const fSqrtK = (c: Cell) => Math.sqrt(c.k);
    const fSqrtKLogN = (c: Cell) => Math.sqrt(c.k * Math.log(c.n));
    const c1 = fit(fSqrtK);
    const c2 = fit(fSqrtKLogN);
    const ordered = [...walkCells].sort((a, b) => a.k - b.k);
    series.push({
      label: `${c1.toFixed(2)}*sqrt(k)`,
      xs: ordered.map((c) => c.k),
      ys: ordered.map((c) => c1 * fSqrtK(c)),
      color: PALETTE[6],
      dashed: true,
    });
    series.push({
      label: `${c2.toFixed(2)}*sqrt(k ln n)`,
      xs: ordered.map((c) => c.k),
      ys: ordered.map((c) => c2 * fSqrtKLogN(c)),
      color: PALETTE[7],
      dashed: true,
    });
  }

  fs.mkdirSync(outDir, { recursive: true });
  const png = renderChart({
    title: "discrepancy scaling by column degree",
    xLabel: "k",
    yLabel: "disc",
    series,
  });
  const out = path.join(outDir, "scaling.png");
  fs.writeFileSync(out, png);
  return [out];
}
