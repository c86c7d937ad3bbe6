import * as fs from "fs";
import * as path from "path";

import { PALETTE, Series, renderChart } from "./chart";
import { Table, metaNumber, readCsv, requireColumns, requireRows } from "./csv";

/** One figure per tracked walk metric, with the reference envelopes the
 * analysis promises, drawn from the run's recorded parameters. */

interface Figure {
  name: string;
  needs: string[];
  build: (t: Table) => Parameters<typeof renderChart>[0];
}

function envelopeInputs(t: Table) {
  return {
    n: metaNumber(t, "n"),
    k: metaNumber(t, "k"),
    scale: metaNumber(t, "pot_scale"),
    b0: metaNumber(t, "b0"),
    beta: metaNumber(t, "beta"),
    guardLimit: metaNumber(t, "guard_limit"),
  };
}

const FIGURES: Figure[] = [
  {
    name: "potential.png",
    needs: ["t", "phi_total", "phi_max"],
    build: (t) => {
      const { guardLimit } = envelopeInputs(t);
      const xs = t.numeric["t"];
      const guard = xs.map(() => guardLimit);
      return {
        title: "total potential vs guard",
        xLabel: "t",
        yLabel: "phi",
        logY: true,
        series: [
          { label: "phi_total", xs, ys: t.numeric["phi_total"], color: PALETTE[0] },
          { label: "phi_max", xs, ys: t.numeric["phi_max"], color: PALETTE[2] },
          { label: "guard limit", xs, ys: guard, color: PALETTE[1], dashed: true },
        ] as Series[],
      };
    },
  },
  {
    name: "slack.png",
    needs: ["t", "s_min", "n_t"],
    build: (t) => {
      const { n, scale, b0 } = envelopeInputs(t);
      const xs = t.numeric["t"];
      const floor = t.numeric["n_t"].map(
        (nt) => (scale * b0) / (2 * scale + Math.log((100 * n) / Math.max(nt, 1))),
      );
      return {
        title: "minimum slack vs unblocked floor",
        xLabel: "t",
        yLabel: "slack",
        series: [
          { label: "s_min", xs, ys: t.numeric["s_min"], color: PALETTE[0] },
          { label: "unblocked floor", xs, ys: floor, color: PALETTE[1], dashed: true },
        ] as Series[],
      };
    },
  },
  {
    name: "column_weight.png",
    needs: ["t", "w_max"],
    build: (t) => {
      const { n, k, scale } = envelopeInputs(t);
      const xs = t.numeric["t"];
      const env =
        k * Math.exp(2 * scale) +
        10 * Math.exp(3 * scale) * Math.log(n) ** 2;
      return {
        title: "max column weight vs envelope",
        xLabel: "t",
        yLabel: "w",
        logY: true,
        series: [
          { label: "w_max", xs, ys: t.numeric["w_max"], color: PALETTE[0] },
          {
            label: "envelope", xs, ys: xs.map(() => env),
            color: PALETTE[1], dashed: true,
          },
        ] as Series[],
      };
    },
  },
  {
    name: "sigma.png",
    needs: ["t", "sigma_dang", "sigma_safe"],
    build: (t) => {
      const { k, beta } = envelopeInputs(t);
      const xs = t.numeric["t"];
      const bound = Math.sqrt(20 * k) * (1 + 2 * beta);
      return {
        title: "singular-value checkpoints",
        xLabel: "t",
        yLabel: "sigma",
        series: [
          { label: "sigma_dang", xs, ys: t.numeric["sigma_dang"], color: PALETTE[0] },
          { label: "sigma_safe", xs, ys: t.numeric["sigma_safe"], color: PALETTE[2] },
          {
            label: "sqrt(20k)(1+2b)", xs, ys: xs.map(() => bound),
            color: PALETTE[1], dashed: true,
          },
        ] as Series[],
      };
    },
  },
];

export function plotTelemetry(csvPath: string, outDir: string): string[] {
  const table = readCsv(csvPath);
  requireRows(table);
  fs.mkdirSync(outDir, { recursive: true });
  const written: string[] = [];
  for (const fig of FIGURES) {
    requireColumns(table, fig.needs);
    const png = renderChart(fig.build(table));
    const out = path.join(outDir, fig.name);
    fs.writeFileSync(out, png);
    written.push(out);
  }
  return written;
}
