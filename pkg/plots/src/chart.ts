import { encodePng } from "./png";

/** Software line-chart rasterizer: axes, ticks, 5x7 bitmap labels, legend.
 * Pure function of its inputs, so figures regenerate byte-identically. */

export type Rgb = [number, number, number];

export interface Series {
  label: string;
  xs: number[];
  ys: number[];
  color: Rgb;
  dashed?: boolean;
  /** Optional vertical bars (e.g. interquartile band), same length as xs. */
  barLo?: number[];
  barHi?: number[];
  markers?: boolean;
}

export interface ChartOptions {
  title: string;
  xLabel: string;
  yLabel: string;
  series: Series[];
  width?: number;
  height?: number;
  logY?: boolean;
}

export const PALETTE: Rgb[] = [
  [31, 119, 180],
  [214, 39, 40],
  [44, 160, 44],
  [148, 103, 189],
  [255, 127, 14],
  [140, 86, 75],
  [23, 190, 207],
  [127, 127, 127],
];

// 5x7 glyphs, one string of 7 five-bit rows per character (1 = ink).
const FONT: Record<string, string[]> = {
  "0": ["01110", "10001", "10011", "10101", "11001", "10001", "01110"],
  "1": ["00100", "01100", "00100", "00100", "00100", "00100", "01110"],
  "2": ["01110", "10001", "00001", "00010", "00100", "01000", "11111"],
  "3": ["11111", "00010", "00100", "00010", "00001", "10001", "01110"],
  "4": ["00010", "00110", "01010", "10010", "11111", "00010", "00010"],
  "5": ["11111", "10000", "11110", "00001", "00001", "10001", "01110"],
  "6": ["00110", "01000", "10000", "11110", "10001", "10001", "01110"],
  "7": ["11111", "00001", "00010", "00100", "01000", "01000", "01000"],
  "8": ["01110", "10001", "10001", "01110", "10001", "10001", "01110"],
  "9": ["01110", "10001", "10001", "01111", "00001", "00010", "01100"],
  A: ["01110", "10001", "10001", "11111", "10001", "10001", "10001"],
  B: ["11110", "10001", "10001", "11110", "10001", "10001", "11110"],
  C: ["01110", "10001", "10000", "10000", "10000", "10001", "01110"],
  D: ["11100", "10010", "10001", "10001", "10001", "10010", "11100"],
  E: ["11111", "10000", "10000", "11110", "10000", "10000", "11111"],
  F: ["11111", "10000", "10000", "11110", "10000", "10000", "10000"],
  G: ["01110", "10001", "10000", "10111", "10001", "10001", "01111"],
  H: ["10001", "10001", "10001", "11111", "10001", "10001", "10001"],
  I: ["01110", "00100", "00100", "00100", "00100", "00100", "01110"],
  J: ["00111", "00010", "00010", "00010", "00010", "10010", "01100"],
  K: ["10001", "10010", "10100", "11000", "10100", "10010", "10001"],
  L: ["10000", "10000", "10000", "10000", "10000", "10000", "11111"],
  M: ["10001", "11011", "10101", "10101", "10001", "10001", "10001"],
  N: ["10001", "10001", "11001", "10101", "10011", "10001", "10001"],
  O: ["01110", "10001", "10001", "10001", "10001", "10001", "01110"],
  P: ["11110", "10001", "10001", "11110", "10000", "10000", "10000"],
  Q: ["01110", "10001", "10001", "10001", "10101", "10010", "01101"],
  R: ["11110", "10001", "10001", "11110", "10100", "10010", "10001"],
  S: ["01111", "10000", "10000", "01110", "00001", "00001", "11110"],
  T: ["11111", "00100", "00100", "00100", "00100", "00100", "00100"],
  U: ["10001", "10001", "10001", "10001", "10001", "10001", "01110"],
  V: ["10001", "10001", "10001", "10001", "10001", "01010", "00100"],
  W: ["10001", "10001", "10001", "10101", "10101", "10101", "01010"],
  X: ["10001", "10001", "01010", "00100", "01010", "10001", "10001"],
  Y: ["10001", "10001", "01010", "00100", "00100", "00100", "00100"],
  Z: ["11111", "00001", "00010", "00100", "01000", "10000", "11111"],
  " ": ["00000", "00000", "00000", "00000", "00000", "00000", "00000"],
  ".": ["00000", "00000", "00000", "00000", "00000", "01100", "01100"],
  ",": ["00000", "00000", "00000", "00000", "01100", "00100", "01000"],
  "-": ["00000", "00000", "00000", "11111", "00000", "00000", "00000"],
  _: ["00000", "00000", "00000", "00000", "00000", "00000", "11111"],
  "*": ["00000", "00100", "10101", "01110", "10101", "00100", "00000"],
  "(": ["00010", "00100", "01000", "01000", "01000", "00100", "00010"],
  ")": ["01000", "00100", "00010", "00010", "00010", "00100", "01000"],
  "=": ["00000", "00000", "11111", "00000", "11111", "00000", "00000"],
  "/": ["00001", "00010", "00100", "00100", "00100", "01000", "10000"],
  ":": ["00000", "01100", "01100", "00000", "01100", "01100", "00000"],
  "+": ["00000", "00100", "00100", "11111", "00100", "00100", "00000"],
  "^": ["00100", "01010", "10001", "00000", "00000", "00000", "00000"],
  "<": ["00010", "00100", "01000", "10000", "01000", "00100", "00010"],
  ">": ["01000", "00100", "00010", "00001", "00010", "00100", "01000"],
  "?": ["01110", "10001", "00001", "00110", "00100", "00000", "00100"],
};

class Canvas {
  readonly data: Uint8Array;

  constructor(readonly width: number, readonly height: number) {
    this.data = new Uint8Array(width * height * 3).fill(255);
  }

  set(x: number, y: number, [r, g, b]: Rgb): void {
    if (x < 0 || y < 0 || x >= this.width || y >= this.height) return;
    const i = (y * this.width + x) * 3;
    this.data[i] = r;
    this.data[i + 1] = g;
    this.data[i + 2] = b;
  }

  thick(x: number, y: number, color: Rgb): void {
    this.set(x, y, color);
    this.set(x + 1, y, color);
    this.set(x, y + 1, color);
  }

  line(x0: number, y0: number, x1: number, y1: number, color: Rgb,
       dashed = false, bold = false): void {
    let [ax, ay] = [Math.round(x0), Math.round(y0)];
    const [bx, by] = [Math.round(x1), Math.round(y1)];
    const dx = Math.abs(bx - ax);
    const dy = -Math.abs(by - ay);
    const sx = ax < bx ? 1 : -1;
    const sy = ay < by ? 1 : -1;
    let err = dx + dy;
    let step = 0;
    for (;;) {
      if (!dashed || step % 8 < 5) {
        if (bold) this.thick(ax, ay, color);
        else this.set(ax, ay, color);
      }
      if (ax === bx && ay === by) break;
      const e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        ax += sx;
      }
      if (e2 <= dx) {
        err += dx;
        ay += sy;
      }
      step++;
    }
  }

  text(x: number, y: number, msg: string, color: Rgb): void {
    let cx = x;
    for (const raw of msg.toUpperCase()) {
      const glyph = FONT[raw] ?? FONT["?"];
      for (let gy = 0; gy < 7; gy++) {
        for (let gx = 0; gx < 5; gx++) {
          if (glyph[gy][gx] === "1") this.set(cx + gx, y + gy, color);
        }
      }
      cx += 6;
    }
  }
}

export function textWidth(msg: string): number {
  return msg.length * 6;
}

function formatTick(v: number): string {
  if (v === 0) return "0";
  const mag = Math.abs(v);
  if (mag >= 1e5 || mag < 1e-3) {
    return v.toExponential(1).replace("e", "E");
  }
  const fixed = mag >= 100 ? v.toFixed(0) : mag >= 1 ? v.toFixed(1) : v.toFixed(3);
  return fixed.replace(/\.0+$/, "").replace(/(\.\d*?)0+$/, "$1");
}

function finiteExtent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (Number.isFinite(v)) {
      lo = Math.min(lo, v);
      hi = Math.max(hi, v);
    }
  }
  if (lo > hi) throw new Error("no finite data to plot");
  if (lo === hi) {
    const pad = lo === 0 ? 1 : Math.abs(lo) * 0.1;
    return [lo - pad, hi + pad];
  }
  return [lo, hi];
}

export function renderChart(opts: ChartOptions): Buffer {
  const width = opts.width ?? 860;
  const height = opts.height ?? 540;
  const canvas = new Canvas(width, height);
  const ml = 76;
  const mr = 22;
  const mt = 34;
  const mb = 52;
  const plotW = width - ml - mr;
  const plotH = height - mt - mb;
  const black: Rgb = [0, 0, 0];
  const grey: Rgb = [210, 210, 210];

  const allX: number[] = [];
  const allY: number[] = [];
  for (const s of opts.series) {
    allX.push(...s.xs);
    allY.push(...s.ys);
    if (s.barLo) allY.push(...s.barLo);
    if (s.barHi) allY.push(...s.barHi);
  }
  const [x0, x1] = finiteExtent(allX);
  let yVals = allY;
  if (opts.logY) {
    yVals = allY.filter((v) => v > 0).map(Math.log10);
    if (yVals.length === 0) throw new Error("log scale needs positive data");
  }
  let [y0, y1] = finiteExtent(yVals);
  if (!opts.logY) {
    const pad = (y1 - y0) * 0.06;
    y0 -= pad;
    y1 += pad;
  } else {
    y0 = Math.floor(y0);
    y1 = Math.ceil(y1 + 0.05);
  }

  const px = (x: number) => ml + ((x - x0) / (x1 - x0)) * plotW;
  const py = (y: number) => {
    const v = opts.logY ? Math.log10(y) : y;
    return mt + plotH - ((v - y0) / (y1 - y0)) * plotH;
  };

  // ticks and grid
  const xticks = 6;
  for (let i = 0; i <= xticks; i++) {
    const xv = x0 + ((x1 - x0) * i) / xticks;
    const gx = Math.round(px(xv));
    canvas.line(gx, mt, gx, mt + plotH, grey);
    const label = formatTick(xv);
    canvas.text(gx - textWidth(label) / 2, mt + plotH + 8, label, black);
  }
  if (opts.logY) {
    for (let d = Math.ceil(y0); d <= Math.floor(y1); d++) {
      const gy = Math.round(mt + plotH - ((d - y0) / (y1 - y0)) * plotH);
      canvas.line(ml, gy, ml + plotW, gy, grey);
      const label = `1E${d}`;
      canvas.text(ml - textWidth(label) - 6, gy - 3, label, black);
    }
  } else {
    const yticks = 6;
    for (let i = 0; i <= yticks; i++) {
      const yv = y0 + ((y1 - y0) * i) / yticks;
      const gy = Math.round(mt + plotH - ((yv - y0) / (y1 - y0)) * plotH);
      canvas.line(ml, gy, ml + plotW, gy, grey);
      const label = formatTick(yv);
      canvas.text(ml - textWidth(label) - 6, gy - 3, label, black);
    }
  }
  // axes frame
  canvas.line(ml, mt, ml, mt + plotH, black);
  canvas.line(ml, mt + plotH, ml + plotW, mt + plotH, black);

  // series
  for (const s of opts.series) {
    for (let i = 0; i + 1 < s.xs.length; i++) {
      const [xa, ya, xb, yb] = [s.xs[i], s.ys[i], s.xs[i + 1], s.ys[i + 1]];
      if (![xa, ya, xb, yb].every(Number.isFinite)) continue;
      if (opts.logY && (ya <= 0 || yb <= 0)) continue;
      canvas.line(px(xa), py(ya), px(xb), py(yb), s.color, s.dashed, !s.dashed);
    }
    if (s.markers) {
      for (let i = 0; i < s.xs.length; i++) {
        if (!Number.isFinite(s.ys[i])) continue;
        if (opts.logY && s.ys[i] <= 0) continue;
        const cx = Math.round(px(s.xs[i]));
        const cy = Math.round(py(s.ys[i]));
        for (let dx = -2; dx <= 2; dx++) {
          for (let dy = -2; dy <= 2; dy++) {
            if (dx * dx + dy * dy <= 4) canvas.set(cx + dx, cy + dy, s.color);
          }
        }
      }
    }
    if (s.barLo && s.barHi) {
      for (let i = 0; i < s.xs.length; i++) {
        const lo = s.barLo[i];
        const hi = s.barHi[i];
        if (!Number.isFinite(lo) || !Number.isFinite(hi)) continue;
        if (opts.logY && (lo <= 0 || hi <= 0)) continue;
        const cx = Math.round(px(s.xs[i]));
        canvas.line(cx, py(lo), cx, py(hi), s.color);
        canvas.line(cx - 3, py(lo), cx + 3, py(lo), s.color);
        canvas.line(cx - 3, py(hi), cx + 3, py(hi), s.color);
      }
    }
  }

  // title, axis labels, legend
  canvas.text(ml + (plotW - textWidth(opts.title)) / 2, 12, opts.title, black);
  canvas.text(
    ml + (plotW - textWidth(opts.xLabel)) / 2, height - 16, opts.xLabel, black,
  );
  canvas.text(6, 12, opts.yLabel, black);
  let ly = mt + 8;
  for (const s of opts.series) {
    const lx = ml + plotW - 150;
    canvas.line(lx, ly + 3, lx + 18, ly + 3, s.color, s.dashed, !s.dashed);
    canvas.text(lx + 24, ly, s.label, black);
    ly += 12;
  }

  return encodePng(width, height, canvas.data);
}
