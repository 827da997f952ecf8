/** Linear and log axis scales with deterministic tick placement. */

export interface Scale {
  kind: "linear" | "log";
  domain: [number, number];
  range: [number, number];
  map(value: number): number;
  ticks(): number[];
}

const LOG_FLOOR = 1e-300;

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  let [d0, d1] = domain;
  if (d0 === d1) {
    d0 -= 0.5;
    d1 += 0.5;
  }
  const span = d1 - d0;
  return {
    kind: "linear",
    domain: [d0, d1],
    range,
    map: (v) => range[0] + ((v - d0) / span) * (range[1] - range[0]),
    ticks: () => linearTicks(d0, d1),
  };
}

export function logScale(domain: [number, number], range: [number, number]): Scale {
  const d0 = Math.max(domain[0], LOG_FLOOR);
  let d1 = Math.max(domain[1], d0 * 10);
  const l0 = Math.log10(d0);
  const l1 = Math.log10(d1);
  return {
    kind: "log",
    domain: [d0, d1],
    range,
    map: (v) => {
      const lv = Math.log10(Math.max(v, LOG_FLOOR));
      return range[0] + ((lv - l0) / (l1 - l0)) * (range[1] - range[0]);
    },
    ticks: () => logTicks(l0, l1),
  };
}

export function linearTicks(lo: number, hi: number, target = 6): number[] {
  const span = hi - lo;
  const raw = span / target;
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const norm = raw / mag;
  const step = (norm >= 5 ? 5 : norm >= 2 ? 2 : 1) * mag;
  const start = Math.ceil(lo / step) * step;
  const out: number[] = [];
  for (let v = start; v <= hi + 1e-12 * Math.abs(span); v += step) {
    out.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return out;
}

export function logTicks(l0: number, l1: number): number[] {
  const out: number[] = [];
  const e0 = Math.ceil(l0 - 1e-9);
  const e1 = Math.floor(l1 + 1e-9);
  const stride = Math.max(1, Math.ceil((e1 - e0) / 8));
  for (let e = e0; e <= e1; e += stride) out.push(Math.pow(10, e));
  if (out.length === 0) out.push(Math.pow(10, Math.round((l0 + l1) / 2)));
  return out;
}

/** Stable short label for a tick value (no locale, no exponent drift). */
export function tickLabel(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) {
    const e = Math.floor(Math.log10(a));
    const m = v / Math.pow(10, e);
    const mm = Math.round(m * 10) / 10;
    return `${mm}e${e}`;
  }
  const digits = a >= 100 ? 0 : a >= 1 ? 1 : 3;
  return v.toFixed(digits).replace(/\.?0+$/, (s) => (s.includes(".") ? "" : s));
}

export function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (!Number.isFinite(v)) continue;
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (lo > hi) return [0, 1];
  return [lo, hi];
}

export function positiveExtent(values: number[]): [number, number] {
  const pos = values.filter((v) => Number.isFinite(v) && v > 0);
  if (pos.length === 0) return [1e-12, 1];
  return extent(pos);
}
