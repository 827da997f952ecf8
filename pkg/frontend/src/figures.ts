/**
 * Figure builders: each consumes a run directory's report/ledger/sidecar
 * files and produces a scene. Fits (beta, slopes, rho) come straight from
 * report.json; nothing is recomputed here.
 */

import { readdirSync, readFileSync, existsSync } from "fs";
import { join } from "path";

import {
  Ledger,
  Manifest,
  Report,
  RunDirectoryError,
  column,
  loadLedger,
  loadManifest,
  numbers,
} from "./data.js";
import { Scale, extent, linearScale, logScale, positiveExtent } from "./scale.js";
import { PALETTE, Scene, dots, frame, legend, newScene, polyline } from "./scene.js";

export const FIGURE_KINDS = ["decay", "windows", "twin", "smoothing", "scaling", "gronwall"] as const;
export type FigureKind = (typeof FIGURE_KINDS)[number];

/** The SVG set each experiment kind declares. */
export const DEFAULT_KINDS: Record<string, FigureKind[]> = {
  simulate: ["decay"],
  dissipative: ["decay"],
  regularity: ["windows"],
  twin: ["twin"],
  smoothing: ["smoothing"],
  commutator_study: ["scaling"],
  sweep: ["scaling"],
  gronwall: ["gronwall"],
};

const MARGIN = { left: 80, right: 20, top: 40, bottom: 44 };

function axes(scene: Scene, xDomain: [number, number], yDomain: [number, number], yLog: boolean, xLog = false): [Scale, Scale] {
  const xr: [number, number] = [MARGIN.left, scene.width - MARGIN.right];
  const yr: [number, number] = [scene.height - MARGIN.bottom, MARGIN.top];
  const x = xLog ? logScale(xDomain, xr) : linearScale(xDomain, xr);
  const y = yLog ? logScale(yDomain, yr) : linearScale(yDomain, yr);
  return [x, y];
}

function ledgerLabel(ledger: Ledger, name: string): string {
  const desc = ledger.descriptions.get(name);
  return desc ? `${name}: ${desc}` : name;
}

function loadRunLedgers(runDir: string, report: Report): Array<{ path: string; ledger: Ledger }> {
  const out: Array<{ path: string; ledger: Ledger }> = [];
  for (const rel of report.ledgers) {
    const csv = join(runDir, rel);
    const manifest = loadManifest(join(csv, ".."));
    out.push({ path: rel, ledger: loadLedger(csv, manifest) });
  }
  return out;
}

export function figureDecay(runDir: string, report: Report): Scene {
  const ledgers = loadRunLedgers(runDir, report);
  if (ledgers.length === 0) throw new RunDirectoryError("decay figure needs at least one ledger");
  const key = "sup_Ebb_e0";
  const series = ledgers.map(({ ledger }) => ({
    t: column(ledger, "t"),
    v: column(ledger, key),
  }));
  const scene = newScene();
  const allT = series.flatMap((s) => s.t);
  const allV = series.flatMap((s) => s.v);
  const [x, y] = axes(scene, extent(allT), positiveExtent(allV), true);
  const betas = Array.isArray(report.fitted["betas"]) ? (report.fitted["betas"] as number[]) : [];
  const betaText = betas.length
    ? `, fitted beta = ${betas.map((b) => b.toPrecision(4)).join(", ")}`
    : "";
  const fr = frame(scene, x, y, {
    title: `energy decay (log scale)${betaText}`,
    xLabel: `t: ${ledgers[0].ledger.descriptions.get("t") ?? "sample time"}`,
    yLabel: ledgerLabel(ledgers[0].ledger, key),
  });
  series.forEach((s, i) => polyline(fr, s.t, s.v, PALETTE[i % PALETTE.length]));
  legend(fr, series.map((_, i) => ({ label: ledgers[i].path, color: PALETTE[i % PALETTE.length] })));
  return scene;
}

export function figureWindows(runDir: string, report: Report): Scene {
  const ends = numbers(report, "window_ends");
  const quantities = ["windows_l12w4", "windows_h32", "windows_utt"];
  const scene = newScene();
  const ratios = quantities.map((q) => {
    const vals = numbers(report, q);
    const first = vals[0] > 0 ? vals[0] : 1;
    return vals.map((v) => v / first);
  });
  const [x, y] = axes(scene, extent(ends), [0, Math.max(10.5, ...ratios.flat())], false);
  const fr = frame(scene, x, y, {
    title: "regularity window integrals, normalized to the first window",
    xLabel: "t: right end of the unit window [t-1, t]",
    yLabel: "window integral / first-window value",
  });
  // tolerance line at 10x
  fr.scene.marks.push({
    kind: "line", x1: fr.left, y1: y.map(10), x2: fr.right, y2: y.map(10),
    color: "#aa0000", width: 1.2, dash: "6,4",
  });
  const barw = Math.max(2, (fr.right - fr.left) / (ends.length * 4.5));
  ratios.forEach((rr, qi) => {
    rr.forEach((v, i) => {
      const cx = x.map(ends[i]) + (qi - 1) * barw;
      fr.scene.marks.push({
        kind: "rect", x: cx - barw / 2, y: y.map(v),
        w: barw, h: Math.max(0.5, y.map(0) - y.map(v)), fill: PALETTE[qi],
      });
    });
  });
  legend(fr, quantities.map((q, i) => ({ label: q.replace("windows_", ""), color: PALETTE[i] })));
  return scene;
}

export function figureTwin(runDir: string, report: Report): Scene {
  const t = numbers(report, "times");
  const dFull = numbers(report, "d_full");
  const dHalf = numbers(report, "d_half");
  const rho = Number(report.fitted["rho"]);
  const scene = newScene();
  const [x, y] = axes(scene, extent(t), positiveExtent([...dFull, ...dHalf]), true);
  const fr = frame(scene, x, y, {
    title: `twin-run divergence (log scale), fitted rho = ${rho.toPrecision(4)}`,
    xLabel: "t: sample time",
    yLabel: "sup-over-centers weighted energy norm^2 of the difference",
  });
  polyline(fr, t, dFull, PALETTE[0]);
  polyline(fr, t, dHalf, PALETTE[1]);
  const envelope = t.map((tt) => dFull[0] * Math.exp(rho * tt));
  polyline(fr, t, envelope, "#555555", 1.2, "5,4");
  legend(fr, [
    { label: "perturbation s", color: PALETTE[0] },
    { label: "perturbation s/2", color: PALETTE[1] },
    { label: "d(0) exp(rho t)", color: "#555555" },
  ]);
  return scene;
}

export function figureSmoothing(runDir: string, report: Report): Scene {
  const t = numbers(report, "t_samples");
  const weighted = numbers(report, "t2_weighted");
  const raw = numbers(report, "raw_norm2");
  const scene = newScene();
  const [x, y] = axes(scene, positiveExtent(t), positiveExtent([...weighted, ...raw]), true, true);
  const fr = frame(scene, x, y, {
    title: "smoothing probe at t = 2^-j (log-log)",
    xLabel: "t: sample time",
    yLabel: "higher-energy norm^2 of (u, du/dt), raw and t^2-weighted",
  });
  polyline(fr, t, raw, PALETTE[1]);
  dots(fr, t, raw, PALETTE[1]);
  polyline(fr, t, weighted, PALETTE[0]);
  dots(fr, t, weighted, PALETTE[0]);
  legend(fr, [
    { label: "t^2 * norm^2", color: PALETTE[0] },
    { label: "raw norm^2", color: PALETTE[1] },
  ]);
  return scene;
}

interface CommutatorDoc {
  theta: number;
  s: number;
  weight_kind: string;
  epsilon_list: number[];
  ratio_list: number[];
  slope: number;
}

export function figureScaling(runDir: string, _report: Report): Scene {
  const files = readdirSync(runDir)
    .filter((f) => f.startsWith("commutator_") && f.endsWith(".json"))
    .sort();
  if (files.length === 0) {
    throw new RunDirectoryError(`no commutator_*.json documents in ${runDir}`);
  }
  const docs = files.map((f) => ({
    name: f.replace(/^commutator_/, "").replace(/\.json$/, ""),
    doc: JSON.parse(readFileSync(join(runDir, f), "utf-8")) as CommutatorDoc,
  }));
  const scene = newScene();
  const allEps = docs.flatMap((d) => d.doc.epsilon_list);
  const allRatio = docs.flatMap((d) => d.doc.ratio_list);
  const [x, y] = axes(scene, positiveExtent(allEps), positiveExtent(allRatio), true, true);
  const fr = frame(scene, x, y, {
    title: "commutator ratio vs eps (log-log) with fitted slopes",
    xLabel: "eps: weight steepness",
    yLabel: "worst-case |[A^theta, phi] u| / reference norm",
  });
  docs.forEach((d, i) => {
    const color = PALETTE[i % PALETTE.length];
    polyline(fr, d.doc.epsilon_list, d.doc.ratio_list, color);
    dots(fr, d.doc.epsilon_list, d.doc.ratio_list, color);
  });
  legend(
    fr,
    docs.map((d, i) => ({
      label: `${d.name}: slope ${d.doc.slope.toPrecision(3)}`,
      color: PALETTE[i % PALETTE.length],
    })),
  );
  return scene;
}

export function figureGronwall(runDir: string, report: Report): Scene {
  const t = numbers(report, "sample_times");
  const ode = numbers(report, "ode_values");
  const bound = numbers(report, "bound_values");
  const scene = newScene();
  const [x, y] = axes(scene, extent(t), extent([...ode, ...bound, 0]), false);
  const ext = report.fitted["trace_extinction"];
  const title =
    typeof ext === "number"
      ? `gronwall envelope vs exact ODE, T* = ${ext.toPrecision(6)}`
      : "gronwall envelope vs exact ODE";
  const fr = frame(scene, x, y, {
    title,
    xLabel: "t",
    yLabel: "Y(t): ODE solution and piecewise window bound",
  });
  polyline(fr, t, bound, PALETTE[1]);
  polyline(fr, t, ode, PALETTE[0]);
  legend(fr, [
    { label: "decay bound", color: PALETTE[1] },
    { label: "ODE solution", color: PALETTE[0] },
  ]);
  return scene;
}

export const BUILDERS: Record<FigureKind, (runDir: string, report: Report) => Scene> = {
  decay: figureDecay,
  windows: figureWindows,
  twin: figureTwin,
  smoothing: figureSmoothing,
  scaling: figureScaling,
  gronwall: figureGronwall,
};
