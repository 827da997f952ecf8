/**
 * FigureJob execution: read one run directory, emit `<kind>.svg` (and
 * optionally `<kind>.png`) per requested kind into the output directory.
 * Run directories are never written to.
 */

import { mkdirSync, writeFileSync } from "fs";
import { join, resolve } from "path";

import { Report, RunDirectoryError, loadReport } from "./data.js";
import { BUILDERS, DEFAULT_KINDS, FIGURE_KINDS, FigureKind } from "./figures.js";
import { rasterize } from "./raster.js";
import { toSvg } from "./scene.js";

export interface FigureJob {
  runDir: string;
  outDir: string;
  kinds: FigureKind[];
  png?: boolean;
}

export class UnknownKindError extends Error {
  constructor(kind: string) {
    super(`unknown figure kind ${JSON.stringify(kind)}; known: ${FIGURE_KINDS.join(", ")}`);
    this.name = "UnknownKindError";
  }
}

export function parseKinds(spec: string): FigureKind[] {
  const parts = spec.split(",").map((s) => s.trim()).filter((s) => s.length > 0);
  for (const p of parts) {
    if (!(FIGURE_KINDS as readonly string[]).includes(p)) throw new UnknownKindError(p);
  }
  return parts as FigureKind[];
}

/** Kinds an experiment's run directory declares when none are requested. */
export function declaredKinds(report: Report): FigureKind[] {
  return DEFAULT_KINDS[report.kind] ?? [];
}

export function render(job: FigureJob): string[] {
  if (resolve(job.outDir) === resolve(job.runDir)) {
    throw new RunDirectoryError("output directory must differ from the run directory");
  }
  if (job.kinds.length === 0) return [];
  const report = loadReport(job.runDir);
  const written: string[] = [];
  mkdirSync(job.outDir, { recursive: true });
  for (const kind of job.kinds) {
    const scene = BUILDERS[kind](job.runDir, report);
    const svgPath = join(job.outDir, `${kind}.svg`);
    writeFileSync(svgPath, toSvg(scene), "utf-8");
    written.push(svgPath);
    if (job.png) {
      const pngPath = join(job.outDir, `${kind}.png`);
      writeFileSync(pngPath, rasterize(scene));
      written.push(pngPath);
    }
  }
  return written;
}
