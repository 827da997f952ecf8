#!/usr/bin/env node
/**
 * render --run DIR --out DIR [--kinds decay,scaling,...] [--png]
 *
 * Without --kinds, the run's experiment kind selects its declared figure set.
 * Exit codes: 0 success, 1 render/data error, 2 usage error.
 */

import { MissingColumnsError, RunDirectoryError, loadReport } from "./data.js";
import { UnknownKindError, declaredKinds, parseKinds, render } from "./render.js";

function usage(): never {
  process.stderr.write(
    "usage: render --run DIR --out DIR [--kinds decay,windows,twin,smoothing,scaling,gronwall] [--png]\n",
  );
  process.exit(2);
}

export function main(argv: string[]): number {
  let runDir: string | undefined;
  let outDir: string | undefined;
  let kindsSpec: string | undefined;
  let png = false;
  for (let i = 0; i < argv.length; i++) {
    const a = argv[i];
    if (a === "--run") runDir = argv[++i];
    else if (a === "--out") outDir = argv[++i];
    else if (a === "--kinds") kindsSpec = argv[++i];
    else if (a === "--png") png = true;
    else usage();
  }
  if (!runDir || !outDir) usage();
  try {
    const kinds =
      kindsSpec !== undefined ? parseKinds(kindsSpec) : declaredKinds(loadReport(runDir));
    const written = render({ runDir, outDir, kinds, png });
    for (const path of written) process.stdout.write(path + "\n");
    return 0;
  } catch (err) {
    if (err instanceof UnknownKindError) {
      process.stderr.write(err.message + "\n");
      return 2;
    }
    if (err instanceof MissingColumnsError || err instanceof RunDirectoryError) {
      process.stderr.write(`${err.name}: ${err.message}\n`);
      return 1;
    }
    throw err;
  }
}

process.exit(main(process.argv.slice(2)));
