#!/usr/bin/env node
/**
 * plotgen — render SVG figures from stocbf CSV artifacts.
 *
 * Usage:
 *   plotgen <figure-kind> --in <csv> [--in2 <csv>] --out <img.svg>
 *           [--column <name>] [--dump <csv>] [--title <text>]
 *
 * Figure kinds: field_shape, compensator_profile, trajectory_fan,
 * zcbf_trace, mu_zone_trace.  --dump re-emits the plotted input series
 * verbatim for round-trip checking.
 */

import { readFileSync, writeFileSync } from "fs";

import { CsvSchemaError, parseCsv, toCsvText } from "./csv";
import { buildFigure, FIGURE_KINDS, FigureKind } from "./figures";
import { renderLineChart } from "./svg";

export interface CliOptions {
  kind: FigureKind;
  input: string;
  input2?: string;
  output?: string;
  dump?: string;
  column?: string;
  title?: string;
}

export function parseArgs(argv: string[]): CliOptions {
  if (argv.length === 0) {
    throw new CsvSchemaError(
      `usage: plotgen <figure-kind> --in <csv> [--in2 <csv>] --out <img.svg>`
    );
  }
  const [kind, ...rest] = argv;
  if (!(FIGURE_KINDS as readonly string[]).includes(kind)) {
    throw new CsvSchemaError(
      `unknown figure kind '${kind}'; choose one of ${FIGURE_KINDS.join(", ")}`
    );
  }
  const opts: CliOptions = { kind: kind as FigureKind, input: "" };
  for (let i = 0; i < rest.length; i += 2) {
    const flag = rest[i];
    const value = rest[i + 1];
    if (value === undefined) {
      throw new CsvSchemaError(`flag ${flag} needs a value`);
    }
    switch (flag) {
      case "--in": opts.input = value; break;
      case "--in2": opts.input2 = value; break;
      case "--out": opts.output = value; break;
      case "--dump": opts.dump = value; break;
      case "--column": opts.column = value; break;
      case "--title": opts.title = value; break;
      default:
        throw new CsvSchemaError(`unknown flag '${flag}'`);
    }
  }
  if (!opts.input) {
    throw new CsvSchemaError("--in <csv> is required");
  }
  if (!opts.output && !opts.dump) {
    throw new CsvSchemaError("nothing to do: pass --out and/or --dump");
  }
  return opts;
}

export function run(opts: CliOptions): string[] {
  const main = parseCsv(readFileSync(opts.input, "utf-8"), opts.input);
  const secondary = opts.input2
    ? parseCsv(readFileSync(opts.input2, "utf-8"), opts.input2)
    : undefined;
  const figure = buildFigure(opts.kind, { main, secondary, column: opts.column });
  if (opts.title) {
    figure.chart.title = opts.title;
  }
  const written: string[] = [];
  if (opts.output) {
    writeFileSync(opts.output, renderLineChart(figure.chart));
    written.push(opts.output);
  }
  if (opts.dump) {
    writeFileSync(opts.dump, toCsvText(figure.dump.header, figure.dump.rows));
    written.push(opts.dump);
  }
  return written;
}

export function main(argv: string[]): number {
  try {
    const written = run(parseArgs(argv));
    for (const path of written) {
      console.log(`wrote ${path}`);
    }
    return 0;
  } catch (err) {
    console.error(err instanceof Error ? err.message : String(err));
    return 1;
  }
}

/* istanbul ignore next -- direct execution entry */
if (typeof require !== "undefined" && require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
