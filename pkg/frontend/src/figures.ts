/**
 * The five figure kinds over the frozen CSV schemas.
 *
 * Styling follows the simulation figures: grey sample paths, red
 * ensemble mean, blue noise-free overlay (path_id -1), green pre-input.
 * Each built figure carries a dump table holding the plotted
 * input-backed series as verbatim tokens from the source CSV; the
 * derived mean is never dumped, so dump output always equals the input
 * data exactly.
 */

import { CsvSchemaError, CsvTable, numericColumn, rawColumn, requireColumns } from "./csv";
import { ChartSpec, Series } from "./svg";

export const FIGURE_KINDS = [
  "field_shape",
  "compensator_profile",
  "trajectory_fan",
  "zcbf_trace",
  "mu_zone_trace",
] as const;

export type FigureKind = (typeof FIGURE_KINDS)[number];

export const COLORS = {
  samples: "#9a9a9a",
  mean: "#d62728",
  deterministic: "#1f5fd6",
  preInput: "#2d8a4e",
  line: "#1f77b4",
  overlay: "#c46a00",
};

export interface FigureInputs {
  main: CsvTable;
  secondary?: CsvTable;
  /** trajectory column to fan out (trajectory_fan only); default x_1 */
  column?: string;
}

export interface DumpTable {
  header: string[];
  rows: string[][];
}

export interface BuiltFigure {
  chart: ChartSpec;
  dump: DumpTable;
}

function singleCurve(table: CsvTable, xCol: string, yCol: string,
                     title: string, secondary?: CsvTable): BuiltFigure {
  requireColumns(table, [xCol, yCol]);
  if (table.rows.length === 0) {
    throw new CsvSchemaError(`${table.path}: no data rows to plot`);
  }
  const series: Series[] = [{
    label: yCol,
    color: COLORS.line,
    xs: numericColumn(table, xCol),
    ys: numericColumn(table, yCol),
    width: 1.6,
  }];
  const header = [xCol, yCol];
  const rows = rawColumn(table, xCol).map((x, i) => [x, rawColumn(table, yCol)[i]]);
  if (secondary) {
    requireColumns(secondary, [xCol, yCol]);
    series.push({
      label: `${yCol} (2)`,
      color: COLORS.overlay,
      xs: numericColumn(secondary, xCol),
      ys: numericColumn(secondary, yCol),
      width: 1.4,
      dash: "5,3",
    });
  }
  return {
    chart: { title, xLabel: xCol, yLabel: yCol, series },
    dump: { header, rows },
  };
}

interface PathGroup {
  id: string;
  rowIndex: number[];
}

function groupPaths(table: CsvTable): PathGroup[] {
  const idx = table.header.indexOf("path_id");
  const groups = new Map<string, number[]>();
  table.rows.forEach((row, i) => {
    const id = row[idx];
    if (!groups.has(id)) groups.set(id, []);
    groups.get(id)!.push(i);
  });
  return [...groups.entries()].map(([id, rowIndex]) => ({ id, rowIndex }));
}

function fanFigure(table: CsvTable, column: string, title: string,
                   yLabel: string, withPreInput: boolean): BuiltFigure {
  requireColumns(table, ["path_id", "t", column]);
  const groups = groupPaths(table);
  const samples = groups.filter((g) => Number(g.id) >= 0);
  const overlay = groups.find((g) => Number(g.id) < 0);
  if (samples.length === 0) {
    throw new CsvSchemaError(`${table.path}: no sample paths to plot`);
  }
  const tTok = rawColumn(table, "t");
  const vTok = rawColumn(table, column);
  const t = numericColumn(table, "t");
  const v = numericColumn(table, column);

  const series: Series[] = [];
  const dumpHeader = ["t"];
  const first = samples[0].rowIndex;
  const dumpRows: string[][] = first.map((ri) => [tTok[ri]]);

  let meanYs: number[] | null = null;
  for (const [k, g] of samples.entries()) {
    if (g.rowIndex.length !== first.length) {
      throw new CsvSchemaError(
        `${table.path}: path ${g.id} has ${g.rowIndex.length} rows, ` +
        `expected ${first.length}`
      );
    }
    series.push({
      label: "sample paths",
      color: COLORS.samples,
      xs: g.rowIndex.map((ri) => t[ri]),
      ys: g.rowIndex.map((ri) => v[ri]),
      width: 0.8,
      opacity: 0.75,
      showInLegend: k === 0,
    });
    dumpHeader.push(`path_${g.id}`);
    g.rowIndex.forEach((ri, j) => dumpRows[j].push(vTok[ri]));
    if (meanYs === null) meanYs = new Array(first.length).fill(0);
    g.rowIndex.forEach((ri, j) => (meanYs![j] += v[ri]));
  }
  series.push({
    label: "ensemble mean",
    color: COLORS.mean,
    xs: first.map((ri) => t[ri]),
    ys: meanYs!.map((s) => s / samples.length),
    width: 1.8,
  });
  if (overlay) {
    series.push({
      label: "noise-free",
      color: COLORS.deterministic,
      xs: overlay.rowIndex.map((ri) => t[ri]),
      ys: overlay.rowIndex.map((ri) => v[ri]),
      width: 1.6,
    });
    dumpHeader.push(`path_${overlay.id}`);
    overlay.rowIndex.forEach((ri, j) => dumpRows[j].push(vTok[ri]));
  }
  if (withPreInput) {
    requireColumns(table, ["u_o"]);
    const uoTok = rawColumn(table, "u_o");
    const uo = numericColumn(table, "u_o");
    const src = overlay ?? samples[0];
    series.push({
      label: "pre-input",
      color: COLORS.preInput,
      xs: src.rowIndex.map((ri) => t[ri]),
      ys: src.rowIndex.map((ri) => uo[ri]),
      width: 1.4,
      dash: "6,3",
    });
    dumpHeader.push("u_o");
    src.rowIndex.forEach((ri, j) => dumpRows[j].push(uoTok[ri]));
  }
  return {
    chart: { title, xLabel: "t", yLabel, series },
    dump: { header: dumpHeader, rows: dumpRows },
  };
}

export function buildFigure(kind: FigureKind, inputs: FigureInputs): BuiltFigure {
  switch (kind) {
    case "field_shape":
      return singleCurve(inputs.main, "x", "h", "barrier field shape",
                         inputs.secondary);
    case "compensator_profile":
      return singleCurve(inputs.main, "x", "phi",
                         "compensator profile (pre-input 0)",
                         inputs.secondary);
    case "trajectory_fan": {
      const column = inputs.column ?? "x_1";
      return fanFigure(inputs.main, column, `state response (${column})`,
                       column, column === "u");
    }
    case "zcbf_trace":
      return fanFigure(inputs.main, "h", "barrier value along paths", "h", false);
    case "mu_zone_trace":
      return singleCurve(inputs.main, "t", "w_hat",
                         "boundary-layer convergence statistic");
    default: {
      const never: never = kind;
      throw new CsvSchemaError(`unknown figure kind '${never}'`);
    }
  }
}
