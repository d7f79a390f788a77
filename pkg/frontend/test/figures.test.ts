import { readFileSync } from "fs";
import { join } from "path";

import { describe, expect, it } from "vitest";

import { parseCsv, toCsvText } from "../src/csv";
import { buildFigure, COLORS } from "../src/figures";
import { renderLineChart } from "../src/svg";

const FIX = join(__dirname, "fixtures");

function fixture(name: string) {
  return parseCsv(readFileSync(join(FIX, name), "utf-8"), name);
}

describe("field_shape", () => {
  it("plots the half-line barrier and dumps it exactly", () => {
    const main = fixture("field_profile_halfline.csv");
    const fig = buildFigure("field_shape", { main });
    expect(fig.chart.series).toHaveLength(1);
    expect(fig.chart.series[0].xs).toHaveLength(400);
    // the patched barrier rises to its peak then decays back toward zero
    const ys = fig.chart.series[0].ys;
    const peak = Math.max(...ys);
    expect(peak).toBeGreaterThan(5.0);
    expect(ys[ys.length - 1]).toBeLessThan(0.1);
    expect(ys[0]).toBeCloseTo(0.0001, 5);
    // dump equals the input file byte-for-byte
    const dumped = toCsvText(fig.dump.header, fig.dump.rows);
    expect(dumped).toBe(readFileSync(join(FIX, "field_profile_halfline.csv"), "utf-8"));
  });

  it("plots the interval barrier with its linear ramps", () => {
    const main = fixture("field_profile_interval.csv");
    const fig = buildFigure("field_shape", { main });
    const { xs, ys } = fig.chart.series[0];
    const at = (x: number) => ys[xs.findIndex((v) => Math.abs(v - x) < 6e-3)];
    expect(at(0)).toBeCloseTo(1.0, 2);
    expect(at(-1)).toBeCloseTo(0.0, 2);
    expect(at(1)).toBeCloseTo(0.0, 2);
    expect(at(-2)).toBeCloseTo(-Math.PI / 2, 2);
  });

  it("overlays a second profile when given", () => {
    const main = fixture("field_profile_halfline.csv");
    const secondary = fixture("field_profile_interval.csv");
    const fig = buildFigure("field_shape", { main, secondary });
    expect(fig.chart.series).toHaveLength(2);
    expect(fig.chart.series[1].dash).toBeDefined();
  });

  it("refuses an input without the needed column", () => {
    const main = fixture("compensator_profile.csv");
    expect(() => buildFigure("field_shape", { main })).toThrow(/missing column 'h'/);
  });

  it("refuses an empty table rather than plotting nothing", () => {
    const main = parseCsv("x,h\n", "empty.csv");
    expect(() => buildFigure("field_shape", { main })).toThrow(/no data rows/);
  });
});

describe("compensator_profile", () => {
  it("reads the x,phi schema", () => {
    const fig = buildFigure("compensator_profile", {
      main: fixture("compensator_profile.csv"),
    });
    const { xs, ys } = fig.chart.series[0];
    expect(xs).toHaveLength(2001);
    // saturates at +u_max below the safe set
    expect(ys[0]).toBeCloseTo(1.0, 9);
    expect(fig.dump.header).toEqual(["x", "phi"]);
  });
});

describe("trajectory_fan", () => {
  const main = fixture("trajectories.csv");

  it("groups paths: grey samples, red mean, blue overlay", () => {
    const fig = buildFigure("trajectory_fan", { main });
    const colors = fig.chart.series.map((s) => s.color);
    expect(colors.filter((c) => c === COLORS.samples)).toHaveLength(6);
    expect(colors).toContain(COLORS.mean);
    expect(colors).toContain(COLORS.deterministic);
    // mean is the pointwise average of the sample series
    const samples = fig.chart.series.filter((s) => s.color === COLORS.samples);
    const mean = fig.chart.series.find((s) => s.color === COLORS.mean)!;
    const j = 7;
    const expected =
      samples.reduce((acc, s) => acc + s.ys[j], 0) / samples.length;
    expect(mean.ys[j]).toBeCloseTo(expected, 12);
  });

  it("dumps the plotted columns verbatim", () => {
    const fig = buildFigure("trajectory_fan", { main });
    expect(fig.dump.header).toEqual(
      ["t", "path_0", "path_1", "path_2", "path_3", "path_4", "path_5", "path_-1"]);
    // spot-check tokens against the raw file
    const raw = readFileSync(join(FIX, "trajectories.csv"), "utf-8").split("\n");
    const firstDataRow = raw[1].split(",");
    expect(fig.dump.rows[0][0]).toBe(firstDataRow[1]); // t token
    expect(fig.dump.rows[0][1]).toBe(firstDataRow[2]); // x_1 token of path 0
  });

  it("adds the green pre-input when fanning the input column", () => {
    const fig = buildFigure("trajectory_fan", { main, column: "u" });
    const green = fig.chart.series.find((s) => s.color === COLORS.preInput);
    expect(green).toBeDefined();
    expect(green!.ys.every((v) => v === -1.0)).toBe(true);
    expect(fig.dump.header).toContain("u_o");
  });

  it("errors when there are no sample paths", () => {
    const empty = parseCsv("path_id,t,x_1,u,u_o,h,exited_chi\n", "none.csv");
    expect(() => buildFigure("trajectory_fan", { main: empty })).toThrow(
      /no sample paths/);
  });
});

describe("zcbf_trace", () => {
  it("fans the barrier column", () => {
    const fig = buildFigure("zcbf_trace", { main: fixture("trajectories.csv") });
    expect(fig.chart.yLabel).toBe("h");
    const mean = fig.chart.series.find((s) => s.color === COLORS.mean)!;
    expect(mean.ys[0]).toBeCloseTo(0.0, 9); // boundary start in this fixture
  });
});

describe("mu_zone_trace", () => {
  it("plots the convergence statistic", () => {
    const fig = buildFigure("mu_zone_trace", { main: fixture("mu_zone.csv") });
    const ys = fig.chart.series[0].ys;
    expect(ys[0]).toBeGreaterThan(0.7);
    expect(ys[ys.length - 1]).toBe(0.0);
  });
});

describe("renderLineChart", () => {
  it("emits structured deterministic SVG", () => {
    const fig = buildFigure("field_shape", {
      main: fixture("field_profile_interval.csv"),
    });
    const svg1 = renderLineChart(fig.chart);
    const svg2 = renderLineChart(fig.chart);
    expect(svg1).toBe(svg2);
    expect(svg1).toContain("<svg");
    expect(svg1).toContain("<polyline");
    expect(svg1.trim().endsWith("</svg>")).toBe(true);
  });
});
