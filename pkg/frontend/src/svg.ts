/**
 * Minimal deterministic SVG line charts: axes, ticks, polylines, legend.
 * No runtime dependencies; identical inputs produce identical bytes.
 */

export interface Series {
  label: string;
  color: string;
  xs: number[];
  ys: number[];
  width?: number;
  opacity?: number;
  dash?: string;
  showInLegend?: boolean;
}

export interface ChartSpec {
  title: string;
  xLabel: string;
  yLabel: string;
  series: Series[];
  width?: number;
  height?: number;
}

const MARGIN = { top: 34, right: 16, bottom: 42, left: 58 };

function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (!(lo < hi)) {
    // degenerate span: pad so the scale stays invertible
    const pad = Math.abs(lo) > 0 ? Math.abs(lo) * 0.1 : 1.0;
    return [lo - pad, hi + pad];
  }
  return [lo, hi];
}

/** Round tick positions covering [lo, hi] with a 1/2/5 step. */
export function niceTicks(lo: number, hi: number, count = 6): number[] {
  const span = hi - lo;
  const rough = span / Math.max(1, count - 1);
  const mag = Math.pow(10, Math.floor(Math.log10(rough)));
  const norm = rough / mag;
  const step = (norm >= 5 ? 5 : norm >= 2 ? 2 : 1) * mag;
  const start = Math.ceil(lo / step) * step;
  const ticks: number[] = [];
  for (let v = start; v <= hi + step * 1e-9; v += step) {
    ticks.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return ticks;
}

function fmtTick(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(1);
  return String(Number(v.toPrecision(6)));
}

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function renderLineChart(spec: ChartSpec): string {
  const W = spec.width ?? 720;
  const H = spec.height ?? 440;
  const plotW = W - MARGIN.left - MARGIN.right;
  const plotH = H - MARGIN.top - MARGIN.bottom;

  const allX = spec.series.flatMap((s) => s.xs);
  const allY = spec.series.flatMap((s) => s.ys);
  if (allX.length === 0) {
    throw new Error(`figure '${spec.title}' has no data points`);
  }
  const [x0, x1] = extent(allX);
  const [yLo, yHi] = extent(allY);
  const yPad = (yHi - yLo) * 0.05;
  const y0 = yLo - yPad;
  const y1 = yHi + yPad;

  const sx = (v: number) => MARGIN.left + ((v - x0) / (x1 - x0)) * plotW;
  const sy = (v: number) => MARGIN.top + plotH - ((v - y0) / (y1 - y0)) * plotH;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${H}" ` +
    `viewBox="0 0 ${W} ${H}" font-family="Helvetica,Arial,sans-serif">`
  );
  parts.push(`<rect width="${W}" height="${H}" fill="white"/>`);
  parts.push(
    `<text x="${W / 2}" y="20" text-anchor="middle" font-size="14">` +
    `${esc(spec.title)}</text>`
  );

  // gridlines and ticks
  for (const t of niceTicks(y0, y1)) {
    const y = sy(t);
    parts.push(
      `<line x1="${MARGIN.left}" y1="${y.toFixed(2)}" x2="${W - MARGIN.right}" ` +
      `y2="${y.toFixed(2)}" stroke="#ddd" stroke-width="0.6"/>`
    );
    parts.push(
      `<text x="${MARGIN.left - 6}" y="${(y + 3.5).toFixed(2)}" ` +
      `text-anchor="end" font-size="10">${fmtTick(t)}</text>`
    );
  }
  for (const t of niceTicks(x0, x1)) {
    const x = sx(t);
    parts.push(
      `<line x1="${x.toFixed(2)}" y1="${MARGIN.top + plotH}" x2="${x.toFixed(2)}" ` +
      `y2="${MARGIN.top + plotH + 4}" stroke="#333" stroke-width="0.8"/>`
    );
    parts.push(
      `<text x="${x.toFixed(2)}" y="${MARGIN.top + plotH + 16}" ` +
      `text-anchor="middle" font-size="10">${fmtTick(t)}</text>`
    );
  }

  // frame and axis labels
  parts.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${plotW}" ` +
    `height="${plotH}" fill="none" stroke="#333" stroke-width="1"/>`
  );
  parts.push(
    `<text x="${MARGIN.left + plotW / 2}" y="${H - 8}" text-anchor="middle" ` +
    `font-size="12">${esc(spec.xLabel)}</text>`
  );
  parts.push(
    `<text x="14" y="${MARGIN.top + plotH / 2}" text-anchor="middle" ` +
    `font-size="12" transform="rotate(-90 14 ${MARGIN.top + plotH / 2})">` +
    `${esc(spec.yLabel)}</text>`
  );

  // series
  for (const s of spec.series) {
    const pts = s.xs
      .map((x, i) => `${sx(x).toFixed(2)},${sy(s.ys[i]).toFixed(2)}`)
      .join(" ");
    const dash = s.dash ? ` stroke-dasharray="${s.dash}"` : "";
    const opacity = s.opacity !== undefined ? ` stroke-opacity="${s.opacity}"` : "";
    parts.push(
      `<polyline points="${pts}" fill="none" stroke="${s.color}" ` +
      `stroke-width="${s.width ?? 1.2}"${dash}${opacity}/>`
    );
  }

  // legend (series with showInLegend !== false, first occurrence per label)
  const legend: Series[] = [];
  for (const s of spec.series) {
    if (s.showInLegend === false) continue;
    if (!legend.some((e) => e.label === s.label)) legend.push(s);
  }
  legend.forEach((s, i) => {
    const y = MARGIN.top + 10 + i * 15;
    const x = W - MARGIN.right - 150;
    parts.push(
      `<line x1="${x}" y1="${y}" x2="${x + 18}" y2="${y}" stroke="${s.color}" ` +
      `stroke-width="2"${s.dash ? ` stroke-dasharray="${s.dash}"` : ""}/>`
    );
    parts.push(
      `<text x="${x + 23}" y="${y + 3.5}" font-size="10">${esc(s.label)}</text>`
    );
  });

  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
