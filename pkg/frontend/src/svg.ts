/**
 * Small hand-rolled SVG line charts: axes, ticks, legend, optional
 * mean +/- sd bands. Output is a pure function of the input spec, so
 * re-renders are byte-identical.
 */

export interface XY {
  x: number;
  y: number;
}

export interface Series {
  label: string;
  color: string;
  points: XY[]; // sorted by x by the caller
}

export interface BandSeries {
  label: string;
  color: string;
  points: { x: number; lo: number; hi: number }[];
}

export interface ChartSpec {
  title: string;
  xLabel: string;
  yLabel: string;
  xScale: "linear" | "log2";
  series: Series[];
  bands?: BandSeries[];
}

const W = 720;
const H = 480;
const MARGIN = { top: 48, right: 24, bottom: 56, left: 72 };
const PW = W - MARGIN.left - MARGIN.right;
const PH = H - MARGIN.top - MARGIN.bottom;

export function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

function fmt(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e5 || a < 1e-3) return v.toExponential(1).replace("e+", "e");
  return String(Number(v.toPrecision(5)));
}

function px(v: number): string {
  return (Math.round(v * 100) / 100).toFixed(2);
}

export function niceTicks(min: number, max: number, count: number): number[] {
  const range = max - min || Math.abs(max) || 1;
  const rough = range / count;
  const mag = Math.pow(10, Math.floor(Math.log10(rough)));
  const step = [1, 2, 2.5, 5, 10].map((m) => m * mag).find((s) => s >= rough) ?? rough;
  const ticks: number[] = [];
  for (let v = Math.ceil(min / step) * step; v <= max + step * 1e-9; v += step) {
    ticks.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return ticks;
}

export function renderChart(spec: ChartSpec): string {
  const xsRaw = [
    ...spec.series.flatMap((s) => s.points.map((p) => p.x)),
    ...(spec.bands ?? []).flatMap((b) => b.points.map((p) => p.x)),
  ];
  const ysRaw = [
    ...spec.series.flatMap((s) => s.points.map((p) => p.y)),
    ...(spec.bands ?? []).flatMap((b) => b.points.flatMap((p) => [p.lo, p.hi])),
  ];
  if (xsRaw.length === 0) throw new Error("nothing to plot");

  const tx = spec.xScale === "log2" ? Math.log2 : (v: number) => v;
  const xValues = [...new Set(xsRaw)].sort((a, b) => a - b);
  let xMin = tx(xValues[0]);
  let xMax = tx(xValues[xValues.length - 1]);
  if (xMax === xMin) {
    xMin -= 1;
    xMax += 1;
  }
  // log axes tick every data point; linear axes use rounded ticks
  const xTicks = spec.xScale === "log2" ? xValues : niceTicks(xMin, xMax, 7);

  let yMin = Math.min(...ysRaw);
  let yMax = Math.max(...ysRaw);
  if (yMin > 0 && yMin < 0.5 * yMax) yMin = 0;
  const pad = (yMax - yMin || Math.abs(yMax) || 1) * 0.06;
  if (yMin !== 0) yMin -= pad;
  yMax += pad;
  const yTicks = niceTicks(yMin, yMax, 6);

  const sx = (v: number) => MARGIN.left + ((tx(v) - xMin) / (xMax - xMin)) * PW;
  const sy = (v: number) => MARGIN.top + PH - ((v - yMin) / (yMax - yMin)) * PH;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${H}" viewBox="0 0 ${W} ${H}" font-family="sans-serif">`,
    `<rect width="${W}" height="${H}" fill="white"/>`,
    `<text x="${W / 2}" y="24" text-anchor="middle" font-size="16">${esc(spec.title)}</text>`,
  );

  for (const t of yTicks) {
    const y = px(sy(t));
    parts.push(
      `<line x1="${MARGIN.left}" y1="${y}" x2="${W - MARGIN.right}" y2="${y}" stroke="#ddd" stroke-width="1"/>`,
      `<text x="${MARGIN.left - 8}" y="${y}" text-anchor="end" dominant-baseline="middle" font-size="11" fill="#444">${esc(fmt(t))}</text>`,
    );
  }
  for (const t of xTicks) {
    const x = px(sx(t));
    parts.push(
      `<line x1="${x}" y1="${MARGIN.top}" x2="${x}" y2="${MARGIN.top + PH}" stroke="#eee" stroke-width="1"/>`,
      `<text x="${x}" y="${MARGIN.top + PH + 18}" text-anchor="middle" font-size="11" fill="#444">${esc(fmt(t))}</text>`,
    );
  }
  parts.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${PW}" height="${PH}" fill="none" stroke="#888"/>`,
    `<text x="${MARGIN.left + PW / 2}" y="${H - 14}" text-anchor="middle" font-size="13">${esc(spec.xLabel)}</text>`,
    `<text x="20" y="${MARGIN.top + PH / 2}" text-anchor="middle" font-size="13" transform="rotate(-90 20 ${MARGIN.top + PH / 2})">${esc(spec.yLabel)}</text>`,
  );

  for (const band of spec.bands ?? []) {
    const fwd = band.points.map((p) => `${px(sx(p.x))},${px(sy(p.hi))}`);
    const rev = [...band.points].reverse().map((p) => `${px(sx(p.x))},${px(sy(p.lo))}`);
    parts.push(
      `<polygon points="${[...fwd, ...rev].join(" ")}" fill="${band.color}" fill-opacity="0.15" stroke="none"/>`,
    );
  }

  for (const s of spec.series) {
    const pts = s.points.map((p) => `${px(sx(p.x))},${px(sy(p.y))}`).join(" ");
    parts.push(`<polyline points="${pts}" fill="none" stroke="${s.color}" stroke-width="1.8"/>`);
    for (const p of s.points) {
      // data-x/data-y carry the exact plotted values for downstream checks
      parts.push(
        `<circle cx="${px(sx(p.x))}" cy="${px(sy(p.y))}" r="3.2" fill="${s.color}" data-x="${p.x}" data-y="${p.y}" data-series="${esc(s.label)}"/>`,
      );
    }
  }

  const legendEntries = [
    ...spec.series.map((s) => ({ label: s.label, color: s.color })),
    ...(spec.bands ?? []).map((b) => ({ label: `${b.label} band`, color: b.color })),
  ];
  legendEntries.forEach((entry, i) => {
    const y = MARGIN.top + 14 + i * 18;
    const x = W - MARGIN.right - 170;
    parts.push(
      `<line x1="${x}" y1="${y}" x2="${x + 22}" y2="${y}" stroke="${entry.color}" stroke-width="2.5"/>`,
      `<text x="${x + 28}" y="${y + 4}" font-size="12">${esc(entry.label)}</text>`,
    );
  });

  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
