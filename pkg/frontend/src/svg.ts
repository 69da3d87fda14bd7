/**
 * Minimal deterministic SVG builder: fixed canvas, no timestamps, no
 * randomness, numbers printed with fixed precision so identical inputs
 * give byte-identical files.
 */

export interface Margins {
  top: number;
  right: number;
  bottom: number;
  left: number;
}

export const WIDTH = 720;
export const HEIGHT = 480;
export const MARGIN: Margins = { top: 40, right: 30, bottom: 56, left: 72 };

export function fmt(x: number): string {
  if (!isFinite(x)) return "0";
  return x.toFixed(2);
}

export class Svg {
  private parts: string[] = [];

  constructor(readonly width = WIDTH, readonly height = HEIGHT) {
    this.parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
        `viewBox="0 0 ${width} ${height}" font-family="Helvetica, Arial, sans-serif">`,
      `<rect width="${width}" height="${height}" fill="#ffffff"/>`,
    );
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke: string, width = 1, dash = ""): void {
    const d = dash ? ` stroke-dasharray="${dash}"` : "";
    this.parts.push(
      `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" ` +
        `stroke="${stroke}" stroke-width="${width}"${d}/>`,
    );
  }

  polyline(points: Array<[number, number]>, stroke: string, width = 1.5): void {
    const pts = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
    this.parts.push(
      `<polyline points="${pts}" fill="none" stroke="${stroke}" stroke-width="${width}"/>`,
    );
  }

  circle(x: number, y: number, r: number, fill: string): void {
    this.parts.push(`<circle cx="${fmt(x)}" cy="${fmt(y)}" r="${r}" fill="${fill}"/>`);
  }

  text(x: number, y: number, s: string, opts: { size?: number; anchor?: string; fill?: string; rotate?: boolean } = {}): void {
    const size = opts.size ?? 12;
    const anchor = opts.anchor ?? "start";
    const fill = opts.fill ?? "#222222";
    const transform = opts.rotate ? ` transform="rotate(-90 ${fmt(x)} ${fmt(y)})"` : "";
    this.parts.push(
      `<text x="${fmt(x)}" y="${fmt(y)}" font-size="${size}" text-anchor="${anchor}" ` +
        `fill="${fill}"${transform}>${escapeXml(s)}</text>`,
    );
  }

  render(): string {
    return this.parts.join("\n") + "\n</svg>\n";
  }
}

function escapeXml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;");
}

/** Linear scale mapping [d0, d1] onto [r0, r1]. */
export function scale(d0: number, d1: number, r0: number, r1: number): (x: number) => number {
  const span = d1 - d0 || 1;
  return (x: number) => r0 + ((x - d0) / span) * (r1 - r0);
}

/** Round-ish tick positions inside [lo, hi] (log10 space helper). */
export function logTicks(lo: number, hi: number): number[] {
  const out: number[] = [];
  for (let e = Math.floor(lo); e <= Math.ceil(hi); e++) {
    if (e >= lo - 1e-9 && e <= hi + 1e-9) out.push(e);
  }
  if (out.length < 2) out.push(lo, hi);
  return out;
}

/** Axes + labels for a log-log frame; returns point mappers. */
export function logFrame(
  svg: Svg,
  xlo: number,
  xhi: number,
  ylo: number,
  yhi: number,
  xlabel: string,
  ylabel: string,
  title: string,
): { px: (lx: number) => number; py: (ly: number) => number } {
  const px = scale(xlo, xhi, MARGIN.left, WIDTH - MARGIN.right);
  const py = scale(ylo, yhi, HEIGHT - MARGIN.bottom, MARGIN.top);
  svg.line(MARGIN.left, HEIGHT - MARGIN.bottom, WIDTH - MARGIN.right, HEIGHT - MARGIN.bottom, "#222222");
  svg.line(MARGIN.left, MARGIN.top, MARGIN.left, HEIGHT - MARGIN.bottom, "#222222");
  for (const t of logTicks(xlo, xhi)) {
    const x = px(t);
    svg.line(x, HEIGHT - MARGIN.bottom, x, HEIGHT - MARGIN.bottom + 5, "#222222");
    svg.text(x, HEIGHT - MARGIN.bottom + 20, `1e${t}`, { anchor: "middle", size: 11 });
  }
  for (const t of logTicks(ylo, yhi)) {
    const y = py(t);
    svg.line(MARGIN.left - 5, y, MARGIN.left, y, "#222222");
    svg.text(MARGIN.left - 9, y + 4, `1e${t}`, { anchor: "end", size: 11 });
  }
  svg.text((MARGIN.left + WIDTH - MARGIN.right) / 2, HEIGHT - 14, xlabel, { anchor: "middle" });
  svg.text(20, (MARGIN.top + HEIGHT - MARGIN.bottom) / 2, ylabel, { anchor: "middle", rotate: true });
  svg.text((MARGIN.left + WIDTH - MARGIN.right) / 2, 22, title, { anchor: "middle", size: 14 });
  return { px, py };
}
