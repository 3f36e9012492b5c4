/** Minimal deterministic SVG emitter: fixed styles, no timestamps. */

export const WIDTH = 640;
export const HEIGHT = 360;
export const MARGIN = { top: 28, right: 20, bottom: 64, left: 64 };

export const PALETTE = ["#4f81bd", "#c0504d", "#9bbb59", "#8064a2"];

const fmt = (v: number) => {
  const s = v.toFixed(2);
  return s === "-0.00" ? "0.00" : s;
};

export class Svg {
  private parts: string[] = [];

  constructor(public title: string) {
    this.parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" ` +
      `height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}" ` +
      `font-family="Helvetica, Arial, sans-serif">`,
      `<rect width="${WIDTH}" height="${HEIGHT}" fill="#ffffff"/>`,
      `<text x="${WIDTH / 2}" y="18" text-anchor="middle" ` +
      `font-size="13" fill="#222222">${escapeXml(title)}</text>`,
    );
  }

  rect(x: number, y: number, w: number, h: number, fill: string,
       opacity = 1): void {
    this.parts.push(
      `<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(w)}" ` +
      `height="${fmt(h)}" fill="${fill}" fill-opacity="${opacity}"/>`);
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke: string,
       width = 1, dashed = false): void {
    const dash = dashed ? ` stroke-dasharray="6 3"` : "";
    this.parts.push(
      `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" ` +
      `y2="${fmt(y2)}" stroke="${stroke}" stroke-width="${width}"${dash}/>`);
  }

  circle(x: number, y: number, r: number, fill: string): void {
    this.parts.push(
      `<circle cx="${fmt(x)}" cy="${fmt(y)}" r="${r}" fill="${fill}"/>`);
  }

  text(x: number, y: number, value: string, size = 11,
       anchor: "start" | "middle" | "end" = "middle",
       fill = "#222222", rotate = 0): void {
    const tr = rotate !== 0
      ? ` transform="rotate(${rotate} ${fmt(x)} ${fmt(y)})"` : "";
    this.parts.push(
      `<text x="${fmt(x)}" y="${fmt(y)}" text-anchor="${anchor}" ` +
      `font-size="${size}" fill="${fill}"${tr}>${escapeXml(value)}</text>`);
  }

  render(): string {
    return this.parts.join("\n") + "\n</svg>\n";
  }
}

export function escapeXml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export interface Scale {
  (v: number): number;
}

export function linearScale(d0: number, d1: number, r0: number,
                            r1: number): Scale {
  const span = d1 - d0 || 1;
  return (v: number) => r0 + ((v - d0) / span) * (r1 - r0);
}

/** Round axis ticks covering [lo, hi] with a sensible step. */
export function ticks(lo: number, hi: number, count = 5): number[] {
  const span = hi - lo || 1;
  const step = 10 ** Math.floor(Math.log10(span / count));
  const err = span / count / step;
  const mult = err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1;
  const s = step * mult;
  const start = Math.ceil(lo / s) * s;
  const out: number[] = [];
  for (let v = start; v <= hi + 1e-12; v += s) {
    out.push(Number(v.toFixed(10)));
  }
  return out;
}
