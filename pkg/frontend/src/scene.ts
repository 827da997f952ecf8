/**
 * A figure is a flat list of drawing marks on a fixed-size canvas; the SVG
 * writer serializes marks in order with stable number formatting, so a given
 * scene always produces byte-identical output.
 */

import { Scale, tickLabel } from "./scale.js";

export type Mark =
  | { kind: "rect"; x: number; y: number; w: number; h: number; fill: string }
  | { kind: "line"; x1: number; y1: number; x2: number; y2: number; color: string; width: number; dash?: string }
  | { kind: "polyline"; points: Array<[number, number]>; color: string; width: number; dash?: string }
  | { kind: "circle"; cx: number; cy: number; r: number; fill: string }
  | { kind: "text"; x: number; y: number; text: string; size: number; anchor: "start" | "middle" | "end"; color: string };

export interface Scene {
  width: number;
  height: number;
  marks: Mark[];
}

export const PALETTE = ["#1f6fb2", "#c2452d", "#3a7d44", "#7b4fa6", "#b8860b", "#3f7f7f"];
const AXIS_COLOR = "#222222";
const GRID_COLOR = "#dddddd";

export interface Frame {
  scene: Scene;
  x: Scale;
  y: Scale;
  left: number;
  right: number;
  top: number;
  bottom: number;
}

export function newScene(width = 720, height = 480): Scene {
  return {
    width,
    height,
    marks: [{ kind: "rect", x: 0, y: 0, w: width, h: height, fill: "#ffffff" }],
  };
}

/** Draw the axes box, grid lines, tick labels, axis labels and title. */
export function frame(
  scene: Scene,
  x: Scale,
  y: Scale,
  labels: { title: string; xLabel: string; yLabel: string },
): Frame {
  const left = x.range[0];
  const right = x.range[1];
  const top = y.range[1];
  const bottom = y.range[0];
  const marks = scene.marks;

  for (const tx of x.ticks()) {
    const px = x.map(tx);
    marks.push({ kind: "line", x1: px, y1: top, x2: px, y2: bottom, color: GRID_COLOR, width: 1 });
    marks.push({
      kind: "text", x: px, y: bottom + 16, text: tickLabel(tx), size: 11, anchor: "middle", color: AXIS_COLOR,
    });
  }
  for (const ty of y.ticks()) {
    const py = y.map(ty);
    marks.push({ kind: "line", x1: left, y1: py, x2: right, y2: py, color: GRID_COLOR, width: 1 });
    marks.push({
      kind: "text", x: left - 6, y: py + 4, text: tickLabel(ty), size: 11, anchor: "end", color: AXIS_COLOR,
    });
  }
  marks.push({ kind: "line", x1: left, y1: bottom, x2: right, y2: bottom, color: AXIS_COLOR, width: 1.5 });
  marks.push({ kind: "line", x1: left, y1: top, x2: left, y2: bottom, color: AXIS_COLOR, width: 1.5 });
  marks.push({
    kind: "text", x: (left + right) / 2, y: scene.height - 8, text: labels.xLabel, size: 13, anchor: "middle", color: AXIS_COLOR,
  });
  // y label drawn horizontally above the axis to keep the writer rotation-free
  marks.push({ kind: "text", x: 8, y: 18, text: labels.yLabel, size: 13, anchor: "start", color: AXIS_COLOR });
  marks.push({
    kind: "text", x: (left + right) / 2, y: 20, text: labels.title, size: 15, anchor: "middle", color: "#000000",
  });
  return { scene, x, y, left, right, top, bottom };
}

export function polyline(
  fr: Frame,
  xs: number[],
  ys: number[],
  color: string,
  width = 1.8,
  dash?: string,
): void {
  const pts: Array<[number, number]> = [];
  for (let i = 0; i < xs.length; i++) {
    if (!Number.isFinite(xs[i]) || !Number.isFinite(ys[i])) continue;
    pts.push([fr.x.map(xs[i]), fr.y.map(ys[i])]);
  }
  if (pts.length > 0) fr.scene.marks.push({ kind: "polyline", points: pts, color, width, dash });
}

export function dots(fr: Frame, xs: number[], ys: number[], color: string, r = 3): void {
  for (let i = 0; i < xs.length; i++) {
    fr.scene.marks.push({ kind: "circle", cx: fr.x.map(xs[i]), cy: fr.y.map(ys[i]), r, fill: color });
  }
}

export function legend(fr: Frame, entries: Array<{ label: string; color: string }>): void {
  let yy = fr.top + 16;
  for (const e of entries) {
    fr.scene.marks.push({ kind: "line", x1: fr.right - 150, y1: yy - 4, x2: fr.right - 126, y2: yy - 4, color: e.color, width: 2.5 });
    fr.scene.marks.push({ kind: "text", x: fr.right - 120, y: yy, text: e.label, size: 11, anchor: "start", color: "#222222" });
    yy += 16;
  }
}

const fmt = (v: number): string => {
  const r = Math.round(v * 100) / 100;
  return Object.is(r, -0) ? "0" : String(r);
};

const escapeText = (s: string): string =>
  s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");

/** Serialize to SVG: fixed font stack, no timestamps, stable formatting. */
export function toSvg(scene: Scene): string {
  const out: string[] = [];
  out.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${scene.width}" height="${scene.height}" ` +
      `viewBox="0 0 ${scene.width} ${scene.height}">`,
  );
  for (const m of scene.marks) {
    switch (m.kind) {
      case "rect":
        out.push(`<rect x="${fmt(m.x)}" y="${fmt(m.y)}" width="${fmt(m.w)}" height="${fmt(m.h)}" fill="${m.fill}"/>`);
        break;
      case "line": {
        const dash = m.dash ? ` stroke-dasharray="${m.dash}"` : "";
        out.push(
          `<line x1="${fmt(m.x1)}" y1="${fmt(m.y1)}" x2="${fmt(m.x2)}" y2="${fmt(m.y2)}" ` +
            `stroke="${m.color}" stroke-width="${fmt(m.width)}"${dash}/>`,
        );
        break;
      }
      case "polyline": {
        const dash = m.dash ? ` stroke-dasharray="${m.dash}"` : "";
        const pts = m.points.map(([a, b]) => `${fmt(a)},${fmt(b)}`).join(" ");
        out.push(
          `<polyline points="${pts}" fill="none" stroke="${m.color}" stroke-width="${fmt(m.width)}"${dash}/>`,
        );
        break;
      }
      case "circle":
        out.push(`<circle cx="${fmt(m.cx)}" cy="${fmt(m.cy)}" r="${fmt(m.r)}" fill="${m.fill}"/>`);
        break;
      case "text":
        out.push(
          `<text x="${fmt(m.x)}" y="${fmt(m.y)}" font-family="monospace" font-size="${fmt(m.size)}" ` +
            `text-anchor="${m.anchor}" fill="${m.color}">${escapeText(m.text)}</text>`,
        );
        break;
    }
  }
  out.push("</svg>");
  return out.join("\n") + "\n";
}
