/** The t-SNE channel atlas: an SVG scatter colored by orientation.
 *
 * Coordinates and theme probabilities come from the layout endpoint and are
 * rendered verbatim in data attributes; only the screen projection is local.
 */

import type { LayoutPoint } from "./types.js";
import { escapeHtml } from "./views.js";

export const ORIENTATION_COLORS: Record<string, string> = {
  Left: "#c0392b",
  Center: "#7f8c8d",
  Right: "#2980b9",
  FarRight: "#17202a",
  Unlabeled: "#27ae60",
};

export interface ViewBox {
  x: number;
  y: number;
  w: number;
  h: number;
}

export function viewBoxAttr(vb: ViewBox): string {
  return `${vb.x} ${vb.y} ${vb.w} ${vb.h}`;
}

/** Zoom by `factor` keeping the svg-space anchor (ax, ay) stationary. */
export function zoomViewBox(vb: ViewBox, factor: number, ax: number, ay: number): ViewBox {
  const w = vb.w / factor;
  const h = vb.h / factor;
  return {
    x: ax - (ax - vb.x) / factor,
    y: ay - (ay - vb.y) / factor,
    w,
    h,
  };
}

export function panViewBox(vb: ViewBox, dx: number, dy: number): ViewBox {
  return { x: vb.x - dx, y: vb.y - dy, w: vb.w, h: vb.h };
}

export interface ScreenPoint extends LayoutPoint {
  sx: number;
  sy: number;
}

/** Affine-map raw coordinates into a [pad, size-pad]^2 screen box. */
export function projectPoints(
  points: LayoutPoint[],
  size = 640,
  pad = 40,
): ScreenPoint[] {
  if (points.length === 0) {
    return [];
  }
  const xs = points.map((p) => p.x);
  const ys = points.map((p) => p.y);
  const minX = Math.min(...xs);
  const maxX = Math.max(...xs);
  const minY = Math.min(...ys);
  const maxY = Math.max(...ys);
  const spanX = maxX - minX || 1;
  const spanY = maxY - minY || 1;
  const inner = size - 2 * pad;
  return points.map((p) => ({
    ...p,
    sx: pad + ((p.x - minX) / spanX) * inner,
    sy: pad + ((p.y - minY) / spanY) * inner,
  }));
}

function tooltip(point: LayoutPoint): string {
  const themes = point.top_themes
    .map((t) => `${t.theme}: ${t.probability}`)
    .join("\n");
  return `${point.channel_id} (${point.orientation})\n${themes}`;
}

export function renderAtlas(points: LayoutPoint[], size = 640): string {
  if (points.length === 0) {
    return `<div class="atlas-empty">no layout yet — run the <code>viz</code> stage first</div>`;
  }
  const projected = projectPoints(points, size);
  const circles = projected
    .map((p) => {
      const color = ORIENTATION_COLORS[p.orientation] ?? "#555";
      const topThemes = p.top_themes
        .map((t) => `${escapeHtml(t.theme)}:${t.probability}`)
        .join(";");
      return (
        `<circle cx="${p.sx.toFixed(2)}" cy="${p.sy.toFixed(2)}" r="6" fill="${color}"` +
        ` data-channel-id="${escapeHtml(p.channel_id)}" data-x="${p.x}" data-y="${p.y}"` +
        ` data-orientation="${escapeHtml(p.orientation)}" data-top-themes="${topThemes}">` +
        `<title>${escapeHtml(tooltip(p))}</title></circle>` +
        `<text x="${(p.sx + 8).toFixed(2)}" y="${(p.sy + 4).toFixed(2)}" class="label">` +
        `${escapeHtml(p.channel_id)}</text>`
      );
    })
    .join("\n");
  const legend = Object.entries(ORIENTATION_COLORS)
    .map(
      ([name, color], i) =>
        `<circle cx="12" cy="${16 + i * 18}" r="5" fill="${color}"></circle>` +
        `<text x="24" y="${20 + i * 18}" class="label">${name}</text>`,
    )
    .join("");
  return `<svg class="atlas" viewBox="0 0 ${size} ${size}" xmlns="http://www.w3.org/2000/svg">
<g class="legend">${legend}</g>
${circles}
</svg>`;
}
