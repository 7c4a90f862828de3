/**
 * Class <-> concept flow diagram of the classifier weights.
 *
 * The server sends one flow per surviving weight entry with a precomputed
 * ribbon width (e^|w|); this module only arranges them. Classes sit on the
 * left, concepts on the right, ribbon thickness is proportional to the
 * server width under a single global scale so thicknesses are comparable
 * across the whole diagram.
 */

import type { WeightsPayload } from "./types.js";
import { escapeHtml, fmtSigned, truncateCode } from "./format.js";

const NODE_W = 14;
const LABEL_GUTTER = 170; // room for class / code labels outside the columns
const ROW_GAP = 10;
const PAD_Y = 26;

export interface SankeyBox {
  kind: "class" | "concept";
  /** class index or global concept index */
  index: number;
  label: string;
  x: number;
  y: number;
  height: number;
  total: number;
}

export interface SankeyRibbon {
  classIndex: number;
  globalIndex: number;
  code: string;
  level: number;
  weight: number;
  width: number;
  sy: number; // left segment top
  sh: number;
  ty: number; // right segment top
  th: number;
}

export interface SankeyLayout {
  w: number;
  h: number;
  classes: SankeyBox[];
  concepts: SankeyBox[];
  ribbons: SankeyRibbon[];
}

interface FlowRef {
  classIndex: number;
  globalIndex: number;
  code: string;
  level: number;
  weight: number;
  width: number;
}

export function layoutSankey(payload: WeightsPayload, w = 780, h = 440): SankeyLayout {
  const flows: FlowRef[] = [];
  for (const cls of payload.classes) {
    for (const f of cls.flows) {
      flows.push({
        classIndex: cls.class,
        globalIndex: f.global_index,
        code: f.concept_code,
        level: f.level,
        weight: f.weight,
        width: f.width,
      });
    }
  }
  const empty: SankeyLayout = { w, h, classes: [], concepts: [], ribbons: [] };
  if (flows.length === 0) return empty;

  const classIds = payload.classes.map((c) => c.class);
  const conceptIds = [...new Set(flows.map((f) => f.globalIndex))].sort((a, b) => a - b);
  const totalUnits = flows.reduce((s, f) => s + f.width, 0);
  if (totalUnits <= 0) return empty;

  const availL = h - 2 * PAD_Y - ROW_GAP * (classIds.length - 1);
  const availR = h - 2 * PAD_Y - ROW_GAP * (conceptIds.length - 1);
  const scale = Math.min(availL, availR) / totalUnits;

  const classTotal = new Map(classIds.map((c) => [c, 0]));
  const conceptTotal = new Map(conceptIds.map((g) => [g, 0]));
  for (const f of flows) {
    classTotal.set(f.classIndex, classTotal.get(f.classIndex)! + f.width);
    conceptTotal.set(f.globalIndex, conceptTotal.get(f.globalIndex)! + f.width);
  }

  function column(
    kind: SankeyBox["kind"],
    ids: number[],
    totals: Map<number, number>,
    x: number,
    label: (id: number) => string,
  ): SankeyBox[] {
    const heights = ids.map((id) => totals.get(id)! * scale);
    const colH = heights.reduce((s, v) => s + v, 0) + ROW_GAP * (ids.length - 1);
    let y = (h - colH) / 2;
    return ids.map((id, i) => {
      const box: SankeyBox = {
        kind,
        index: id,
        label: label(id),
        x,
        y,
        height: heights[i],
        total: totals.get(id)!,
      };
      y += heights[i] + ROW_GAP;
      return box;
    });
  }

  const firstCode = new Map<number, FlowRef>();
  for (const f of flows) if (!firstCode.has(f.globalIndex)) firstCode.set(f.globalIndex, f);

  const classes = column("class", classIds, classTotal, LABEL_GUTTER, (c) => `class ${c}`);
  const concepts = column(
    "concept",
    conceptIds,
    conceptTotal,
    w - LABEL_GUTTER - NODE_W,
    (g) => truncateCode(firstCode.get(g)!.code),
  );

  const classCursor = new Map(classes.map((b) => [b.index, b.y]));
  const conceptCursor = new Map(concepts.map((b) => [b.index, b.y]));

  // left offsets follow the server's per-class flow order (already ranked);
  // right offsets group by concept, walking flows in the same order
  const ribbons: SankeyRibbon[] = flows.map((f) => {
    const thickness = f.width * scale;
    const sy = classCursor.get(f.classIndex)!;
    classCursor.set(f.classIndex, sy + thickness);
    const ty = conceptCursor.get(f.globalIndex)!;
    conceptCursor.set(f.globalIndex, ty + thickness);
    return {
      classIndex: f.classIndex,
      globalIndex: f.globalIndex,
      code: f.code,
      level: f.level,
      weight: f.weight,
      width: f.width,
      sy,
      sh: thickness,
      ty,
      th: thickness,
    };
  });

  return { w, h, classes, concepts, ribbons };
}

function ribbonPath(x0: number, y0: number, h0: number, x1: number, y1: number, h1: number): string {
  const cp = (x1 - x0) * 0.45;
  return (
    `M${x0},${y0} C${x0 + cp},${y0} ${x1 - cp},${y1} ${x1},${y1}` +
    ` L${x1},${y1 + h1} C${x1 - cp},${y1 + h1} ${x0 + cp},${y0 + h0} ${x0},${y0 + h0} Z`
  );
}

export function renderSankey(payload: WeightsPayload, w = 780, h = 440): string {
  const layout = layoutSankey(payload, w, h);
  if (layout.ribbons.length === 0) {
    return `<div class="empty-note">no weight flows to draw</div>`;
  }
  const xL = LABEL_GUTTER + NODE_W;
  const xR = w - LABEL_GUTTER - NODE_W;

  const parts: string[] = [];
  parts.push(`<svg viewBox="0 0 ${w} ${h}" class="sankey" role="img">`);

  for (const r of layout.ribbons) {
    const sign = r.weight >= 0 ? "pos" : "neg";
    const title =
      `class ${r.classIndex} ↔ ${escapeHtml(r.code)}\n` +
      `level ${r.level}, slot ${r.globalIndex}\n` +
      `weight ${fmtSigned(r.weight)} (width e^|w| = ${r.width.toFixed(4)})`;
    parts.push(
      `<path class="ribbon ${sign}" d="${ribbonPath(xL, r.sy, r.sh, xR, r.ty, r.th)}"` +
        ` data-action="select-concept" data-concept="${r.globalIndex}"` +
        ` data-class="${r.classIndex}" data-weight="${r.weight}" data-level="${r.level}"` +
        ` data-code="${escapeHtml(r.code)}"><title>${title}</title></path>`,
    );
  }

  for (const b of layout.classes) {
    parts.push(
      `<rect class="node class-node" x="${b.x}" y="${b.y}" width="${NODE_W}"` +
        ` height="${Math.max(b.height, 1)}"/>`,
      `<text class="node-label" x="${b.x - 8}" y="${b.y + b.height / 2}"` +
        ` text-anchor="end" dominant-baseline="central">${escapeHtml(b.label)}</text>`,
    );
  }
  for (const b of layout.concepts) {
    parts.push(
      `<rect class="node concept-node" x="${b.x}" y="${b.y}" width="${NODE_W}"` +
        ` height="${Math.max(b.height, 1)}" data-action="select-concept"` +
        ` data-concept="${b.index}"/>`,
      `<text class="node-label code" x="${b.x + NODE_W + 8}" y="${b.y + b.height / 2}"` +
        ` dominant-baseline="central">${escapeHtml(b.label)}</text>`,
    );
  }

  parts.push("</svg>");
  return parts.join("");
}
