/**
 * Graph drawing with concept-node highlighting plus the per-level score
 * blocks. The force layout is presentation only: a seeded RNG and a fixed
 * iteration budget keep a given graph's drawing stable across renders.
 */

import type { ConceptEntry, GraphDetailPayload } from "./types.js";
import { escapeHtml, fmt, truncateCode } from "./format.js";

const ITERATIONS = 240;
const NODE_R = 9;
const EDGE_MARGIN = 24;

// label -> fill; cycles for alphabets larger than the palette
const PALETTE = [
  "#4c78a8", "#f58518", "#54a24b", "#b279a2",
  "#e45756", "#72b7b2", "#eeca3b", "#9d755d",
] as const;

function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export interface LayoutResult {
  xs: number[];
  ys: number[];
}

/** Fruchterman-Reingold with linear cooling, clamped to the viewport. */
export function forceLayout(
  numNodes: number,
  edges: [number, number][],
  width: number,
  height: number,
  seed = 1,
): LayoutResult {
  const rand = mulberry32(seed);
  const xs = new Array<number>(numNodes);
  const ys = new Array<number>(numNodes);
  const cx = width / 2;
  const cy = height / 2;
  const r0 = Math.min(width, height) / 3;
  for (let v = 0; v < numNodes; v++) {
    const angle = (2 * Math.PI * v) / Math.max(numNodes, 1);
    xs[v] = cx + r0 * Math.cos(angle) + (rand() - 0.5) * 10;
    ys[v] = cy + r0 * Math.sin(angle) + (rand() - 0.5) * 10;
  }
  if (numNodes <= 1) return { xs, ys };

  const k = Math.sqrt((width * height) / numNodes) * 0.6;
  let temp = Math.min(width, height) / 8;
  const cool = temp / (ITERATIONS + 1);
  const dx = new Array<number>(numNodes);
  const dy = new Array<number>(numNodes);

  for (let it = 0; it < ITERATIONS; it++) {
    dx.fill(0);
    dy.fill(0);
    for (let v = 0; v < numNodes; v++) {
      for (let u = v + 1; u < numNodes; u++) {
        let ex = xs[v] - xs[u];
        let ey = ys[v] - ys[u];
        let d = Math.hypot(ex, ey);
        if (d < 1e-6) {
          // coincident nodes: nudge apart deterministically
          ex = 0.01 * (v - u);
          ey = 0.01;
          d = Math.hypot(ex, ey);
        }
        const rep = (k * k) / d;
        dx[v] += (ex / d) * rep;
        dy[v] += (ey / d) * rep;
        dx[u] -= (ex / d) * rep;
        dy[u] -= (ey / d) * rep;
      }
    }
    for (const [a, b] of edges) {
      const ex = xs[a] - xs[b];
      const ey = ys[a] - ys[b];
      const d = Math.hypot(ex, ey) || 1e-6;
      const att = (d * d) / k;
      dx[a] -= (ex / d) * att;
      dy[a] -= (ey / d) * att;
      dx[b] += (ex / d) * att;
      dy[b] += (ey / d) * att;
    }
    for (let v = 0; v < numNodes; v++) {
      // mild gravity keeps disconnected pieces on screen
      dx[v] += (cx - xs[v]) * 0.03;
      dy[v] += (cy - ys[v]) * 0.03;
      const d = Math.hypot(dx[v], dy[v]) || 1e-6;
      const step = Math.min(d, temp);
      xs[v] += (dx[v] / d) * step;
      ys[v] += (dy[v] / d) * step;
      xs[v] = Math.min(width - EDGE_MARGIN, Math.max(EDGE_MARGIN, xs[v]));
      ys[v] = Math.min(height - EDGE_MARGIN, Math.max(EDGE_MARGIN, ys[v]));
    }
    temp -= cool;
  }
  return { xs, ys };
}

export function renderGraph(
  detail: GraphDetailPayload,
  highlighted: ReadonlySet<number>,
  w = 560,
  h = 420,
): string {
  const { xs, ys } = forceLayout(detail.num_nodes, detail.edges, w, h, detail.id + 1);
  const parts: string[] = [`<svg viewBox="0 0 ${w} ${h}" class="graph" role="img">`];

  for (const [a, b] of detail.edges) {
    parts.push(
      `<line class="edge" x1="${xs[a].toFixed(1)}" y1="${ys[a].toFixed(1)}"` +
        ` x2="${xs[b].toFixed(1)}" y2="${ys[b].toFixed(1)}"/>`,
    );
  }
  for (let v = 0; v < detail.num_nodes; v++) {
    const label = detail.node_labels[v];
    const fill = PALETTE[label % PALETTE.length];
    const inMask = detail.node_mask !== null && detail.node_mask[v] === 1;
    const cls = ["gnode", highlighted.has(v) ? "hl" : "", inMask ? "mask" : ""]
      .filter(Boolean)
      .join(" ");
    const title =
      `node ${v} · label ${label}` + (inMask ? " · in annotated motif" : "");
    parts.push(
      `<circle class="${cls}" cx="${xs[v].toFixed(1)}" cy="${ys[v].toFixed(1)}"` +
        ` r="${NODE_R}" fill="${fill}"><title>${title}</title></circle>`,
      `<text class="gnode-label" x="${xs[v].toFixed(1)}" y="${ys[v].toFixed(1)}"` +
        ` text-anchor="middle" dominant-baseline="central">${label}</text>`,
    );
  }
  parts.push("</svg>");
  return parts.join("");
}

/**
 * Predicted concept scores next to their labels, one block per level.
 * Bars are clickable to drive the highlight in the drawing.
 */
export function renderScoreBlocks(
  detail: GraphDetailPayload,
  concepts: ConceptEntry[],
  selectedConcept: number | null,
): string {
  const byLevel = new Map<number, ConceptEntry[]>();
  for (const c of concepts) {
    const bucket = byLevel.get(c.level) ?? [];
    bucket.push(c);
    byLevel.set(c.level, bucket);
  }
  const maxAbs = Math.max(
    1,
    ...detail.concept_scores.map(Math.abs),
    ...detail.concept_labels.map(Math.abs),
  );
  const parts: string[] = ['<div class="score-blocks">'];
  for (const [level, bucket] of [...byLevel.entries()].sort((a, b) => a[0] - b[0])) {
    parts.push(`<div class="score-level"><h4>level ${level}</h4>`);
    for (const c of bucket) {
      const score = detail.concept_scores[c.global_index];
      const label = detail.concept_labels[c.global_index];
      const covered = detail.concept_nodes[String(c.global_index)] ?? [];
      const sel = c.global_index === selectedConcept ? " selected" : "";
      parts.push(
        `<div class="score-row${sel}" data-action="select-concept" data-concept="${c.global_index}"` +
          ` title="${escapeHtml(c.code)}">` +
          `<span class="code">${escapeHtml(truncateCode(c.code, 22))}</span>` +
          `<span class="bars">` +
          `<span class="bar pred" style="width:${((Math.abs(score) / maxAbs) * 100).toFixed(1)}%"></span>` +
          `<span class="bar truth" style="width:${((Math.abs(label) / maxAbs) * 100).toFixed(1)}%"></span>` +
          `</span>` +
          `<span class="nums">ĉ=${fmt(score, 3)} c=${fmt(label, 3)}` +
          (covered.length > 0 ? ` · ${covered.length} nodes` : "") +
          `</span></div>`,
      );
    }
    parts.push("</div>");
  }
  parts.push("</div>");
  return parts.join("");
}
