/**
 * The edit-and-observe loop, two tabs:
 *
 *  - instance what-ifs: overwrite chosen concept scores for one graph and
 *    see the re-prediction (never persisted server-side);
 *  - weight plans: pick concepts, preview the closed-form transcript
 *    (targets, delta a-bar, f-bar, delta w), apply, revert.
 *
 * All render functions return markup; event wiring lives in main.ts.
 */

import type {
  ConceptEntry,
  GraphDetailPayload,
  InterventionRecord,
  WeightPlanPayload,
  WhatIfPayload,
} from "./types.js";
import type { PendingEdit } from "./state.js";
import { escapeHtml, fmt, fmtSigned, pct, shortHash, truncateCode } from "./format.js";

export function renderWhatIfTab(
  detail: GraphDetailPayload | null,
  concepts: ConceptEntry[],
  pending: PendingEdit[],
  result: WhatIfPayload | null,
): string {
  if (detail === null) {
    return `<p class="hint">pick a graph from the list to run what-ifs against it</p>`;
  }
  const pendingByIndex = new Map(pending.map((e) => [e.index, e.score]));
  const rows = concepts
    .map((c) => {
      const current = detail.concept_scores[c.global_index];
      const queued = pendingByIndex.get(c.global_index);
      const value = queued ?? current;
      const mark = queued === undefined ? "" : ` <span class="queued">edited</span>`;
      return (
        `<tr><td class="code" title="${escapeHtml(c.code)}">` +
        `${escapeHtml(truncateCode(c.code, 24))}</td>` +
        `<td>${c.level}</td><td>${fmt(current, 4)}</td>` +
        `<td>${fmt(detail.concept_labels[c.global_index], 4)}</td>` +
        `<td><input type="number" step="0.05" class="edit-input" value="${fmt(value, 4)}"` +
        ` data-concept="${c.global_index}" data-original="${current}"/>${mark}</td></tr>`
      );
    })
    .join("");

  let outcome = "";
  if (result !== null) {
    const flipped = result.predicted_class !== detail.predicted_class;
    outcome =
      `<div class="whatif-result">` +
      `<h4>re-prediction (what-if only, server state untouched)</h4>` +
      `<p>predicted class ${detail.predicted_class} → ` +
      `<strong>${result.predicted_class}</strong>` +
      (flipped ? ` <span class="flip">flipped</span>` : " (unchanged)") +
      `</p>` +
      `<p>probabilities [${result.probabilities.map((p) => fmt(p, 4)).join(", ")}]` +
      ` · logits [${result.logits.map((l) => fmt(l, 4)).join(", ")}]</p>` +
      `</div>`;
  }

  return (
    `<div class="whatif">` +
    `<p>graph ${detail.id}: true class ${detail.class}, predicted ${detail.predicted_class}.` +
    ` Overwrite scores below, then re-predict through the bottleneck.</p>` +
    `<table class="concept-table"><thead><tr>` +
    `<th>concept</th><th>level</th><th>ĉ</th><th>c</th><th>edited score</th>` +
    `</tr></thead><tbody>${rows}</tbody></table>` +
    `<div class="actions">` +
    `<button data-action="run-whatif">re-predict with edits</button>` +
    `<button data-action="reset-whatif" class="ghost">reset</button>` +
    `</div>` +
    outcome +
    `</div>`
  );
}

function recordRows(records: InterventionRecord[]): string {
  return records
    .map(
      (r) =>
        `<tr><td>${r.concept_index}</td><td>${r.target_ids.length}</td>` +
        `<td>${fmtSigned(r.delta_a_bar)}</td><td>${fmt(r.f_bar)}</td>` +
        `<td class="dw">${fmtSigned(r.delta_w)}</td>` +
        `<td>${r.outcome.corrections} / ${r.outcome.new_errors}</td>` +
        `<td>${pct(r.outcome.accuracy_before)} → ${pct(r.outcome.accuracy_after)}</td></tr>`,
    )
    .join("");
}

export function renderRecords(records: InterventionRecord[], heading: string): string {
  if (records.length === 0) return "";
  const edits = records
    .flatMap((r) => r.edits)
    .map(
      ([cls, cpt, oldW, newW]) =>
        `<li>W[class ${cls}, concept ${cpt}]: ${fmt(oldW)} → ${fmt(newW)}</li>`,
    )
    .join("");
  return (
    `<div class="transcript"><h4>${escapeHtml(heading)}</h4>` +
    `<table class="record-table"><thead><tr>` +
    `<th>concept</th><th>|targets|</th><th>Δā</th><th>f̄</th>` +
    `<th>Δw</th><th>fixed / broken</th><th>accuracy</th>` +
    `</tr></thead><tbody>${recordRows(records)}</tbody></table>` +
    `<ul class="edit-list">${edits}</ul></div>`
  );
}

export interface PlanView {
  concepts: ConceptEntry[];
  plan: number[];
  preview: WeightPlanPayload | null;
  applied: WeightPlanPayload | null;
  canRevert: boolean;
  params: { tau_c: number; margin: number; cls_true: number; cls_pred: number };
}

export function renderPlanTab(view: PlanView): string {
  const ranked = [...view.concepts].sort(
    (a, b) => b.information_gain - a.information_gain,
  );
  const rows = ranked
    .map((c) => {
      const checked = view.plan.includes(c.global_index) ? " checked" : "";
      return (
        `<tr><td><input type="checkbox" data-action="toggle-plan"` +
        ` data-concept="${c.global_index}"${checked}/></td>` +
        `<td>${c.global_index}</td>` +
        `<td class="code" title="${escapeHtml(c.code)}">${escapeHtml(truncateCode(c.code, 24))}</td>` +
        `<td>${c.level}</td><td>${fmt(c.information_gain, 3)}</td></tr>`
      );
    })
    .join("");

  const p = view.params;
  const paramInputs =
    `<div class="param-row">` +
    `<label>τ_c <input type="number" step="0.05" id="param-tau" value="${p.tau_c}"/></label>` +
    `<label>margin <input type="number" step="0.05" id="param-margin" value="${p.margin}"/></label>` +
    `<label>true class <input type="number" step="1" id="param-true" value="${p.cls_true}"/></label>` +
    `<label>predicted class <input type="number" step="1" id="param-pred" value="${p.cls_pred}"/></label>` +
    `</div>`;

  const planEmpty = view.plan.length === 0;
  const previewBlock = view.preview
    ? renderRecords(view.preview.records, "preview (dry run, nothing applied)")
    : "";
  const appliedBlock = view.applied
    ? renderRecords(
        view.applied.records,
        `applied → checkpoint ${shortHash(view.applied.new_checkpoint_hash ?? null)}`,
      )
    : "";

  return (
    `<div class="plan">` +
    `<p>Targets are graphs truly of the chosen class, misread as the other,` +
    ` whose concept scores still track their labels (cosine ≥ τ_c).` +
    ` One closed-form step per selected concept moves weight between the two classes.</p>` +
    paramInputs +
    `<table class="concept-table"><thead><tr>` +
    `<th></th><th>slot</th><th>concept</th><th>level</th><th>info gain</th>` +
    `</tr></thead><tbody>${rows}</tbody></table>` +
    `<div class="actions">` +
    `<button data-action="preview-plan"${planEmpty ? " disabled" : ""}>preview</button>` +
    `<button data-action="apply-plan"${planEmpty ? " disabled" : ""}>apply</button>` +
    `<button data-action="revert"${view.canRevert ? "" : " disabled"} class="danger">revert last</button>` +
    `</div>` +
    previewBlock +
    appliedBlock +
    `</div>`
  );
}
