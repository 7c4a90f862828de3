/**
 * Console bootstrap: owns the fetch cycle, event delegation, and rendering.
 *
 * Data flow is strictly fetch -> cache -> render. Mutations (apply, revert)
 * adopt the hash the server returns and then re-fetch everything; nothing
 * is updated optimistically. Any payload arriving under an unexpected hash
 * raises the stale banner instead of being merged.
 */

import { ApiClient, ApiError } from "./api.js";
import { Store } from "./state.js";
import type { TabName } from "./state.js";
import { renderSankey } from "./sankey.js";
import { renderGraph, renderScoreBlocks } from "./graphview.js";
import { renderPlanTab, renderWhatIfTab } from "./panel.js";
import { escapeHtml, fmt, pct, shortHash, truncateCode } from "./format.js";
import type {
  ConceptsPayload,
  GraphDetailPayload,
  GraphListPayload,
  MetaPayload,
  MetricsPayload,
  WeightPlanPayload,
  WeightsPayload,
  WhatIfPayload,
} from "./types.js";

const POLL_MS = 15_000;

const api = new ApiClient("");
const store = new Store();

interface Cache {
  meta: MetaPayload | null;
  graphs: GraphListPayload | null;
  concepts: ConceptsPayload | null;
  weights: WeightsPayload | null;
  metrics: MetricsPayload | null;
  detail: GraphDetailPayload | null;
  whatIf: WhatIfPayload | null;
  preview: WeightPlanPayload | null;
  applied: WeightPlanPayload | null;
}

const cache: Cache = {
  meta: null,
  graphs: null,
  concepts: null,
  weights: null,
  metrics: null,
  detail: null,
  whatIf: null,
  preview: null,
  applied: null,
};

let interveneTab: "whatif" | "plan" = "plan";

function $(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el;
}

function showError(err: unknown): void {
  const text =
    err instanceof ApiError
      ? `${err.code}: ${err.message}` +
        (Object.keys(err.fields).length > 0 ? ` (${JSON.stringify(err.fields)})` : "")
      : String(err);
  store.patch({ error: text });
}

// ---- data loading ----------------------------------------------------

async function refreshAll(): Promise<void> {
  try {
    const meta = await api.meta();
    store.adoptHash(meta.checkpoint_hash, meta.can_revert);
    cache.meta = meta;
    const [graphs, concepts, weights, metrics] = await Promise.all([
      api.graphs(),
      api.concepts(),
      api.weights(),
      api.metrics(),
    ]);
    cache.graphs = graphs;
    cache.concepts = concepts;
    cache.weights = weights;
    cache.metrics = metrics;
    cache.preview = null; // previews are only valid against one checkpoint
    for (const p of [graphs, concepts, weights, metrics]) {
      store.observeHash(p.checkpoint_hash);
    }
    const selected = store.get().selectedGraphId;
    if (selected !== null) await loadGraph(selected, { keepWhatIf: false });
    store.patch({ error: null });
  } catch (err) {
    showError(err);
  }
  render();
}

async function loadGraph(id: number, opts: { keepWhatIf: boolean }): Promise<void> {
  try {
    const detail = await api.graph(id);
    store.observeHash(detail.checkpoint_hash);
    cache.detail = detail;
    if (!opts.keepWhatIf) cache.whatIf = null;
    store.patch({ selectedGraphId: id, error: null });
  } catch (err) {
    showError(err);
  }
}

// ---- event handlers --------------------------------------------------

function readPlanParams(): { tau_c: number; margin: number; cls_true: number; cls_pred: number } {
  const cfg = cache.meta?.run_config ?? {};
  const fallback = {
    tau_c: Number(cfg.tau_c ?? 0.6),
    margin: Number(cfg.margin ?? 0.2),
    cls_true: Number(cfg.cls_true ?? 1),
    cls_pred: Number(cfg.cls_pred ?? 0),
  };
  const read = (id: string, dflt: number) => {
    const el = document.getElementById(id) as HTMLInputElement | null;
    const v = el ? Number(el.value) : NaN;
    return Number.isFinite(v) ? v : dflt;
  };
  return {
    tau_c: read("param-tau", fallback.tau_c),
    margin: read("param-margin", fallback.margin),
    cls_true: read("param-true", fallback.cls_true),
    cls_pred: read("param-pred", fallback.cls_pred),
  };
}

function collectWhatIfEdits(): [number, number][] {
  const edits: [number, number][] = [];
  for (const el of document.querySelectorAll<HTMLInputElement>(".edit-input")) {
    const value = Number(el.value);
    const original = Number(el.dataset.original);
    if (Number.isFinite(value) && value !== original) {
      edits.push([Number(el.dataset.concept), value]);
    }
  }
  return edits;
}

async function runWhatIf(): Promise<void> {
  const id = store.get().selectedGraphId;
  if (id === null || cache.detail === null) return;
  const edits = collectWhatIfEdits();
  if (edits.length === 0) {
    store.patch({ error: "no edits queued: change at least one score first" });
    render();
    return;
  }
  store.clearEdits();
  for (const [index, score] of edits) store.queueEdit(index, score);
  try {
    const result = await api.whatIf(id, edits);
    store.observeHash(result.checkpoint_hash);
    cache.whatIf = result;
    store.patch({ error: null });
  } catch (err) {
    showError(err);
  }
  render();
}

async function previewPlan(): Promise<void> {
  const plan = store.get().pendingPlan;
  if (plan.length === 0) return;
  try {
    const res = await api.planWeights(plan, { dryRun: true, params: readPlanParams() });
    store.observeHash(res.checkpoint_hash);
    cache.preview = res;
    store.patch({ error: null });
  } catch (err) {
    showError(err);
  }
  render();
}

async function applyPlan(): Promise<void> {
  const plan = store.get().pendingPlan;
  if (plan.length === 0) return;
  try {
    const res = await api.planWeights(plan, { params: readPlanParams() });
    cache.applied = res;
    store.adoptHash(res.new_checkpoint_hash!, true);
    store.patch({
      lastOutcome: { kind: "applied", hash: res.new_checkpoint_hash!, records: res.records },
      error: null,
    });
    await refreshAll();
  } catch (err) {
    showError(err);
    render();
  }
}

async function revert(): Promise<void> {
  try {
    const res = await api.revert();
    store.adoptHash(res.checkpoint_hash);
    store.patch({
      lastOutcome: { kind: "reverted", hash: res.checkpoint_hash, records: [] },
      error: null,
    });
    cache.applied = null;
    cache.preview = null;
    await refreshAll();
  } catch (err) {
    showError(err);
    render();
  }
}

function selectConcept(globalIndex: number): void {
  store.patch({ selectedConcept: globalIndex });
  const entry = cache.concepts?.concepts.find((c) => c.global_index === globalIndex);
  const current = store.get().selectedGraphId;
  // jump to an example graph containing the concept when none is selected
  // or the current one does not contain it
  const containing = entry?.graph_ids ?? [];
  const needJump = current === null || !containing.includes(current);
  if (store.get().tab !== "graph") store.patch({ tab: "graph" });
  if (needJump && containing.length > 0) {
    void loadGraph(containing[0], { keepWhatIf: false }).then(render);
  } else {
    render();
  }
}

function onClick(event: Event): void {
  const el = (event.target as HTMLElement).closest<HTMLElement>("[data-action]");
  if (!el) return;
  switch (el.dataset.action) {
    case "refresh":
      void refreshAll();
      break;
    case "tab":
      store.patch({ tab: el.dataset.tab as TabName });
      render();
      break;
    case "subtab":
      interveneTab = el.dataset.subtab as "whatif" | "plan";
      render();
      break;
    case "select-graph":
      void loadGraph(Number(el.dataset.graph), { keepWhatIf: false }).then(() => {
        store.patch({ tab: store.get().tab === "weights" ? "graph" : store.get().tab });
        render();
      });
      break;
    case "select-concept":
      selectConcept(Number(el.dataset.concept));
      break;
    case "run-whatif":
      void runWhatIf();
      break;
    case "reset-whatif":
      store.clearEdits();
      cache.whatIf = null;
      render();
      break;
    case "toggle-plan":
      store.togglePlan(Number(el.dataset.concept));
      render();
      break;
    case "preview-plan":
      void previewPlan();
      break;
    case "apply-plan":
      void applyPlan();
      break;
    case "revert":
      void revert();
      break;
  }
}

// ---- rendering -------------------------------------------------------

function renderTopbar(): void {
  const meta = cache.meta;
  const metrics = cache.metrics;
  if (!meta) {
    $("meta-line").textContent = "connecting…";
    $("hash-line").textContent = "";
    return;
  }
  const acc = metrics ? ` · accuracy ${pct(metrics.accuracy)}` : "";
  $("meta-line").textContent =
    `${meta.dataset} · ${meta.num_graphs} graphs · ` +
    `${meta.num_levels} levels × ${meta.m_per_level} concepts${acc}`;
  $("hash-line").textContent = `checkpoint ${shortHash(store.get().checkpointHash)}`;
}

function renderBanners(): void {
  const state = store.get();
  ($("stale-banner") as HTMLElement).hidden = !state.stale;
  const errBanner = $("error-banner");
  errBanner.hidden = state.error === null;
  if (state.error !== null) errBanner.textContent = state.error;
}

function renderSidebar(): void {
  const graphs = cache.graphs;
  if (!graphs) return;
  const selected = store.get().selectedGraphId;
  $("graph-list").innerHTML = graphs.graphs
    .map((g) => {
      const cls = [
        "graph-row",
        g.correct ? "ok" : "miss",
        g.id === selected ? "selected" : "",
      ]
        .filter(Boolean)
        .join(" ");
      return (
        `<div class="${cls}" data-action="select-graph" data-graph="${g.id}">` +
        `<span class="gid">#${g.id}</span>` +
        `<span>${g.num_nodes}n/${g.num_edges}e</span>` +
        `<span>true ${g.class} → pred ${g.predicted_class}</span>` +
        `<span class="mark">${g.correct ? "✓" : "✗"}</span></div>`
      );
    })
    .join("");
}

function renderWeightsView(): void {
  const view = $("view-weights");
  if (!cache.weights || !cache.concepts) {
    view.innerHTML = `<p class="hint">loading…</p>`;
    return;
  }
  const conceptRows = cache.concepts.concepts
    .map(
      (c) =>
        `<tr data-action="select-concept" data-concept="${c.global_index}">` +
        `<td>${c.global_index}</td>` +
        `<td class="code" title="${escapeHtml(c.code)}">${escapeHtml(truncateCode(c.code, 32))}</td>` +
        `<td>${c.level}</td><td>${fmt(c.information_gain, 3)}</td>` +
        `<td>${c.graph_ids.length}</td></tr>`,
    )
    .join("");
  view.innerHTML =
    `<p class="hint">ribbon thickness is e^|w|; hover for the raw weight, click to inspect a concept</p>` +
    renderSankey(cache.weights) +
    `<h3>concepts</h3>` +
    `<table class="concept-table"><thead><tr>` +
    `<th>slot</th><th>code</th><th>level</th><th>info gain</th><th>graphs</th>` +
    `</tr></thead><tbody>${conceptRows}</tbody></table>`;
}

function renderGraphView(): void {
  const view = $("view-graph");
  const detail = cache.detail;
  const concepts = cache.concepts;
  if (!detail || !concepts) {
    view.innerHTML = `<p class="hint">pick a graph from the list on the left</p>`;
    return;
  }
  const selected = store.get().selectedConcept;
  const highlighted = new Set<number>(
    selected === null ? [] : detail.concept_nodes[String(selected)] ?? [],
  );
  const entry =
    selected === null
      ? null
      : concepts.concepts.find((c) => c.global_index === selected) ?? null;
  const examples =
    entry === null
      ? ""
      : `<div class="examples"><h4>graphs containing ${escapeHtml(truncateCode(entry.code, 24))}</h4>` +
        entry.graph_ids
          .slice(0, 24)
          .map((id) => `<button class="chip" data-action="select-graph" data-graph="${id}">#${id}</button>`)
          .join("") +
        `</div>`;
  const headline =
    `<p>graph ${detail.id} · true class ${detail.class} · predicted ` +
    `${detail.predicted_class} · p=[${detail.probabilities.map((x) => fmt(x, 3)).join(", ")}]` +
    (selected !== null && highlighted.size > 0
      ? ` · highlighted ${highlighted.size} nodes`
      : "") +
    `</p>`;
  view.innerHTML =
    headline +
    `<div class="graph-split"><div>${renderGraph(detail, highlighted)}</div>` +
    `<div>${renderScoreBlocks(detail, concepts.concepts, selected)}${examples}</div></div>`;
}

function renderInterveneView(): void {
  const view = $("view-intervene");
  if (!cache.concepts || !cache.meta) {
    view.innerHTML = `<p class="hint">loading…</p>`;
    return;
  }
  const subtabs =
    `<div class="subtabs">` +
    `<button data-action="subtab" data-subtab="plan" class="${interveneTab === "plan" ? "active" : ""}">weight plan</button>` +
    `<button data-action="subtab" data-subtab="whatif" class="${interveneTab === "whatif" ? "active" : ""}">instance what-if</button>` +
    `</div>`;
  if (interveneTab === "whatif") {
    view.innerHTML =
      subtabs +
      renderWhatIfTab(
        cache.detail,
        cache.concepts.concepts,
        store.get().pendingEdits,
        cache.whatIf,
      );
  } else {
    view.innerHTML =
      subtabs +
      renderPlanTab({
        concepts: cache.concepts.concepts,
        plan: store.get().pendingPlan,
        preview: cache.preview,
        applied: cache.applied,
        canRevert: store.get().canRevert,
        params: readPlanParams(),
      });
  }
}

function render(): void {
  const state = store.get();
  renderTopbar();
  renderBanners();
  renderSidebar();
  for (const name of ["weights", "graph", "intervene"] as const) {
    ($(`view-${name}`) as HTMLElement).hidden = state.tab !== name;
  }
  for (const btn of document.querySelectorAll<HTMLElement>("#tabs [data-tab]")) {
    btn.classList.toggle("active", btn.dataset.tab === state.tab);
  }
  renderWeightsView();
  renderGraphView();
  renderInterveneView();
}

// ---- boot ------------------------------------------------------------

document.addEventListener("click", onClick);
setInterval(() => {
  // detect concurrent interventions (e.g. from the CLI) between user actions
  void api
    .meta()
    .then((m) => {
      const current = store.get().checkpointHash;
      if (current !== null && m.checkpoint_hash !== current && !store.get().stale) {
        store.patch({ stale: true });
        renderBanners();
      }
    })
    .catch(() => undefined);
}, POLL_MS);

void refreshAll();
