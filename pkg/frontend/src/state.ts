/**
 * Single source of truth for what the console shows.
 *
 * Every API payload is stamped with the checkpoint hash it was computed
 * under. The store tracks the hash it believes is current; a payload
 * arriving under any other hash flips `stale`, and the views surface a
 * refresh prompt instead of silently mixing checkpoints. Mutations
 * (apply / revert) adopt the returned hash and trigger a full re-fetch,
 * so there are no optimistic updates to roll back.
 */

import type { InterventionRecord } from "./types.js";

export type TabName = "weights" | "graph" | "intervene";

export interface PendingEdit {
  index: number;
  score: number;
}

export interface OutcomeSummary {
  kind: "applied" | "reverted";
  hash: string;
  records: InterventionRecord[];
}

export interface ViewState {
  checkpointHash: string | null;
  canRevert: boolean;
  stale: boolean;
  error: string | null;
  tab: TabName;
  selectedGraphId: number | null;
  selectedConcept: number | null;
  pendingEdits: PendingEdit[];
  pendingPlan: number[];
  lastOutcome: OutcomeSummary | null;
}

export type Listener = (state: Readonly<ViewState>) => void;

const INITIAL: ViewState = {
  checkpointHash: null,
  canRevert: false,
  stale: false,
  error: null,
  tab: "weights",
  selectedGraphId: null,
  selectedConcept: null,
  pendingEdits: [],
  pendingPlan: [],
  lastOutcome: null,
};

export class Store {
  private state: ViewState = { ...INITIAL };
  private listeners: Listener[] = [];

  get(): Readonly<ViewState> {
    return this.state;
  }

  subscribe(fn: Listener): () => void {
    this.listeners.push(fn);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== fn);
    };
  }

  patch(partial: Partial<ViewState>): void {
    this.state = { ...this.state, ...partial };
    this.emit();
  }

  /**
   * Stamp a payload's hash against the tracked one. The first hash seen is
   * adopted; any later mismatch marks the view stale. Returns whether the
   * payload is current.
   */
  observeHash(hash: string): boolean {
    if (this.state.checkpointHash === null) {
      this.patch({ checkpointHash: hash });
      return true;
    }
    if (hash !== this.state.checkpointHash) {
      if (!this.state.stale) this.patch({ stale: true });
      return false;
    }
    return true;
  }

  /** Accept a new current hash (after refresh, apply, or revert). */
  adoptHash(hash: string, canRevert?: boolean): void {
    this.patch({
      checkpointHash: hash,
      stale: false,
      ...(canRevert === undefined ? {} : { canRevert }),
    });
  }

  /** Queue or overwrite one instance edit; at most one pending edit per slot. */
  queueEdit(index: number, score: number): void {
    const rest = this.state.pendingEdits.filter((e) => e.index !== index);
    this.patch({ pendingEdits: [...rest, { index, score }] });
  }

  removeEdit(index: number): void {
    this.patch({ pendingEdits: this.state.pendingEdits.filter((e) => e.index !== index) });
  }

  clearEdits(): void {
    this.patch({ pendingEdits: [] });
  }

  togglePlan(index: number): void {
    const plan = this.state.pendingPlan.includes(index)
      ? this.state.pendingPlan.filter((i) => i !== index)
      : [...this.state.pendingPlan, index].sort((a, b) => a - b);
    this.patch({ pendingPlan: plan });
  }

  clearPlan(): void {
    this.patch({ pendingPlan: [] });
  }

  private emit(): void {
    for (const fn of this.listeners) fn(this.state);
  }
}
