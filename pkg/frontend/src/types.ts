/**
 * Wire shapes of the serve API. Field names match the JSON exactly; every
 * payload carries the checkpoint hash it was computed under.
 */

export interface MetaPayload {
  checkpoint_hash: string;
  dataset: string;
  num_graphs: number;
  num_classes: number;
  num_levels: number;
  m_per_level: number;
  concept_width: number;
  universe_hash: string | null;
  run_config: Record<string, unknown>;
  can_revert: boolean;
}

export interface GraphRow {
  id: number;
  num_nodes: number;
  num_edges: number;
  class: number;
  predicted_class: number;
  correct: boolean;
}

export interface GraphListPayload {
  checkpoint_hash: string;
  graphs: GraphRow[];
}

export interface GraphDetailPayload {
  checkpoint_hash: string;
  id: number;
  num_nodes: number;
  edges: [number, number][];
  node_labels: number[];
  node_mask: number[] | null;
  class: number;
  predicted_class: number;
  probabilities: number[];
  logits: number[];
  concept_scores: number[];
  concept_labels: number[];
  /** global concept index (as string key) -> covered node ids; absent concepts omitted */
  concept_nodes: Record<string, number[]>;
}

export interface ConceptEntry {
  global_index: number;
  level: number;
  position: number;
  code: string;
  information_gain: number;
  /** ids of dataset graphs containing this code at its level */
  graph_ids: number[];
}

export interface ConceptsPayload {
  checkpoint_hash: string;
  concepts: ConceptEntry[];
}

export interface WeightFlow {
  concept_code: string;
  level: number;
  global_index: number;
  weight: number;
  /** e^|weight|, the server-computed ribbon width */
  width: number;
}

export interface ClassFlows {
  class: number;
  flows: WeightFlow[];
}

export interface WeightsPayload {
  checkpoint_hash: string;
  classes: ClassFlows[];
}

export interface MetricsPayload {
  checkpoint_hash: string;
  accuracy: number;
  confusion: number[][];
  num_graphs: number;
}

export interface PredictPayload {
  checkpoint_hash: string;
  predicted_class: number;
  probabilities: number[];
  concept_scores: number[];
}

export interface WhatIfPayload {
  checkpoint_hash: string;
  graph_id: number;
  original_concepts: number[];
  edited_concepts: number[];
  logits: number[];
  probabilities: number[];
  predicted_class: number;
  persistent: false;
}

export interface InterventionOutcome {
  corrections: number;
  new_errors: number;
  accuracy_before: number;
  accuracy_after: number;
}

export interface InterventionRecord {
  concept_index: number;
  target_ids: number[];
  delta_a_bar: number;
  f_bar: number;
  delta_w: number;
  /** (class, concept, old weight, new weight) per touched entry */
  edits: [number, number, number, number][];
  outcome: InterventionOutcome;
}

export interface InterventionParams {
  tau_c?: number;
  margin?: number;
  cls_true?: number;
  cls_pred?: number;
}

export interface WeightPlanPayload {
  checkpoint_hash: string;
  dry_run: boolean;
  records: InterventionRecord[];
  new_checkpoint_hash?: string;
}

export interface RevertPayload {
  checkpoint_hash: string;
}

export interface ErrorEnvelope {
  code: string;
  message: string;
  fields?: Record<string, string>;
}

export interface RawGraph {
  id?: number;
  num_nodes: number;
  edges: [number, number][];
  node_labels: number[];
}
