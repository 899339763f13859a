/**
 * Payload shapes of the review API (GET /api/v1/session,
 * GET /api/v1/iterations/{id}/pending, GET /api/v1/report).
 *
 * The UI renders what the server says and computes nothing itself, so
 * these interfaces are the whole contract.
 */

export interface InventoryCounts {
  data_source: number;
  algorithm: number;
  ui_widget: number;
  total: number;
}

export interface StorySummary {
  id: string;
  text: string;
  created_at: string;
}

export interface IterationSummary {
  id: string;
  story_id: string;
  status: 'awaiting_validation' | 'validated';
  question_count: number;
  task_count: number;
  pending_count: number;
  new_accepted: number;
  duplicates_flagged: number;
  rejected: number;
  warnings: string[];
}

export interface SessionPayload {
  config: {
    n_questions: number;
    threshold: number;
    minimize: boolean;
    backend: string;
    model_id: string;
    template_versions: Record<string, string>;
  };
  stories: StorySummary[];
  iterations: IterationSummary[];
  inventory_counts: InventoryCounts;
  finalized: boolean;
  snapshot_hash: string | null;
  can_finalize: boolean;
}

export interface DuplicateHint {
  existing_task_id: string;
  existing_name: string | null;
  existing_kind: string | null;
  existing_description: string | null;
  existing_status: string;
  score: number;
  basis: 'name' | 'description' | 'both';
}

export interface PendingTask {
  id: string;
  kind: string;
  kind_label: string;
  name: string;
  description: string;
  origin_questions: string[];
  duplicate_hints: DuplicateHint[];
}

export interface PendingPayload {
  iteration_id: string;
  pending: PendingTask[];
}

export interface ReportPayload {
  counts: { data_source: number; algorithm: number; ui_widget: number };
  reported_ui: number;
  include_agent_ui: boolean;
  total: number;
  convergence: Array<{
    iteration_id: string;
    new_accepted: number;
    duplicates_flagged: number;
    rejected: number;
  }>;
  finalized: boolean;
  snapshot_hash: string | null;
  footnotes: string[];
}

export type Verdict = 'accept' | 'reject' | 'edit' | 'merge';

export interface DecisionPayload {
  task_id: string;
  verdict: Verdict;
  payload?: {
    name?: string;
    description?: string;
    kind?: string;
    into?: string;
  };
}
