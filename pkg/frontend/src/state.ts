/**
 * Client-side session model: the latest server payloads plus local draft
 * verdicts keyed by task id.
 *
 * The server is the source of truth. Drafts are optimistic and exist only
 * for tasks the server still reports as pending; every refetch rebases the
 * draft map against the new pending set, and a successful submission
 * clears the drafts it covered.
 */

import type {
  DecisionPayload,
  PendingPayload,
  PendingTask,
  ReportPayload,
  SessionPayload,
  Verdict,
} from './types.js';

export interface Draft {
  verdict: Verdict;
  name?: string;
  description?: string;
  kind?: string;
  mergeTarget?: string;
}

const KIND_LABELS = ['Data Source', 'Algorithm', 'User Interface'];

export class SessionModel {
  session: SessionPayload | null = null;
  report: ReportPayload | null = null;
  pendingByIteration = new Map<string, PendingTask[]>();
  drafts = new Map<string, Draft>();
  taskErrors = new Map<string, string>();
  /** One key per submission attempt set; reused across retries. */
  private batchKey: string | null = null;

  setSession(payload: SessionPayload): void {
    this.session = payload;
    const liveIterations = new Set(
      payload.iterations.filter((it) => it.status === 'awaiting_validation').map((it) => it.id),
    );
    for (const id of [...this.pendingByIteration.keys()]) {
      if (!liveIterations.has(id)) this.pendingByIteration.delete(id);
    }
    this.rebaseDrafts();
  }

  setPending(payload: PendingPayload): void {
    this.pendingByIteration.set(payload.iteration_id, payload.pending);
    this.rebaseDrafts();
  }

  setReport(payload: ReportPayload): void {
    this.report = payload;
  }

  allPending(): PendingTask[] {
    return [...this.pendingByIteration.values()].flat();
  }

  pendingTask(taskId: string): PendingTask | undefined {
    return this.allPending().find((task) => task.id === taskId);
  }

  /** Pending tasks grouped by kind label, in fixed kind order. */
  groupedPending(): Array<{ kind: string; tasks: PendingTask[] }> {
    const groups = new Map<string, PendingTask[]>();
    for (const task of this.allPending()) {
      const bucket = groups.get(task.kind_label) ?? [];
      bucket.push(task);
      groups.set(task.kind_label, bucket);
    }
    const ordered = [...KIND_LABELS, ...groups.keys()].filter(
      (label, index, all) => groups.has(label) && all.indexOf(label) === index,
    );
    return ordered.map((kind) => ({ kind, tasks: groups.get(kind) ?? [] }));
  }

  /**
   * Suggested verdict for a task: a duplicate hint at score 1.0 whose
   * surviving twin is already in the inventory preselects a merge; the
   * human can always override.
   */
  suggestedDraft(task: PendingTask): Draft {
    const perfect = task.duplicate_hints.find(
      (hint) =>
        hint.score === 1.0 && (hint.existing_status === 'accepted' || hint.existing_status === 'edited'),
    );
    if (perfect) {
      return { verdict: 'merge', mergeTarget: perfect.existing_task_id };
    }
    return { verdict: 'accept' };
  }

  setDraft(taskId: string, draft: Draft): void {
    if (!this.pendingTask(taskId)) return; // drafts only for pending tasks
    this.drafts.set(taskId, draft);
    this.taskErrors.delete(taskId);
  }

  clearDraft(taskId: string): void {
    this.drafts.delete(taskId);
  }

  /** Bulk action: draft every undrafted pending task with its suggestion. */
  draftAll(): void {
    for (const task of this.allPending()) {
      if (!this.drafts.has(task.id)) {
        this.drafts.set(task.id, this.suggestedDraft(task));
      }
    }
  }

  /** Drop drafts for tasks the server no longer reports as pending. */
  private rebaseDrafts(): void {
    if (this.pendingByIteration.size === 0) return;
    const pendingIds = new Set(this.allPending().map((task) => task.id));
    for (const taskId of [...this.drafts.keys()]) {
      if (!pendingIds.has(taskId)) {
        this.drafts.delete(taskId);
        this.taskErrors.delete(taskId);
      }
    }
  }

  /** The one decisions batch a submission posts, in stable task order. */
  buildBatch(): DecisionPayload[] {
    const batch: DecisionPayload[] = [];
    for (const task of this.allPending()) {
      const draft = this.drafts.get(task.id);
      if (!draft) continue;
      const decision: DecisionPayload = { task_id: task.id, verdict: draft.verdict };
      if (draft.verdict === 'edit') {
        decision.payload = {
          name: draft.name ?? task.name,
          description: draft.description ?? task.description,
          kind: draft.kind ?? task.kind,
        };
      } else if (draft.verdict === 'merge') {
        decision.payload = { into: draft.mergeTarget ?? '' };
      }
      batch.push(decision);
    }
    return batch;
  }

  /** Key for the current batch; stable until the batch succeeds. */
  currentBatchKey(generate: () => string): string {
    if (this.batchKey === null) this.batchKey = generate();
    return this.batchKey;
  }

  submitSucceeded(batch: DecisionPayload[]): void {
    for (const decision of batch) this.drafts.delete(decision.task_id);
    this.taskErrors.clear();
    this.batchKey = null;
  }

  submitFailed(taskId: string | null, message: string): void {
    // Keep every draft; record the error against the offending task when
    // the server names one, so the rest of the queue stays editable.
    if (taskId) this.taskErrors.set(taskId, message);
  }
}
