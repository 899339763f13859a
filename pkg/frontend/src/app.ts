/**
 * Browser bootstrap: polling loop, event delegation, submission flow.
 *
 * Single-operator tool, so polling (2 s) stands in for push. Drafts are
 * optimistic; every poll rebases them against the server's pending set.
 */

import { ApiClient, ApiError, newIdempotencyKey } from './api.js';
import { renderApp } from './render.js';
import { SessionModel } from './state.js';
import type { Draft } from './state.js';

const POLL_INTERVAL_MS = 2000;

export class App {
  private model = new SessionModel();
  private refreshing = false;

  constructor(
    private root: HTMLElement,
    private api: ApiClient = new ApiClient(),
  ) {}

  start(): void {
    this.root.addEventListener('change', (event) => this.onChange(event));
    this.root.addEventListener('click', (event) => void this.onClick(event));
    void this.refresh();
    setInterval(() => void this.refresh(), POLL_INTERVAL_MS);
  }

  private async refresh(): Promise<void> {
    if (this.refreshing) return;
    this.refreshing = true;
    try {
      const session = await this.api.session();
      this.model.setSession(session);
      for (const iteration of session.iterations) {
        if (iteration.status === 'awaiting_validation') {
          this.model.setPending(await this.api.pending(iteration.id));
        }
      }
      this.model.setReport(await this.api.report());
      this.render();
    } catch (error) {
      this.renderBanner(`Cannot reach the review service: ${String(error)}`);
    } finally {
      this.refreshing = false;
    }
  }

  private render(): void {
    this.root.innerHTML = renderApp(this.model);
  }

  private renderBanner(message: string): void {
    const banner = document.createElement('p');
    banner.className = 'banner error';
    banner.textContent = message;
    this.root.prepend(banner);
  }

  private onChange(event: Event): void {
    const target = event.target as HTMLElement;
    const taskId = target.dataset['task'];
    if (!taskId) return;
    const current: Draft = this.model.drafts.get(taskId) ?? { verdict: 'accept' };
    if (target.matches('[data-verdict]')) {
      const verdict = (target as HTMLSelectElement).value;
      if (!verdict) return;
      const task = this.model.pendingTask(taskId);
      const base = verdict === 'merge' && task ? this.model.suggestedDraft(task) : {};
      this.model.setDraft(taskId, { ...base, ...current, verdict: verdict as Draft['verdict'] });
    } else if (target.matches('[data-edit]')) {
      const field = target.dataset['edit'] as 'name' | 'description' | 'kind';
      this.model.setDraft(taskId, { ...current, [field]: (target as HTMLInputElement).value });
      return; // keep focus; no re-render while typing
    } else if (target.matches('[data-merge-target]')) {
      this.model.setDraft(taskId, { ...current, mergeTarget: (target as HTMLInputElement).value });
      return;
    }
    this.render();
  }

  private async onClick(event: Event): Promise<void> {
    const target = (event.target as HTMLElement).closest('[data-action]');
    if (!(target instanceof HTMLElement)) return;
    const action = target.dataset['action'];
    if (action === 'accept-all') {
      this.model.draftAll();
      this.render();
    } else if (action === 'submit') {
      await this.submit();
    } else if (action === 'run-iteration') {
      const picker = this.root.querySelector('[data-story-picker]') as HTMLSelectElement | null;
      if (!picker) return;
      try {
        await this.api.runIteration(picker.value, newIdempotencyKey());
      } catch (error) {
        this.renderBanner(String(error));
      }
      await this.refresh();
    } else if (action === 'finalize') {
      try {
        await this.api.finalize(newIdempotencyKey());
      } catch (error) {
        this.renderBanner(String(error));
      }
      await this.refresh();
    }
  }

  private async submit(): Promise<void> {
    const batch = this.model.buildBatch();
    if (batch.length === 0) return;
    const key = this.model.currentBatchKey(newIdempotencyKey);
    try {
      await this.api.submitDecisions(batch, key);
      this.model.submitSucceeded(batch);
    } catch (error) {
      // 409/422 name one task; keep all drafts and surface it in place.
      if (error instanceof ApiError) {
        const match = /task[^a-z0-9-]*([a-z]+-\d+)/i.exec(error.message);
        this.model.submitFailed(match ? match[1] ?? null : null, error.message);
        this.renderBanner(`Submission rejected (${error.code}): ${error.message}`);
      } else {
        this.renderBanner(String(error));
      }
    }
    await this.refresh();
  }
}

declare global {
  interface Window {
    storysizerApp?: App;
  }
}

if (typeof document !== 'undefined') {
  const root = document.getElementById('app');
  if (root) {
    const app = new App(root);
    window.storysizerApp = app;
    app.start();
  }
}
