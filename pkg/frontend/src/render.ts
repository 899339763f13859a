/**
 * Pure HTML renderers for the two screens. Everything here is a function
 * from model to string: no DOM access, no arithmetic on server figures.
 * Counts, scores and convergence numbers are printed exactly as served.
 */

import type { Draft, SessionModel } from './state.js';
import type { PendingTask, Verdict } from './types.js';

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;')
    .replace(/'/g, '&#39;');
}

const VERDICTS: Verdict[] = ['accept', 'reject', 'edit', 'merge'];

function verdictControls(task: PendingTask, draft: Draft | undefined): string {
  const options = VERDICTS.map((verdict) => {
    const selected = draft?.verdict === verdict ? ' selected' : '';
    return `<option value="${verdict}"${selected}>${verdict}</option>`;
  }).join('');
  const placeholder = draft ? '' : '<option value="" selected>choose</option>';
  const editFields =
    draft?.verdict === 'edit'
      ? `<div class="edit-fields">
          <input data-edit="name" data-task="${task.id}" value="${escapeHtml(draft.name ?? task.name)}">
          <input data-edit="description" data-task="${task.id}" value="${escapeHtml(draft.description ?? task.description)}">
          <input data-edit="kind" data-task="${task.id}" value="${escapeHtml(draft.kind ?? task.kind)}">
        </div>`
      : '';
  const mergeField =
    draft?.verdict === 'merge'
      ? `<input data-merge-target data-task="${task.id}" placeholder="merge into task id" value="${escapeHtml(draft.mergeTarget ?? '')}">`
      : '';
  return `<select data-verdict data-task="${task.id}">${placeholder}${options}</select>${editFields}${mergeField}`;
}

function hintList(task: PendingTask): string {
  if (task.duplicate_hints.length === 0) return '';
  const items = task.duplicate_hints
    .map(
      (hint) =>
        `<li class="hint">dup of <code>${escapeHtml(hint.existing_name ?? hint.existing_task_id)}</code>` +
        ` (${escapeHtml(hint.existing_task_id)}) score ${hint.score} via ${hint.basis}</li>`,
    )
    .join('');
  return `<ul class="hints">${items}</ul>`;
}

function questionList(task: PendingTask): string {
  const items = task.origin_questions
    .map((question) => `<li>${escapeHtml(question)}</li>`)
    .join('');
  return `<details><summary>origin questions (${task.origin_questions.length})</summary><ul>${items}</ul></details>`;
}

export function renderQueue(model: SessionModel): string {
  const groups = model.groupedPending();
  if (groups.length === 0) {
    return '<section id="queue"><p class="empty">Nothing awaiting validation.</p></section>';
  }
  const sections = groups
    .map(({ kind, tasks }) => {
      const cards = tasks
        .map((task) => {
          const draft = model.drafts.get(task.id);
          const error = model.taskErrors.get(task.id);
          return `<article class="task${error ? ' has-error' : ''}" data-task-card="${task.id}">
            <header><code>${escapeHtml(task.name)}</code> <span class="task-id">${task.id}</span></header>
            <p>${escapeHtml(task.description)}</p>
            ${questionList(task)}
            ${hintList(task)}
            ${verdictControls(task, draft)}
            ${error ? `<p class="error">${escapeHtml(error)}</p>` : ''}
          </article>`;
        })
        .join('');
      return `<section class="kind-group" data-kind="${escapeHtml(kind)}">
        <h3>${escapeHtml(kind)} <span class="group-count">(${tasks.length})</span></h3>
        ${cards}
      </section>`;
    })
    .join('');
  const drafted = model.drafts.size;
  return `<section id="queue">
    <div class="queue-actions">
      <button data-action="accept-all">Accept all pending</button>
      <button data-action="submit" ${drafted === 0 ? 'disabled' : ''}>Submit ${drafted} decision${drafted === 1 ? '' : 's'}</button>
    </div>
    ${sections}
  </section>`;
}

export function renderDashboard(model: SessionModel): string {
  const session = model.session;
  if (!session) return '<section id="dashboard"><p>Loading…</p></section>';
  const counts = session.inventory_counts;
  const reportedUi = model.report ? model.report.reported_ui : null;
  const countsCard = `<div class="counts-card">
    <div class="count"><span class="label">Data Sources</span><span class="value" data-count="data_source">${counts.data_source}</span></div>
    <div class="count"><span class="label">Algorithms</span><span class="value" data-count="algorithm">${counts.algorithm}</span></div>
    <div class="count"><span class="label">UI Widgets</span><span class="value" data-count="ui_widget">${counts.ui_widget}</span></div>
    <div class="count"><span class="label">Total</span><span class="value" data-count="total">${counts.total}</span></div>
    ${reportedUi === null ? '' : `<div class="count"><span class="label">Reported UI (incl. agent)</span><span class="value" data-count="reported_ui">${reportedUi}</span></div>`}
  </div>`;

  const convergenceRows = session.iterations
    .map(
      (it) =>
        `<tr data-iteration="${it.id}"><td>${it.id}</td><td>${it.status}</td>` +
        `<td data-cell="new_accepted">${it.new_accepted}</td>` +
        `<td data-cell="duplicates_flagged">${it.duplicates_flagged}</td>` +
        `<td data-cell="rejected">${it.rejected}</td>` +
        `<td data-cell="pending_count">${it.pending_count}</td></tr>`,
    )
    .join('');
  const convergence = `<table class="convergence">
    <thead><tr><th>Iteration</th><th>Status</th><th>New accepted</th><th>Dupes flagged</th><th>Rejected</th><th>Pending</th></tr></thead>
    <tbody>${convergenceRows}</tbody>
  </table>`;

  const storyOptions = session.stories
    .map((story) => `<option value="${story.id}">${story.id}: ${escapeHtml(story.text)}</option>`)
    .join('');
  const actions = `<div class="dashboard-actions">
    <select data-story-picker>${storyOptions}</select>
    <button data-action="run-iteration" ${session.finalized ? 'disabled' : ''}>Run next iteration</button>
    <button data-action="finalize" ${session.can_finalize ? '' : 'disabled'}>Finalize</button>
    ${session.finalized ? `<span class="frozen">Finalized: <code>${escapeHtml(session.snapshot_hash ?? '')}</code></span>` : ''}
  </div>`;

  return `<section id="dashboard">${countsCard}${convergence}${actions}</section>`;
}

export function renderApp(model: SessionModel): string {
  return `${renderDashboard(model)}${renderQueue(model)}`;
}
