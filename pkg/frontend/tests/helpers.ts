/** Shared payload builders for the UI tests. */

import type {
  DuplicateHint,
  PendingPayload,
  PendingTask,
  ReportPayload,
  SessionPayload,
} from '../src/types.js';

export function sessionPayload(overrides: Partial<SessionPayload> = {}): SessionPayload {
  return {
    config: {
      n_questions: 6,
      threshold: 0.8,
      minimize: true,
      backend: 'fixture:fixtures/pizza_order.json',
      model_id: 'gpt-4',
      template_versions: {},
    },
    stories: [{ id: 'story-0001', text: 'seed story', created_at: '2024-01-01T00:00:00Z' }],
    iterations: [],
    inventory_counts: { data_source: 0, algorithm: 0, ui_widget: 0, total: 0 },
    finalized: false,
    snapshot_hash: null,
    can_finalize: false,
    ...overrides,
  };
}

export function reportPayload(overrides: Partial<ReportPayload> = {}): ReportPayload {
  return {
    counts: { data_source: 0, algorithm: 0, ui_widget: 0 },
    reported_ui: 1,
    include_agent_ui: true,
    total: 0,
    convergence: [],
    finalized: false,
    snapshot_hash: null,
    footnotes: [],
    ...overrides,
  };
}

export function pendingTask(
  id: string,
  kindLabel: 'Data Source' | 'Algorithm' | 'User Interface',
  hints: DuplicateHint[] = [],
): PendingTask {
  const kind =
    kindLabel === 'Data Source'
      ? 'data_source'
      : kindLabel === 'Algorithm'
        ? 'algorithm'
        : 'ui_widget';
  return {
    id,
    kind,
    kind_label: kindLabel,
    name: `name_${id}`,
    description: `description for ${id}`,
    origin_questions: ['seed question?'],
    duplicate_hints: hints,
  };
}

/** A pending payload shaped like the reference scenario: 22/11/10. */
export function referencePending(iterationId = 'iter-0001'): PendingPayload {
  const tasks: PendingTask[] = [];
  for (let i = 0; i < 22; i += 1) tasks.push(pendingTask(`task-a${i}`, 'Algorithm'));
  for (let i = 0; i < 11; i += 1) tasks.push(pendingTask(`task-d${i}`, 'Data Source'));
  for (let i = 0; i < 10; i += 1) tasks.push(pendingTask(`task-u${i}`, 'User Interface'));
  return { iteration_id: iterationId, pending: tasks };
}

type RouteTable = Record<string, unknown>;

/** A fetch stub serving canned JSON per path prefix. */
export function stubFetch(routes: RouteTable): typeof fetch {
  return (async (input: RequestInfo | URL) => {
    const url = String(input);
    for (const [prefix, payload] of Object.entries(routes)) {
      if (url.includes(prefix)) {
        return new Response(JSON.stringify(payload), {
          status: 200,
          headers: { 'Content-Type': 'application/json' },
        });
      }
    }
    return new Response(JSON.stringify({ error: 'NOT_FOUND', message: url }), { status: 404 });
  }) as typeof fetch;
}
