/**
 * Thin typed client for the review API. Mutations carry an
 * Idempotency-Key so a retried request is applied at most once.
 */

import type { DecisionPayload, PendingPayload, ReportPayload, SessionPayload } from './types.js';

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

async function parseError(response: Response): Promise<ApiError> {
  let code = 'HTTP_ERROR';
  let message = response.statusText;
  try {
    const body = await response.json();
    if (body && typeof body === 'object') {
      code = body.error ?? code;
      message = body.message ?? message;
    }
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(response.status, code, message);
}

export class ApiClient {
  constructor(
    private baseUrl = '',
    private fetchImpl: typeof fetch = fetch,
  ) {}

  private async get<T>(path: string): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`);
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as T;
  }

  private async post<T>(path: string, body: unknown, idempotencyKey?: string): Promise<T> {
    const headers: Record<string, string> = { 'Content-Type': 'application/json' };
    if (idempotencyKey) headers['Idempotency-Key'] = idempotencyKey;
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method: 'POST',
      headers,
      body: JSON.stringify(body),
    });
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as T;
  }

  session(): Promise<SessionPayload> {
    return this.get('/api/v1/session');
  }

  pending(iterationId: string): Promise<PendingPayload> {
    return this.get(`/api/v1/iterations/${iterationId}/pending`);
  }

  report(): Promise<ReportPayload> {
    return this.get('/api/v1/report?format=json');
  }

  submitDecisions(decisions: DecisionPayload[], idempotencyKey: string): Promise<unknown> {
    return this.post('/api/v1/decisions', decisions, idempotencyKey);
  }

  runIteration(storyId: string, idempotencyKey: string): Promise<unknown> {
    return this.post('/api/v1/iterations', { story_id: storyId }, idempotencyKey);
  }

  finalize(idempotencyKey: string): Promise<{ snapshot_hash: string }> {
    return this.post('/api/v1/finalize', {}, idempotencyKey);
  }
}

export function newIdempotencyKey(): string {
  return `ui-${Date.now()}-${Math.random().toString(36).slice(2, 10)}`;
}
