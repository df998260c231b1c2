/** Thin fetch client for the session service. */

import type {
  Rating,
  RatingsSummary,
  SessionOpened,
  SessionStatus,
  UtteranceResponse,
} from './types.js';

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function request<T>(path: string, init?: RequestInit): Promise<T> {
  const response = await fetch(path, {
    headers: { 'Content-Type': 'application/json' },
    ...init,
  });
  if (!response.ok) {
    let detail = response.statusText;
    try {
      detail = (await response.json()).detail ?? detail;
    } catch {
      /* non-JSON error body */
    }
    throw new ApiError(response.status, detail);
  }
  return response.json() as Promise<T>;
}

export function createSession(
  world: string, mode: string, user: string, seed: number,
): Promise<SessionOpened> {
  return request('/sessions', {
    method: 'POST',
    body: JSON.stringify({ world, mode, user, seed }),
  });
}

export function sendUtterance(sessionId: string, text: string): Promise<UtteranceResponse> {
  return request(`/sessions/${sessionId}/utterance`, {
    method: 'POST',
    body: JSON.stringify({ text }),
  });
}

export function terminateSession(sessionId: string): Promise<{ status: SessionStatus }> {
  return request(`/sessions/${sessionId}/terminate`, { method: 'POST' });
}

export function submitRating(sessionId: string, rating: Rating): Promise<unknown> {
  return request(`/sessions/${sessionId}/rating`, {
    method: 'POST',
    body: JSON.stringify(rating),
  });
}

export function ratingsSummary(): Promise<RatingsSummary> {
  return request('/ratings/summary');
}
