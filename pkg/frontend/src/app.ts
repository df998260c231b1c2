/**
 * DOM wiring for the chat client: session flow, per-turn inspector,
 * early-terminate control, and the rating form. One in-flight request per
 * session; the input stays locked until the trace response arrives.
 */

import {
  ApiError,
  createSession,
  ratingsSummary,
  sendUtterance,
  submitRating,
  terminateSession,
} from './api.js';
import { ratingFormState, validateRating } from './rating.js';
import { renderSummaryTable, renderTurn } from './render.js';
import type { SessionStatus } from './types.js';

interface UiState {
  sessionId: string | null;
  status: SessionStatus;
  busy: boolean;
  rated: boolean;
}

const state: UiState = { sessionId: null, status: 'active', busy: false, rated: false };

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function setStatus(text: string, isError = false): void {
  const banner = el<HTMLDivElement>('status');
  banner.textContent = text;
  banner.className = isError ? 'status error' : 'status';
}

function refreshControls(): void {
  const active = state.sessionId !== null && state.status === 'active';
  el<HTMLInputElement>('utterance').disabled = !active || state.busy;
  el<HTMLButtonElement>('send').disabled = !active || state.busy;
  el<HTMLButtonElement>('terminate').disabled = !active || state.busy;
  el<HTMLButtonElement>('start').disabled = state.sessionId !== null && active;

  const form = ratingFormState(state.status);
  const srBox = el<HTMLInputElement>('sr');
  const canRate = state.sessionId !== null && form.enabled && !state.rated;
  el<HTMLFieldSetElement>('rating-form').disabled = !canRate;
  if (form.srLocked) {
    srBox.checked = form.srValue;
    srBox.disabled = true;
  } else {
    srBox.disabled = !canRate;
  }
}

async function startSession(): Promise<void> {
  const world = el<HTMLInputElement>('world').value || 'default';
  const mode = el<HTMLSelectElement>('mode').value;
  const user = el<HTMLSelectElement>('user-kind').value;
  const seed = parseInt(el<HTMLInputElement>('seed').value || '0', 10);
  try {
    const opened = await createSession(world, mode, user, seed);
    state.sessionId = opened.id;
    state.status = 'active';
    state.rated = false;
    el<HTMLDivElement>('chat').innerHTML =
      `<div class="bubble system">${opened.opening}</div>`;
    el<HTMLDivElement>('summary').innerHTML = '';
    setStatus(`session ${opened.id} with ${opened.agent}`);
  } catch (error) {
    setStatus(describe(error), true);
  }
  refreshControls();
}

async function send(): Promise<void> {
  if (!state.sessionId || state.busy) return;
  const input = el<HTMLInputElement>('utterance');
  const text = input.value;
  state.busy = true;
  refreshControls();
  try {
    const response = await sendUtterance(state.sessionId, text);
    state.status = response.status;
    el<HTMLDivElement>('chat').insertAdjacentHTML('beforeend', renderTurn(response.trace));
    input.value = '';
    if (response.status !== 'active') {
      setStatus(`dialogue ${response.status}; please rate it below`);
    }
  } catch (error) {
    setStatus(`${describe(error)} — you can retry`, true);
  } finally {
    state.busy = false;
    refreshControls();
  }
}

async function terminate(): Promise<void> {
  if (!state.sessionId) return;
  try {
    const response = await terminateSession(state.sessionId);
    state.status = response.status;
    setStatus('dialogue terminated early; it counts as a failure for SR');
  } catch (error) {
    setStatus(describe(error), true);
  }
  refreshControls();
}

async function rate(): Promise<void> {
  if (!state.sessionId) return;
  const hrRaw = (document.querySelector('input[name="hr"]:checked') as
    HTMLInputElement | null)?.value;
  const hr = hrRaw ? parseInt(hrRaw, 10) : null;
  const sr = el<HTMLInputElement>('sr').checked;
  const check = validateRating(state.status, sr, hr);
  if (!check.ok || !check.rating) {
    setStatus(check.error ?? 'invalid rating', true);
    return;
  }
  try {
    await submitRating(state.sessionId, check.rating);
    state.rated = true;
    setStatus('rating recorded, thank you');
    const summary = await ratingsSummary();
    el<HTMLDivElement>('summary').innerHTML = renderSummaryTable(summary.agents);
  } catch (error) {
    setStatus(describe(error), true);
  }
  refreshControls();
}

function describe(error: unknown): string {
  if (error instanceof ApiError) return `request failed (${error.status}): ${error.message}`;
  return `request failed: ${String(error)}`;
}

export function boot(): void {
  el<HTMLButtonElement>('start').addEventListener('click', startSession);
  el<HTMLButtonElement>('send').addEventListener('click', send);
  el<HTMLInputElement>('utterance').addEventListener('keydown', (event) => {
    if (event.key === 'Enter') void send();
  });
  el<HTMLButtonElement>('terminate').addEventListener('click', terminate);
  el<HTMLButtonElement>('rate').addEventListener('click', rate);
  refreshControls();
}

if (typeof document !== 'undefined' && document.getElementById('chat')) {
  boot();
}
