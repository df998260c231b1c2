/**
 * Pure render functions: trace payload in, HTML string out.
 *
 * Implicit claims get red badges and explicit claims green ones, matching
 * the highlighting convention used throughout the inspector. Nothing here
 * computes pipeline quantities; similarities, verdicts, and diffs are
 * displayed exactly as the service reported them.
 */

import type { ClaimView, MapperRow, StateDiff, TranscriptView, TurnTrace } from './types.js';

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}

export function renderClaimBadge(claim: ClaimView): string {
  const cls = claim.kind === 'implicit' ? 'badge implicit' : 'badge explicit';
  return `<span class="${cls}">${claim.kind}</span>`;
}

export function renderClaim(claim: ClaimView, verified: string[]): string {
  const pair = claim.hinted_pairs[0];
  const target = pair ? `<code>${escapeHtml(pair[0])} = ${escapeHtml(pair[1])}</code>` : '';
  const mark = verified.includes(claim.id)
    ? '<span class="verdict accepted">verified</span>'
    : '<span class="verdict rejected">rejected</span>';
  return (
    `<li class="claim" data-claim="${escapeHtml(claim.id)}">` +
    `${renderClaimBadge(claim)} ${target} ` +
    `<span class="claim-text">${escapeHtml(claim.text)}</span> ` +
    `<span class="confidence">conf ${claim.confidence.toFixed(2)}</span> ${mark}</li>`
  );
}

export function renderTranscript(transcript: TranscriptView): string {
  const rounds = transcript.rounds
    .map(
      ([question, answer], i) =>
        `<div class="round"><div class="q">Q${i + 1}: ${escapeHtml(question)}</div>` +
        `<div class="a">A${i + 1}: ${escapeHtml(answer)}</div></div>`,
    )
    .join('');
  return (
    `<details class="transcript" data-claim="${escapeHtml(transcript.claim_id)}">` +
    `<summary>${escapeHtml(transcript.claim_id)} — ` +
    `<span class="verdict ${transcript.verdict}">${transcript.verdict}</span> ` +
    `after ${transcript.rounds_used} round(s)</summary>${rounds}</details>`
  );
}

export function renderMapperTable(rows: MapperRow[]): string {
  if (rows.length === 0) {
    return '<p class="empty">no mapper activity this turn</p>';
  }
  const body = rows
    .map(
      (row) =>
        `<tr class="${row.kept ? 'kept' : 'dropped'}">` +
        `<td>${escapeHtml(row.value_text)}</td>` +
        `<td>${escapeHtml(row.matched_domain)}.${escapeHtml(row.matched_slot)}</td>` +
        `<td>${row.similarity.toFixed(3)}</td>` +
        `<td>${row.kept ? 'kept' : `dropped (${escapeHtml(row.reason)})`}</td></tr>`,
    )
    .join('');
  return (
    '<table class="mapper"><thead><tr><th>candidate</th><th>matched slot</th>' +
    '<th>similarity</th><th>outcome</th></tr></thead>' +
    `<tbody>${body}</tbody></table>`
  );
}

export function renderStateDiff(diff: StateDiff): string {
  const rows: string[] = [];
  for (const [domain, slot, value] of diff.base_filled) {
    rows.push(
      `<li class="diff user"><code>${escapeHtml(domain)}.${escapeHtml(slot)} = ` +
      `${escapeHtml(value)}</code> <span class="provenance">from user</span></li>`,
    );
  }
  for (const [domain, slot, value] of diff.augmented) {
    rows.push(
      `<li class="diff verified"><code>${escapeHtml(domain)}.${escapeHtml(slot)} = ` +
      `${escapeHtml(value)}</code> <span class="provenance">verified knowledge</span></li>`,
    );
  }
  if (rows.length === 0) {
    return '<p class="empty">no new slots this turn</p>';
  }
  return `<ul class="state-diff">${rows.join('')}</ul>`;
}

export function renderInspector(trace: TurnTrace): string {
  const claims = trace.claims.length
    ? `<ul class="claims">${trace.claims
        .map((c) => renderClaim(c, trace.verified_ids))
        .join('')}</ul>`
    : '<p class="empty">no claims this turn</p>';
  const transcripts = trace.transcripts.map(renderTranscript).join('') ||
    '<p class="empty">no cross-examination this turn</p>';
  return (
    `<section class="inspector" data-turn="${trace.turn}">` +
    `<h4>claims</h4>${claims}` +
    `<h4>cross-examination</h4>${transcripts}` +
    `<h4>grounding</h4>${renderMapperTable(trace.mapper_diagnostics)}` +
    `<h4>state changes</h4>${renderStateDiff(trace.state_diff)}` +
    `<p class="meta">db matches: ${trace.db_count} — action: ` +
    `<code>${escapeHtml(trace.action)}</code></p></section>`
  );
}

export function renderTurn(trace: TurnTrace): string {
  const user = trace.user_utterance
    ? `<div class="bubble user">${escapeHtml(trace.user_utterance)}</div>`
    : '';
  const system = trace.system_utterance
    ? `<div class="bubble system">${escapeHtml(trace.system_utterance)}</div>`
    : '';
  return `<article class="turn" data-turn="${trace.turn}">${user}${system}` +
    `${renderInspector(trace)}</article>`;
}

export function renderSummaryTable(
  agents: Record<string, { n: number; sr: number; hr: number }>,
): string {
  const rows = Object.keys(agents)
    .sort()
    .map((label) => {
      const a = agents[label];
      return `<tr><td>${escapeHtml(label)}</td><td>${a.n}</td>` +
        `<td>${a.sr.toFixed(3)}</td><td>${a.hr.toFixed(2)}</td></tr>`;
    })
    .join('');
  return (
    '<table class="summary"><thead><tr><th>agent</th><th>rated</th>' +
    `<th>SR</th><th>HR</th></tr></thead><tbody>${rows}</tbody></table>`
  );
}
