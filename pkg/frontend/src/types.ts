/**
 * API payload types — the shared contract with the session service.
 * The UI renders exclusively from these payloads; it never recomputes
 * any pipeline quantity client-side.
 */

export interface ClaimView {
  id: string;
  text: string;
  kind: 'explicit' | 'implicit';
  hinted_pairs: [string, string][];
  confidence: number;
}

export interface TranscriptView {
  claim_id: string;
  rounds: [string, string][];
  verdict: 'accepted' | 'rejected';
  rounds_used: number;
}

export interface MapperRow {
  claim_id: string;
  slot_text: string;
  value_text: string;
  matched_domain: string;
  matched_slot: string;
  normalized_value: string;
  similarity: number;
  kept: boolean;
  reason: string;
}

export interface PairView {
  domain: string;
  slot: string;
  value: string;
  similarity: number;
  source_claim: string;
}

export interface StateDiff {
  base_filled: [string, string, string][];
  augmented: [string, string, string][];
}

export interface TurnTrace {
  type: string;
  turn: number;
  user_utterance: string;
  user_acts: string[];
  claims: ClaimView[];
  transcripts: TranscriptView[];
  verified_ids: string[];
  mapper_diagnostics: MapperRow[];
  pairs: PairView[];
  state_diff: StateDiff;
  db_count: number;
  action: string;
  system_utterance: string;
  status: string;
}

export type SessionStatus = 'active' | 'completed' | 'terminated-early';

export interface UtteranceResponse {
  reply: string;
  trace: TurnTrace;
  status: SessionStatus;
}

export interface SessionOpened {
  id: string;
  opening: string;
  agent: string;
}

export interface Rating {
  sr: boolean;
  hr: number;
}

export interface RatingsSummary {
  agents: Record<string, { n: number; sr: number; hr: number }>;
}
