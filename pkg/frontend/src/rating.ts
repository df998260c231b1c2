/**
 * Rating-form rules, kept pure for testing.
 *
 * Early-terminated dialogues count as failures: the success toggle is
 * locked to false and only the 1-5 quality rating remains the
 * annotator's choice.
 */

import type { Rating, SessionStatus } from './types.js';

export interface RatingFormState {
  enabled: boolean;
  srLocked: boolean;
  srValue: boolean;
}

export function ratingFormState(status: SessionStatus): RatingFormState {
  if (status === 'active') {
    return { enabled: false, srLocked: false, srValue: false };
  }
  if (status === 'terminated-early') {
    return { enabled: true, srLocked: true, srValue: false };
  }
  return { enabled: true, srLocked: false, srValue: false };
}

export function validateRating(
  status: SessionStatus, sr: boolean, hr: number | null,
): { ok: boolean; error?: string; rating?: Rating } {
  if (status === 'active') {
    return { ok: false, error: 'finish the dialogue before rating' };
  }
  if (hr === null || !Number.isInteger(hr) || hr < 1 || hr > 5) {
    return { ok: false, error: 'pick a quality rating from 1 to 5' };
  }
  const effectiveSr = status === 'terminated-early' ? false : sr;
  return { ok: true, rating: { sr: effectiveSr, hr } };
}
