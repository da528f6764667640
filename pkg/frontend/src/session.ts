/** Session state and its pure transitions.
 *
 * All studio state lives in one immutable SessionState value; the DOM layer
 * only renders it.  History entries keep the exact request/response pair so
 * every rendered text is replayable against the service.
 */

import type { GenerateRequest, GenerateResponse } from "./api.js";

export interface HistoryEntry {
  readonly mask: readonly number[];
  readonly mode: string;
  readonly samples: number;
  readonly seed: number;
  readonly texts: readonly string[];
  readonly scores: readonly number[];
  readonly request: GenerateRequest;
  readonly response: GenerateResponse;
}

export interface SessionState {
  readonly source: string;
  readonly tokens: readonly string[];
  readonly gamma: readonly number[];
  /** user-editable; length always equals tokens.length */
  readonly mask: readonly number[];
  readonly history: readonly HistoryEntry[];
  /** posterior q values while a target is pasted, else null */
  readonly overlay: readonly number[] | null;
  readonly target: string | null;
}

/** gamma > 0.5 rule; if nothing clears the bar, keep the single best token. */
export function suggestedMask(gamma: readonly number[]): number[] {
  const bits = gamma.map((g) => (g > 0.5 ? 1 : 0));
  if (!bits.includes(1) && gamma.length > 0) {
    bits[gamma.indexOf(Math.max(...gamma))] = 1;
  }
  return bits;
}

export function newSession(source: string, tokens: string[], gamma: number[]): SessionState {
  if (tokens.length !== gamma.length) {
    throw new Error(`token/gamma length mismatch: ${tokens.length} vs ${gamma.length}`);
  }
  return {
    source,
    tokens: Object.freeze([...tokens]),
    gamma: Object.freeze([...gamma]),
    mask: Object.freeze(suggestedMask(gamma)),
    history: Object.freeze([]),
    overlay: null,
    target: null,
  };
}

export function toggleToken(s: SessionState, index: number): SessionState {
  if (index < 0 || index >= s.mask.length || !Number.isInteger(index)) {
    throw new Error(`token index ${index} out of range 0..${s.mask.length - 1}`);
  }
  const mask = [...s.mask];
  mask[index] = mask[index] ? 0 : 1;
  return { ...s, mask: Object.freeze(mask) };
}

/** A bit the user pushed away from the gamma suggestion. */
export function isForced(s: SessionState, index: number): boolean {
  return s.mask[index] !== suggestedMask(s.gamma)[index];
}

export function maskIsEmpty(s: SessionState): boolean {
  return !s.mask.includes(1);
}

export function appendGeneration(
  s: SessionState,
  request: GenerateRequest,
  response: GenerateResponse,
): SessionState {
  const entry: HistoryEntry = Object.freeze({
    mask: Object.freeze([...request.mask]),
    mode: request.mode,
    samples: request.samples,
    seed: request.seed,
    texts: Object.freeze([...response.texts]),
    scores: Object.freeze([...response.scores]),
    request,
    response,
  });
  return { ...s, history: Object.freeze([...s.history, entry]) };
}

export function setOverlay(s: SessionState, target: string, q: readonly number[]): SessionState {
  if (q.length !== s.tokens.length) {
    throw new Error(`q length ${q.length} does not match token count ${s.tokens.length}`);
  }
  return { ...s, target, overlay: Object.freeze([...q]) };
}

/** Clearing the target removes the shading; the mask is untouched. */
export function clearOverlay(s: SessionState): SessionState {
  return { ...s, target: null, overlay: null };
}

export function adoptMask(s: SessionState, mask: readonly number[]): SessionState {
  if (mask.length !== s.tokens.length) {
    throw new Error(`mask length ${mask.length} does not match token count ${s.tokens.length}`);
  }
  if (mask.some((b) => b !== 0 && b !== 1)) {
    throw new Error("mask entries must be 0 or 1");
  }
  return { ...s, mask: Object.freeze([...mask]) };
}

const SESSION_FORMAT = "selectgen-studio-session-v1";

export function exportSession(s: SessionState): string {
  return JSON.stringify({ format: SESSION_FORMAT, state: s }, null, 1);
}

export function importSession(raw: string): SessionState {
  let doc: unknown;
  try {
    doc = JSON.parse(raw);
  } catch (e) {
    throw new Error(`not a session file: ${(e as Error).message}`);
  }
  const wrapped = doc as { format?: string; state?: SessionState };
  if (wrapped.format !== SESSION_FORMAT || !wrapped.state) {
    throw new Error(`not a ${SESSION_FORMAT} file`);
  }
  const s = wrapped.state;
  const n = s.tokens?.length;
  if (
    typeof s.source !== "string" ||
    !Array.isArray(s.tokens) ||
    !Array.isArray(s.gamma) ||
    !Array.isArray(s.mask) ||
    !Array.isArray(s.history) ||
    s.gamma.length !== n ||
    s.mask.length !== n ||
    (s.overlay !== null && (!Array.isArray(s.overlay) || s.overlay.length !== n))
  ) {
    throw new Error("session file fields are inconsistent");
  }
  return {
    source: s.source,
    tokens: Object.freeze([...s.tokens]),
    gamma: Object.freeze([...s.gamma]),
    mask: Object.freeze([...s.mask]),
    history: Object.freeze(s.history.map((h) => Object.freeze({ ...h }))),
    overlay: s.overlay === null ? null : Object.freeze([...s.overlay]),
    target: s.target ?? null,
  };
}
