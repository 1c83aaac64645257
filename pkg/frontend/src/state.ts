// Session state and its pure transitions. Every screen render derives from
// this object alone, so replaying a recorded transition sequence reproduces
// the UI exactly.

import { IcdReason, normalizeIcd } from "./codes.js";
import { Method, SuggestResponse, Suggestion } from "./api.js";

export const MAX_ICDS = 12;

export interface AcceptedCode {
  cpt: string;
  score: number | null;
}

export interface SessionState {
  providerId: string;
  age: number;
  gender: "M" | "F";
  method: Method;
  k: number;
  icds: string[]; // normalized, unique, insertion order
  icdError: IcdReason | null;
  accepted: AcceptedCode[]; // insertion order, pinned at the top
  rejected: string[]; // hidden from the list; k is enlarged by this many
  response: SuggestResponse | null;
  requestSeq: number; // last sequence number applied
  pending: boolean;
  apiError: string | null;
  draftId: string | null;
  submitting: boolean;
}

export function initialState(): SessionState {
  return {
    providerId: "",
    age: 40,
    gender: "F",
    method: "nn",
    k: 3,
    icds: [],
    icdError: null,
    accepted: [],
    rejected: [],
    response: null,
    requestSeq: 0,
    pending: false,
    apiError: null,
    draftId: null,
    submitting: false,
  };
}

export function setField(
  state: SessionState,
  field: "providerId" | "age" | "gender" | "method" | "k",
  value: string | number,
): SessionState {
  return { ...state, [field]: value, draftId: null };
}

export function addIcd(state: SessionState, raw: string): SessionState {
  const result = normalizeIcd(raw);
  if (!result.ok) {
    return { ...state, icdError: result.reason };
  }
  if (state.icds.includes(result.text) || state.icds.length >= MAX_ICDS) {
    return { ...state, icdError: null };
  }
  return { ...state, icds: [...state.icds, result.text], icdError: null, draftId: null };
}

export function removeIcd(state: SessionState, text: string): SessionState {
  return { ...state, icds: state.icds.filter((t) => t !== text) };
}

export function acceptCode(state: SessionState, cpt: string, score: number | null): SessionState {
  if (state.accepted.some((a) => a.cpt === cpt)) return state;
  return {
    ...state,
    accepted: [...state.accepted, { cpt, score }],
    rejected: state.rejected.filter((c) => c !== cpt),
  };
}

export function unacceptCode(state: SessionState, cpt: string): SessionState {
  return { ...state, accepted: state.accepted.filter((a) => a.cpt !== cpt) };
}

export function rejectCode(state: SessionState, cpt: string): SessionState {
  return {
    ...state,
    rejected: state.rejected.includes(cpt) ? state.rejected : [...state.rejected, cpt],
    accepted: state.accepted.filter((a) => a.cpt !== cpt),
  };
}

export function requestStarted(state: SessionState): SessionState {
  return { ...state, pending: true };
}

export function applyResponse(
  state: SessionState,
  seq: number,
  response: SuggestResponse,
): SessionState {
  if (seq <= state.requestSeq) return state; // stale response superseded by newer input
  return { ...state, requestSeq: seq, response, pending: false, apiError: null };
}

export function applyError(state: SessionState, seq: number, message: string): SessionState {
  if (seq <= state.requestSeq) return state;
  return { ...state, requestSeq: seq, pending: false, apiError: message };
}

export function submitStarted(state: SessionState): SessionState {
  return { ...state, submitting: true, apiError: null };
}

export function submitSucceeded(state: SessionState, draftId: string): SessionState {
  return {
    ...state,
    submitting: false,
    draftId,
    accepted: [],
    rejected: [],
    response: null,
    icds: [],
  };
}

export function submitFailed(state: SessionState, message: string): SessionState {
  return { ...state, submitting: false, apiError: message };
}

/** Suggestions to show: server ranking minus rejected and already-accepted codes. */
export function visibleSuggestions(state: SessionState): Suggestion[] {
  if (!state.response) return [];
  const hidden = new Set<string>([
    ...state.rejected,
    ...state.accepted.map((a) => a.cpt),
  ]);
  return state.response.suggestions.filter((s) => !hidden.has(s.cpt)).slice(0, state.k);
}

/** k to request from the server: backfill for everything we hide locally. */
export function requestK(state: SessionState): number {
  return Math.min(50, state.k + state.rejected.length + state.accepted.length);
}

export function canSuggest(state: SessionState): boolean {
  return state.icds.length >= 1;
}

export function canSubmit(state: SessionState): boolean {
  return state.accepted.length >= 1 && !state.submitting && state.icds.length >= 1;
}
