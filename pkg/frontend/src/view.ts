// Pure view model: one plain-data description of the screen per state.
// render() paints this and nothing else, which keeps replays exact.

import { SessionState, canSubmit, canSuggest, visibleSuggestions } from "./state.js";
import { describeIcdError } from "./codes.js";

export interface SuggestionRow {
  cpt: string;
  label: string; // formatted score or "accepted"
  pinned: boolean;
  filteredCount: number;
}

export interface ViewModel {
  icdChips: string[];
  icdError: string | null;
  rows: SuggestionRow[];
  warnings: string[];
  apiError: string | null;
  pending: boolean;
  modelVersion: string | null;
  suggestEnabled: boolean;
  submitEnabled: boolean;
  draftId: string | null;
}

export function viewModel(state: SessionState): ViewModel {
  const rows: SuggestionRow[] = state.accepted.map((a) => ({
    cpt: a.cpt,
    label: a.score === null ? "accepted" : `accepted @ ${a.score.toFixed(3)}`,
    pinned: true,
    filteredCount: 0,
  }));
  for (const s of visibleSuggestions(state)) {
    rows.push({
      cpt: s.cpt,
      label: s.score.toFixed(3),
      pinned: false,
      filteredCount: s.filtered_count,
    });
  }
  return {
    icdChips: [...state.icds],
    icdError: state.icdError === null ? null : describeIcdError(state.icdError),
    rows,
    warnings: state.response ? [...state.response.warnings] : [],
    apiError: state.apiError,
    pending: state.pending,
    modelVersion: state.response ? state.response.model_version : null,
    suggestEnabled: canSuggest(state),
    submitEnabled: canSubmit(state),
    draftId: state.draftId,
  };
}
