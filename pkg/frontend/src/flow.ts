// Debounced suggestion fetching with a single logical in-flight request:
// every (re)schedule bumps the sequence number, and responses that arrive
// for an older sequence are discarded by the state layer.

import { ApiClient, ApiFailure, SuggestRequest } from "./api.js";
import {
  SessionState,
  applyError,
  applyResponse,
  canSuggest,
  requestK,
  requestStarted,
} from "./state.js";

export const DEBOUNCE_MS = 250;

type GetState = () => SessionState;
type SetState = (next: SessionState) => void;

export class SuggestFlow {
  private timer: ReturnType<typeof setTimeout> | null = null;
  private seq = 0;

  constructor(
    private readonly client: ApiClient,
    private readonly getState: GetState,
    private readonly setState: SetState,
    private readonly debounceMs: number = DEBOUNCE_MS,
  ) {}

  /** Debounce: rapid consecutive calls collapse into one request. */
  schedule(): void {
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.fire();
    }, this.debounceMs);
  }

  /** Issue the request immediately (used after accept/reject backfill). */
  async fire(): Promise<void> {
    const state = this.getState();
    if (!canSuggest(state)) return;
    const seq = ++this.seq;
    this.setState(requestStarted(this.getState()));
    const request: SuggestRequest = {
      provider_id: state.providerId,
      age: state.age,
      gender: state.gender,
      icds: [...state.icds],
      k: requestK(state),
      method: state.method,
    };
    try {
      const response = await this.client.suggest(request);
      this.setState(applyResponse(this.getState(), seq, response));
    } catch (err) {
      const message = err instanceof ApiFailure ? err.message : String(err);
      this.setState(applyError(this.getState(), seq, message));
    }
  }
}
