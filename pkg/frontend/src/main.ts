// Wires the static page to the state/flow/render pipeline.

import { ApiClient, ApiFailure, Method } from "./api.js";
import { SuggestFlow } from "./flow.js";
import * as st from "./state.js";
import { render } from "./render.js";
import { viewModel } from "./view.js";

const BASE_URL =
  new URLSearchParams(window.location.search).get("api") ?? "http://127.0.0.1:8000";

const client = new ApiClient(BASE_URL);
let state = st.initialState();

const flow = new SuggestFlow(
  client,
  () => state,
  (next) => {
    state = next;
    paint();
  },
);

function update(next: st.SessionState, refetch = false): void {
  state = next;
  paint();
  if (refetch && st.canSuggest(state)) flow.schedule();
}

function paint(): void {
  render(document, viewModel(state), {
    onAccept: (cpt, score) => update(st.acceptCode(state, cpt, score), true),
    onReject: (cpt) => update(st.rejectCode(state, cpt), true),
    onUnaccept: (cpt) => update(st.unacceptCode(state, cpt), true),
    onRemoveIcd: (text) => update(st.removeIcd(state, text), true),
  });
}

function hook<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

const providerInput = hook<HTMLInputElement>("provider");
const ageInput = hook<HTMLInputElement>("age");
const genderSelect = hook<HTMLSelectElement>("gender");
const methodSelect = hook<HTMLSelectElement>("method");
const kInput = hook<HTMLInputElement>("k");
const icdInput = hook<HTMLInputElement>("icd-input");
const icdAdd = hook<HTMLButtonElement>("icd-add");
const submit = hook<HTMLButtonElement>("submit");

providerInput.addEventListener("input", () =>
  update(st.setField(state, "providerId", providerInput.value.trim()), true),
);
ageInput.addEventListener("change", () =>
  update(st.setField(state, "age", Number(ageInput.value)), true),
);
genderSelect.addEventListener("change", () =>
  update(st.setField(state, "gender", genderSelect.value as "M" | "F"), true),
);
methodSelect.addEventListener("change", () =>
  update(st.setField(state, "method", methodSelect.value as Method), true),
);
kInput.addEventListener("change", () =>
  update(st.setField(state, "k", Math.max(1, Math.min(50, Number(kInput.value)))), true),
);

function addIcdFromInput(): void {
  update(st.addIcd(state, icdInput.value), true);
  if (!state.icdError) icdInput.value = "";
}

icdAdd.addEventListener("click", addIcdFromInput);
icdInput.addEventListener("keydown", (ev) => {
  if (ev.key === "Enter") {
    ev.preventDefault();
    addIcdFromInput();
  }
});

submit.addEventListener("click", async () => {
  if (!st.canSubmit(state)) return;
  update(st.submitStarted(state));
  try {
    const result = await client.submitDraft({
      provider_id: state.providerId,
      age: state.age,
      gender: state.gender,
      icds: [...state.icds],
      accepted: state.accepted.map((a) => ({ cpt: a.cpt, score: a.score })),
      method: state.method,
    });
    update(st.submitSucceeded(state, result.draft_id));
  } catch (err) {
    const message = err instanceof ApiFailure ? err.message : String(err);
    update(st.submitFailed(state, message));
  }
});

paint();
