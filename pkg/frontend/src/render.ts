// Paints the ViewModel into the static DOM skeleton. All content nodes are
// rebuilt on every render so the screen is a pure function of the model.

import { ViewModel } from "./view.js";

export interface RenderCallbacks {
  onAccept(cpt: string, score: number | null): void;
  onReject(cpt: string): void;
  onUnaccept(cpt: string): void;
  onRemoveIcd(text: string): void;
}

function el(tag: string, className: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function render(root: Document, vm: ViewModel, cb: RenderCallbacks): void {
  const chips = root.getElementById("icd-chips")!;
  chips.replaceChildren();
  for (const text of vm.icdChips) {
    const chip = el("span", "chip", text);
    const remove = el("button", "chip-remove", "×");
    remove.setAttribute("aria-label", `remove ${text}`);
    remove.addEventListener("click", () => cb.onRemoveIcd(text));
    chip.appendChild(remove);
    chips.appendChild(chip);
  }

  const icdError = root.getElementById("icd-error")!;
  icdError.textContent = vm.icdError ?? "";

  const status = root.getElementById("status")!;
  status.textContent = vm.pending
    ? "fetching suggestions…"
    : vm.modelVersion
      ? `model ${vm.modelVersion}`
      : "";

  const warnings = root.getElementById("warnings")!;
  warnings.replaceChildren();
  for (const w of vm.warnings) {
    warnings.appendChild(el("div", "warning", w));
  }

  const apiError = root.getElementById("api-error")!;
  apiError.textContent = vm.apiError ?? "";

  const list = root.getElementById("suggestions")!;
  list.replaceChildren();
  for (const row of vm.rows) {
    const li = el("li", row.pinned ? "row pinned" : "row");
    li.dataset.cpt = row.cpt;
    li.appendChild(el("span", "cpt", row.cpt));
    li.appendChild(el("span", "score", row.label));
    if (row.filteredCount > 0) {
      li.appendChild(el("span", "note", `+${row.filteredCount} filtered above`));
    }
    if (row.pinned) {
      const undo = el("button", "undo", "remove");
      undo.addEventListener("click", () => cb.onUnaccept(row.cpt));
      li.appendChild(undo);
    } else {
      const accept = el("button", "accept", "accept");
      accept.addEventListener("click", () => {
        const score = Number.parseFloat(row.label);
        cb.onAccept(row.cpt, Number.isFinite(score) ? score : null);
      });
      const reject = el("button", "reject", "reject");
      reject.addEventListener("click", () => cb.onReject(row.cpt));
      li.appendChild(accept);
      li.appendChild(reject);
    }
    list.appendChild(li);
  }

  (root.getElementById("submit") as HTMLButtonElement).disabled = !vm.submitEnabled;

  const confirmation = root.getElementById("confirmation")!;
  confirmation.textContent = vm.draftId ? `draft ${vm.draftId} submitted` : "";
}
