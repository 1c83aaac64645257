// Local ICD validation mirroring the server's normalization rules, so bad
// codes are caught before a round trip. Kept in sync via shared fixture
// tests on both sides.

export type IcdReason =
  | "empty"
  | "multiple-dots"
  | "bad-length"
  | "bad-first-char"
  | "bad-char";

export type IcdResult = { ok: true; text: string } | { ok: false; reason: IcdReason };

const ALNUM = /^[A-Z0-9]+$/;

export function normalizeIcd(raw: string): IcdResult {
  let text = raw.trim().toUpperCase();
  if (!text) return { ok: false, reason: "empty" };
  const dots = (text.match(/\./g) ?? []).length;
  if (dots > 1) return { ok: false, reason: "multiple-dots" };
  text = text.replace(".", "");
  if (text.length < 3 || text.length > 7) return { ok: false, reason: "bad-length" };
  if (text[0] < "A" || text[0] > "Z") return { ok: false, reason: "bad-first-char" };
  if (!ALNUM.test(text)) return { ok: false, reason: "bad-char" };
  return { ok: true, text };
}

export function describeIcdError(reason: IcdReason): string {
  switch (reason) {
    case "empty":
      return "enter a diagnosis code";
    case "multiple-dots":
      return "at most one dot allowed";
    case "bad-length":
      return "3-7 characters after removing the dot";
    case "bad-first-char":
      return "must start with a letter";
    case "bad-char":
      return "letters and digits only";
  }
}
