// Shared fixtures with the server-side normalizer: both implementations
// must agree on every case here.

import { describe, expect, it } from "vitest";
import { normalizeIcd } from "../src/codes.js";

describe("normalizeIcd", () => {
  it.each([
    ["E11.9", "E119"],
    ["e119", "E119"],
    ["  z99 ", "Z99"],
    ["A01B2C3", "A01B2C3"],
    ["m54.5", "M545"],
  ])("normalizes %s -> %s", (raw, expected) => {
    expect(normalizeIcd(raw)).toEqual({ ok: true, text: expected });
  });

  it.each([
    ["", "empty"],
    ["   ", "empty"],
    ["9E11", "bad-first-char"],
    ["E1", "bad-length"],
    ["E11.99999", "bad-length"],
    ["E1.1.9", "multiple-dots"],
    ["E1-9", "bad-char"],
  ])("rejects %s with %s", (raw, reason) => {
    expect(normalizeIcd(raw)).toEqual({ ok: false, reason });
  });

  it("is idempotent on normalized output", () => {
    const first = normalizeIcd("e11.9");
    if (!first.ok) throw new Error("fixture should normalize");
    expect(normalizeIcd(first.text)).toEqual(first);
  });
});
