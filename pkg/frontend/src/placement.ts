/** Deterministic left/right blinding of the real vs. synthetic video.
 *
 * The side is a pure function of (rater, pair, seed), so a refresh
 * shows the same layout, yet different raters and pairs get
 * independent assignments. The placement is recorded with every
 * judgment so analysts can test for side bias.
 */

import type { Placement } from "./api";

/** FNV-1a over the key string; small, stable, dependency-free. */
function hash32(key: string): number {
  let h = 0x811c9dc5;
  for (let i = 0; i < key.length; i++) {
    h ^= key.charCodeAt(i);
    h = Math.imul(h, 0x01000193);
  }
  return h >>> 0;
}

export function sidePlacement(
  raterId: string,
  pairId: string,
  seed = 0,
): Placement {
  const synLeft = hash32(`${seed}:${raterId}:${pairId}`) % 2 === 0;
  return synLeft
    ? { left: "syn", right: "real" }
    : { left: "real", right: "syn" };
}
