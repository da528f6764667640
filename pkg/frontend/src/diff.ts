/** Word-level comparison between two generations and the 0..1 color scale
 * used for gamma/posterior shading. */

export interface WordDiff {
  /** words present in b but not a */
  added: string[];
  /** words present in a but not b */
  removed: string[];
}

const words = (text: string): string[] => text.toLowerCase().split(/\s+/).filter(Boolean);

/** Multiset difference of content words between two texts. */
export function diffWords(a: string, b: string): WordDiff {
  const count = (ws: string[]) => {
    const m = new Map<string, number>();
    for (const w of ws) m.set(w, (m.get(w) ?? 0) + 1);
    return m;
  };
  const ca = count(words(a));
  const cb = count(words(b));
  const added: string[] = [];
  const removed: string[] = [];
  for (const [w, n] of cb) for (let i = 0; i < n - (ca.get(w) ?? 0); i++) added.push(w);
  for (const [w, n] of ca) for (let i = 0; i < n - (cb.get(w) ?? 0); i++) removed.push(w);
  return { added, removed };
}

/** Linear 0 -> 1 shade; 0.5 lands exactly on the midpoint lightness. */
export function shade(q: number): string {
  const v = Math.min(1, Math.max(0, q));
  const light = Math.round(96 - 56 * v); // 96% (near white) down to 40%
  return `hsl(210 70% ${light}%)`;
}
