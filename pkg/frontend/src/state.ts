// Pure view-model logic, kept DOM-free so it is directly testable.

export type CardState = "none" | "submitted" | "corrected";

export type CardEvent = "submit" | "success" | "failure";

/**
 * Card correction lifecycle: none -> submitted -> corrected, with a failed
 * request falling back to none. Any other event leaves the state unchanged.
 */
export function cardTransition(state: CardState, event: CardEvent): CardState {
  if (state === "none" && event === "submit") return "submitted";
  if (state === "submitted" && event === "success") return "corrected";
  if (state === "submitted" && event === "failure") return "none";
  return state;
}

export function pageCount(total: number, pageSize: number): number {
  if (pageSize < 1) throw new Error(`page size must be >= 1, got ${pageSize}`);
  return Math.max(1, Math.ceil(total / pageSize));
}

export interface Glyph {
  color: string; // css hsl() string
  char: string;
}

const GLYPH_CHARS = ["●", "■", "▲", "◆", "★", "✚", "✦", "✱"];

/**
 * Deterministic stand-in thumbnail for records without an image: hue and
 * shape derive from the first components of the item's embedding.
 */
export function glyphFor(prefix: number[]): Glyph {
  const p = [prefix[0] ?? 0, prefix[1] ?? 0, prefix[2] ?? 0];
  const hue = Math.round(((Math.atan2(p[1], p[0]) + Math.PI) / (2 * Math.PI)) * 360) % 360;
  const light = 35 + Math.round(Math.min(Math.abs(p[2]), 1) * 30);
  const idx = (p[0] > 0 ? 1 : 0) + (p[1] > 0 ? 2 : 0) + (p[2] > 0 ? 4 : 0);
  return { color: `hsl(${hue}, 70%, ${light}%)`, char: GLYPH_CHARS[idx % GLYPH_CHARS.length] };
}

export interface MetricsPoint {
  corrections: number;
  accE: number | null;
  forgetting: number;
}

/**
 * Chart history: one point per poll (the initial point plus one per
 * mutation); reset() drops everything back to the initial point.
 */
export class MetricsHistory {
  private points: MetricsPoint[] = [];

  append(point: MetricsPoint): void {
    this.points.push(point);
  }

  reset(): void {
    this.points = this.points.slice(0, 1);
  }

  all(): readonly MetricsPoint[] {
    return this.points;
  }

  get length(): number {
    return this.points.length;
  }
}

/** Case-insensitive substring filter used by the class picker. */
export function filterClasses(names: string[], query: string): string[] {
  const q = query.trim().toLowerCase();
  if (!q) return names;
  return names.filter((n) => n.toLowerCase().includes(q));
}
