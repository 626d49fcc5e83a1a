/** Pure view-model logic: the UI is a projection of server responses plus an
 * ephemeral local skip list. Nothing here touches the DOM or the network. */

import type { Item, NextPayload, Phase, Progress } from "./api.js";

export type View =
  | { kind: "labeling"; item: Item; progress: Progress; labels: string[] }
  | { kind: "waiting"; progress: Progress }
  | { kind: "adjudicating" }
  | { kind: "closed" };

/** Map a /next payload onto the screen to show. */
export function viewFromNext(payload: NextPayload): View {
  if (payload.phase === "closed") {
    return { kind: "closed" };
  }
  if (payload.phase === "adjudicating") {
    return { kind: "adjudicating" };
  }
  if (payload.item !== null) {
    return {
      kind: "labeling",
      item: payload.item,
      progress: payload.progress,
      labels: payload.labels,
    };
  }
  // this annotator is finished; the counterpart is still labeling
  return { kind: "waiting", progress: payload.progress };
}

/** Skipped items recycle to the end of the local queue: the server is asked
 * to serve anything else first, and among skipped items the oldest skip
 * comes back first. Reloading the page drops the list by design. */
export class SkipList {
  private ids: string[] = [];

  skip(tweetId: string): void {
    this.ids = this.ids.filter((id) => id !== tweetId);
    this.ids.push(tweetId);
  }

  labeled(tweetId: string): void {
    this.ids = this.ids.filter((id) => id !== tweetId);
  }

  asParam(): string[] {
    return [...this.ids];
  }

  get size(): number {
    return this.ids.length;
  }
}

/** Keyboard shortcuts: digits 1..n pick the n-th label in set order. */
export function labelForKey(key: string, labels: string[]): string | null {
  if (!/^[1-9]$/.test(key)) {
    return null;
  }
  const index = Number(key) - 1;
  return index < labels.length ? labels[index]! : null;
}

export function formatKappa(kappa: number | null): string {
  return kappa === null ? "undefined (no chance disagreement)" : kappa.toFixed(3);
}

export function phaseLabel(phase: Phase): string {
  switch (phase) {
    case "labeling":
      return "Labeling";
    case "adjudicating":
      return "Adjudication";
    case "closed":
      return "Session closed";
  }
}

/** Estimate rows sorted by descending share for the dashboard bars. */
export function estimateRows(shares: Record<string, number>): Array<{ label: string; share: number }> {
  return Object.entries(shares)
    .map(([label, share]) => ({ label, share }))
    .sort((a, b) => b.share - a.share || a.label.localeCompare(b.label));
}
