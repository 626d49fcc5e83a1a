/** DOM rendering for the annotator screens. Chrome is LTR; tweet text is RTL. */

import type { DisagreementItem, EstimatePayload, KappaPayload } from "./api.js";
import { estimateRows, formatKappa, type View } from "./state.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  children: Array<HTMLElement | string> = [],
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  for (const child of children) {
    node.append(child);
  }
  return node;
}

export interface LabelScreenHandlers {
  onPick(label: string): void;
  onSkip(): void;
}

export function renderJoinForm(root: HTMLElement, onJoin: (session: string, annotator: string) => void): void {
  const session = el("input", { placeholder: "session id", id: "session-input" });
  const annotator = el("input", { placeholder: "annotator id", id: "annotator-input" });
  const button = el("button", { class: "primary" }, ["Start labeling"]);
  button.addEventListener("click", () => {
    if (session.value && annotator.value) {
      onJoin(session.value.trim(), annotator.value.trim());
    }
  });
  root.replaceChildren(
    el("section", { class: "join" }, [
      el("h1", {}, ["Tweet annotation"]),
      session,
      annotator,
      button,
    ]),
  );
}

export function renderView(
  root: HTMLElement,
  view: View,
  handlers: LabelScreenHandlers,
): void {
  if (view.kind === "labeling") {
    const buttons = view.labels.map((label, index) => {
      const button = el("button", { class: "label-btn", "data-label": label }, [
        `${index + 1}. ${label}`,
      ]);
      button.addEventListener("click", () => handlers.onPick(label));
      return button;
    });
    const skip = el("button", { class: "skip-btn" }, ["Skip for now"]);
    skip.addEventListener("click", () => handlers.onSkip());
    root.replaceChildren(
      el("section", { class: "labeling" }, [
        el("div", { class: "progress" }, [
          `${view.progress.labeled} / ${view.progress.total} labeled`,
        ]),
        el("div", { class: "cluster-badge" }, [`cluster ${view.item.cluster_id}`]),
        el("blockquote", { class: "tweet", dir: "rtl", lang: "fa" }, [view.item.text]),
        el("div", { class: "label-grid" }, buttons),
        skip,
        el("p", { class: "hint" }, ["Keys 1–6 pick a label"]),
      ]),
    );
    return;
  }
  if (view.kind === "waiting") {
    root.replaceChildren(
      el("section", { class: "waiting" }, [
        el("h2", {}, ["All yours are labeled"]),
        el("p", {}, [
          `You finished ${view.progress.labeled} of ${view.progress.total}. ` +
            "Waiting for the other annotator before adjudication.",
        ]),
      ]),
    );
    return;
  }
  if (view.kind === "adjudicating") {
    root.replaceChildren(
      el("section", { class: "adjudicating" }, [el("h2", {}, ["Adjudication in progress"])]),
    );
    return;
  }
  root.replaceChildren(el("section", { class: "closed" }, [el("h2", {}, ["Session closed"])]));
}

export interface AdjudicationHandlers {
  onFinal(tweetId: string, label: string): void;
}

/** One disagreement at a time: the two candidates (unattributed) plus the
 * full label set for the cases where the joint call is a third label. */
export function renderAdjudication(
  root: HTMLElement,
  item: DisagreementItem,
  allLabels: string[],
  remaining: number,
  handlers: AdjudicationHandlers,
): void {
  const candidates = item.labels.map((label) => {
    const button = el("button", { class: "label-btn candidate", "data-label": label }, [label]);
    button.addEventListener("click", () => handlers.onFinal(item.tweet_id, label));
    return button;
  });
  const others = allLabels
    .filter((label) => !item.labels.includes(label))
    .map((label) => {
      const button = el("button", { class: "label-btn other", "data-label": label }, [label]);
      button.addEventListener("click", () => handlers.onFinal(item.tweet_id, label));
      return button;
    });
  root.replaceChildren(
    el("section", { class: "adjudication" }, [
      el("h2", {}, [`Resolve together (${remaining} left)`]),
      el("blockquote", { class: "tweet", dir: "rtl", lang: "fa" }, [item.text]),
      el("p", { class: "hint" }, ["The two assigned labels, in no particular order:"]),
      el("div", { class: "label-grid" }, candidates),
      el("p", { class: "hint" }, ["Or agree on a different label:"]),
      el("div", { class: "label-grid" }, others),
    ]),
  );
}

export function renderDashboard(
  root: HTMLElement,
  kappa: KappaPayload | null,
  estimate: EstimatePayload | null,
): void {
  const children: HTMLElement[] = [el("h2", {}, ["Session results"])];
  if (kappa !== null) {
    children.push(
      el("p", { class: "kappa" }, [
        `Cohen's kappa: ${formatKappa(kappa.kappa)} ` +
          `(observed ${kappa.observed_agreement.toFixed(3)}, ` +
          `expected ${kappa.expected_agreement.toFixed(3)}, n=${kappa.n_items})`,
      ]),
    );
  }
  if (estimate !== null) {
    const rows = estimateRows(estimate.per_label_share).map(({ label, share }) =>
      el("div", { class: "bar-row" }, [
        el("span", { class: "bar-label" }, [label]),
        el("div", { class: "bar", style: `width: ${(share * 100).toFixed(1)}%` }),
        el("span", { class: "bar-value" }, [`${(share * 100).toFixed(1)}%`]),
      ]),
    );
    children.push(el("div", { class: "estimate" }, rows));
  }
  root.replaceChildren(el("section", { class: "dashboard" }, children));
}
