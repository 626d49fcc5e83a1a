/** Controller: poll the API, project responses into views, submit actions. */

import { ApiClient, ApiError, type DisagreementItem } from "./api.js";
import { labelForKey, SkipList, viewFromNext, type View } from "./state.js";
import {
  renderAdjudication,
  renderDashboard,
  renderJoinForm,
  renderView,
} from "./ui.js";

const POLL_MS = 2000;

class AnnotatorApp {
  private readonly api = new ApiClient("");
  private readonly skips = new SkipList();
  private view: View | null = null;
  private currentLabels: string[] = [];
  private pollTimer: number | undefined;

  constructor(
    private readonly root: HTMLElement,
    private readonly sessionId: string,
    private readonly annotator: string,
  ) {}

  start(): void {
    document.addEventListener("keydown", (event) => {
      if (this.view?.kind !== "labeling") {
        return;
      }
      const label = labelForKey(event.key, this.currentLabels);
      if (label !== null) {
        void this.pick(label);
      }
    });
    void this.refresh();
  }

  private async refresh(): Promise<void> {
    window.clearTimeout(this.pollTimer);
    try {
      const payload = await this.api.next(this.sessionId, this.annotator, this.skips.asParam());
      this.currentLabels = payload.labels;
      this.view = viewFromNext(payload);
      if (this.view.kind === "labeling") {
        renderView(this.root, this.view, {
          onPick: (label) => void this.pick(label),
          onSkip: () => this.skipCurrent(),
        });
      } else if (this.view.kind === "waiting") {
        renderView(this.root, this.view, noHandlers);
        this.pollTimer = window.setTimeout(() => void this.refresh(), POLL_MS);
      } else if (this.view.kind === "adjudicating") {
        await this.refreshAdjudication();
      } else {
        await this.refreshDashboard();
      }
    } catch (error) {
      this.renderError(error);
    }
  }

  private async pick(label: string): Promise<void> {
    if (this.view?.kind !== "labeling") {
      return;
    }
    const tweetId = this.view.item.tweet_id;
    try {
      await this.api.submitLabel(this.sessionId, this.annotator, tweetId, label);
      this.skips.labeled(tweetId);
      await this.refresh();
    } catch (error) {
      this.renderError(error, true);
    }
  }

  private skipCurrent(): void {
    if (this.view?.kind !== "labeling") {
      return;
    }
    this.skips.skip(this.view.item.tweet_id);
    void this.refresh();
  }

  private async refreshAdjudication(): Promise<void> {
    const payload = await this.api.disagreements(this.sessionId);
    if (payload.phase === "closed" || payload.queue.length === 0) {
      await this.refreshDashboard();
      return;
    }
    const item = payload.queue[0] as DisagreementItem;
    renderAdjudication(this.root, item, this.currentLabels, payload.remaining, {
      onFinal: (tweetId, finalLabel) => {
        void this.api
          .adjudicate(this.sessionId, tweetId, finalLabel)
          .then(() => this.refresh())
          .catch((error) => this.renderError(error, true));
      },
    });
  }

  private async refreshDashboard(): Promise<void> {
    const kappa = await this.api.kappa(this.sessionId).catch(() => null);
    const estimate = await this.api.estimate(this.sessionId).catch(() => null);
    renderDashboard(this.root, kappa, estimate);
    if (estimate === null) {
      this.pollTimer = window.setTimeout(() => void this.refresh(), POLL_MS);
    }
  }

  /** Failures keep local state: a banner plus retry, nothing is lost. */
  private renderError(error: unknown, retryable = false): void {
    const message = error instanceof ApiError ? error.message : String(error);
    const banner = document.createElement("div");
    banner.className = "error-banner";
    banner.textContent = `Request failed: ${message}`;
    const retry = document.createElement("button");
    retry.textContent = retryable ? "Retry" : "Reload";
    retry.addEventListener("click", () => void this.refresh());
    banner.append(" ", retry);
    this.root.prepend(banner);
  }
}

const noHandlers = { onPick: () => undefined, onSkip: () => undefined };

function boot(): void {
  const root = document.getElementById("app");
  if (root === null) {
    return;
  }
  const params = new URLSearchParams(window.location.search);
  const session = params.get("session");
  const annotator = params.get("annotator");
  if (session !== null && annotator !== null) {
    new AnnotatorApp(root, session, annotator).start();
    return;
  }
  renderJoinForm(root, (sessionId, annotatorId) => {
    const target = new URL(window.location.href);
    target.searchParams.set("session", sessionId);
    target.searchParams.set("annotator", annotatorId);
    window.location.href = target.toString();
  });
}

boot();
