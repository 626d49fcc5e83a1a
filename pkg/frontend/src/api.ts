/** Typed client for the annotation session API. */

export type Phase = "labeling" | "adjudicating" | "closed";

export interface Progress {
  labeled: number;
  total: number;
}

export interface Item {
  tweet_id: string;
  text: string;
  cluster_id: number;
}

export interface NextPayload {
  session_id: string;
  annotator: string;
  phase: Phase;
  labels: string[];
  progress: Progress;
  item: Item | null;
  done: boolean;
}

export interface LabelAck {
  ok: boolean;
  phase: Phase;
  progress: Progress;
}

export interface DisagreementItem {
  tweet_id: string;
  text: string;
  cluster_id: number;
  /** the two candidate labels, sorted, with no annotator attribution */
  labels: string[];
}

export interface DisagreementsPayload {
  session_id: string;
  phase: Phase;
  queue: DisagreementItem[];
  remaining: number;
}

export interface AdjudicateAck {
  ok: boolean;
  phase: Phase;
  remaining: number;
}

export interface KappaPayload {
  kappa: number | null;
  observed_agreement: number;
  expected_agreement: number;
  confusion: number[][];
  labels: string[];
  n_items: number;
}

export interface EstimatePayload {
  per_label_share: Record<string, number>;
  per_cluster_breakdown: Record<string, Record<string, number>>;
}

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

/** Called with every decoded response body; used for payload auditing. */
export type PayloadObserver = (path: string, payload: unknown) => void;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly observer?: PayloadObserver,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      method,
      headers: body === undefined ? undefined : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = (await response.json()) as T & { error?: string };
    this.observer?.(path, payload);
    if (!response.ok) {
      throw new ApiError(response.status, payload.error ?? `HTTP ${response.status}`);
    }
    return payload;
  }

  next(sessionId: string, annotator: string, skip: string[] = []): Promise<NextPayload> {
    const params = new URLSearchParams({ annotator });
    if (skip.length > 0) {
      params.set("skip", skip.join(","));
    }
    return this.request("GET", `/session/${sessionId}/next?${params}`);
  }

  submitLabel(sessionId: string, annotator: string, tweetId: string, label: string): Promise<LabelAck> {
    return this.request("POST", `/session/${sessionId}/label`, {
      annotator,
      tweet_id: tweetId,
      label,
    });
  }

  disagreements(sessionId: string): Promise<DisagreementsPayload> {
    return this.request("GET", `/session/${sessionId}/disagreements`);
  }

  adjudicate(sessionId: string, tweetId: string, label: string): Promise<AdjudicateAck> {
    return this.request("POST", `/session/${sessionId}/adjudicate`, {
      tweet_id: tweetId,
      label,
    });
  }

  kappa(sessionId: string): Promise<KappaPayload> {
    return this.request("GET", `/session/${sessionId}/kappa`);
  }

  estimate(sessionId: string): Promise<EstimatePayload> {
    return this.request("GET", `/session/${sessionId}/estimate`);
  }
}
