"""Two-annotator labeling workflow: blind labeling, agreement statistics,
attribution-free adjudication, and cluster-weighted category estimates.

Sessions are persisted as an append-only JSON-lines event log and rebuilt by
replay, so the human process is auditable and crash-safe.
"""
from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping, Sequence

from .base import ConfigurationError

DEFAULT_LABELS = (
    "opinion",
    "news/quotes",
    "satire/jokes",
    "complaint/blame",
    "solution",
    "neutral",
)


@dataclass(frozen=True)
class LabelSet:
    labels: tuple[str, ...] = DEFAULT_LABELS

    def __post_init__(self):
        if not self.labels:
            raise ConfigurationError("label set must not be empty")
        if len(set(self.labels)) != len(self.labels):
            raise ConfigurationError("label set contains duplicates")

    def __contains__(self, label: str) -> bool:
        return label in self.labels


@dataclass(frozen=True)
class SampledTweet:
    tweet_id: str
    cluster_id: int
    text: str


@dataclass
class KappaResult:
    kappa: float | None  # None when chance agreement is 1 (undefined)
    observed_agreement: float
    expected_agreement: float
    confusion: list[list[int]]  # rows: annotator A's label, cols: annotator B's
    labels: list[str]
    n_items: int

    def to_dict(self) -> dict:
        return {
            "kappa": self.kappa,
            "observed_agreement": self.observed_agreement,
            "expected_agreement": self.expected_agreement,
            "confusion": self.confusion,
            "labels": self.labels,
            "n_items": self.n_items,
        }


@dataclass
class CategoryEstimate:
    per_label_share: dict[str, float]
    per_cluster_breakdown: dict[int, dict[str, float]]

    def to_dict(self) -> dict:
        return {
            "per_label_share": dict(sorted(self.per_label_share.items())),
            "per_cluster_breakdown": {
                str(c): dict(sorted(v.items()))
                for c, v in sorted(self.per_cluster_breakdown.items())
            },
        }


def cohen_kappa(pairs: Sequence[tuple[str, str]], labels: Sequence[str]) -> KappaResult:
    """Cohen's kappa for two annotators over jointly labeled items.

    kappa = (p_o - p_e) / (1 - p_e) with p_e from each annotator's marginal
    label distribution. Computed via integer arithmetic so clean fixtures
    come out exact. p_e = 1 (both annotators constant and equal) is reported
    as kappa=None rather than raising.
    """
    if not pairs:
        raise ConfigurationError("kappa needs at least one doubly-labeled item")
    label_list = list(labels)
    index = {lab: i for i, lab in enumerate(label_list)}
    size = len(label_list)
    confusion = [[0] * size for _ in range(size)]
    for a, b in pairs:
        confusion[index[a]][index[b]] += 1
    n = len(pairs)
    diag = sum(confusion[i][i] for i in range(size))
    row = [sum(confusion[i][j] for j in range(size)) for i in range(size)]
    col = [sum(confusion[i][j] for i in range(size)) for j in range(size)]
    chance = sum(row[i] * col[i] for i in range(size))
    p_o = diag / n
    p_e = chance / (n * n)
    if n * n == chance:
        kappa = None
    else:
        kappa = (n * diag - chance) / (n * n - chance)
    return KappaResult(
        kappa=kappa,
        observed_agreement=p_o,
        expected_agreement=p_e,
        confusion=confusion,
        labels=label_list,
        n_items=n,
    )


class SessionError(RuntimeError):
    """Workflow contract violation (wrong state, unknown label/tweet/annotator)."""


LABELING = "labeling"
ADJUDICATING = "adjudicating"
CLOSED = "closed"


class AnnotationSession:
    """In-memory session state, mutated only through event application.

    The state machine is monotone: labeling -> adjudicating -> closed.
    During labeling, annotators never see each other's labels; adjudication
    shows label pairs without attribution.
    """

    def __init__(
        self,
        session_id: str,
        sample: Mapping[int, Sequence[SampledTweet]],
        annotators: Sequence[str],
        label_set: LabelSet,
        cluster_ratios: Mapping[int, float],
    ):
        if len(annotators) != 2 or len(set(annotators)) != 2:
            raise ConfigurationError("exactly two distinct annotators are required")
        if not sample or not any(sample.values()):
            raise ConfigurationError("sample must not be empty")
        seen: set[str] = set()
        for cluster, tweets in sample.items():
            for tweet in tweets:
                if tweet.tweet_id in seen:
                    raise ConfigurationError(
                        f"tweet {tweet.tweet_id} appears in more than one cluster"
                    )
                seen.add(tweet.tweet_id)
        missing = [c for c in sample if c not in cluster_ratios]
        if missing:
            raise ConfigurationError(f"cluster_ratios missing clusters: {missing}")

        self.session_id = session_id
        self.sample = {int(c): list(tweets) for c, tweets in sorted(sample.items())}
        self.annotators = tuple(annotators)
        self.label_set = label_set
        self.cluster_ratios = {int(c): float(r) for c, r in cluster_ratios.items()}
        self.labels: dict[tuple[str, str], str] = {}
        self.adjudicated: dict[str, str] = {}
        self.status = LABELING
        self._tweets: dict[str, SampledTweet] = {
            t.tweet_id: t for tweets in self.sample.values() for t in tweets
        }

    # -- views ------------------------------------------------------------

    @property
    def tweet_ids(self) -> list[str]:
        """All sampled tweet ids in stable (cluster, position) order."""
        return [t.tweet_id for c in sorted(self.sample) for t in self.sample[c]]

    def tweet(self, tweet_id: str) -> SampledTweet:
        try:
            return self._tweets[tweet_id]
        except KeyError:
            raise SessionError(f"unknown tweet id {tweet_id!r}") from None

    def progress(self, annotator: str) -> tuple[int, int]:
        self._check_annotator(annotator)
        done = sum(1 for (a, _t) in self.labels if a == annotator)
        return done, len(self._tweets)

    def pending_for(self, annotator: str) -> list[str]:
        self._check_annotator(annotator)
        return [t for t in self.tweet_ids if (annotator, t) not in self.labels]

    # -- labeling ---------------------------------------------------------

    def submit_label(self, annotator: str, tweet_id: str, label: str) -> None:
        if self.status != LABELING:
            raise SessionError(f"session is {self.status}; labeling is over")
        self._check_annotator(annotator)
        if tweet_id not in self._tweets:
            raise SessionError(f"unknown tweet id {tweet_id!r}")
        if label not in self.label_set:
            raise SessionError(f"label {label!r} is not in the label set")
        self.labels[(annotator, tweet_id)] = label  # resubmission overwrites

    def labeling_complete(self) -> bool:
        return all(
            (a, t) in self.labels for a in self.annotators for t in self._tweets
        )

    def missing_counts(self) -> dict[str, int]:
        return {
            a: sum(1 for t in self._tweets if (a, t) not in self.labels)
            for a in self.annotators
        }

    # -- agreement --------------------------------------------------------

    def doubly_labeled_pairs(self) -> list[tuple[str, str, str]]:
        """(tweet_id, label_by_first_annotator, label_by_second) for tweets both labeled."""
        a, b = self.annotators
        out = []
        for t in self.tweet_ids:
            la, lb = self.labels.get((a, t)), self.labels.get((b, t))
            if la is not None and lb is not None:
                out.append((t, la, lb))
        return out

    def cohen_kappa(self) -> KappaResult:
        pairs = [(la, lb) for _t, la, lb in self.doubly_labeled_pairs()]
        if not pairs:
            raise SessionError("no tweet has been labeled by both annotators yet")
        return cohen_kappa(pairs, self.label_set.labels)

    # -- adjudication -----------------------------------------------------

    def begin_adjudication(self) -> None:
        """Transition labeling -> adjudicating; agreed tweets auto-adjudicate."""
        if self.status != LABELING:
            return
        if not self.labeling_complete():
            raise SessionError(
                "labeling incomplete; missing per annotator: "
                + json.dumps(self.missing_counts(), sort_keys=True)
            )
        for t, la, lb in self.doubly_labeled_pairs():
            if la == lb:
                self.adjudicated[t] = la
        self.status = ADJUDICATING
        self._maybe_close()

    def disagreement_queue(self) -> list[str]:
        """Disagreeing tweet ids in stable (cluster, tweet id) order.

        Calling this during labeling performs the transition (labeling must
        be complete).
        """
        if self.status == LABELING:
            self.begin_adjudication()
        order = {t: (self.tweet(t).cluster_id, t) for t in self._tweets}
        queue = [
            t for t, la, lb in self.doubly_labeled_pairs()
            if la != lb and t not in self.adjudicated
        ]
        return sorted(queue, key=lambda t: order[t])

    def disagreement_labels(self, tweet_id: str) -> tuple[str, str]:
        """The two candidate labels as an unordered (sorted) pair, unattributed."""
        a, b = self.annotators
        la, lb = self.labels.get((a, tweet_id)), self.labels.get((b, tweet_id))
        if la is None or lb is None or la == lb:
            raise SessionError(f"tweet {tweet_id!r} is not a disagreement case")
        pair = sorted((la, lb))
        return pair[0], pair[1]

    def adjudicate(self, tweet_id: str, final_label: str) -> None:
        """Record the jointly chosen final label for a disagreement case.

        The final label may be any label in the set, not only one of the two
        originals. Agreed tweets are auto-adjudicated and cannot be re-judged.
        """
        if self.status != ADJUDICATING:
            raise SessionError(f"session is {self.status}; adjudication not open")
        if tweet_id not in self._tweets:
            raise SessionError(f"unknown tweet id {tweet_id!r}")
        if final_label not in self.label_set:
            raise SessionError(f"label {final_label!r} is not in the label set")
        if tweet_id in self.adjudicated:
            raise SessionError(f"tweet {tweet_id!r} is already adjudicated")
        self.disagreement_labels(tweet_id)  # must actually disagree
        self.adjudicated[tweet_id] = final_label
        self._maybe_close()

    def _maybe_close(self) -> None:
        if self.status == ADJUDICATING and len(self.adjudicated) == len(self._tweets):
            self.status = CLOSED

    # -- estimates --------------------------------------------------------

    def weighted_category_estimate(self) -> CategoryEstimate:
        """share(label) = sum over clusters of in-cluster label ratio x cluster ratio.

        Uses adjudicated labels; cluster ratios come from the full corpus
        clustering, not the sample.
        """
        if self.status != CLOSED:
            raise SessionError("estimates require a closed session")
        breakdown: dict[int, dict[str, float]] = {}
        share = {label: 0.0 for label in self.label_set.labels}
        for cluster in sorted(self.sample):
            tweets = self.sample[cluster]
            ratio = {label: 0.0 for label in self.label_set.labels}
            for t in tweets:
                ratio[self.adjudicated[t.tweet_id]] += 1.0
            size = len(tweets)
            for label in ratio:
                ratio[label] /= size
            breakdown[cluster] = ratio
            weight = self.cluster_ratios[cluster]
            for label, r in ratio.items():
                share[label] += r * weight
        return CategoryEstimate(per_label_share=share, per_cluster_breakdown=breakdown)

    def export_rows(self) -> list[tuple]:
        """(tweet_id, cluster_id, annotator_a_label, annotator_b_label, final_label)."""
        a, b = self.annotators
        rows = []
        for t in self.tweet_ids:
            rows.append((
                t,
                self.tweet(t).cluster_id,
                self.labels.get((a, t), ""),
                self.labels.get((b, t), ""),
                self.adjudicated.get(t, ""),
            ))
        return rows

    def _check_annotator(self, annotator: str) -> None:
        if annotator not in self.annotators:
            raise SessionError(f"unknown annotator {annotator!r}")


def _now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


class SessionStore:
    """Append-only event-log persistence; one .jsonl file per session.

    Events: create, label, adjudicate, begin_adjudication. Replay rebuilds
    the exact session state; writes are serialized per session.
    """

    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.RLock] = {}
        self._guard = threading.Lock()

    def lock(self, session_id: str) -> threading.RLock:
        with self._guard:
            if session_id not in self._locks:
                self._locks[session_id] = threading.RLock()
            return self._locks[session_id]

    def path(self, session_id: str) -> Path:
        if not session_id or "/" in session_id or session_id.startswith("."):
            raise ConfigurationError(f"invalid session id {session_id!r}")
        return self.directory / f"{session_id}.jsonl"

    def exists(self, session_id: str) -> bool:
        return self.path(session_id).exists()

    def create(
        self,
        session_id: str,
        sample: Mapping[int, Sequence[SampledTweet]],
        annotators: Sequence[str],
        label_set: LabelSet,
        cluster_ratios: Mapping[int, float],
        config_hash: str = "",
    ) -> AnnotationSession:
        with self.lock(session_id):
            if self.exists(session_id):
                raise ConfigurationError(f"session {session_id!r} already exists")
            session = AnnotationSession(session_id, sample, annotators, label_set, cluster_ratios)
            event = {
                "event": "create",
                "ts": _now_iso(),
                "session_id": session_id,
                "annotators": list(annotators),
                "labels": list(label_set.labels),
                "cluster_ratios": {str(c): r for c, r in sorted(session.cluster_ratios.items())},
                "sample": {
                    str(c): [
                        {"tweet_id": t.tweet_id, "cluster_id": t.cluster_id, "text": t.text}
                        for t in tweets
                    ]
                    for c, tweets in session.sample.items()
                },
                "config_hash": config_hash,
            }
            self._append(session_id, event)
            return session

    def load(self, session_id: str) -> AnnotationSession:
        path = self.path(session_id)
        if not path.exists():
            raise SessionError(f"no such session {session_id!r}")
        session: AnnotationSession | None = None
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                event = json.loads(line)
                session = self._apply(session, event)
        if session is None:
            raise SessionError(f"session log {path} has no create event")
        return session

    def append(self, session: AnnotationSession, event: dict) -> None:
        """Apply an event to the live session, then persist it. A rejected
        event (contract violation) is never written to the log."""
        with self.lock(session.session_id):
            stamped = dict(event, ts=_now_iso())
            self._apply(session, stamped)
            self._append(session.session_id, stamped)

    def _append(self, session_id: str, event: dict) -> None:
        with open(self.path(session_id), "a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, sort_keys=True, ensure_ascii=False) + "\n")

    @staticmethod
    def _apply(session: AnnotationSession | None, event: dict) -> AnnotationSession:
        kind = event.get("event")
        if kind == "create":
            sample = {
                int(c): [SampledTweet(t["tweet_id"], t["cluster_id"], t["text"]) for t in tweets]
                for c, tweets in event["sample"].items()
            }
            return AnnotationSession(
                session_id=event["session_id"],
                sample=sample,
                annotators=event["annotators"],
                label_set=LabelSet(tuple(event["labels"])),
                cluster_ratios={int(c): r for c, r in event["cluster_ratios"].items()},
            )
        if session is None:
            raise SessionError("event log does not start with a create event")
        if kind == "label":
            session.submit_label(event["annotator"], event["tweet_id"], event["label"])
        elif kind == "begin_adjudication":
            session.begin_adjudication()
        elif kind == "adjudicate":
            session.adjudicate(event["tweet_id"], event["label"])
        else:
            raise SessionError(f"unknown event type {kind!r}")
        return session
