"""Topic modeling by collapsed Gibbs sampling with asymmetric prior refitting.

The sampler resamples every token's topic from the closed-form conditional

    p(z_i = k | z_-i, w) ~ (n_dk + alpha_k) * (n_kw + beta) / (n_k + V*beta)

and periodically refits the document-topic Dirichlet prior alpha with Minka's
fixed-point update. Training is single-threaded and bit-reproducible for a
given (corpus, hyperparameters, seed).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import digamma

from .base import ConfigurationError, Estimator, check_positive
from .serialize import load_model_file, save_model_file

log = logging.getLogger(__name__)


@dataclass
class Dictionary:
    token_to_id: dict[str, int]
    id_to_token: list[str]
    doc_freq: np.ndarray  # per word id, number of docs containing the word

    def __len__(self) -> int:
        return len(self.id_to_token)


@dataclass
class BowCorpus:
    doc_ids: list[str]
    docs: list[list[tuple[int, int]]]  # per doc: (word_id, count), word_id ascending
    total_tokens: int
    pruned_empty_ids: list[str]

    @property
    def n_docs(self) -> int:
        return len(self.docs)


@dataclass
class TopicSummary:
    topic_id: int
    top_words: list[tuple[str, float]]
    percent: float
    nonzero_word_count: int
    starred: bool


def build_corpus(
    docs: Sequence,
    min_doc_freq: int = 1,
    max_doc_fraction: float = 1.0,
) -> tuple[Dictionary, BowCorpus]:
    """Build a dense-id dictionary and bag-of-words corpus.

    Words appearing in fewer than min_doc_freq documents or in more than
    max_doc_fraction of documents are pruned. Documents emptied by pruning
    (or empty to begin with) are excluded from the corpus and reported via
    BowCorpus.pruned_empty_ids.
    """
    pairs = []
    for i, doc in enumerate(docs):
        doc_id = getattr(doc, "tweet_id", str(i))
        pairs.append((doc_id, list(getattr(doc, "tokens", doc))))

    df: dict[str, int] = {}
    for _, tokens in pairs:
        for tok in set(tokens):
            df[tok] = df.get(tok, 0) + 1
    n_docs_in = sum(1 for _, tokens in pairs if tokens)
    max_df = max_doc_fraction * n_docs_in
    vocab = sorted(t for t, c in df.items() if c >= min_doc_freq and c <= max_df)
    token_to_id = {t: i for i, t in enumerate(vocab)}

    doc_ids, bows, pruned = [], [], []
    total = 0
    for doc_id, tokens in pairs:
        counts: dict[int, int] = {}
        for tok in tokens:
            wid = token_to_id.get(tok)
            if wid is not None:
                counts[wid] = counts.get(wid, 0) + 1
        if not counts:
            pruned.append(doc_id)
            continue
        bow = sorted(counts.items())
        doc_ids.append(doc_id)
        bows.append(bow)
        total += sum(c for _, c in bow)

    if not bows:
        raise ConfigurationError("corpus is empty after vocabulary pruning")
    doc_freq = np.array([df[t] for t in vocab], dtype=np.int64)
    dictionary = Dictionary(token_to_id=token_to_id, id_to_token=vocab, doc_freq=doc_freq)
    corpus = BowCorpus(doc_ids=doc_ids, docs=bows, total_tokens=total, pruned_empty_ids=pruned)
    return dictionary, corpus


def _gibbs_sweep_py(doc_of, word_of, z, n_dk, n_kw, n_k, alpha, beta, vbeta, uniforms, p, start, stop):
    """Resample tokens [start, stop). In-place; njit-compatible."""
    n_topics = n_k.shape[0]
    for i in range(start, stop):
        d = doc_of[i]
        w = word_of[i]
        k = z[i]
        n_dk[d, k] -= 1
        n_kw[k, w] -= 1
        n_k[k] -= 1
        total = 0.0
        for kk in range(n_topics):
            val = (n_dk[d, kk] + alpha[kk]) * (n_kw[kk, w] + beta) / (n_k[kk] + vbeta)
            p[kk] = val
            total += val
        u = uniforms[i] * total
        acc = 0.0
        new_k = n_topics - 1
        for kk in range(n_topics):
            acc += p[kk]
            if u < acc:
                new_k = kk
                break
        z[i] = new_k
        n_dk[d, new_k] += 1
        n_kw[new_k, w] += 1
        n_k[new_k] += 1


_SWEEP = None


def _sweep_kernel():
    global _SWEEP
    if _SWEEP is None:
        try:
            from numba import njit

            _SWEEP = njit(cache=True)(_gibbs_sweep_py)
        except ImportError:  # pragma: no cover - exercised only without numba
            _SWEEP = _gibbs_sweep_py
    return _SWEEP


def conditional_topic_probs(n_dk_d, n_kw_w, n_k, alpha, beta, vocab_size) -> np.ndarray:
    """Closed-form full conditional for one held-out token (counts exclude it)."""
    p = (np.asarray(n_dk_d) + alpha) * (np.asarray(n_kw_w) + beta) / (np.asarray(n_k) + vocab_size * beta)
    return p / p.sum()


def fit_dirichlet_alpha(
    n_dk: np.ndarray,
    alpha: np.ndarray,
    tol: float = 1e-5,
    max_steps: int = 1000,
    min_alpha: float = 1e-10,
) -> np.ndarray:
    """Minka fixed-point refit of an asymmetric Dirichlet prior from count rows.

    Iterates  alpha_k <- alpha_k * (sum_d psi(n_dk + alpha_k) - D psi(alpha_k))
                                  / (sum_d psi(len_d + sum(alpha)) - D psi(sum(alpha)))
    until the max relative component change drops below tol. A non-finite
    intermediate aborts the refit and returns the input unchanged.
    """
    n_dk = np.asarray(n_dk, dtype=np.float64)
    n_docs = n_dk.shape[0]
    lengths = n_dk.sum(axis=1)
    current = np.array(alpha, dtype=np.float64, copy=True)
    original = current.copy()
    for _ in range(max_steps):
        num = digamma(n_dk + current).sum(axis=0) - n_docs * digamma(current)
        den = digamma(lengths + current.sum()).sum() - n_docs * digamma(current.sum())
        updated = np.maximum(current * num / den, min_alpha)
        if not np.all(np.isfinite(updated)):
            log.warning("alpha refit produced non-finite values; keeping previous alpha")
            return original
        rel = np.max(np.abs(updated - current) / np.maximum(current, min_alpha))
        current = updated
        if rel < tol:
            break
    return current


class GibbsLda(Estimator):
    """Collapsed-Gibbs LDA estimator.

    Parameters
    ----------
    n_topics : number of topics K.
    alpha0 : initial symmetric document-topic prior; None means 5/K.
    beta : symmetric topic-word prior.
    iterations : full corpus sweeps.
    burn_in : sweeps before the first alpha refit.
    optimize_interval : refit alpha every this many sweeps after burn-in
        (0 disables refitting).
    seed : RNG seed (PCG64); identical inputs and seed give bit-identical models.
    validate_counts : re-derive and check all count invariants after every sweep.
    """

    def __init__(self, n_topics=50, alpha0=None, beta=0.01, iterations=1000,
                 burn_in=100, optimize_interval=10, seed=0, validate_counts=False):
        self.n_topics = n_topics
        self.alpha0 = alpha0
        self.beta = beta
        self.iterations = iterations
        self.burn_in = burn_in
        self.optimize_interval = optimize_interval
        self.seed = seed
        self.validate_counts = validate_counts

    # -- training ---------------------------------------------------------

    def fit(self, corpus: BowCorpus, dictionary: Dictionary | None = None) -> "GibbsLda":
        if self.n_topics < 1:
            raise ConfigurationError(f"n_topics must be >= 1, got {self.n_topics}")
        if self.iterations < 1:
            raise ConfigurationError(f"iterations must be >= 1, got {self.iterations}")
        check_positive(self.beta, "beta")
        alpha0 = 5.0 / self.n_topics if self.alpha0 is None else self.alpha0
        check_positive(alpha0, "alpha0")
        if corpus.n_docs == 0:
            raise ConfigurationError("corpus has no documents")

        n_topics = self.n_topics
        doc_of, word_of = _flatten(corpus)
        n_tokens = doc_of.shape[0]
        vocab_size = int(word_of.max()) + 1 if n_tokens else 0
        if dictionary is not None:
            vocab_size = max(vocab_size, len(dictionary))

        rng = np.random.default_rng(self.seed)
        z = rng.integers(0, n_topics, n_tokens, dtype=np.int64)
        n_dk = np.zeros((corpus.n_docs, n_topics), dtype=np.int64)
        n_kw = np.zeros((n_topics, vocab_size), dtype=np.int64)
        n_k = np.zeros(n_topics, dtype=np.int64)
        np.add.at(n_dk, (doc_of, z), 1)
        np.add.at(n_kw, (z, word_of), 1)
        np.add.at(n_k, z, 1)

        alpha = np.full(n_topics, alpha0, dtype=np.float64)
        scratch = np.empty(n_topics, dtype=np.float64)
        sweep = _sweep_kernel()
        for it in range(1, self.iterations + 1):
            uniforms = rng.random(n_tokens)
            sweep(doc_of, word_of, z, n_dk, n_kw, n_k, alpha, float(self.beta),
                  float(vocab_size * self.beta), uniforms, scratch, 0, n_tokens)
            if self.validate_counts:
                _check_counts(doc_of, word_of, z, n_dk, n_kw, n_k)
            if (self.optimize_interval > 0 and it > self.burn_in
                    and (it - self.burn_in) % self.optimize_interval == 0):
                alpha = fit_dirichlet_alpha(n_dk, alpha)

        self.alpha_ = alpha
        self.n_dk_ = n_dk
        self.n_kw_ = n_kw
        self.n_k_ = n_k
        self.z_ = z
        self.doc_of_ = doc_of
        self.word_of_ = word_of
        self.doc_ids_ = list(corpus.doc_ids)
        self.dictionary_ = dictionary
        self.vocab_size_ = vocab_size
        self.iterations_run_ = self.iterations
        return self

    # -- queries ----------------------------------------------------------

    def doc_topic_dist(self, doc_index: int) -> np.ndarray:
        """theta_d = (n_dk + alpha) / (len_d + sum(alpha)); sums to 1."""
        self._check_fitted("n_dk_")
        row = self.n_dk_[doc_index]
        return (row + self.alpha_) / (row.sum() + self.alpha_.sum())

    def dominant_topic(self, doc_index: int) -> int:
        """Argmax of the document's topic distribution; ties -> lowest topic id."""
        return int(np.argmax(self.doc_topic_dist(doc_index)))

    def dominant_topics(self) -> np.ndarray:
        self._check_fitted("n_dk_")
        # same argmax as doc_topic_dist: the per-row denominator is constant
        return np.argmax(self.n_dk_ + self.alpha_, axis=1)

    def topic_word_dist(self, topic_id: int) -> np.ndarray:
        self._check_fitted("n_kw_")
        return (self.n_kw_[topic_id] + self.beta) / (self.n_k_[topic_id] + self.vocab_size_ * self.beta)

    def word_association_counts(self) -> dict[int, int]:
        """Per topic, how many vocabulary words have a non-zero raw count."""
        self._check_fitted("n_kw_")
        return {k: int((self.n_kw_[k] > 0).sum()) for k in range(self.n_topics)}

    # -- persistence ------------------------------------------------------

    def save(self, path, config_hash: str = "") -> None:
        self._check_fitted("n_dk_")
        meta = {
            "format": "tweetkit-lda/1",
            "n_topics": self.n_topics,
            "beta": self.beta,
            "seed": self.seed,
            "iterations_run": self.iterations_run_,
            "burn_in": self.burn_in,
            "optimize_interval": self.optimize_interval,
            "doc_ids": self.doc_ids_,
            "vocabulary": self.dictionary_.id_to_token if self.dictionary_ else [],
            "config_hash": config_hash,
        }
        arrays = {
            "alpha": self.alpha_,
            "n_dk": self.n_dk_,
            "n_kw": self.n_kw_,
            "doc_freq": self.dictionary_.doc_freq if self.dictionary_ else np.zeros(0, np.int64),
        }
        save_model_file(path, meta, arrays)

    @classmethod
    def load(cls, path) -> "GibbsLda":
        meta, arrays = load_model_file(path)
        if meta.get("format") != "tweetkit-lda/1":
            raise ValueError(f"{path}: not a tweetkit LDA model file")
        model = cls(
            n_topics=meta["n_topics"], beta=meta["beta"], seed=meta["seed"],
            burn_in=meta["burn_in"], optimize_interval=meta["optimize_interval"],
        )
        model.alpha_ = arrays["alpha"]
        model.n_dk_ = arrays["n_dk"]
        model.n_kw_ = arrays["n_kw"]
        model.n_k_ = arrays["n_kw"].sum(axis=1)
        model.doc_ids_ = list(meta["doc_ids"])
        vocab = list(meta["vocabulary"])
        model.dictionary_ = Dictionary(
            token_to_id={t: i for i, t in enumerate(vocab)},
            id_to_token=vocab,
            doc_freq=arrays["doc_freq"],
        )
        model.vocab_size_ = arrays["n_kw"].shape[1]
        model.iterations_run_ = meta["iterations_run"]
        return model


def _flatten(corpus: BowCorpus) -> tuple[np.ndarray, np.ndarray]:
    doc_of = np.empty(corpus.total_tokens, dtype=np.int64)
    word_of = np.empty(corpus.total_tokens, dtype=np.int64)
    pos = 0
    for d, bow in enumerate(corpus.docs):
        for wid, count in bow:
            doc_of[pos:pos + count] = d
            word_of[pos:pos + count] = wid
            pos += count
    return doc_of, word_of


def _check_counts(doc_of, word_of, z, n_dk, n_kw, n_k) -> None:
    n_docs, n_topics = n_dk.shape
    ref_dk = np.zeros_like(n_dk)
    ref_kw = np.zeros_like(n_kw)
    np.add.at(ref_dk, (doc_of, z), 1)
    np.add.at(ref_kw, (z, word_of), 1)
    if not np.array_equal(ref_dk, n_dk):
        raise AssertionError("document-topic counts diverged from assignments")
    if not np.array_equal(ref_kw, n_kw):
        raise AssertionError("topic-word counts diverged from assignments")
    if not np.array_equal(n_kw.sum(axis=1), n_k):
        raise AssertionError("topic totals inconsistent with topic-word counts")
    if int(n_k.sum()) != doc_of.shape[0]:
        raise AssertionError("topic totals do not sum to the token count")
    if np.any(n_dk < 0) or np.any(n_kw < 0):
        raise AssertionError("negative counts")


def topic_word_overlap(
    model_a: GibbsLda,
    model_b: GibbsLda,
    top_n: int = 10,
) -> list[tuple[int, int, float]]:
    """Jaccard overlap of top-word sets between every topic pair of two models.

    Supports the manual K-selection workflow: train the candidate models,
    then eyeball which topics duplicate each other. Pairs with zero overlap
    are omitted; rows are sorted by descending overlap.
    """
    model_a._check_fitted("n_kw_")
    model_b._check_fitted("n_kw_")

    def top_sets(model):
        sets = []
        for k in range(model.n_topics):
            phi = model.topic_word_dist(k)
            ids = np.argsort(-phi, kind="stable")[:top_n]
            tokens = (
                {model.dictionary_.id_to_token[w] for w in ids}
                if model.dictionary_ else {str(w) for w in ids}
            )
            sets.append(tokens)
        return sets

    sets_a, sets_b = top_sets(model_a), top_sets(model_b)
    rows = []
    for ka, words_a in enumerate(sets_a):
        for kb, words_b in enumerate(sets_b):
            union = len(words_a | words_b)
            jaccard = len(words_a & words_b) / union if union else 0.0
            if jaccard > 0:
                rows.append((ka, kb, jaccard))
    rows.sort(key=lambda row: (-row[2], row[0], row[1]))
    return rows


def topic_prevalence_report(
    model: GibbsLda,
    order: str = "descending",
    count: int = 25,
    top_words: int = 10,
    starred_topics: int = 10,
) -> list[TopicSummary]:
    """Summarize topics by the share of documents in which each is dominant.

    percent is group size / number of documents; summaries carry the top
    words by smoothed topic-word probability and the raw non-zero word count.
    The starred_topics topics with the most non-zero word associations are
    starred. count greater than K returns all K topics.
    """
    if order not in ("descending", "ascending"):
        raise ConfigurationError(f"order must be descending|ascending, got {order!r}")
    model._check_fitted("n_dk_")
    n_topics = model.n_topics
    dom = model.dominant_topics()
    group = np.bincount(dom, minlength=n_topics)
    percent = group / model.n_dk_.shape[0]

    nonzero = model.word_association_counts()
    by_assoc = sorted(range(n_topics), key=lambda k: (-nonzero[k], k))
    starred = set(by_assoc[:starred_topics])

    # one total order (percent desc, topic id asc); ascending is its exact
    # reverse so top-N and bottom-(K-N) always partition the topics
    ranked = sorted(range(n_topics), key=lambda k: (-percent[k], k))
    if order == "ascending":
        ranked = ranked[::-1]
    chosen = ranked[: min(count, n_topics)]

    dictionary = model.dictionary_
    summaries = []
    for k in chosen:
        phi = model.topic_word_dist(k)
        top_ids = np.argsort(-phi, kind="stable")[:top_words]
        words = [
            (dictionary.id_to_token[w] if dictionary else str(w), float(phi[w]))
            for w in top_ids
        ]
        summaries.append(TopicSummary(
            topic_id=k,
            top_words=words,
            percent=float(percent[k]),
            nonzero_word_count=nonzero[k],
            starred=k in starred,
        ))
    return summaries
