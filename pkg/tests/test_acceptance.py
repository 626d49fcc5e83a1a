"""Acceptance suite: one test per release criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines and timings.
"""
import itertools
import json
import math
import random
import time

import numpy as np
import pytest
from scipy.stats import chisquare

from tweetkit.annotate import DEFAULT_LABELS, LabelSet, SampledTweet, cohen_kappa
from tweetkit.cli import main
from tweetkit.cluster import MiniBatchKMeans, TfidfEncoder, elbow_select
from tweetkit.ingest import TweetKind, build_manifest, dedupe, filter_corpus, load_case_counts, parse_tweet_stream
from tweetkit.lda import GibbsLda, _sweep_kernel, build_corpus, conditional_topic_probs, fit_dirichlet_alpha, topic_prevalence_report
from tweetkit.serialize import read_csv_rows, read_json
from tweetkit.textnorm import NormalizationConfig, normalize_text, tokenize
from tweetkit.timeseries import AlignedPair, pearson

from synth import HASHTAGS, STOPWORDS, THEMES, make_archive, write_config, write_support_files
from test_lda import hand_model, make_synthetic


def ok(name):
    print(f"ACCEPTANCE {name}: PASS")


def test_lda_micro_oracle_full_conditional():
    """Sampled full-conditional frequencies match the closed form (chi-square)."""
    started = time.monotonic()
    # two docs, V=2, K=2: doc0 = [w0, w1], doc1 = [w1]; probe is doc0's w1 token.
    # Excluding the probe: n_dk[0] = (1, 0); n_kw[:,1] = (0, 1); n_k = (1, 1).
    doc_of = np.array([0, 0, 1], dtype=np.int64)
    word_of = np.array([0, 1, 1], dtype=np.int64)
    z = np.array([0, 0, 1], dtype=np.int64)
    n_dk = np.zeros((2, 2), np.int64)
    n_kw = np.zeros((2, 2), np.int64)
    n_k = np.zeros(2, np.int64)
    np.add.at(n_dk, (doc_of, z), 1)
    np.add.at(n_kw, (z, word_of), 1)
    np.add.at(n_k, z, 1)
    alpha = np.array([0.5, 0.5])
    beta, vocab = 0.1, 2

    expected = conditional_topic_probs([1, 0], [0, 1], [1, 1], alpha, beta, vocab)
    assert expected == pytest.approx((0.2143, 0.7857), abs=1e-4)

    sweep = _sweep_kernel()
    rng = np.random.default_rng(99)
    n_draws = 100_000
    uniforms = rng.random(n_draws)
    u = np.empty(3)
    scratch = np.empty(2)
    counts = np.zeros(2, dtype=np.int64)
    for i in range(n_draws):
        u[1] = uniforms[i]
        sweep(doc_of, word_of, z, n_dk, n_kw, n_k, alpha, beta, vocab * beta, u, scratch, 1, 2)
        counts[z[1]] += 1
    elapsed = time.monotonic() - started
    result = chisquare(counts, f_exp=expected * n_draws)
    assert result.pvalue > 0.001, f"chi-square p={result.pvalue}"
    assert elapsed < 10.0, f"took {elapsed:.1f}s"
    ok(f"lda-micro-oracle (p={result.pvalue:.3f}, {elapsed:.1f}s)")


def test_lda_synthetic_recovery_with_invariants():
    """Disjoint-vocabulary recovery >= 95% with counts checked every iteration."""
    started = time.monotonic()
    docs = make_synthetic(n_docs=200, doc_len=20, seed=7)
    dictionary, corpus = build_corpus(docs)
    model = GibbsLda(n_topics=2, alpha0=0.5, beta=0.01, iterations=200, burn_in=50,
                     optimize_interval=10, seed=3, validate_counts=True).fit(corpus, dictionary)
    truth = np.array([0 if dictionary.id_to_token[w].startswith("a") else 1
                      for w in model.word_of_])
    agreement = (model.z_ == truth).mean()
    agreement = max(agreement, 1 - agreement)  # up to topic permutation
    elapsed = time.monotonic() - started
    assert agreement >= 0.95, f"agreement {agreement:.3f}"
    assert elapsed < 60.0, f"took {elapsed:.1f}s"
    ok(f"lda-synthetic-recovery ({agreement:.1%}, {elapsed:.1f}s)")


def test_determinism_byte_identical_artifacts(tmp_path):
    """Two lda-train and cluster runs with one config produce identical bytes."""
    archive = make_archive(tmp_path / "archive.ndjson", n_tweets=150, seed=5)
    hashtags, stopwords, _p, _f = write_support_files(tmp_path)
    out = tmp_path / "out"
    cfg = write_config(tmp_path, out, archive, hashtags, stopwords,
                       lda={"n_topics": 5, "iterations": 25, "seed": 13},
                       cluster={"candidate_ks": [2, 3, 4, 5], "seed": 17})
    names = ("lda_model.bin", "cluster_model.bin", "assignments.csv", "elbow.csv",
             "topics_top_3.csv", "topics_bottom_3.csv")
    snapshots = []
    for _ in range(2):
        for command in ("ingest", "preprocess", "lda-train", "cluster"):
            assert main(["--config", str(cfg), command]) == 0
        assert main(["--config", str(cfg), "lda-report", "--top", "3", "--bottom", "3"]) == 0
        snapshots.append({n: (out / n).read_bytes() for n in names})
    assert snapshots[0] == snapshots[1]
    ok("determinism-byte-identical")


def test_prevalence_report_exact_and_partition():
    """4-doc model percents are exactly (.50, .25, .25); top/bottom 25 partition K=50."""
    model = hand_model([[5, 0, 0], [4, 1, 0], [0, 5, 0], [1, 0, 4]], alpha=[0.1, 0.1, 0.1])
    report = topic_prevalence_report(model, order="descending", count=3)
    assert [s.percent for s in report] == [0.50, 0.25, 0.25]

    docs = make_synthetic(n_docs=120, doc_len=8, seed=13)
    dictionary, corpus = build_corpus(docs)
    big = GibbsLda(n_topics=50, iterations=15, seed=9).fit(corpus, dictionary)
    top = {s.topic_id for s in topic_prevalence_report(big, "descending", 25)}
    bottom = {s.topic_id for s in topic_prevalence_report(big, "ascending", 25)}
    assert len(top) == len(bottom) == 25
    assert top.isdisjoint(bottom) and top | bottom == set(range(50))
    ok("prevalence-report")


def test_prior_optimization_fixtures():
    """Symmetric counts stay symmetric to 1e-10; concentrated counts raise alpha_0."""
    symmetric = fit_dirichlet_alpha(np.array([[3, 3], [3, 3], [3, 3]]), np.array([0.7, 0.7]))
    assert abs(symmetric[0] - symmetric[1]) < 1e-10

    concentrated = fit_dirichlet_alpha(np.array([[8, 1, 1], [9, 0, 1], [7, 2, 1]]),
                                       np.array([0.5, 0.5, 0.5]))
    assert concentrated[0] > concentrated[1] and concentrated[0] > concentrated[2]
    ok("prior-optimization")


def test_clustering_fixtures():
    """Exact 1-D inertia; blob elbow within +-1 of truth; closed-form idf."""
    points = np.array([[0.0], [1.0], [10.0], [11.0]])
    best = min(
        sum(((np.array([points[i][0] for i in range(4) if assign[i] == c])
              - np.mean([points[i][0] for i in range(4) if assign[i] == c])) ** 2).sum()
            for c in set(assign))
        for assign in itertools.product(range(2), repeat=4) if len(set(assign)) == 2
    )
    assert best == 1.0  # brute-force oracle over all 2-partitions
    model = MiniBatchKMeans(n_clusters=2, seed=0).fit(points)
    assert model.inertia_ == 1.0

    rng = np.random.default_rng(123)
    centers = np.array([[40 * i, 40 * j] for i in range(4) for j in range(2)], dtype=float)
    blobs = np.vstack([c + rng.normal(0, 1.0, size=(60, 2)) for c in centers])
    curve = elbow_select(blobs, list(range(2, 15)), seed=3)
    assert curve.chosen_k in (7, 8, 9), f"chose {curve.chosen_k}"

    encoder = TfidfEncoder().fit([["a", "b"], ["b", "c"]])
    assert abs(encoder.idf_[encoder.vocabulary_["b"]] - 1.0) < 1e-12
    assert abs(encoder.idf_[encoder.vocabulary_["a"]] - (math.log(3 / 2) + 1)) < 1e-12
    ok(f"clustering (elbow k={curve.chosen_k})")


def test_kappa_fixtures():
    """Hand confusion matrix exact, perfect agreement, swap symmetry x100."""
    pairs = ([("a", "a")] * 20 + [("a", "b")] * 5 + [("b", "a")] * 10 + [("b", "b")] * 15)
    result = cohen_kappa(pairs, ("a", "b"))
    assert result.kappa == 0.4
    assert result.confusion == [[20, 5], [10, 15]]

    perfect = cohen_kappa([("a", "a"), ("b", "b"), ("a", "a")], ("a", "b"))
    assert perfect.kappa == 1.0

    rng = random.Random(12)
    for _ in range(100):
        fixture = [(rng.choice("abc"), rng.choice("abc")) for _ in range(rng.randint(2, 40))]
        forward = cohen_kappa(fixture, "abc")
        swapped = cohen_kappa([(b, a) for a, b in fixture], "abc")
        assert forward.kappa == swapped.kappa
    ok("kappa")


def test_weighted_estimate_fixture():
    """0.6/0.4 cluster weights with 0.5/0.25 satire ratios -> share 0.40 exactly."""
    from tweetkit.annotate import AnnotationSession

    sample = {
        0: [SampledTweet(f"c0-{i}", 0, "") for i in range(2)],
        1: [SampledTweet(f"c1-{i}", 1, "") for i in range(4)],
    }
    session = AnnotationSession("est", sample, ("a", "b"), LabelSet(), {0: 0.6, 1: 0.4})
    satire = {"c0-0", "c1-0"}  # half of cluster 0, quarter of cluster 1
    for tweets in sample.values():
        for tweet in tweets:
            label = "satire/jokes" if tweet.tweet_id in satire else "news/quotes"
            session.submit_label("a", tweet.tweet_id, label)
            session.submit_label("b", tweet.tweet_id, label)
    session.disagreement_queue()
    estimate = session.weighted_category_estimate()
    assert estimate.per_label_share["satire/jokes"] == 0.4
    assert abs(sum(estimate.per_label_share.values()) - 1.0) < 1e-12
    ok("weighted-estimate")


def test_ingest_fixture_and_normalization_fuzz(mixed_archive, hashtag_file):
    """Hand-counted manifest on the mixed fixture; idempotence on 1,000 fuzz tweets."""
    from tweetkit.ingest import load_hashtag_list

    with open(mixed_archive, "rb") as fh:
        records, issues = parse_tweet_stream(fh)
    deduped, dropped = dedupe(records)
    kept = filter_corpus(deduped, load_hashtag_list(hashtag_file), "fa", {TweetKind.ORIGINAL})
    manifest = build_manifest(kept, dropped, parse_errors=len(issues), input_records=len(records))
    assert manifest.to_dict() == {
        "tweet_count_by_kind": {"original": 4, "quote": 0, "reply": 0, "retweet": 0},
        "date_range": ["2020-03-14", "2020-03-14"],
        "unique_tweet_count": 4,
        "duplicate_dropped": 1,
        "parse_errors": 1,
        "input_records": 10,
    }

    cfg = NormalizationConfig()
    rng = random.Random(2020)
    pieces = ([w for theme in THEMES for w in theme] + STOPWORDS
              + ["#" + h for h in HASHTAGS]
              + ["https://t.co/xyz", "www.site.ir/a", "@someone", "\U0001F637", "❤️",
                 "۱۲۳", "123", "!!?", "،", "RT"])
    for _ in range(1000):
        raw = " ".join(rng.choices(pieces, k=rng.randint(1, 18)))
        once = normalize_text(raw, cfg)
        assert normalize_text(once, cfg) == once
        assert all(tok for tok in tokenize(once))
    ok("ingest-and-normalization")


def test_timeseries_fixtures(tmp_path):
    """Exact Pearson values; ministry beats fallback on conflicting dates."""
    from datetime import date

    def mkpair(xs, ys):
        return AlignedPair(("x", "y"), [date(2020, 3, 13 + i) for i in range(len(xs))],
                           list(map(float, xs)), list(map(float, ys)))

    assert pearson(mkpair([1, 2, 3, 4], [1, 2, 3, 4])).pearson_r == 1.0
    assert pearson(mkpair([1, 2, 3, 4], [-1, -2, -3, -4])).pearson_r == -1.0
    assert abs(pearson(mkpair([1, 2, 3, 4], [2, 1, 4, 3])).pearson_r - 0.6) < 1e-12

    primary = tmp_path / "ministry.csv"
    primary.write_text("date,confirmed,deaths,recovered\n2020-03-14,100,5,10\n", encoding="utf-8")
    fallback = tmp_path / "fallback.csv"
    fallback.write_text("date,confirmed,deaths,recovered\n2020-03-14,999,9,99\n"
                        "2020-03-15,130,6,12\n", encoding="utf-8")
    rows, _errors = load_case_counts(primary, fallback)
    assert [(r.date.isoformat(), r.confirmed, r.source) for r in rows] == [
        ("2020-03-14", 100, "ministry"), ("2020-03-15", 130, "fallback")]
    ok("timeseries")


def test_end_to_end_smoke(tmp_path):
    """2,000-tweet archive through the whole pipeline in under five minutes."""
    started = time.monotonic()
    archive = make_archive(tmp_path / "archive.ndjson", n_tweets=2000, seed=1,
                           malformed_lines=2, duplicate_ids=3)
    hashtags, stopwords, primary, fallback = write_support_files(tmp_path)
    out = tmp_path / "out"
    cfg_path = write_config(
        tmp_path, out, archive, hashtags, stopwords, primary, fallback,
        lda={"n_topics": 10, "iterations": 150, "burn_in": 30, "optimize_interval": 10, "seed": 7},
        cluster={"candidate_ks": list(range(2, 13)), "per_cluster_n": 30, "seed": 11},
    )

    for command in ("ingest", "preprocess", "lda-train", "cluster", "sample"):
        assert main(["--config", str(cfg_path), command]) == 0, command
    assert main(["--config", str(cfg_path), "lda-report", "--top", "5", "--bottom", "5"]) == 0
    assert main(["--config", str(cfg_path), "timeseries"]) == 0

    manifest = read_json(out / "manifest.json")
    assert manifest["parse_errors"] == 2
    assert manifest["duplicate_dropped"] == 3
    assert manifest["unique_tweet_count"] == sum(manifest["tweet_count_by_kind"].values())

    # scripted two-annotator pass over the sampled tweets, no UI involved
    from tweetkit.cli import _ensure_session, _session_store
    from tweetkit.config import load_config
    from tweetkit.server import AnnotationService

    cfg = load_config(str(cfg_path))
    store = _session_store(cfg)
    session = _ensure_session(cfg, store)
    service = AnnotationService(store)
    service.register(session)
    sid = session.session_id

    tweet_ids = session.tweet_ids
    assert tweet_ids, "sample is empty"
    for index, tweet_id in enumerate(tweet_ids):
        cluster_id = session.tweet(tweet_id).cluster_id
        label_a = DEFAULT_LABELS[cluster_id % len(DEFAULT_LABELS)]
        label_b = label_a if index % 5 else DEFAULT_LABELS[(cluster_id + 1) % len(DEFAULT_LABELS)]
        service.submit_label(sid, "ann-a", tweet_id, label_a)
        service.submit_label(sid, "ann-b", tweet_id, label_b)

    kappa_payload = service.kappa(sid)
    assert -1.0 <= kappa_payload["kappa"] <= 1.0
    assert kappa_payload["n_items"] == len(tweet_ids)

    queue = service.disagreements(sid)["queue"]
    assert len(queue) == sum(1 for i in range(len(tweet_ids)) if i % 5 == 0)
    for item in queue:
        service.adjudicate(sid, item["tweet_id"], item["labels"][0])
    assert service.session(sid).status == "closed"

    assert main(["--config", str(cfg_path), "kappa"]) == 0
    assert main(["--config", str(cfg_path), "estimate"]) == 0

    cli_kappa = read_json(out / "kappa.json")
    assert cli_kappa["kappa"] == kappa_payload["kappa"]
    _, estimate_rows, _ = read_csv_rows(out / "estimate.csv")
    shares = {label: float(value) for label, value in estimate_rows}
    assert abs(sum(shares.values()) - 1.0) < 1e-12

    _, label_rows, _ = read_csv_rows(out / "labels.csv")
    assert len(label_rows) == len(tweet_ids)
    assert all(row[4] for row in label_rows)  # every sampled tweet adjudicated

    elapsed = time.monotonic() - started
    assert elapsed < 300.0, f"took {elapsed:.0f}s"
    ok(f"end-to-end-smoke ({elapsed:.0f}s, {len(tweet_ids)} sampled)")
