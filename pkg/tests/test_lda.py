import numpy as np
import pytest

from tweetkit.base import ConfigurationError
from tweetkit.lda import (
    BowCorpus,
    GibbsLda,
    build_corpus,
    conditional_topic_probs,
    fit_dirichlet_alpha,
    topic_prevalence_report,
    topic_word_overlap,
)


def make_synthetic(n_docs=200, doc_len=20, seed=7):
    """Two topics over disjoint 10-word vocabularies; per-token truth is the
    word's vocabulary of origin."""
    rng = np.random.default_rng(seed)
    vocab = [[f"a{i}" for i in range(10)], [f"b{i}" for i in range(10)]]
    docs = []
    for _ in range(n_docs):
        theta = rng.dirichlet([0.5, 0.5])
        tokens = []
        for _ in range(doc_len):
            topic = int(rng.choice(2, p=theta))
            tokens.append(vocab[topic][int(rng.integers(0, 10))])
        docs.append(tokens)
    return docs


def hand_model(n_dk, alpha, beta=0.01, n_kw=None):
    """Assemble a fitted model directly from count matrices."""
    n_dk = np.asarray(n_dk, dtype=np.int64)
    n_topics = n_dk.shape[1]
    model = GibbsLda(n_topics=n_topics, beta=beta)
    model.alpha_ = np.asarray(alpha, dtype=np.float64)
    model.n_dk_ = n_dk
    if n_kw is None:
        n_kw = np.ones((n_topics, 4), dtype=np.int64)
    model.n_kw_ = np.asarray(n_kw, dtype=np.int64)
    model.n_k_ = model.n_kw_.sum(axis=1)
    model.vocab_size_ = model.n_kw_.shape[1]
    model.doc_ids_ = [str(i) for i in range(n_dk.shape[0])]
    model.dictionary_ = None
    model.iterations_run_ = 1
    return model


class TestBuildCorpus:
    def test_no_pruning(self):
        dic, corpus = build_corpus([["a", "b"], ["b", "c"]])
        assert len(dic) == 3
        assert corpus.n_docs == 2
        assert corpus.total_tokens == 4

    def test_min_doc_freq_prunes(self):
        # df: a=1, b=2, c=1 -> only b survives min_doc_freq=2
        dic, corpus = build_corpus([["a", "b"], ["b", "c"]], min_doc_freq=2)
        assert dic.id_to_token == ["b"]
        assert corpus.docs == [[(0, 1)], [(0, 1)]]

    def test_doc_of_only_pruned_words_is_excluded_and_reported(self):
        dic, corpus = build_corpus([["a", "b"], ["b"], ["c"]], min_doc_freq=2)
        assert corpus.n_docs == 2
        assert corpus.pruned_empty_ids == ["2"]

    def test_max_doc_fraction_prunes_common_words(self):
        dic, corpus = build_corpus([["a", "b"], ["a", "c"], ["a", "d"]], max_doc_fraction=0.5)
        assert "a" not in dic.token_to_id

    def test_empty_after_pruning_is_hard_error(self):
        with pytest.raises(ConfigurationError):
            build_corpus([["a"], ["b"]], min_doc_freq=3)

    def test_doc_freq_recorded(self):
        dic, _ = build_corpus([["a", "b"], ["b", "c"]])
        assert dic.doc_freq[dic.token_to_id["b"]] == 2


class TestConditional:
    def test_closed_form_matches_hand_case(self):
        # one other doc token on topic 0; V=2, beta=0.1, alpha=(.5,.5);
        # word w=1 with n_kw(excl)= (0,1), n_k(excl) = (1,1)
        probs = conditional_topic_probs([1, 0], [0, 1], [1, 1], np.array([0.5, 0.5]), 0.1, 2)
        assert probs == pytest.approx((0.2143, 0.7857), abs=1e-4)

    def test_single_topic_forces_assignment(self):
        dic, corpus = build_corpus([["a", "b"], ["a"]])
        model = GibbsLda(n_topics=1, iterations=1, seed=0).fit(corpus, dic)
        assert np.all(model.z_ == 0)
        assert model.n_dk_[:, 0].tolist() == [2, 1]


class TestTraining:
    def test_synthetic_recovery(self):
        docs = make_synthetic()
        dic, corpus = build_corpus(docs)
        model = GibbsLda(n_topics=2, alpha0=0.5, iterations=200, burn_in=50,
                         optimize_interval=10, seed=3, validate_counts=True).fit(corpus, dic)
        truth = np.array([0 if dic.id_to_token[w].startswith("a") else 1
                          for w in model.word_of_])
        agreement = (model.z_ == truth).mean()
        assert max(agreement, 1 - agreement) >= 0.95

    def test_determinism_bitwise(self):
        docs = make_synthetic(n_docs=30, doc_len=10)
        dic, corpus = build_corpus(docs)
        params = dict(n_topics=3, iterations=40, burn_in=10, optimize_interval=5, seed=11)
        a = GibbsLda(**params).fit(corpus, dic)
        b = GibbsLda(**params).fit(corpus, dic)
        assert np.array_equal(a.z_, b.z_)
        assert np.array_equal(a.n_dk_, b.n_dk_)
        assert np.array_equal(a.n_kw_, b.n_kw_)
        assert np.array_equal(a.alpha_, b.alpha_)

    def test_seed_changes_assignments(self):
        docs = make_synthetic(n_docs=30, doc_len=10)
        dic, corpus = build_corpus(docs)
        a = GibbsLda(n_topics=3, iterations=5, seed=1).fit(corpus, dic)
        b = GibbsLda(n_topics=3, iterations=5, seed=2).fit(corpus, dic)
        assert not np.array_equal(a.z_, b.z_)

    def test_count_invariants_after_training(self):
        docs = make_synthetic(n_docs=40, doc_len=12)
        dic, corpus = build_corpus(docs)
        model = GibbsLda(n_topics=4, iterations=30, seed=5).fit(corpus, dic)
        lengths = [sum(c for _w, c in bow) for bow in corpus.docs]
        assert model.n_dk_.sum(axis=1).tolist() == lengths
        assert np.array_equal(model.n_kw_.sum(axis=1), model.n_k_)
        assert model.n_k_.sum() == corpus.total_tokens

    def test_config_errors(self):
        dic, corpus = build_corpus([["a", "b"]])
        with pytest.raises(ConfigurationError):
            GibbsLda(n_topics=0).fit(corpus)
        with pytest.raises(ConfigurationError):
            GibbsLda(beta=0.0).fit(corpus)
        with pytest.raises(ConfigurationError):
            GibbsLda(alpha0=-1.0).fit(corpus)
        with pytest.raises(ConfigurationError):
            GibbsLda(iterations=0).fit(corpus)
        with pytest.raises(ConfigurationError):
            GibbsLda().fit(BowCorpus(doc_ids=[], docs=[], total_tokens=0, pruned_empty_ids=[]))


class TestAlphaRefit:
    def test_symmetric_counts_stay_symmetric(self):
        n_dk = np.array([[3, 3], [3, 3], [3, 3]])
        alpha = fit_dirichlet_alpha(n_dk, np.array([0.7, 0.7]))
        assert abs(alpha[0] - alpha[1]) < 1e-10

    def test_concentrated_counts_raise_alpha0(self):
        n_dk = np.array([[8, 1, 1], [9, 0, 1], [7, 2, 1]])
        alpha = fit_dirichlet_alpha(n_dk, np.array([0.5, 0.5, 0.5]))
        assert alpha[0] > alpha[1] and alpha[0] > alpha[2]

    def test_single_document_well_defined(self):
        alpha = fit_dirichlet_alpha(np.array([[4, 2]]), np.array([0.5, 0.5]))
        assert np.all(np.isfinite(alpha)) and np.all(alpha > 0)

    def test_zero_topic_clamped(self):
        alpha = fit_dirichlet_alpha(np.array([[5, 0], [5, 0]]), np.array([0.5, 0.5]))
        assert alpha[1] >= 1e-10


class TestQueries:
    def test_doc_topic_dist_formula(self):
        model = hand_model([[2, 0]], alpha=[0.5, 0.5])
        theta = model.doc_topic_dist(0)
        assert theta == pytest.approx([2.5 / 3, 0.5 / 3], abs=1e-15)
        assert abs(theta.sum() - 1.0) < 1e-12

    def test_single_topic_theta(self):
        model = hand_model([[3]], alpha=[0.5])
        assert model.doc_topic_dist(0).tolist() == [1.0]
        assert model.dominant_topic(0) == 0

    def test_dominant_topic_argmax_and_ties(self):
        model = hand_model([[1, 4, 2], [3, 3, 0]], alpha=[0.5, 0.5, 0.5])
        assert model.dominant_topic(0) == 1
        assert model.dominant_topic(1) == 0  # tie -> lowest topic id

    def test_dominant_invariant_to_positive_rescaling(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            theta = rng.random(5)
            scale = rng.uniform(0.1, 10)
            assert np.argmax(theta) == np.argmax(theta * scale)

    def test_phi_rows_sum_to_one(self):
        docs = make_synthetic(n_docs=20, doc_len=8)
        dic, corpus = build_corpus(docs)
        model = GibbsLda(n_topics=3, iterations=10, seed=2).fit(corpus, dic)
        for k in range(3):
            assert abs(model.topic_word_dist(k).sum() - 1.0) < 1e-12
        for d in range(corpus.n_docs):
            assert abs(model.doc_topic_dist(d).sum() - 1.0) < 1e-12


class TestAssociationCounts:
    def test_single_topic_counts_whole_vocabulary(self):
        dic, corpus = build_corpus([["a", "b"], ["c"]])
        model = GibbsLda(n_topics=1, iterations=1, seed=0).fit(corpus, dic)
        assert model.word_association_counts() == {0: 3}

    def test_unsampled_topic_has_zero(self):
        model = hand_model([[3, 0]], alpha=[0.5, 0.5],
                           n_kw=np.array([[2, 1], [0, 0]]))
        assert model.word_association_counts() == {0: 2, 1: 0}

    def test_disjoint_vocabulary_counts(self):
        docs = make_synthetic()
        dic, corpus = build_corpus(docs)
        model = GibbsLda(n_topics=2, alpha0=0.5, iterations=200, burn_in=50, seed=3).fit(corpus, dic)
        counts = sorted(model.word_association_counts().values())
        assert counts == [10, 10]


class TestPrevalenceReport:
    def test_four_doc_percents(self):
        # dominant topics [0, 0, 1, 2] -> 0.50 / 0.25 / 0.25
        n_dk = [[5, 0, 0], [4, 1, 0], [0, 5, 0], [1, 0, 4]]
        model = hand_model(n_dk, alpha=[0.1, 0.1, 0.1])
        report = topic_prevalence_report(model, order="descending", count=3)
        assert [s.percent for s in report] == [0.50, 0.25, 0.25]
        assert [s.topic_id for s in report] == [0, 1, 2]

    def test_percents_partition_unity(self):
        docs = make_synthetic(n_docs=50, doc_len=6)
        dic, corpus = build_corpus(docs)
        model = GibbsLda(n_topics=5, iterations=10, seed=4).fit(corpus, dic)
        report = topic_prevalence_report(model, count=5)
        assert abs(sum(s.percent for s in report) - 1.0) < 5 * np.finfo(float).eps

    def test_top_and_bottom_partition_topics(self):
        docs = make_synthetic(n_docs=120, doc_len=8, seed=13)
        dic, corpus = build_corpus(docs)
        model = GibbsLda(n_topics=50, iterations=15, seed=9).fit(corpus, dic)
        top = topic_prevalence_report(model, order="descending", count=25)
        bottom = topic_prevalence_report(model, order="ascending", count=25)
        top_ids = {s.topic_id for s in top}
        bottom_ids = {s.topic_id for s in bottom}
        assert len(top_ids) == len(bottom_ids) == 25
        assert top_ids.isdisjoint(bottom_ids)
        assert top_ids | bottom_ids == set(range(50))

    def test_degenerate_single_dominant(self):
        model = hand_model([[5, 0], [7, 0], [9, 1]], alpha=[0.1, 0.1])
        report = topic_prevalence_report(model, count=2)
        assert report[0].percent == 1.0 and report[1].percent == 0.0

    def test_count_above_k_returns_all(self):
        model = hand_model([[1, 0]], alpha=[0.1, 0.1])
        assert len(topic_prevalence_report(model, count=99)) == 2

    def test_top_words_sorted_descending(self):
        model = hand_model([[4, 0]], alpha=[0.1, 0.1],
                           n_kw=np.array([[5, 1, 9, 0], [1, 1, 1, 1]]))
        report = topic_prevalence_report(model, count=1)
        probs = [p for _w, p in report[0].top_words]
        assert probs == sorted(probs, reverse=True)

    def test_starred_are_top_by_association(self):
        docs = make_synthetic(n_docs=60, doc_len=8, seed=21)
        dic, corpus = build_corpus(docs)
        model = GibbsLda(n_topics=12, iterations=10, seed=1).fit(corpus, dic)
        report = topic_prevalence_report(model, count=12)
        counts = model.word_association_counts()
        threshold = sorted(counts.values(), reverse=True)[9]
        for s in report:
            if s.nonzero_word_count > threshold:
                assert s.starred
            if s.nonzero_word_count < threshold:
                assert not s.starred
        assert sum(1 for s in report if s.starred) == 10


class TestTopicOverlap:
    def test_identical_models_have_unit_self_overlap(self):
        docs = make_synthetic(n_docs=40, doc_len=10)
        dic, corpus = build_corpus(docs)
        model = GibbsLda(n_topics=2, iterations=30, seed=6).fit(corpus, dic)
        rows = topic_word_overlap(model, model)
        pairs = {(a, b): j for a, b, j in rows}
        assert pairs[(0, 0)] == 1.0 and pairs[(1, 1)] == 1.0

    def test_disjoint_topics_match_across_seeds_up_to_permutation(self):
        docs = make_synthetic(n_docs=100, doc_len=15)
        dic, corpus = build_corpus(docs)
        a = GibbsLda(n_topics=2, iterations=100, seed=1).fit(corpus, dic)
        b = GibbsLda(n_topics=2, iterations=100, seed=2).fit(corpus, dic)
        rows = topic_word_overlap(a, b)
        best = {ka: (kb, j) for ka, kb, j in sorted(rows, key=lambda r: r[2])}
        # each topic of model a finds a near-identical counterpart in model b
        assert all(j >= 0.8 for _kb, j in best.values())
        assert {kb for kb, _j in best.values()} == {0, 1}

    def test_rows_sorted_by_overlap(self):
        docs = make_synthetic(n_docs=40, doc_len=10)
        dic, corpus = build_corpus(docs)
        model = GibbsLda(n_topics=3, iterations=20, seed=0).fit(corpus, dic)
        rows = topic_word_overlap(model, model)
        values = [j for _a, _b, j in rows]
        assert values == sorted(values, reverse=True)


class TestPersistence:
    def test_save_load_round_trip(self, tmp_path):
        docs = make_synthetic(n_docs=25, doc_len=6)
        dic, corpus = build_corpus(docs)
        model = GibbsLda(n_topics=3, iterations=10, seed=8).fit(corpus, dic)
        path = tmp_path / "model.bin"
        model.save(path, config_hash="abc123")
        loaded = GibbsLda.load(path)
        assert np.array_equal(loaded.n_dk_, model.n_dk_)
        assert np.array_equal(loaded.n_kw_, model.n_kw_)
        assert np.array_equal(loaded.alpha_, model.alpha_)
        assert loaded.doc_ids_ == model.doc_ids_
        assert loaded.dictionary_.id_to_token == dic.id_to_token
        rep_a = topic_prevalence_report(model, count=3)
        rep_b = topic_prevalence_report(loaded, count=3)
        assert [(s.topic_id, s.percent, s.top_words) for s in rep_a] == \
               [(s.topic_id, s.percent, s.top_words) for s in rep_b]

    def test_saved_file_byte_identical_across_runs(self, tmp_path):
        docs = make_synthetic(n_docs=20, doc_len=5)
        dic, corpus = build_corpus(docs)
        paths = []
        for name in ("m1.bin", "m2.bin"):
            model = GibbsLda(n_topics=2, iterations=8, seed=4).fit(corpus, dic)
            path = tmp_path / name
            model.save(path, config_hash="h")
            paths.append(path.read_bytes())
        assert paths[0] == paths[1]
