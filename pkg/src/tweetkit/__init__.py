"""tweetkit: archive-to-report toolkit for Persian tweet corpora.

Pipeline stages: NDJSON ingest and filtering, deterministic text
normalization, collapsed-Gibbs topic modeling with prior refitting, TF-IDF
mini-batch k-means clustering with elbow selection, a blind two-annotator
labeling workflow with agreement statistics, and daily volume/case-count
time series.
"""

from .annotate import (
    AnnotationSession,
    CategoryEstimate,
    KappaResult,
    LabelSet,
    SampledTweet,
    SessionStore,
    cohen_kappa,
)
from .base import ConfigurationError, Estimator, NotFittedError
from .cluster import ElbowCurve, MiniBatchKMeans, TfidfEncoder, elbow_select, stratified_sample
from .ingest import (
    CaseCountRow,
    CorpusManifest,
    TweetKind,
    TweetRecord,
    classify_tweet_kind,
    dedupe,
    filter_corpus,
    load_case_counts,
    parse_tweet_stream,
)
from .lda import (
    BowCorpus,
    Dictionary,
    GibbsLda,
    TopicSummary,
    build_corpus,
    fit_dirichlet_alpha,
    topic_prevalence_report,
    topic_word_overlap,
)
from .textnorm import (
    NormalizationConfig,
    StopwordList,
    TokenizedDoc,
    load_stopwords,
    normalize_text,
    remove_stopwords,
    tokenize,
)
from .timeseries import DailySeries, CorrelationReport, align, bucket_daily, case_count_series, pearson

__version__ = "0.1.0"

__all__ = [
    "AnnotationSession", "CategoryEstimate", "KappaResult", "LabelSet",
    "SampledTweet", "SessionStore", "cohen_kappa",
    "ConfigurationError", "Estimator", "NotFittedError",
    "ElbowCurve", "MiniBatchKMeans", "TfidfEncoder", "elbow_select", "stratified_sample",
    "CaseCountRow", "CorpusManifest", "TweetKind", "TweetRecord",
    "classify_tweet_kind", "dedupe", "filter_corpus", "load_case_counts", "parse_tweet_stream",
    "BowCorpus", "Dictionary", "GibbsLda", "TopicSummary",
    "build_corpus", "fit_dirichlet_alpha", "topic_prevalence_report", "topic_word_overlap",
    "NormalizationConfig", "StopwordList", "TokenizedDoc",
    "load_stopwords", "normalize_text", "remove_stopwords", "tokenize",
    "DailySeries", "CorrelationReport", "align", "bucket_daily", "case_count_series", "pearson",
    "__version__",
]
