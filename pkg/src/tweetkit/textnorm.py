"""Deterministic Persian text normalization and whitespace tokenization.

The normalizer strips URLs, mentions, emoji, punctuation and digits, rewrites
hashtags into plain words, and unifies Arabic/Persian letter variants through
a configurable codepoint map. ZWNJ (U+200C) is word-internal and always
survives. normalize_text is idempotent by construction.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import regex

from .base import ConfigurationError

ZWNJ = "‌"

# Arabic Yeh/Kaf folded to their Persian forms; Arabic diacritics dropped.
DEFAULT_CHAR_MAP: tuple[tuple[str, str], ...] = (
    ("ي", "ی"),  # ARABIC LETTER YEH -> FARSI YEH
    ("ك", "ک"),  # ARABIC LETTER KAF -> KEHEH
) + tuple((chr(cp), "") for cp in range(0x064B, 0x0653))  # tanwin/harakat/shadda/sukun

_URL_RE = regex.compile(r"(?:https?://\S*|\bwww\.\S+|\bt\.co/\S*)", regex.IGNORECASE)
_MENTION_RE = regex.compile(r"@[\w‌]+")
# \w in the regex module covers Unicode word characters incl. ZWNJ (Join_Control).
_HASHTAG_RE = regex.compile(r"#([\w‌]+)")
_EMOJI_RE = regex.compile(
    r"[\p{Extended_Pictographic}\p{Emoji_Presentation}\p{Regional_Indicator}"
    r"︎️‍⃣]"
)
_PUNCT_RE = regex.compile(r"[\p{P}،؛؟]")
_ASCII_DIGIT_RE = regex.compile(r"[0-9]")
_ANY_DIGIT_RE = regex.compile(r"\p{Nd}")
_WS_RE = regex.compile(r"\s+")


@dataclass(frozen=True)
class NormalizationConfig:
    strip_urls: bool = True
    strip_mentions: bool = True
    strip_emoji: bool = True
    strip_punctuation: bool = True
    strip_digits: str = "all_scripts"  # ascii_only | all_scripts | none
    char_map: tuple[tuple[str, str], ...] = DEFAULT_CHAR_MAP
    collapse_whitespace: bool = True

    def __post_init__(self):
        if self.strip_digits not in ("ascii_only", "all_scripts", "none"):
            raise ConfigurationError(f"strip_digits must be ascii_only|all_scripts|none, got {self.strip_digits!r}")
        sources = [src for src, _ in self.char_map]
        if len(sources) != len(set(sources)):
            raise ConfigurationError("char_map has duplicate source codepoints")
        targets = {dst for _, dst in self.char_map if dst}
        overlap = targets & set(sources)
        if overlap:
            raise ConfigurationError(f"char_map targets may not also be sources: {sorted(overlap)}")

    def translation_table(self) -> dict[int, str | None]:
        return {ord(src): (dst if dst else None) for src, dst in self.char_map}


@dataclass(frozen=True)
class StopwordList:
    words: frozenset[str]
    source_path: str = ""


@dataclass(frozen=True)
class TokenizedDoc:
    tweet_id: str
    tokens: tuple[str, ...]


def normalize_text(raw: str, cfg: NormalizationConfig = NormalizationConfig()) -> str:
    """Normalize one tweet's text. Total on valid UTF-8 strings and idempotent."""
    text = raw
    if cfg.strip_urls:
        text = _URL_RE.sub(" ", text)
    if cfg.strip_mentions:
        text = _MENTION_RE.sub(" ", text)
    # hashtag bodies are kept as words: '#' dropped, '_' becomes a space
    text = _HASHTAG_RE.sub(lambda m: " " + m.group(1).replace("_", " ") + " ", text)
    if cfg.strip_emoji:
        text = _EMOJI_RE.sub(" ", text)
    if cfg.strip_punctuation:
        text = _PUNCT_RE.sub(" ", text)
    if cfg.strip_digits == "ascii_only":
        text = _ASCII_DIGIT_RE.sub(" ", text)
    elif cfg.strip_digits == "all_scripts":
        text = _ANY_DIGIT_RE.sub(" ", text)
    text = text.translate(cfg.translation_table())
    if cfg.collapse_whitespace:
        text = _WS_RE.sub(" ", text).strip()
    return text


def tokenize(normalized: str) -> list[str]:
    """Split on Unicode whitespace. ZWNJ is never a split point."""
    return normalized.split()


def remove_stopwords(tokens: Sequence[str], stopwords: StopwordList) -> list[str]:
    return [t for t in tokens if t not in stopwords.words]


def load_stopwords(path, cfg: NormalizationConfig = NormalizationConfig()) -> StopwordList:
    """Load a stopword file: one token per line, '//' comments, blank lines ignored.

    Every entry must already be a single normalized token (a fixed point of
    normalize_text + tokenize); violations are configuration errors.
    """
    words: set[str] = set()
    bad: list[str] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            entry = line.strip()
            if not entry or entry.startswith("//"):
                continue
            if tokenize(normalize_text(entry, cfg)) != [entry]:
                bad.append(f"line {line_no}: {entry!r}")
                continue
            words.add(entry)
    if bad:
        raise ConfigurationError(
            "stopword entries must be single normalized tokens; offending " + "; ".join(bad)
        )
    return StopwordList(words=frozenset(words), source_path=str(path))


def tokenize_corpus(
    id_text_pairs: Iterable[tuple[str, str]],
    cfg: NormalizationConfig,
    stopwords: StopwordList,
) -> tuple[list[TokenizedDoc], list[str]]:
    """Normalize + tokenize + stopword-filter a corpus.

    Returns all docs (including emptied ones) plus the ids of docs whose
    token list came out empty; those are excluded later when the bag-of-words
    corpus is built.
    """
    docs: list[TokenizedDoc] = []
    emptied: list[str] = []
    for tweet_id, text in id_text_pairs:
        tokens = remove_stopwords(tokenize(normalize_text(text, cfg)), stopwords)
        if not tokens:
            emptied.append(tweet_id)
        docs.append(TokenizedDoc(tweet_id=tweet_id, tokens=tuple(tokens)))
    return docs, emptied
