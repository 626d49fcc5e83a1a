"""Tweet archive ingestion: NDJSON parsing, kind classification, filtering,
deduplication, and official case-count tables.

Archives are line-delimited JSON with v1.1-style field names (id_str,
full_text/text, lang, created_at, retweeted_status, in_reply_to_status_id,
is_quote_status, entities.hashtags[].text).
"""
from __future__ import annotations

import csv
import unicodedata
from dataclasses import dataclass
from datetime import date, datetime, timedelta, timezone
from enum import Enum
from typing import IO, Iterable, Mapping, Sequence

import regex

from .base import ConfigurationError


class TweetKind(str, Enum):
    ORIGINAL = "original"
    RETWEET = "retweet"
    REPLY = "reply"
    QUOTE = "quote"


@dataclass(frozen=True)
class TweetRecord:
    id: str
    created_at: datetime  # always UTC
    text: str
    kind: TweetKind
    lang: str
    hashtags: tuple[str, ...]  # lowercase-folded, no leading '#'
    author_handle: str = ""


@dataclass(frozen=True)
class ParseIssue:
    line_no: int  # 1-based
    reason: str


@dataclass(frozen=True)
class CaseCountRow:
    date: date
    confirmed: int
    deaths: int
    recovered: int
    source: str  # "ministry" | "fallback"


@dataclass
class CorpusManifest:
    tweet_count_by_kind: dict[str, int]
    date_range: tuple[str, str] | None
    unique_tweet_count: int
    duplicate_dropped: int
    parse_errors: int = 0
    input_records: int = 0

    def to_dict(self) -> dict:
        return {
            "tweet_count_by_kind": dict(sorted(self.tweet_count_by_kind.items())),
            "date_range": list(self.date_range) if self.date_range else None,
            "unique_tweet_count": self.unique_tweet_count,
            "duplicate_dropped": self.duplicate_dropped,
            "parse_errors": self.parse_errors,
            "input_records": self.input_records,
        }


class IngestError(Exception):
    """Stream-level failure that aborts ingestion."""


_MONTHS = {
    "Jan": 1, "Feb": 2, "Mar": 3, "Apr": 4, "May": 5, "Jun": 6,
    "Jul": 7, "Aug": 8, "Sep": 9, "Oct": 10, "Nov": 11, "Dec": 12,
}

_HASHTAG_RE = regex.compile(r"#([\w‌]+)")


def _parse_created_at(value: str) -> datetime:
    """Parse Twitter's 'Wed Mar 18 14:59:59 +0000 2020' or ISO-8601, to UTC.

    Hand-rolled for the Twitter format so parsing never depends on locale.
    """
    parts = value.split()
    if len(parts) == 6 and parts[1] in _MONTHS:
        _, mon, day, clock, offset, year = parts
        hh, mm, ss = clock.split(":")
        sign = 1 if offset[0] == "+" else -1
        off_minutes = sign * (int(offset[1:3]) * 60 + int(offset[3:5]))
        dt = datetime(int(year), _MONTHS[mon], int(day), int(hh), int(mm), int(ss),
                      tzinfo=timezone.utc)
        return dt - timedelta(minutes=off_minutes)
    iso = value.replace("Z", "+00:00")
    dt = datetime.fromisoformat(iso)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def classify_tweet_kind(raw: Mapping) -> TweetKind:
    """Total classification; precedence retweet > quote > reply > original."""
    if raw.get("retweeted_status") is not None:
        return TweetKind.RETWEET
    if raw.get("is_quote_status"):
        return TweetKind.QUOTE
    if raw.get("in_reply_to_status_id") is not None or raw.get("in_reply_to_status_id_str") is not None:
        return TweetKind.REPLY
    return TweetKind.ORIGINAL


def _extract_hashtags(raw: Mapping, text: str) -> tuple[str, ...]:
    entities = raw.get("entities")
    tags: list[str] = []
    if isinstance(entities, Mapping) and isinstance(entities.get("hashtags"), list):
        for item in entities["hashtags"]:
            tag = item.get("text") if isinstance(item, Mapping) else None
            if tag:
                tags.append(str(tag))
    else:
        tags = [m.group(1) for m in _HASHTAG_RE.finditer(text)]
    return tuple(tag.lstrip("#").casefold() for tag in tags if tag.lstrip("#"))


def record_from_raw(raw: Mapping) -> TweetRecord:
    """Build a TweetRecord from one parsed archive object; raises ValueError on schema gaps."""
    tweet_id = raw.get("id_str") or (str(raw["id"]) if "id" in raw else None)
    if not tweet_id:
        raise ValueError("missing id_str")
    text = raw.get("full_text")
    if text is None:
        text = raw.get("text")
    if text is None:
        raise ValueError("missing full_text/text")
    created = raw.get("created_at")
    if not created:
        raise ValueError("missing created_at")
    try:
        created_at = _parse_created_at(str(created))
    except Exception as exc:
        raise ValueError(f"unparsable created_at: {created!r}") from exc
    user = raw.get("user")
    handle = user.get("screen_name", "") if isinstance(user, Mapping) else ""
    return TweetRecord(
        id=str(tweet_id),
        created_at=created_at,
        text=str(text),
        kind=classify_tweet_kind(raw),
        lang=str(raw.get("lang", "und")),
        hashtags=_extract_hashtags(raw, str(text)),
        author_handle=str(handle),
    )


def parse_tweet_stream(stream: IO[bytes] | Iterable[bytes]) -> tuple[list[TweetRecord], list[ParseIssue]]:
    """Parse an NDJSON byte stream into TweetRecords plus a per-line error report.

    Malformed lines never abort the stream; they are reported with 1-based
    line numbers. Blank lines are skipped silently. I/O failures raise
    IngestError.
    """
    import json

    records: list[TweetRecord] = []
    issues: list[ParseIssue] = []
    try:
        for line_no, line in enumerate(stream, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            try:
                raw = json.loads(stripped.decode("utf-8") if isinstance(stripped, bytes) else stripped)
            except (UnicodeDecodeError, json.JSONDecodeError) as exc:
                issues.append(ParseIssue(line_no, f"invalid JSON: {exc}"))
                continue
            if not isinstance(raw, dict):
                issues.append(ParseIssue(line_no, "line is not a JSON object"))
                continue
            try:
                records.append(record_from_raw(raw))
            except ValueError as exc:
                issues.append(ParseIssue(line_no, str(exc)))
    except OSError as exc:
        raise IngestError(f"tweet archive read failed: {exc}") from exc
    return records, issues


def _nfc(s: str) -> str:
    return unicodedata.normalize("NFC", s)


def filter_corpus(
    records: Sequence[TweetRecord],
    hashtag_set: Sequence[str],
    lang: str,
    kinds: set[TweetKind],
) -> list[TweetRecord]:
    """Keep records matching language, kind, and at least one listed hashtag.

    Hashtag comparison is exact string equality after NFC normalization and
    case folding; ordering of the input is preserved.
    """
    if not hashtag_set:
        raise ConfigurationError("hashtag_set must not be empty")
    wanted = {_nfc(tag.lstrip("#").casefold()) for tag in hashtag_set}
    kept = []
    for rec in records:
        if rec.lang != lang or rec.kind not in kinds:
            continue
        if any(_nfc(tag) in wanted for tag in rec.hashtags):
            kept.append(rec)
    return kept


def dedupe(records: Sequence[TweetRecord]) -> tuple[list[TweetRecord], int]:
    """Drop records whose id was already seen (first occurrence wins)."""
    seen: set[str] = set()
    out: list[TweetRecord] = []
    for rec in records:
        if rec.id in seen:
            continue
        seen.add(rec.id)
        out.append(rec)
    return out, len(records) - len(out)


def build_manifest(
    retained: Sequence[TweetRecord],
    duplicate_dropped: int,
    parse_errors: int = 0,
    input_records: int = 0,
) -> CorpusManifest:
    by_kind: dict[str, int] = {k.value: 0 for k in TweetKind}
    for rec in retained:
        by_kind[rec.kind.value] += 1
    days = sorted(rec.created_at.date() for rec in retained)
    date_range = (days[0].isoformat(), days[-1].isoformat()) if days else None
    return CorpusManifest(
        tweet_count_by_kind=by_kind,
        date_range=date_range,
        unique_tweet_count=len(retained),
        duplicate_dropped=duplicate_dropped,
        parse_errors=parse_errors,
        input_records=input_records,
    )


def load_hashtag_list(path) -> list[str]:
    """One hashtag per line; a single leading '#' is stripped. No comment syntax:
    lines starting with '#' are hashtags, not comments."""
    tags = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            tag = line.strip()
            if not tag:
                continue
            if tag.startswith("#"):
                tag = tag[1:]
            if tag:
                tags.append(tag)
    return tags


def _parse_case_csv(path, source: str) -> tuple[dict[date, CaseCountRow], list[str]]:
    rows: dict[date, CaseCountRow] = {}
    errors: list[str] = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        expected = {"date", "confirmed", "deaths", "recovered"}
        if reader.fieldnames is None or not expected.issubset(set(reader.fieldnames)):
            raise ConfigurationError(
                f"{path}: case-count CSV must have header date,confirmed,deaths,recovered"
            )
        for line_no, row in enumerate(reader, start=2):
            try:
                day = date.fromisoformat(row["date"].strip())
                counts = {k: int(row[k]) for k in ("confirmed", "deaths", "recovered")}
            except (ValueError, AttributeError) as exc:
                errors.append(f"{path}:{line_no}: {exc}")
                continue
            if any(v < 0 for v in counts.values()):
                errors.append(f"{path}:{line_no}: negative count")
                continue
            if day in rows:
                raise ConfigurationError(f"{path}: duplicate date {day.isoformat()}")
            rows[day] = CaseCountRow(day, counts["confirmed"], counts["deaths"],
                                     counts["recovered"], source)
    return rows, errors


def load_case_counts(primary_csv, fallback_csv=None) -> tuple[list[CaseCountRow], list[str]]:
    """Merge ministry and fallback case tables into one row per date.

    The ministry (primary) value wins whenever both report a date; the
    fallback only fills dates the ministry is missing. Output is sorted by
    date. Row-level problems are reported, not fatal.
    """
    primary, errors_a = _parse_case_csv(primary_csv, "ministry")
    if fallback_csv is not None:
        fallback, errors_b = _parse_case_csv(fallback_csv, "fallback")
    else:
        fallback, errors_b = {}, []
    merged = dict(fallback)
    merged.update(primary)
    rows = [merged[d] for d in sorted(merged)]
    return rows, errors_a + errors_b
