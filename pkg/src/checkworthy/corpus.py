"""Data model, ingestion, and persistence for the ranking pipeline.

File formats handled here:

* tweet records: one JSON object per line, required keys ``tweet_id``,
  ``topic_id``, ``tweet_text``; optional ``check_worthiness`` (0/1),
  ``verified``, ``friends_count``, ``created_at`` (ISO-8601 UTC),
  ``retweet_count``, ``urls``. Unknown keys are ignored.
* word / sentence vector files: plain text, ``key v1 ... vd``,
  space-separated, no header.
* factuality and VIP tables: two-column CSV, ``#`` comment lines ignored.
* run files: tab-separated ``topic_id  tweet_id  score  run_id`` with the
  score printed to 6 decimal places, rows sorted by descending score and
  ascending tweet_id on ties.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .errors import DataError

log = logging.getLogger(__name__)

FACTUALITY_LABELS = (
    "very_high",
    "high",
    "mostly_factual",
    "mixed",
    "low",
    "fake_news",
    "conspiracy",
)


@dataclass(frozen=True)
class Tweet:
    """One input record; raw material for every downstream feature."""

    tweet_id: str
    topic_id: str
    text: str
    label: int | None = None
    verified: bool = False
    friends_count: int = 0
    created_at: datetime | None = None
    retweet_count: int = 0
    urls: tuple[str, ...] = ()


@dataclass
class Dataset:
    """Ordered tweet collection plus the date the corpus was collected.

    ``collection_date`` anchors account-age computation; it may be left
    unset for flows that never touch metadata features.
    """

    tweets: list[Tweet]
    collection_date: datetime | None = None

    def __len__(self):
        return len(self.tweets)

    def by_id(self) -> dict[str, Tweet]:
        return {t.tweet_id: t for t in self.tweets}

    def labeled(self) -> list[Tweet]:
        return [t for t in self.tweets if t.label is not None]


@dataclass
class VectorTable:
    """Static token -> vector store (word embeddings)."""

    dim: int
    entries: dict[str, np.ndarray]

    def __contains__(self, token):
        return token in self.entries


@dataclass
class PrecomputedVectors:
    """tweet_id -> sentence vector store, computed by an external encoder."""

    dim: int
    entries: dict[str, np.ndarray]


@dataclass
class FactualityTable:
    """Lowercased outlet domain -> factuality-of-reporting label."""

    entries: dict[str, str]


@dataclass
class VipTable:
    """Lowercased handle (no ``@``) -> replacement phrase."""

    entries: dict[str, str]

    def lookup(self, handle: str) -> str | None:
        return self.entries.get(handle.lower())


@dataclass
class FoldAssignment:
    """tweet_id -> fold index in [0, k)."""

    k: int
    fold_of: dict[str, int]

    def members(self, fold: int) -> list[str]:
        return [tid for tid, f in self.fold_of.items() if f == fold]


def _parse_created_at(raw, lineno):
    try:
        dt = datetime.fromisoformat(str(raw).replace("Z", "+00:00"))
    except ValueError:
        raise DataError(f"line {lineno}: bad created_at {raw!r} (ISO-8601 expected)")
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def _require_nonneg_int(record, key, lineno):
    value = record.get(key, 0)
    try:
        value = int(value)
    except (TypeError, ValueError):
        raise DataError(f"line {lineno}: {key} must be an integer, got {value!r}")
    if value < 0:
        raise DataError(f"line {lineno}: {key} must be >= 0, got {value}")
    return value


def load_tweets(path, collection_date: datetime | None = None) -> Dataset:
    """Read a tweet-record file, preserving file order.

    Missing optional fields default to: no label, not verified, zero
    counts, empty url list, unknown creation time.
    """
    path = Path(path)
    tweets = []
    seen = set()
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"line {lineno}: malformed record ({exc.msg})")
            if not isinstance(record, dict):
                raise DataError(f"line {lineno}: malformed record (object expected)")
            for key in ("tweet_id", "topic_id", "tweet_text"):
                if key not in record or record[key] in (None, ""):
                    raise DataError(f"line {lineno}: missing {key}")
            tweet_id = str(record["tweet_id"])
            if tweet_id in seen:
                raise DataError(f"duplicate tweet_id {tweet_id}")
            seen.add(tweet_id)
            label = record.get("check_worthiness")
            if label is not None:
                if label not in (0, 1, "0", "1"):
                    raise DataError(f"line {lineno}: check_worthiness must be 0 or 1")
                label = int(label)
            created = record.get("created_at")
            urls = record.get("urls") or []
            if not isinstance(urls, list):
                raise DataError(f"line {lineno}: urls must be an array")
            tweets.append(
                Tweet(
                    tweet_id=tweet_id,
                    topic_id=str(record["topic_id"]),
                    text=str(record["tweet_text"]),
                    label=label,
                    verified=bool(record.get("verified", False)),
                    friends_count=_require_nonneg_int(record, "friends_count", lineno),
                    created_at=None if created is None else _parse_created_at(created, lineno),
                    retweet_count=_require_nonneg_int(record, "retweet_count", lineno),
                    urls=tuple(str(u) for u in urls),
                )
            )
    return Dataset(tweets=tweets, collection_date=collection_date)


def _load_vector_file(path, what):
    path = Path(path)
    entries: dict[str, np.ndarray] = {}
    dim = None
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            key, raw = parts[0], parts[1:]
            if not raw:
                raise DataError(f"line {lineno}: no vector components for {key!r}")
            try:
                vec = np.array([float(x) for x in raw], dtype=np.float64)
            except ValueError:
                raise DataError(f"line {lineno}: non-numeric vector component")
            if dim is None:
                dim = len(vec)
            elif len(vec) != dim:
                raise DataError(
                    f"line {lineno}: expected {dim} components, got {len(vec)}"
                )
            if key in entries:
                log.warning("%s: duplicate key %r at line %d, last occurrence wins", path, key, lineno)
            entries[key] = vec
    if dim is None:
        raise DataError(f"no vectors in {path} ({what} file must be non-empty)")
    return dim, entries


def load_word_vectors(path) -> VectorTable:
    """Parse a ``token v1 ... vd`` embedding file; later duplicates win."""
    dim, entries = _load_vector_file(path, "word-vector")
    return VectorTable(dim=dim, entries=entries)


def load_precomputed_vectors(path) -> PrecomputedVectors:
    """Parse a ``tweet_id v1 ... vd`` sentence-vector file; later duplicates win."""
    dim, entries = _load_vector_file(path, "sentence-vector")
    return PrecomputedVectors(dim=dim, entries=entries)


_SCHEME_RE = re.compile(r"^[a-z][a-z0-9+.-]*://", re.IGNORECASE)


def registered_domain(url: str) -> str:
    """Host part of a URL: scheme, ``www.`` prefix, port, and path stripped."""
    rest = _SCHEME_RE.sub("", url.strip())
    host = rest.split("/", 1)[0].split("?", 1)[0].split("#", 1)[0]
    host = host.split("@")[-1].split(":", 1)[0].lower()
    if host.startswith("www."):
        host = host[4:]
    return host


def _two_column_rows(path):
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "," not in line:
                raise DataError(f"line {lineno}: expected two comma-separated columns")
            left, right = line.split(",", 1)
            yield lineno, left.strip(), right.strip()


def load_factuality_table(path) -> FactualityTable:
    """Read ``domain,label`` rows; labels normalized to snake_case."""
    entries = {}
    for lineno, domain, label in _two_column_rows(path):
        norm = label.lower().replace(" ", "_").replace("-", "_")
        if norm not in FACTUALITY_LABELS:
            raise DataError(
                f"line {lineno}: unknown factuality label {label!r}; "
                f"legal labels: {', '.join(FACTUALITY_LABELS)}"
            )
        entries[registered_domain(domain)] = norm
    return FactualityTable(entries=entries)


def load_vip_table(path) -> VipTable:
    """Read ``handle,replacement`` rows; handles lowercased, ``@`` stripped."""
    entries = {}
    for lineno, handle, phrase in _two_column_rows(path):
        if not phrase:
            raise DataError(f"line {lineno}: empty replacement phrase for {handle!r}")
        entries[handle.lstrip("@").lower()] = phrase
    return VipTable(entries=entries)


def stratified_kfold(dataset: Dataset, k: int, seed: int) -> FoldAssignment:
    """Assign every tweet to one of k folds, balancing size and positives.

    Deterministic given (dataset order, k, seed). Each class is shuffled
    and dealt round-robin with a shared cursor, so fold sizes and per-fold
    positive counts both differ by at most one.
    """
    if k < 2:
        raise DataError(f"k must be >= 2, got {k}")
    pos, neg = [], []
    for t in dataset.tweets:
        if t.label is None:
            raise DataError(f"tweet {t.tweet_id} is unlabeled; folds need labels")
        (pos if t.label == 1 else neg).append(t.tweet_id)
    for name, ids in (("positive", pos), ("negative", neg)):
        if len(ids) < k:
            raise DataError(f"k={k} exceeds {name} count {len(ids)}")
    rng = np.random.default_rng(seed)
    fold_of = {}
    cursor = 0
    for ids in (pos, neg):
        for i in rng.permutation(len(ids)):
            fold_of[ids[i]] = cursor % k
            cursor += 1
    return FoldAssignment(k=k, fold_of=fold_of)


def ranked_items(scores: dict[str, float]) -> list[tuple[str, float]]:
    """Sort by descending score, breaking ties by ascending tweet_id."""
    return sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))


def write_run_file(path, run_id: str, scores: dict[str, float], topic_id: str):
    """Emit the tab-separated run format, bit-exact and totally ordered."""
    if not scores:
        raise DataError("refusing to write an empty run file")
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for tweet_id, score in ranked_items(scores):
            fh.write(f"{topic_id}\t{tweet_id}\t{score:.6f}\t{run_id}\n")


def read_run_file(path):
    """Parse a run file back into (topic_id, run_id, ordered (id, score) rows)."""
    path = Path(path)
    rows = []
    topic_id = run_id = None
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise DataError(f"line {lineno}: expected 4 tab-separated fields")
            topic, tweet_id, raw_score, rid = parts
            try:
                score = float(raw_score)
            except ValueError:
                raise DataError(f"line {lineno}: bad score {raw_score!r}")
            if topic_id is None:
                topic_id, run_id = topic, rid
            rows.append((tweet_id, score))
    if not rows:
        raise DataError(f"empty run file {path}")
    return topic_id, run_id, rows
