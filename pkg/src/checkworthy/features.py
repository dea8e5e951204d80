"""Numeric feature extraction: TF-IDF, pooled embeddings, metadata.

All extractors produce a :class:`FeatureMatrix`, a dense row-per-tweet
matrix with aligned tweet ids, which is what every classifier consumes.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from pathlib import Path

import numpy as np

from .corpus import (
    Dataset,
    FactualityTable,
    PrecomputedVectors,
    Tweet,
    VectorTable,
    FACTUALITY_LABELS,
    registered_domain,
)
from .errors import DataError

METADATA_COLUMNS = (
    "verified",
    "has_url",
    "fact_very_high",
    "fact_high",
    "fact_mostly_factual",
    "fact_mixed",
    "fact_low",
    "fact_fake_news",
    "fact_conspiracy",
    "ln_retweets",
    "ln_friends",
    "account_age_years",
)

BOOLEAN_METADATA_COLUMNS = METADATA_COLUMNS[:9]

DAYS_PER_YEAR = 365.25


@dataclass
class TfidfModel:
    """Vocabulary with smoothed inverse document frequencies.

    idf(t) = ln((1 + n_docs) / (1 + df(t))) + 1, so every value is > 0
    and unseen-degree terms still carry weight.
    """

    vocabulary: dict[str, int]
    idf: np.ndarray
    n_docs: int


@dataclass
class FeatureMatrix:
    """Dense (n, d) feature block with row tweet ids and column names."""

    row_ids: list[str]
    values: np.ndarray
    column_names: list[str]

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise DataError("feature values must be a 2-D matrix")
        n, d = self.values.shape
        if len(self.row_ids) != n:
            raise DataError(f"{len(self.row_ids)} row ids for {n} rows")
        if len(self.column_names) != d:
            raise DataError(f"{len(self.column_names)} column names for {d} columns")
        if not np.all(np.isfinite(self.values)):
            raise DataError("feature matrix contains non-finite values")

    @property
    def shape(self):
        return self.values.shape

    def save(self, path):
        """Write header + ``tweet_id v1 ... vd`` rows, 9 significant digits."""
        path = Path(path)
        with path.open("w", encoding="utf-8", newline="\n") as fh:
            fh.write("tweet_id\t" + "\t".join(self.column_names) + "\n")
            for tid, row in zip(self.row_ids, self.values):
                fh.write(tid + "\t" + "\t".join(f"{v:.9g}" for v in row) + "\n")

    @classmethod
    def load(cls, path) -> "FeatureMatrix":
        path = Path(path)
        with path.open(encoding="utf-8") as fh:
            header = fh.readline().rstrip("\n").split("\t")
            if not header or header[0] != "tweet_id":
                raise DataError(f"{path}: missing feature-matrix header")
            names = header[1:]
            ids, rows = [], []
            for lineno, line in enumerate(fh, 2):
                if not line.strip():
                    continue
                parts = line.rstrip("\n").split("\t")
                if len(parts) != len(names) + 1:
                    raise DataError(f"{path} line {lineno}: expected {len(names) + 1} fields")
                ids.append(parts[0])
                try:
                    rows.append([float(x) for x in parts[1:]])
                except ValueError:
                    raise DataError(f"{path} line {lineno}: non-numeric value")
        if not ids:
            raise DataError(f"{path}: no feature rows")
        return cls(row_ids=ids, values=np.array(rows, dtype=np.float64), column_names=names)


def fit_tfidf(docs) -> TfidfModel:
    """Build the vocabulary and idf vector from tokenized documents."""
    docs = [list(d) for d in docs]
    if not any(docs):
        raise DataError("cannot fit TF-IDF: all documents are empty")
    n_docs = len(docs)
    df: dict[str, int] = {}
    for doc in docs:
        for token in set(doc):
            df[token] = df.get(token, 0) + 1
    vocabulary = {token: i for i, token in enumerate(sorted(df))}
    idf = np.empty(len(vocabulary))
    for token, i in vocabulary.items():
        idf[i] = np.log((1.0 + n_docs) / (1.0 + df[token])) + 1.0
    return TfidfModel(vocabulary=vocabulary, idf=idf, n_docs=n_docs)


def tfidf_transform(model: TfidfModel, docs, ids=None) -> FeatureMatrix:
    """Count x idf rows, L2-normalized; unseen tokens ignored."""
    docs = [list(d) for d in docs]
    if ids is None:
        ids = [str(i) for i in range(len(docs))]
    values = np.zeros((len(docs), len(model.vocabulary)))
    for r, doc in enumerate(docs):
        for token in doc:
            col = model.vocabulary.get(token)
            if col is not None:
                values[r, col] += 1.0
        values[r] *= model.idf
        norm = np.linalg.norm(values[r])
        if norm > 0:
            values[r] /= norm
    names = [t for t, _ in sorted(model.vocabulary.items(), key=lambda kv: kv[1])]
    return FeatureMatrix(row_ids=list(ids), values=values, column_names=names)


def pool_mean(tokens, table: VectorTable) -> np.ndarray:
    """Arithmetic mean of the in-table token vectors (zero vector if none)."""
    hits = [table.entries[t] for t in tokens if t in table.entries]
    if not hits:
        return np.zeros(table.dim)
    return np.mean(hits, axis=0)


def pool_max(tokens, table: VectorTable) -> np.ndarray:
    """Componentwise maximum of the in-table token vectors."""
    hits = [table.entries[t] for t in tokens if t in table.entries]
    if not hits:
        return np.zeros(table.dim)
    return np.max(hits, axis=0)


def pool_tfidf(tokens, table: VectorTable, model: TfidfModel) -> np.ndarray:
    """Weighted mean with weights tf(token) x idf(token), renormalized to 1.

    Tokens missing from either the vector table or the TF-IDF vocabulary
    contribute nothing.
    """
    counts: dict[str, int] = {}
    for t in tokens:
        counts[t] = counts.get(t, 0) + 1
    vecs, weights = [], []
    for t, c in counts.items():
        col = model.vocabulary.get(t)
        if col is None or t not in table.entries:
            continue
        vecs.append(table.entries[t])
        weights.append(c * model.idf[col])
    if not vecs:
        return np.zeros(table.dim)
    w = np.array(weights)
    w /= w.sum()
    return w @ np.array(vecs)


def sentence_vector(tweet_id: str, store: PrecomputedVectors) -> np.ndarray:
    vec = store.entries.get(tweet_id)
    if vec is None:
        raise DataError(f"no vector for {tweet_id}")
    return vec


def extract_metadata(
    tweet: Tweet, fact: FactualityTable | None, collection_date: datetime
) -> np.ndarray:
    """The twelve metadata features, ordered as in METADATA_COLUMNS.

    Nine booleans (verified, has-url, seven factuality flags over the
    tweet's link domains) then ln(1 + retweets), ln(1 + friends), and
    account age in years relative to ``collection_date``. A tweet with
    unknown creation time gets age 0.
    """
    row = np.zeros(len(METADATA_COLUMNS))
    row[0] = 1.0 if tweet.verified else 0.0
    row[1] = 1.0 if tweet.urls else 0.0
    if fact is not None:
        for raw_url in tweet.urls:
            label = fact.entries.get(registered_domain(raw_url))
            if label is not None:
                row[2 + FACTUALITY_LABELS.index(label)] = 1.0
    row[9] = np.log1p(tweet.retweet_count)
    row[10] = np.log1p(tweet.friends_count)
    if tweet.created_at is not None:
        delta = collection_date - tweet.created_at
        if delta.total_seconds() < 0:
            raise DataError(
                f"tweet {tweet.tweet_id}: created_at {tweet.created_at} is after "
                f"collection date {collection_date}"
            )
        row[11] = delta.total_seconds() / (DAYS_PER_YEAR * 86400.0)
    return row


def metadata_matrix(
    dataset: Dataset, fact: FactualityTable | None, collection_date: datetime
) -> FeatureMatrix:
    rows = [extract_metadata(t, fact, collection_date) for t in dataset.tweets]
    return FeatureMatrix(
        row_ids=[t.tweet_id for t in dataset.tweets],
        values=np.array(rows) if rows else np.zeros((0, len(METADATA_COLUMNS))),
        column_names=list(METADATA_COLUMNS),
    )


def concat_features(parts) -> FeatureMatrix:
    """Horizontally concatenate blocks that share identical row ids."""
    parts = list(parts)
    if not parts:
        raise DataError("nothing to concatenate")
    first = parts[0]
    for p in parts[1:]:
        if p.row_ids != first.row_ids:
            raise DataError("feature blocks have mismatched row ids or row order")
    if len(parts) == 1:
        return first
    return FeatureMatrix(
        row_ids=list(first.row_ids),
        values=np.hstack([p.values for p in parts]),
        column_names=[name for p in parts for name in p.column_names],
    )


def pooled_matrix(normalized, table: VectorTable, mode: str, model: TfidfModel | None = None) -> FeatureMatrix:
    """Pool word vectors for each normalized tweet; mode in {mean, max, tfidf}."""
    poolers = {"mean": pool_mean, "max": pool_max}
    rows, ids = [], []
    for nt in normalized:
        ids.append(nt.tweet_id)
        if mode == "tfidf":
            if model is None:
                raise DataError("tfidf pooling needs a fitted TF-IDF model")
            rows.append(pool_tfidf(nt.tokens, table, model))
        elif mode in poolers:
            rows.append(poolers[mode](nt.tokens, table))
        else:
            raise DataError(f"unknown pooling mode {mode!r}")
    names = [f"{mode}_{i:03d}" for i in range(table.dim)]
    values = np.array(rows) if rows else np.zeros((0, table.dim))
    return FeatureMatrix(row_ids=ids, values=values, column_names=names)


def sentence_matrix(tweet_ids, store: PrecomputedVectors) -> FeatureMatrix:
    rows = [sentence_vector(tid, store) for tid in tweet_ids]
    names = [f"sv_{i:03d}" for i in range(store.dim)]
    values = np.array(rows) if rows else np.zeros((0, store.dim))
    return FeatureMatrix(row_ids=list(tweet_ids), values=values, column_names=names)
