"""Desk-scale test data: generators and access to the bundled files.

The bundled layout under ``data/``:

* ``hashtag_split_golden.tsv``: ``hashtag<TAB>expected words`` rows; the
  normative contract for hashtag splitting.
* ``normalizer_golden.tsv``: ``pipeline<TAB>raw<TAB>expected tokens``
  rows covering all three pipelines.
* ``fixtures/separable/``: a linearly separable 50x10 feature matrix with
  matching labeled tweet records, used by the end-to-end smoke test.
* ``fixtures/toy/``: a dozen handcrafted tweets plus 10-dim word vectors,
  sentence vectors, factuality and VIP tables.
"""

from __future__ import annotations

import json
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from .corpus import VipTable, load_vip_table
from .features import FeatureMatrix
from .resources import data_path

SEPARABLE_DEFAULTS = dict(n=50, d=10, margin=1.0, seed=7)


def default_vip_table() -> VipTable:
    return load_vip_table(data_path("vip_default.csv"))


def golden_hashtag_table() -> list[tuple[str, list[str]]]:
    rows = []
    for line in data_path("hashtag_split_golden.tsv").read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        tag, expected = line.split("\t")
        rows.append((tag, expected.split()))
    return rows


def golden_normalizer_corpus() -> list[tuple[str, str, list[str]]]:
    rows = []
    for line in data_path("normalizer_golden.tsv").read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        pipeline, raw, expected = line.split("\t")
        rows.append((pipeline, raw, expected.split()))
    return rows


def make_separable_fixture(n: int = 50, d: int = 10, margin: float = 1.0, seed: int = 7):
    """Two point clouds separated by at least ``margin`` along a random axis.

    Returns (tweet records, FeatureMatrix). Labels alternate so file order
    carries no class signal; tweet metadata fields are filled with
    deterministic synthetic values.
    """
    if n % 2 != 0:
        raise ValueError("n must be even")
    if margin <= 0:
        raise ValueError("margin must be positive")
    rng = np.random.default_rng(seed)
    direction = rng.normal(size=d)
    direction /= np.linalg.norm(direction)
    base = rng.normal(size=(n, d))
    base -= np.outer(base @ direction, direction)  # orthogonal component only
    labels = np.array([i % 2 for i in range(n)])
    signs = np.where(labels == 1, 1.0, -1.0)
    offsets = margin / 2.0 + np.abs(rng.normal(size=n))
    values = base + np.outer(signs * offsets, direction)

    collection = datetime(2020, 5, 1, tzinfo=timezone.utc)
    records = []
    texts = [
        "Officials report 7m tests completed #Covid-19",
        "No evidence the outbreak is over, experts say",
    ]
    for i in range(n):
        created = collection - timedelta(days=int(rng.integers(30, 2000)))
        records.append(
            {
                "tweet_id": f"t{i:03d}",
                "topic_id": "1",
                "tweet_text": texts[i % 2],
                "check_worthiness": int(labels[i]),
                "verified": bool(i % 3 == 0),
                "friends_count": int(rng.integers(0, 5000)),
                "created_at": created.strftime("%Y-%m-%dT%H:%M:%SZ"),
                "retweet_count": int(rng.integers(0, 1000)),
                "urls": ["http://example.org/a"] if i % 4 == 0 else [],
            }
        )
    matrix = FeatureMatrix(
        row_ids=[r["tweet_id"] for r in records],
        values=values,
        column_names=[f"x{j:02d}" for j in range(d)],
    )
    return records, matrix


def write_separable_fixture(directory, n: int = 50, d: int = 10, margin: float = 1.0, seed: int = 7):
    """Write tweets.jsonl and features.tsv for the separable fixture."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    records, matrix = make_separable_fixture(n=n, d=d, margin=margin, seed=seed)
    with (directory / "tweets.jsonl").open("w", encoding="utf-8", newline="\n") as fh:
        for r in records:
            fh.write(json.dumps(r, sort_keys=True) + "\n")
    matrix.save(directory / "features.tsv")
    return directory


def separable_fixture_dir() -> Path:
    return data_path("fixtures", "separable")


def toy_fixture_dir() -> Path:
    return data_path("fixtures", "toy")
