"""Access to data files bundled with the package."""

from __future__ import annotations

from functools import lru_cache
from importlib import resources
from pathlib import Path


def data_dir() -> Path:
    return Path(str(resources.files("checkworthy").joinpath("data")))


def data_path(*parts: str) -> Path:
    return data_dir().joinpath(*parts)


@lru_cache(maxsize=None)
def read_word_list(name: str) -> frozenset[str]:
    """One entry per line; blank lines and ``#`` comments ignored."""
    lines = data_path(name).read_text(encoding="utf-8").splitlines()
    return frozenset(w.strip() for w in lines if w.strip() and not w.startswith("#"))
