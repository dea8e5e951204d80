"""Rule-based tweet normalization.

Three pipelines share one ordered rewrite sequence over the raw text:

    replace_urls -> replace_mentions -> strip_trailing_hashtags ->
    unify_covid -> hashtag splitting -> unify_covid (again, for families
    exposed by splitting) -> expand_quantities -> strip_punctuation ->
    lowercasing -> whitespace tokenization

``corona`` additionally swaps the canonical covid terms for ``ebola``
before tokenization; ``swc`` does the same and then drops stop words
while keeping personal and demonstrative pronouns.

Trailing-hashtag removal runs before covid unification so that a tag
block at the end of a tweet is removed whole; unification would turn a
trailing ``#Covid-19`` into a plain word and hide it from the stripper.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache

from .corpus import Tweet, VipTable
from .resources import read_word_list

DEFAULT = "default"
CORONA = "corona"
SWC = "swc"
PIPELINES = (DEFAULT, CORONA, SWC)

# Tokens no rule may split, lowercase away, or remove as stop words.
PROTECTED_TOKENS = ("covid-19", "corona virus", "url", "user", "ebola")

_QUOTE_CHARS = "\"'“”‘’"

_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_MENTION_RE = re.compile(r"(?<!\w)@(\w+)")
_COVID_TAG_RE = re.compile(r"#covid(?:[-_]?(?:2019|19))?(?![\w-])", re.IGNORECASE)
_CORONA_RE = re.compile(
    r"#?(?<![\w-])(?:[ck]orona[\s_-]+virus|coronavirus|koronavirus|korona|corona)(?![\w-])",
    re.IGNORECASE,
)
_HASHTAG_RE = re.compile(r"#[\w\-]+")
_QUANTITY_RE = re.compile(r"\b(\d+(?:\.\d+)?)([kKmM]|[bB][nN]?)(?![\w-])")
_COVID_WORD_RE = re.compile(r"(?<![\w-])covid-19(?![\w-])", re.IGNORECASE)
_CORONA_PHRASE_RE = re.compile(r"(?<![\w-])corona\s+virus(?![\w-])", re.IGNORECASE)
_CAMEL_RE = re.compile(r"[A-Z]+(?![a-z])|[A-Z][a-z]*|[a-z]+|\d+|[^A-Za-z0-9_\-\s]+")
_QUANTITY_WORDS = {"k": "thousand", "m": "million", "b": "billion", "bn": "billion"}


@dataclass(frozen=True)
class NormalizedTweet:
    """Token sequence produced by one pipeline, with provenance."""

    tweet_id: str
    tokens: tuple[str, ...]
    pipeline: str


def replace_urls(text: str) -> str:
    """Every http(s):// or www.-prefixed substring becomes the token ``url``."""
    return _URL_RE.sub("url", text)


def replace_mentions(text: str, vip: VipTable | None = None) -> str:
    """``@handle`` becomes its VIP phrase when known, otherwise ``user``."""

    def repl(match):
        phrase = vip.lookup(match.group(1)) if vip is not None else None
        return phrase if phrase is not None else "user"

    return _MENTION_RE.sub(repl, text)


def strip_trailing_hashtags(text: str) -> str:
    """Drop the hashtag block at the end of a tweet.

    The block may be followed by a single ``url`` token, which is kept.
    A tweet consisting of nothing but hashtags is left alone so it can
    still be split into words instead of vanishing.
    """
    chunks = text.split()
    end = len(chunks)
    trailing_url = end > 0 and chunks[-1] == "url"
    if trailing_url:
        end -= 1
    start = end
    while start > 0 and chunks[start - 1].startswith("#") and len(chunks[start - 1]) > 1:
        start -= 1
    if start == end or start == 0:
        return text
    kept = chunks[:start] + (["url"] if trailing_url else [])
    return " ".join(kept)


def unify_covid(text: str) -> str:
    """Canonicalize the covid/corona term families.

    Covid-family hashtags (``#covid19``, ``#covid_19``, ``#Covid2019``, ...)
    become the token ``covid-19``; corona-family wordforms and hashtags
    (``coronavirus``, ``#corona``, ``korona``, ...) become ``corona virus``.
    """
    text = _COVID_TAG_RE.sub("covid-19", text)
    text = _CORONA_RE.sub("corona virus", text)
    return text


def split_hashtag(hashtag: str) -> list[str]:
    """Split one hashtag into words at case, digit, and separator boundaries.

    Rules: split at lowercase-to-uppercase boundaries, between letters and
    digits, and before the final capital of an all-caps run followed by
    lowercase; ``_`` and ``-`` are extra split points. Words are
    lowercased; all-caps runs of length >= 2 are kept as acronyms.
    """
    body = hashtag[1:] if hashtag.startswith("#") else hashtag
    words: list[str] = []
    for piece in re.split(r"[_\-]+", body):
        words.extend(_CAMEL_RE.findall(piece))
    if not words:
        return [body] if body else []
    return [w if (len(w) >= 2 and w.isupper()) else w.lower() for w in words]


def _split_hashtags_in_text(text: str) -> str:
    return _HASHTAG_RE.sub(lambda m: " ".join(split_hashtag(m.group(0))), text)


def expand_quantities(text: str) -> str:
    """``7m`` -> ``7 million``, ``12k`` -> ``12 thousand``, ``5bn`` -> ``5 billion``.

    The suffix must end the token; ``5G`` or ``12km`` are left alone.
    """

    def repl(match):
        return f"{match.group(1)} {_QUANTITY_WORDS[match.group(2).lower()]}"

    return _QUANTITY_RE.sub(repl, text)


def strip_punctuation(text: str) -> str:
    """Remove punctuation except quotation marks and intra-word hyphens."""
    out = []
    last = len(text) - 1
    for i, ch in enumerate(text):
        if ch.isalnum() or ch.isspace() or ch in _QUOTE_CHARS:
            out.append(ch)
        elif ch == "-" and 0 < i < last and text[i - 1].isalnum() and text[i + 1].isalnum():
            out.append(ch)
    return "".join(out)


def corona_swap(text: str) -> str:
    """Replace the canonical ``covid-19`` / ``corona virus`` terms with ``ebola``."""
    text = _COVID_WORD_RE.sub("ebola", text)
    text = _CORONA_PHRASE_RE.sub("ebola", text)
    return text


@lru_cache(maxsize=None)
def stop_words() -> frozenset[str]:
    """Bundled stop-word list minus the pronoun keep-set and protected tokens."""
    keep = read_word_list("pronouns_keep.txt")
    protected = set(PROTECTED_TOKENS) | {w for t in PROTECTED_TOKENS for w in t.split()}
    return frozenset(read_word_list("stopwords.txt") - keep - protected)


def remove_stopwords(tokens) -> list[str]:
    drop = stop_words()
    return [t for t in tokens if t not in drop]


def _protected_words(vip: VipTable | None) -> frozenset[str]:
    words = set()
    if vip is not None:
        for phrase in vip.entries.values():
            words.update(phrase.split())
    return frozenset(words)


def _lowercase_keep_protected(text: str, protected: frozenset[str]) -> str:
    out = []
    for chunk in text.split():
        if len(chunk) >= 2 and chunk.isupper():
            out.append(chunk)  # acronym
        elif chunk.strip(_QUOTE_CHARS) in protected:
            out.append(chunk)
        else:
            out.append(chunk.lower())
    return " ".join(out)


def normalize_text(text: str, pipeline: str, vip: VipTable | None = None) -> list[str]:
    """Run one pipeline over raw text and return the token list."""
    if pipeline not in PIPELINES:
        raise ValueError(f"unknown pipeline {pipeline!r}; expected one of {PIPELINES}")
    text = replace_urls(text)
    text = replace_mentions(text, vip)
    text = strip_trailing_hashtags(text)
    text = unify_covid(text)
    text = _split_hashtags_in_text(text)
    text = unify_covid(text)
    text = expand_quantities(text)
    text = strip_punctuation(text)
    text = _lowercase_keep_protected(text, _protected_words(vip))
    if pipeline in (CORONA, SWC):
        text = corona_swap(text)
    tokens = text.split()
    if pipeline == SWC:
        tokens = remove_stopwords(tokens)
    return tokens


def normalize(tweet: Tweet, pipeline: str, vip: VipTable | None = None) -> NormalizedTweet:
    tokens = normalize_text(tweet.text, pipeline, vip)
    return NormalizedTweet(tweet_id=tweet.tweet_id, tokens=tuple(tokens), pipeline=pipeline)
