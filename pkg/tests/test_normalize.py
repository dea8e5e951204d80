"""Normalization rules against the golden tables plus rule-level checks."""

import random

import pytest

from checkworthy.fixtures import (
    default_vip_table,
    golden_hashtag_table,
    golden_normalizer_corpus,
)
from checkworthy.normalize import (
    PIPELINES,
    corona_swap,
    expand_quantities,
    normalize_text,
    remove_stopwords,
    replace_mentions,
    replace_urls,
    split_hashtag,
    stop_words,
    strip_punctuation,
    strip_trailing_hashtags,
    unify_covid,
)

VIP = default_vip_table()


@pytest.mark.parametrize("tag,expected", golden_hashtag_table())
def test_hashtag_split_golden(tag, expected):
    assert split_hashtag(tag) == expected


def test_hashtag_split_concat_invariant():
    """Joined output equals the tag body stripped of separators, case aside."""
    for tag, _ in golden_hashtag_table():
        body = tag[1:].replace("_", "").replace("-", "")
        joined = "".join(split_hashtag(tag))
        assert joined.lower() == body.lower()


@pytest.mark.parametrize("pipeline,raw,expected", golden_normalizer_corpus())
def test_normalizer_golden(pipeline, raw, expected):
    assert normalize_text(raw, pipeline, VIP) == expected


class TestIndividualRules:
    def test_urls(self):
        assert replace_urls("see https://t.co/abc") == "see url"
        assert replace_urls("no links here") == "no links here"
        assert replace_urls("a http://x.y b http://z.w") == "a url b url"

    def test_mentions(self):
        assert replace_mentions("@realDonaldTrump said", VIP) == "Donald Trump said"
        assert replace_mentions("@WHO warns", VIP) == "World Health Organization warns"
        assert replace_mentions("@rando42 hi", VIP) == "user hi"

    def test_unify_covid(self):
        assert unify_covid("#covid_19 cases") == "covid-19 cases"
        assert unify_covid("#korona is here") == "corona virus is here"
        assert unify_covid("flu season") == "flu season"
        assert unify_covid("#covidiots rally") == "#covidiots rally"

    def test_trailing_hashtags(self):
        assert (
            strip_trailing_hashtags("This is a scandal! #Covid-19 #Upset #Scandal")
            == "This is a scandal!"
        )
        assert strip_trailing_hashtags("I love #NYC deeply") == "I love #NYC deeply"
        assert strip_trailing_hashtags("Breaking #News url") == "Breaking url"
        # a tweet that is nothing but hashtags keeps them
        assert strip_trailing_hashtags("#Only #Tags") == "#Only #Tags"

    def test_quantities(self):
        assert expand_quantities("7m") == "7 million"
        assert expand_quantities("12k") == "12 thousand"
        assert expand_quantities("3.5M") == "3.5 million"
        assert expand_quantities("5bn") == "5 billion"
        assert expand_quantities("5G network") == "5G network"
        assert expand_quantities("12km away") == "12km away"

    def test_punctuation(self):
        assert strip_punctuation("Really?!") == "Really"
        assert strip_punctuation('He said "hoax".') == 'He said "hoax"'
        assert strip_punctuation("covid-19 wins") == "covid-19 wins"
        assert strip_punctuation("a - b") == "a  b"

    def test_corona_swap(self):
        assert corona_swap("covid-19 spreads") == "ebola spreads"
        assert corona_swap("corona virus panic") == "ebola panic"
        assert corona_swap("ebola history") == "ebola history"

    def test_remove_stopwords(self):
        assert remove_stopwords(["he", "said", "that", "the", "end", "is", "near"]) == [
            "he",
            "said",
            "that",
            "end",
            "near",
        ]
        assert remove_stopwords(["this"]) == ["this"]
        assert remove_stopwords([]) == []

    def test_stop_list_keeps_pronouns(self):
        kept = {"i", "you", "he", "she", "it", "we", "they", "me", "him", "her",
                "us", "them", "this", "that", "these", "those"}
        assert not kept & stop_words()
        assert {"the", "is", "are", "of"} <= stop_words()


class TestPipelineInvariants:
    PIECES = [
        "#TheMoreYouKnow", "#covid19", "#Covid_19", "#COVID2019", "#corona",
        "@realDonaldTrump", "@WHO", "@user123", "https://t.co/abc", "www.cnn.com/x",
        "7m", "12k", "3.5M", "5G", "corona virus", "COVID-19", "ebola",
        '"hoax"', "don't", "U.S.A.", "NYC", "this", "is", "scandal!", "he", "that",
        "#StaySafe", "#B2B", "really?!", "50%", "me@example.com", "--",
    ]

    def _random_text(self, rng):
        return " ".join(rng.choice(self.PIECES) for _ in range(rng.randint(0, 10)))

    def test_idempotent_on_fuzzed_inputs(self):
        rng = random.Random(1337)
        for _ in range(300):
            raw = self._random_text(rng)
            for pipeline in PIPELINES:
                once = normalize_text(raw, pipeline, VIP)
                again = normalize_text(" ".join(once), pipeline, VIP)
                assert once == again, (pipeline, raw)

    def test_no_mentions_urls_or_stray_punctuation(self):
        rng = random.Random(99)
        for _ in range(300):
            raw = self._random_text(rng)
            for pipeline in PIPELINES:
                for tok in normalize_text(raw, pipeline, VIP):
                    assert not tok.startswith("@")
                    assert not tok.startswith("http") and not tok.startswith("www.")

    def test_corona_pipeline_eliminates_covid_terms(self):
        rng = random.Random(7)
        for _ in range(300):
            raw = self._random_text(rng)
            for pipeline in ("corona", "swc"):
                toks = normalize_text(raw, pipeline, VIP)
                assert "covid-19" not in toks
                assert not any(
                    a == "corona" and b == "virus" for a, b in zip(toks, toks[1:])
                )

    def test_swc_output_contains_no_stopwords(self):
        rng = random.Random(21)
        drop = stop_words()
        for _ in range(300):
            toks = normalize_text(self._random_text(rng), "swc", VIP)
            assert not set(toks) & drop
