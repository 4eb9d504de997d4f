import pytest
from hypothesis import given, settings, strategies as st

from qablueprint.core import Summary
from qablueprint.propsplit import SplitConfig, split_propositions, split_summary

import shelby

CFG = SplitConfig()


def texts(props):
    return [p.text for p in props]


def test_leading_coordination_stripped():
    props = split_propositions("and from 1969 to 1970 by Ford.")
    assert texts(props) == ["from 1969 to 1970 by Ford."]
    # the stripped connector stays inside the partition cell
    assert props[0].extent.start == 0 and props[0].span.start == 4


def test_short_sentence_is_one_proposition():
    assert texts(split_propositions("Hello world")) == ["Hello world"]


def test_table1_sentence1_boundaries():
    sentence = shelby.summary().sentence_texts()[0]
    props = split_propositions(sentence)
    # first cut at the comma after "1968,", right side is the P4 clause;
    # the left side is cut again at "which"
    assert texts(props) == [
        "The Shelby Mustang is a high performance variant of the Ford Mustang",
        "was built by Shelby American from 1965 to 1968,",
        "from 1969 to 1970 by Ford.",
    ]


def test_table1_summary_golden():
    props = split_summary(shelby.summary())
    assert len(props) == 6
    assert texts(props) == [
        "The Shelby Mustang is a high performance variant of the Ford Mustang",
        "was built by Shelby American from 1965 to 1968,",
        "from 1969 to 1970 by Ford.",
        "Following the introduction of the fifth generation Ford Mustang in 2005,",
        "the Shelby nameplate was revived as a new high-performance model,",
        "this time designed and built by Ford.",
    ]
    for p in props:
        assert p.span.slice(shelby.SUMMARY) == p.text


def test_single_sentence_summary_passthrough():
    text = "The cat sat on the mat with a hat in the sun, and then it slept for hours in the warm afternoon light."
    summary = Summary.from_text(text)
    assert split_summary(summary) == split_propositions(text)


def test_two_sentence_summary_stays_within_sentences():
    summary = shelby.summary()
    for p in split_summary(summary):
        assert any(s.contains(p.extent) for s in summary.sentences)


def test_config_validation():
    with pytest.raises(ValueError):
        SplitConfig(min_words=0)
    with pytest.raises(ValueError):
        SplitConfig(min_words=5, max_words=4)
    with pytest.raises(ValueError):
        SplitConfig(prepositions=())


def test_empty_sentence_rejected():
    with pytest.raises(ValueError):
        split_propositions("   ")


WORDS = ["and", "which", "the", "car", "by", "from", "Ford", "in", "was", "built", "of", "red"]
word_st = st.sampled_from(WORDS).flatmap(
    lambda w: st.sampled_from([w, w + ",", w + ".", w + ";"])
)
sentence_st = st.lists(word_st, min_size=1, max_size=40).map(" ".join)


def content_words(text: str, config: SplitConfig) -> int:
    toks = text.split()
    if len(toks) > 1 and toks[0].strip(".,;").lower() in config.connectors:
        toks = toks[1:]
    return sum(any(c.isalnum() for c in t) for t in toks)


@settings(max_examples=300)
@given(sentence_st)
def test_partition_reconstructs_sentence(sentence):
    props = split_propositions(sentence)
    # extents tile the sentence exactly (separated only by whitespace)
    pos = 0
    for p in props:
        assert sentence[pos:p.extent.start].strip() == ""
        assert p.extent.contains(p.span)
        assert p.text == p.span.slice(sentence)
        # anything between extent start and span start is one connector
        stripped = sentence[p.extent.start:p.span.start].strip()
        assert stripped == "" or stripped.strip(".,;").lower() in CFG.connectors
        pos = p.extent.end
    assert sentence[pos:].strip() == ""
    assert props[0].extent.start == 0 and props[-1].extent.end == len(sentence)


@settings(max_examples=300)
@given(sentence_st)
def test_internal_boundaries_are_boundary_tokens(sentence):
    props = split_propositions(sentence)
    boundary_words = CFG.connectors | set(CFG.prepositions)
    for left, right in zip(props, props[1:]):
        prev_tok = sentence[:left.extent.end].split()[-1]
        next_tok = sentence[right.extent.start:].split()[0].strip(".,;").lower()
        assert prev_tok[-1] in ".,;" or next_tok in boundary_words


@settings(max_examples=300)
@given(sentence_st, st.integers(3, 15), st.integers(0, 10))
def test_monotone_in_max_words(sentence, lo, extra):
    small = split_propositions(sentence, SplitConfig(max_words=lo))
    large = split_propositions(sentence, SplitConfig(max_words=lo + extra))
    assert len(large) <= len(small)


@settings(max_examples=300)
@given(sentence_st, st.integers(1, 4))
def test_min_words_respected(sentence, min_words):
    cfg = SplitConfig(min_words=min_words, max_words=max(min_words, 6))
    props = split_propositions(sentence, cfg)
    if len(props) > 1:
        for p in props:
            assert content_words(sentence[p.extent.start:p.extent.end], cfg) >= min_words
