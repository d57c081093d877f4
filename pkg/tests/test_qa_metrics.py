import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sgloc.qa_metrics import Taxonomy, TaxonomyError, token_accuracy, tokenize, wup_similarity, wups_at, wups_score

TAX = Taxonomy.bundled()
SMALL = Taxonomy.from_lines(["root root", "a root", "b root", "a1 a", "a2 a", "b1 b"])
VOCAB = sorted(TAX.parents) + ["zebra", "quux"]


def test_token_accuracy_examples():
    assert token_accuracy([("basketball player", "basketball player")]) == 1.0
    assert token_accuracy([("basketball", "basketball player")]) == 0.5
    assert token_accuracy([("player basketball", "basketball player")]) == 0.0
    assert token_accuracy([("Basketball Player", "basketball player"), ("x", "y")]) == 0.5


def test_token_accuracy_empty_truth():
    with pytest.raises(ValueError, match="pair 1"):
        token_accuracy([("a", "a"), ("a", "")])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.sampled_from("abc"), max_size=5), st.lists(st.sampled_from("abc"), min_size=1, max_size=4))
def test_token_accuracy_one_iff_prefix(pred, truth):
    acc = token_accuracy([(pred, truth)])
    assert (acc == 1.0) == (len(pred) >= len(truth) and pred[:len(truth)] == truth)


def test_taxonomy_structure():
    assert TAX.root == "entity" and TAX.depth("entity") == 1
    assert 90 <= len(TAX) <= 130
    for bad in (["a a", "b b"], ["a b", "b a", "r r"], ["r r", "a missing"], ["r r", "a r", "a b", "b r"],
                ["r r", "a r extra"]):
        with pytest.raises(TaxonomyError):
            Taxonomy.from_lines(bad)


def test_wup_examples():
    assert wup_similarity(SMALL, "a1", "a1") == 1.0
    assert wup_similarity(SMALL, "a", "b") == 0.5
    assert wup_similarity(SMALL, "a1", "a2") == pytest.approx(2 * 2 / 6)
    assert wup_similarity(SMALL, "zebra", "quux") == 0.0
    assert wup_similarity(SMALL, "zebra", "zebra") == 1.0
    assert wup_similarity(SMALL, "a1", "zebra") == 0.0


def test_wups_examples():
    assert wups_at([("basketball player", "basketball player")], TAX) == 1.0
    assert wups_at([("a", "b")], SMALL, 0.9) == pytest.approx(0.05, abs=1e-15)
    assert wups_at([("", "a")], SMALL) == 0.0


def _oracle(pred, truth, tax, gamma):
    """Direct double loop over tokens with explicit depth arithmetic."""
    def depth(t):
        d = 1
        while tax.parents[t] != t:
            t = tax.parents[t]
            d += 1
        return d

    def ancestors(t):
        out = [t]
        while tax.parents[t] != t:
            t = tax.parents[t]
            out.append(t)
        return out

    def W(a, b):
        if a not in tax.parents or b not in tax.parents:
            w = float(a == b)
        else:
            anc_b = set(ancestors(b))
            lcs = next(x for x in ancestors(a) if x in anc_b)
            w = 2 * depth(lcs) / (depth(a) + depth(b))
        return w if w >= gamma else 0.1 * w

    p, q = pred.lower().split(), truth.lower().split()
    if not p:
        return 0.0
    fwd = math.prod(max(W(a, b) for b in q) for a in p)
    bwd = math.prod(max(W(a, b) for a in p) for b in q)
    return min(fwd, bwd)


def test_wups_matches_double_loop_oracle():
    rng = np.random.default_rng(0)
    for _ in range(300):
        pred = " ".join(rng.choice(VOCAB, size=rng.integers(0, 4)))
        truth = " ".join(rng.choice(VOCAB, size=rng.integers(1, 4)))
        gamma = float(rng.choice([0.9, 0.5, 1.0]))
        assert abs(wups_score(pred, truth, TAX, gamma) - _oracle(pred, truth, TAX, gamma)) <= 1e-12


@settings(max_examples=200, deadline=None)
@given(st.lists(st.sampled_from(VOCAB), min_size=1, max_size=4), st.lists(st.sampled_from(VOCAB), min_size=1, max_size=4))
def test_wups_properties(a, b):
    s = wups_at([(a, b)], TAX, 0.9)
    assert 0.0 <= s <= 1.0
    assert wups_at([(a, a)], TAX, 0.9) == 1.0
    assert wups_at([(a, b)], TAX, 1.0) == wups_at([(b, a)], TAX, 1.0)


def test_tokenize():
    assert tokenize("  Basketball   PLAYER ") == ["basketball", "player"]
    assert tokenize(["A", "b"]) == ["a", "b"]
