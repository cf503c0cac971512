"""
tests/test_grammars.py — Valence grammars, normal form, derivation trees and to_cfg.

Run with:
    pytest tests/test_grammars.py -v
"""

from __future__ import annotations

import random

import pytest

from config import SAMPLES_DIR
from data_loader import load_grammar
from errors import (
    ConversionBudgetError,
    DerivationError,
    GateRefusal,
    InvalidDeviceError,
    NotNormalizedError,
    UnknownSymbolError,
)
from grammars import (
    Production,
    SequenceGrammar,
    ValenceGrammar,
    binarize,
    bounded_language,
    derivation_evaluation,
    derivation_from_evaluation,
    derivation_tree_of,
    find_derivation,
    is_normalized,
    normalize,
    to_cfg,
    tree_value_check,
    yield_of,
)
from lab import GRAMMAR_K, WitnessSpec, build_witness_grammar
from models import GateAnswer
from monoid import GenMap, bicyclic, cyclic_group, identity, int_vectors, symmetric_group
from utils import words_up_to

# ──────────────────────────────────────────────────────────────────────────────
# Fixtures / builders
# ──────────────────────────────────────────────────────────────────────────────

Z2 = cyclic_group(2)
Z3 = cyclic_group(3)
S3 = symmetric_group(3)
B1 = bicyclic(1)


def grammar(M, rules, nonterminals=("S",), terminals=("a", "b"), start="S"):
    """rules: (lhs, rhs tokens, valence or None for 1)"""
    one = identity(M)
    productions = tuple(Production(lhs, tuple(rhs), one if h is None else h) for lhs, rhs, h in rules)
    return ValenceGrammar(M, tuple(nonterminals), tuple(terminals), start, productions)


def random_grammar(rng, M):
    """Right-linear-ish grammar: every non-λ body emits a terminal."""
    names = ("S", "A", "B")
    rules = []
    for X in names:
        for _ in range(rng.randint(1, 3)):
            shape = rng.randrange(4)
            t, Y, h = rng.choice("ab"), rng.choice(names), rng.choice(M.elements)
            if shape == 0:
                rules.append((X, [t, Y], h))
            elif shape == 1:
                rules.append((X, [t], h))
            elif shape == 2:
                rules.append((X, [], h))
            else:
                rules.append((X, [t, Y, rng.choice("ab")], h))
    return grammar(M, rules, nonterminals=names)


@pytest.fixture(scope="module")
def even_a():
    return load_grammar(SAMPLES_DIR / "z2_even_a_grammar.json")


@pytest.fixture(scope="module")
def even_a_cfg(even_a):
    return to_cfg(normalize(even_a))


def a_count_filter(maxlen, modulus):
    return tuple(w for w in words_up_to(("a", "b"), maxlen) if w.count("a") % modulus == 0)


# ──────────────────────────────────────────────────────────────────────────────
# Grammar validation and bounded languages
# ──────────────────────────────────────────────────────────────────────────────

class TestGrammar:
    def test_start_must_be_nonterminal(self):
        with pytest.raises(InvalidDeviceError):
            grammar(Z2, [], start="T")

    def test_unknown_body_symbol(self):
        with pytest.raises(UnknownSymbolError):
            grammar(Z2, [("S", ["c"], None)])

    def test_overlapping_alphabets(self):
        with pytest.raises(InvalidDeviceError):
            grammar(Z2, [], nonterminals=("S", "a"))

    def test_valence_outside_monoid(self):
        with pytest.raises(InvalidDeviceError):
            grammar(Z2, [("S", [], "h")])

    def test_loaded_sample(self, even_a):
        assert even_a.start == "S"
        assert [p.rhs for p in even_a.productions] == [("a", "S"), ("b", "S"), ()]
        assert even_a.productions[0].valence == "g"


class TestBoundedLanguage:
    def test_even_a(self, even_a):
        sample = bounded_language(even_a, 6)
        assert sample.complete
        assert sample.words == a_count_filter(6, 2)

    def test_dyck_with_even_pairs(self):
        # S → aSbS counts pairs; the valence keeps an even number of them
        G = grammar(Z2, [("S", ["a", "S", "b", "S"], "g"), ("S", [], None)])
        words = bounded_language(G, 8).words
        assert ("a", "b") not in words
        assert ("a", "b", "a", "b") in words
        assert ("a", "a", "b", "b") in words
        assert all(w.count("a") % 2 == 0 for w in words)

    def test_non_leftmost_orders_count(self):
        # B (valence p) has to be rewritten before A (valence q)
        G = grammar(B1, [("S", ["A", "B"], None), ("A", ["a"], (1, 0)), ("B", ["b"], (0, 1))],
                    nonterminals=("S", "A", "B"))
        assert bounded_language(G, 2).words == (("a", "b"),)

    def test_step_budget_marks_incomplete(self, even_a):
        sample = bounded_language(even_a, 6, max_steps=3)
        assert not sample.complete
        assert ("a", "a") in sample.words

    def test_find_derivation(self, even_a):
        steps = find_derivation(even_a, ("a", "b", "a"))
        assert steps is not None and len(steps) == 4
        assert find_derivation(even_a, ("a",)) is None


# ──────────────────────────────────────────────────────────────────────────────
# Normal form
# ──────────────────────────────────────────────────────────────────────────────

class TestNormalForm:
    def test_lifts_terminals(self):
        G = grammar(Z2, [("S", ["a", "S", "b"], "g"), ("S", [], None)])
        N = normalize(G)
        assert is_normalized(N)
        assert N.nonterminals == ("S", "A_a", "A_b")
        assert N.productions[0] == Production("S", ("A_a", "S", "A_b"), "g")
        assert Production("A_a", ("a",), "1") in N.productions
        assert bounded_language(N, 6).words == bounded_language(G, 6).words

    def test_normal_grammar_unchanged(self):
        G = grammar(Z2, [("S", ["S", "S"], "g"), ("S", ["a"], None), ("S", [], "g")])
        assert is_normalized(G)
        assert normalize(G) is G

    def test_weighted_terminal_rule_is_lifted(self):
        G = grammar(Z2, [("S", ["a"], "g")])
        assert not is_normalized(G)
        assert normalize(G).productions[0] == Production("S", ("A_a",), "g")

    def test_binarize(self):
        G = grammar(Z2, [("S", ["A", "B", "C"], "g"), ("A", ["a"], None), ("B", ["b"], None), ("C", [], "g")],
                    nonterminals=("S", "A", "B", "C"))
        Bn = binarize(G)
        assert Bn.productions[0] == Production("S", ("A", "S_1"), "g")
        assert Bn.productions[1] == Production("S_1", ("B", "C"), "1")
        assert bounded_language(Bn, 3).words == bounded_language(G, 3).words == (("a", "b"),)


# ──────────────────────────────────────────────────────────────────────────────
# Derivation trees
# ──────────────────────────────────────────────────────────────────────────────

class TestDerivationTrees:
    def test_tree_of_derivation(self, even_a):
        steps = find_derivation(even_a, ("a", "b", "a"))
        dt = derivation_tree_of(even_a, steps)
        assert yield_of(dt) == ("a", "b", "a")
        assert len(dt.internal_nodes) == 4
        assert derivation_evaluation(dt).value == identity(Z2)
        assert tree_value_check(dt, derivation_evaluation(dt)) == identity(Z2)

    def test_round_trip_through_evaluation(self, even_a):
        steps = find_derivation(even_a, ("b", "a", "a"))
        dt = derivation_tree_of(even_a, steps)
        assert derivation_from_evaluation(even_a, dt, derivation_evaluation(dt)) == steps

    def test_incomplete_derivation(self, even_a):
        with pytest.raises(DerivationError):
            derivation_tree_of(even_a, [(0, 0)])

    def test_wrong_production(self, even_a):
        with pytest.raises(DerivationError):
            derivation_tree_of(even_a, [(1, 0)])

    def test_evaluations_of_bicyclic_tree(self):
        G = grammar(B1, [("S", ["A", "B"], None), ("A", ["a"], (1, 0)), ("B", ["b"], (0, 1))],
                    nonterminals=("S", "A", "B"))
        steps = find_derivation(G, ("a", "b"))
        assert steps == [(0, 0), (1, 2), (0, 1)]
        dt = derivation_tree_of(G, steps)
        assert derivation_evaluation(dt).value == (0, 0)


# ──────────────────────────────────────────────────────────────────────────────
# to_cfg
# ──────────────────────────────────────────────────────────────────────────────

class TestToCfg:
    def test_requires_normal_form(self, even_a):
        with pytest.raises(NotNormalizedError):
            to_cfg(even_a)

    def test_counter_refused(self):
        Z1 = int_vectors(1)
        G = grammar(Z1, [("S", ["A", "T"], (1,)), ("T", ["S", "B"], (-1,)), ("S", [], None),
                         ("A", ["a"], None), ("B", ["b"], None)],
                    nonterminals=("S", "T", "A", "B"))
        with pytest.raises(GateRefusal) as info:
            to_cfg(G)
        assert info.value.verdict.answer == GateAnswer.INFINITE

    def test_even_a(self, even_a, even_a_cfg):
        assert isinstance(even_a_cfg, SequenceGrammar)
        assert even_a_cfg.start == ("S", ())
        assert even_a_cfg.m == 18
        assert bounded_language(even_a_cfg, 8).words == a_count_filter(8, 2)

    def test_z3_variant(self):
        G = grammar(Z3, [("S", ["a", "S"], "g"), ("S", ["b", "S"], None), ("S", [], None)])
        cfg = to_cfg(normalize(G))
        assert cfg.language(8).words == a_count_filter(8, 3)

    def test_dyck_with_even_pairs(self):
        G = grammar(Z2, [("S", ["a", "S", "b", "S"], "g"), ("S", [], None)])
        assert to_cfg(normalize(G)).language(8).words == bounded_language(G, 8).words

    def test_random_grammars(self):
        rng = random.Random(17)
        checked = 0
        for M, maxlen in ((Z2, 8), (Z3, 8), (S3, 6)):
            for _ in range(4):
                G = random_grammar(rng, M)
                cfg = to_cfg(normalize(G))
                assert cfg.language(maxlen).words == bounded_language(G, maxlen).words, G.to_dict()
                checked += 1
        assert checked >= 10

    def test_witness_grammar_over_z2(self):
        spec = WitnessSpec.build(GRAMMAR_K, Z2, GenMap.of(Z2, {"x1": "g", "x2": "g", "x3": "1"}))
        G = build_witness_grammar(spec)
        cfg = to_cfg(normalize(G))
        expected = bounded_language(G, 8)
        assert expected.complete
        assert cfg.language(8).words == expected.words
        assert ("x1", "c", "x2", "c", "x1") in expected.words

    def test_lambda_growth_hits_work_limit(self):
        # λ-derivations through S → SS lengthen the sequences without producing terminals
        G = grammar(S3, [("S", ["S", "S"], "213"), ("S", ["S", "S"], "132"), ("S", ["a"], None), ("S", [], None)],
                    terminals=("a",))
        assert bounded_language(G, 3).words == ((), ("a",), ("a", "a"), ("a", "a", "a"))
        cfg = to_cfg(normalize(G), item_limit=20_000)
        with pytest.raises(ConversionBudgetError):
            cfg.language(3)

    def test_production_predicate(self, even_a_cfg):
        assert even_a_cfg.is_production(("S", ("g",)), [("A_a", ()), ("S", ())])
        assert not even_a_cfg.is_production(("S", ("g",)), [("A_b", ()), ("S", ())])
        assert even_a_cfg.is_production(("A_a", ()), ["a"])
        assert even_a_cfg.is_production(("S", ()), [])

    def test_fragment_is_classical(self, even_a_cfg):
        fragment = even_a_cfg.fragment(4)
        assert len(fragment.monoid.elements) == 1
        assert bounded_language(fragment, 4).words == even_a_cfg.language(4).words
