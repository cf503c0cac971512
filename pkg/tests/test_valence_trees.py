"""
tests/test_valence_trees.py — U-decompositions, evaluations, commuting blocks and sequences.

Run with:
    pytest tests/test_valence_trees.py -v
"""

from __future__ import annotations

import random

import networkx as nx
import pytest
from hypothesis import given
from hypothesis import strategies as st

from errors import (
    CommuteBoundError,
    EvaluationCapError,
    InvalidTreeError,
    RewriteError,
    TargetValueError,
    UnsupportedMonoidError,
)
from monoid import cyclic_group, int_vectors, mul, product_of, symmetric_group
from valence_trees import (
    ValenceTree,
    block_count,
    block_pairs,
    bounded_excursiveness_values,
    commute_bound,
    commute_holds,
    commute_indices,
    evaluate,
    evaluations,
    find_commuting_indices,
    is_linear_extension,
    iter_joins,
    iter_shuffles,
    join_sequences,
    minimize_excursiveness,
    preorder_evaluation,
    profile,
    profile_leq,
    rewrite_evaluation,
    shuffle_sequences,
    u_decomposition,
    valence_sequence,
    value_set,
)

# ──────────────────────────────────────────────────────────────────────────────
# Fixtures
# ──────────────────────────────────────────────────────────────────────────────

Z2 = cyclic_group(2)
Z3 = cyclic_group(3)
S3 = symmetric_group(3)

X = ("a", "b", "c", "d")


def random_tree(rng, M, max_nodes=7):
    n = rng.randint(1, max_nodes)
    names = [f"n{i}" for i in range(n)]
    parents = {"n0": None}
    for i in range(1, n):
        parents[names[i]] = names[rng.randrange(i)]
    valences = {name: rng.choice(M.elements) for name in names}
    return ValenceTree(M, parents, valences)


@pytest.fixture(scope="module")
def two_branch():
    """r → a → a′ and r → b → b′, every valence g."""
    parents = {"r": None, "a": "r", "b": "r", "a'": "a", "b'": "b"}
    return ValenceTree(Z2, parents, {n: "g" for n in parents})


@pytest.fixture(scope="module")
def forked():
    """r with children u, v, each with two leaves."""
    parents = {"r": None, "u": "r", "v": "r", "u1": "u", "u2": "u", "v1": "v", "v2": "v"}
    return ValenceTree(Z2, parents, {n: "g" for n in parents})


# ──────────────────────────────────────────────────────────────────────────────
# U-decompositions
# ──────────────────────────────────────────────────────────────────────────────

class TestUDecomposition:
    def test_example(self):
        d = u_decomposition("baaba", {"a"})
        assert d.parts == (("b",), ("a", "a"), ("b",), ("a",), ())
        assert d.count == 2

    def test_no_blocks(self):
        assert u_decomposition("bbb", {"a"}).count == 0
        assert u_decomposition("", {"a"}).parts == ((),)

    @given(st.lists(st.sampled_from(X), max_size=12), st.sets(st.sampled_from(X)))
    def test_structure(self, w, U):
        d = u_decomposition(w, U)
        assert sum(d.parts, ()) == tuple(w)
        assert all(b and set(b) <= U for b in d.blocks)
        assert all(not (set(g) & U) for g in d.gaps)
        assert all(g for g in d.gaps[1:-1])

    def test_moving_a_block_right_never_adds_blocks(self):
        rng = random.Random(99)
        for _ in range(1000):
            U = set(rng.sample(X, rng.randint(1, 3)))
            rest = [s for s in X if s not in U]
            mode = rng.randrange(3)
            if mode == 0:
                V = set(rng.sample(sorted(U), rng.randint(0, len(U))))
            elif mode == 1:
                V = U | set(rng.sample(rest, rng.randint(0, len(rest))))
            else:
                V = set(rng.sample(rest, rng.randint(0, len(rest))))
            r = [rng.choice(X) for _ in range(rng.randint(0, 4))] + [rng.choice(sorted(U))]
            x = [rng.choice(sorted(U)) for _ in range(rng.randint(1, 3))]
            y = [rng.choice(rest) for _ in range(rng.randint(1, 3))]
            s = [] if rng.random() < 0.3 else [rng.choice(rest)] + [rng.choice(X) for _ in range(rng.randint(0, 3))]
            assert block_count(r + x + y + s, V) <= block_count(r + y + x + s, V), (r, x, y, s, U, V)


# ──────────────────────────────────────────────────────────────────────────────
# Trees and evaluations
# ──────────────────────────────────────────────────────────────────────────────

class TestTree:
    def test_rejects_two_roots(self):
        with pytest.raises(InvalidTreeError):
            ValenceTree(Z2, {"a": None, "b": None}, {"a": "1", "b": "1"})

    def test_rejects_unknown_parent(self):
        with pytest.raises(InvalidTreeError):
            ValenceTree(Z2, {"a": None, "b": "z"}, {"a": "1", "b": "1"})

    def test_rejects_cycle(self):
        with pytest.raises(InvalidTreeError):
            ValenceTree(Z2, {"r": None, "a": "b", "b": "a"}, {"r": "1", "a": "1", "b": "1"})

    def test_subtrees(self, two_branch):
        assert two_branch.subtrees["a"] == {"a", "a'"}
        assert two_branch.root == "r"
        assert two_branch.children("r") == ("a", "b")


class TestEvaluations:
    def test_interleaved_order(self, two_branch):
        order = ("r", "a", "b", "a'", "b'")
        assert profile(two_branch, order)["a"] == 2
        assert evaluate(two_branch, order).excursiveness == 2

    def test_preorder_is_one_block(self, two_branch):
        ev = preorder_evaluation(two_branch)
        assert ev.order == ("r", "a", "a'", "b", "b'")
        assert ev.excursiveness == 1
        assert ev.value == "g"

    def test_invalid_order(self, two_branch):
        assert not is_linear_extension(two_branch, ("a", "r", "b", "a'", "b'"))
        with pytest.raises(InvalidTreeError):
            evaluate(two_branch, ("a", "r", "b", "a'", "b'"))

    def test_valence_sequence(self, two_branch):
        assert valence_sequence(two_branch, ("r", "a", "b", "a'", "b'"), "a") == ["g", "g"]

    def test_matches_topological_sorts(self):
        rng = random.Random(1)
        for _ in range(30):
            tree = random_tree(rng, S3)
            ours = [ev.order for ev in evaluations(tree)]
            assert len(ours) == len(set(ours))
            assert set(ours) == {tuple(o) for o in nx.all_topological_sorts(tree.graph)}
            for ev in evaluations(tree):
                assert ev.value == product_of(S3, (tree.valences[n] for n in ev.order))

    def test_cap(self):
        parents = {f"n{i}": (None if i == 0 else "n0") for i in range(10)}
        tree = ValenceTree(Z2, parents, {n: "1" for n in parents})
        with pytest.raises(EvaluationCapError):
            list(evaluations(tree, cap=9))


# ──────────────────────────────────────────────────────────────────────────────
# Commuting blocks
# ──────────────────────────────────────────────────────────────────────────────

class TestCommute:
    @pytest.mark.parametrize("G, m", [(Z2, 18), (Z3, 56), (S3, 434)])
    def test_bound(self, G, m):
        assert commute_bound(len(G.elements)) == m

    @pytest.mark.parametrize("G", [Z2, Z3, S3])
    def test_random_sequences(self, G):
        rng = random.Random(len(G.elements))
        m = commute_bound(len(G.elements))
        for _ in range(100):
            pairs = [(rng.choice(G.elements), rng.choice(G.elements)) for _ in range(m)]
            k, l = commute_indices(G, pairs)
            assert 1 <= k < l <= m
            assert commute_holds(G, pairs, k, l)

    def test_too_short(self):
        with pytest.raises(CommuteBoundError):
            commute_indices(Z2, [("g", "g")] * 17)

    def test_brute_force_window(self):
        pairs = [("g", "1"), ("1", "g"), ("g", "g")]
        k, l = find_commuting_indices(Z2, pairs)
        assert commute_holds(Z2, pairs, k, l)


class TestRewrite:
    def test_block_swap(self, forked):
        ev = evaluate(forked, ("r", "u", "v", "u1", "v1", "u2", "v2"))
        assert len(block_pairs(forked, ev.order, "u")) == 3
        rewritten = rewrite_evaluation(forked, ev, "u", 1, 3)
        assert rewritten.order == ("r", "u", "u1", "u2", "v", "v1", "v2")
        assert rewritten.value == ev.value
        before, after = profile(forked, ev.order), profile(forked, rewritten.order)
        assert profile_leq(after, before) and after != before

    def test_out_of_range(self, forked):
        ev = preorder_evaluation(forked)
        with pytest.raises(RewriteError):
            rewrite_evaluation(forked, ev, "u", 1, 2)

    def test_value_changing_swap(self):
        # S3 valences that do not commute
        parents = {"r": None, "u": "r", "v": "r", "u1": "u"}
        tree = ValenceTree(S3, parents, {"r": "123", "u": "213", "v": "132", "u1": "213"})
        ev = evaluate(tree, ("r", "u", "v", "u1"))
        assert mul(S3, "213", "132") != mul(S3, "132", "213")
        with pytest.raises(RewriteError):
            rewrite_evaluation(tree, ev, "u", 1, 2)

    def test_minimize_to_preorder_shape(self, forked):
        start = evaluate(forked, ("r", "u", "v", "u1", "v1", "u2", "v2"))
        ev = minimize_excursiveness(forked, start.value, start=start, bound=1)
        assert ev.value == start.value
        assert ev.excursiveness == 1
        assert is_linear_extension(forked, ev.order)

    def test_unreachable_target(self):
        tree = ValenceTree(Z2, {"r": None, "a": "r"}, {"r": "1", "a": "1"})
        with pytest.raises(TargetValueError):
            minimize_excursiveness(tree, "g")

    def test_needs_finite_group(self):
        tree = ValenceTree(int_vectors(1), {"r": None}, {"r": (1,)})
        with pytest.raises(UnsupportedMonoidError):
            minimize_excursiveness(tree, (1,))


# ──────────────────────────────────────────────────────────────────────────────
# Sequences
# ──────────────────────────────────────────────────────────────────────────────

class TestSequences:
    def test_join(self):
        assert join_sequences(Z2, ("g", "g")) == {("1",), ("g", "g")}
        assert join_sequences(Z2, ()) == {()}

    @given(st.lists(st.sampled_from(S3.elements), min_size=1, max_size=6))
    def test_join_contains_input_and_product(self, sigma):
        joined = join_sequences(S3, tuple(sigma))
        assert tuple(sigma) in joined
        assert (product_of(S3, sigma),) in joined
        assert all(1 <= len(j) <= len(sigma) for j in joined)
        assert all(product_of(S3, j) == product_of(S3, sigma) for j in joined)

    def test_shuffle(self):
        assert shuffle_sequences([("a", "b")], [("c",)]) == {("c", "a", "b"), ("a", "c", "b"), ("a", "b", "c")}
        assert shuffle_sequences([()], [("c",)]) == {("c",)}

    def test_lazy_shuffles_match(self):
        a, b, c = ("1", "g", "g"), ("g", "1"), ("g",)
        assert set(iter_shuffles([a, b])) == shuffle_sequences([a], [b])
        assert set(iter_shuffles([a, b, c])) == shuffle_sequences(shuffle_sequences([a], [b]), [c])
        assert list(iter_shuffles([(), ()])) == [()]

    def test_lazy_joins_match(self):
        sigma = ("213", "132", "213", "321")
        one = "123"
        assert set(iter_joins(S3, sigma)) == join_sequences(S3, sigma)
        reduced = {tuple(x for x in j if x != one) for j in join_sequences(S3, sigma)}
        assert set(iter_joins(S3, sigma, drop=one)) == reduced
        assert set(iter_joins(S3, sigma, drop=one, limit=2)) == {j for j in reduced if len(j) <= 2}
        assert list(iter_joins(S3, ())) == [()]

    def test_tick_interrupts_large_shuffle(self):
        spent = []

        def tick(cost):
            spent.append(cost)
            if len(spent) > 1000:
                raise RuntimeError("budget")

        with pytest.raises(RuntimeError):
            for _ in iter_shuffles([("g",) * 40, ("1",) * 40], tick):
                pass
        assert len(spent) == 1001

    @pytest.mark.parametrize("M, trials", [(Z2, 500), (Z3, 300)])
    def test_bounded_values_match_enumeration(self, M, trials):
        rng = random.Random(42)
        for i in range(trials):
            tree = random_tree(rng, M)
            expected = value_set(tree)
            assert bounded_excursiveness_values(tree) == expected
            if i % 25 == 0:
                for value in expected:
                    ev = minimize_excursiveness(tree, value)
                    assert ev.value == value
                    assert ev.excursiveness <= commute_bound(len(M.elements))

    def test_bounded_values_over_s3(self):
        rng = random.Random(8)
        for _ in range(20):
            tree = random_tree(rng, S3, max_nodes=5)
            assert bounded_excursiveness_values(tree) == value_set(tree)

    def test_sequence_bound(self, two_branch):
        assert bounded_excursiveness_values(two_branch, m=1) == value_set(two_branch)
        assert bounded_excursiveness_values(two_branch, m=0) == frozenset()
