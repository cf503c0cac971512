"""
tests/test_monoid.py — Monoid handles, products, generator maps and literals.

Run with:
    pytest tests/test_monoid.py -v
"""

from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from errors import ElementMismatchError, MonoidOverflowError, MonoidTableError, UnknownSymbolError, UnsupportedMonoidError
from config import INT_MAX
from monoid import (
    GenMap,
    as_finite_table,
    bicyclic,
    cyclic_group,
    direct_product,
    elements_of,
    eval_word,
    finite_table,
    format_element,
    full_transformations,
    has_infinite_order,
    identity,
    int_vectors,
    is_commutative,
    is_torsion_unit,
    mul,
    norm,
    opposite,
    parse_literal,
    power,
    random_element,
    symmetric_group,
    to_literal,
)

# ──────────────────────────────────────────────────────────────────────────────
# Fixtures / strategies
# ──────────────────────────────────────────────────────────────────────────────

Z2 = cyclic_group(2)
S3 = symmetric_group(3)
Z1 = int_vectors(1)
Z3V = int_vectors(3)
B1 = bicyclic(1)
B2 = bicyclic(2)

P, Q = (0, 1), (1, 0)

small_ints = st.integers(min_value=-50, max_value=50)
naturals = st.integers(min_value=0, max_value=20)
vectors3 = st.tuples(small_ints, small_ints, small_ints)
bicyclic_pairs = st.tuples(naturals, naturals)
bicyclic_quads = st.tuples(naturals, naturals, naturals, naturals)
s3_elements = st.sampled_from(S3.elements)


# ──────────────────────────────────────────────────────────────────────────────
# Finite tables
# ──────────────────────────────────────────────────────────────────────────────

class TestFiniteTable:
    def test_z2_from_rows(self):
        M = finite_table(["1", "g"], "1", [["1", "g"], ["g", "1"]])
        assert mul(M, "g", "g") == "1"
        assert identity(M) == "1"

    def test_z2_from_mapping(self):
        M = finite_table(["1", "g"], "1", {"1": {"1": "1", "g": "g"}, "g": {"1": "g", "g": "1"}})
        assert mul(M, "1", "g") == "g"

    def test_non_associative_rejected(self):
        # a·a = b, b·a = 1, a·b = b: (aa)a = 1 but a(aa) = b
        with pytest.raises(MonoidTableError):
            finite_table(["1", "a", "b"], "1", [["1", "a", "b"], ["a", "b", "b"], ["b", "1", "b"]])

    def test_bad_identity_rejected(self):
        with pytest.raises(MonoidTableError):
            finite_table(["1", "g"], "g", [["1", "g"], ["g", "1"]])

    def test_non_square_rejected(self):
        with pytest.raises(MonoidTableError):
            finite_table(["1", "g"], "1", [["1", "g"]])

    def test_missing_row_rejected(self):
        with pytest.raises(MonoidTableError):
            finite_table(["1", "g"], "1", {"1": {"1": "1", "g": "g"}})

    def test_cell_outside_carrier_rejected(self):
        with pytest.raises(MonoidTableError):
            finite_table(["1", "g"], "1", [["1", "g"], ["g", "h"]])

    def test_foreign_element_rejected(self):
        with pytest.raises(ElementMismatchError):
            mul(Z2, "g", "h")

    def test_symmetric_group_is_not_commutative(self):
        assert len(S3.elements) == 6
        assert not is_commutative(S3)
        assert is_commutative(Z2)

    def test_full_transformations_size(self):
        assert len(full_transformations(2).elements) == 4


class TestTableLaws:
    @given(s3_elements, s3_elements, s3_elements)
    def test_associativity(self, a, b, c):
        assert mul(S3, mul(S3, a, b), c) == mul(S3, a, mul(S3, b, c))

    @given(s3_elements)
    def test_identity(self, a):
        one = identity(S3)
        assert mul(S3, one, a) == a == mul(S3, a, one)

    @given(s3_elements, s3_elements)
    def test_opposite_reverses(self, a, b):
        assert mul(opposite(S3), a, b) == mul(S3, b, a)


# ──────────────────────────────────────────────────────────────────────────────
# ℤᵏ
# ──────────────────────────────────────────────────────────────────────────────

class TestIntVectors:
    def test_addition(self):
        assert mul(int_vectors(2), (1, -2), (3, 5)) == (4, 3)

    def test_rank_zero_is_trivial(self):
        Z0 = int_vectors(0)
        assert identity(Z0) == ()
        assert Z0.is_finite
        assert elements_of(Z0) == ((),)

    def test_overflow(self):
        with pytest.raises(MonoidOverflowError):
            mul(Z1, (INT_MAX,), (1,))

    def test_wrong_length_rejected(self):
        with pytest.raises(ElementMismatchError):
            mul(int_vectors(2), (1,), (2, 3))

    def test_self_opposite(self):
        assert opposite(Z3V) == Z3V

    @given(vectors3, vectors3, vectors3)
    def test_associativity(self, a, b, c):
        assert mul(Z3V, mul(Z3V, a, b), c) == mul(Z3V, a, mul(Z3V, b, c))

    @given(vectors3)
    def test_norm_is_l1(self, a):
        assert norm(Z3V, a) == sum(abs(x) for x in a)


# ──────────────────────────────────────────────────────────────────────────────
# Bicyclic
# ──────────────────────────────────────────────────────────────────────────────

class TestBicyclic:
    def test_pq_is_identity(self):
        assert mul(B1, P, Q) == (0, 0)

    def test_qp_is_not_identity(self):
        assert mul(B1, Q, P) == (1, 1)

    def test_powers_cancel(self):
        assert mul(B1, power(B1, P, 4), power(B1, Q, 4)) == (0, 0)
        assert mul(B1, power(B1, Q, 4), power(B1, P, 4)) == (4, 4)

    def test_negative_coordinate_rejected(self):
        with pytest.raises(ElementMismatchError):
            mul(B1, (-1, 0), P)

    def test_opposite_unsupported(self):
        with pytest.raises(UnsupportedMonoidError):
            opposite(B1)

    def test_not_commutative(self):
        assert not is_commutative(B1)

    @given(bicyclic_pairs, bicyclic_pairs, bicyclic_pairs)
    def test_associativity(self, a, b, c):
        assert mul(B1, mul(B1, a, b), c) == mul(B1, a, mul(B1, b, c))

    @given(bicyclic_pairs)
    def test_identity(self, a):
        assert mul(B1, (0, 0), a) == a == mul(B1, a, (0, 0))

    @given(bicyclic_quads, bicyclic_quads)
    def test_power_two_matches_product_of_two(self, a, b):
        product = direct_product(B1, B1)
        split = lambda x: ((x[0], x[1]), (x[2], x[3]))   # noqa: E731
        left = mul(B2, a, b)
        assert split(left) == mul(product, split(a), split(b))

    def test_power_two_random_pairs(self):
        rng = random.Random(7)
        product = direct_product(B1, B1)
        for _ in range(100):
            a, b = random_element(B2, rng), random_element(B2, rng)
            left = mul(B2, a, b)
            right = mul(product, (a[:2], a[2:]), (b[:2], b[2:]))
            assert (left[:2], left[2:]) == right


# ──────────────────────────────────────────────────────────────────────────────
# Products
# ──────────────────────────────────────────────────────────────────────────────

class TestProducts:
    def test_componentwise(self):
        M = direct_product(Z2, Z1)
        assert mul(M, ("g", (2,)), ("g", (-5,))) == ("1", (-3,))
        assert identity(M) == ("1", (0,))

    def test_finiteness(self):
        assert direct_product(Z2, S3).is_finite
        assert not direct_product(Z2, Z1).is_finite

    def test_as_finite_table(self):
        T = as_finite_table(direct_product(Z2, Z2))
        assert len(T.elements) == 4
        assert all(mul(T, a, a) == identity(T) for a in T.elements)

    def test_norm_is_max(self):
        M = direct_product(Z1, B1)
        assert norm(M, ((3,), (1, 1))) == 3

    def test_element_orders(self):
        M = direct_product(Z2, Z1)
        assert has_infinite_order(M, ("1", (1,)))
        assert not has_infinite_order(M, ("g", (0,)))
        assert is_torsion_unit(M, ("g", (0,)))
        assert not is_torsion_unit(B1, P)


# ──────────────────────────────────────────────────────────────────────────────
# Generator maps, literals
# ──────────────────────────────────────────────────────────────────────────────

class TestGenMap:
    def test_eval_empty_word(self):
        gm = GenMap.of(Z1, {"x1": (1,), "x2": (-1,)})
        assert eval_word(Z1, gm, ()) == (0,)

    def test_eval_counter(self):
        gm = GenMap.of(Z1, {"x1": (1,), "x2": (-1,)})
        assert eval_word(Z1, gm, ("x1", "x1", "x2")) == (1,)

    def test_eval_bicyclic(self):
        gm = GenMap.of(B1, {"x_p": P, "x_q": Q})
        assert eval_word(B1, gm, ("x_p", "x_q")) == (0, 0)
        assert eval_word(B1, gm, ("x_q", "x_p")) == (1, 1)

    def test_unknown_symbol(self):
        gm = GenMap.of(Z1, {"x1": (1,), "x2": (-1,)})
        with pytest.raises(UnknownSymbolError) as info:
            eval_word(Z1, gm, ("x3",))
        assert info.value.suggestion in ("x1", "x2")

    def test_image_outside_monoid(self):
        with pytest.raises(ElementMismatchError):
            GenMap.of(Z2, {"x": "h"})

    def test_map_for_other_monoid(self):
        gm = GenMap.of(Z1, {"x1": (1,)})
        with pytest.raises(ElementMismatchError):
            eval_word(int_vectors(2), gm, ("x1",))

    @given(st.lists(st.sampled_from(["x", "y"]), max_size=8), st.lists(st.sampled_from(["x", "y"]), max_size=8))
    @settings(max_examples=60)
    def test_homomorphism(self, u, v):
        gm = GenMap.of(S3, {"x": "213", "y": "231"})
        assert eval_word(S3, gm, u + v) == mul(S3, eval_word(S3, gm, u), eval_word(S3, gm, v))


class TestLiterals:
    @pytest.mark.parametrize("M, lit, elem", [
        (Z2, "g", "g"),
        (int_vectors(2), [1, -1], (1, -1)),
        (Z1, 4, (4,)),
        (B1, [2, 3], (2, 3)),
        (B2, [[1, 0], [0, 2]], (1, 0, 0, 2)),
        (direct_product(Z2, Z1), ["g", [3]], ("g", (3,))),
    ])
    def test_parse_and_write(self, M, lit, elem):
        assert parse_literal(M, lit) == elem
        assert parse_literal(M, to_literal(M, elem)) == elem

    def test_bad_literal(self):
        with pytest.raises(ElementMismatchError):
            parse_literal(Z1, ["a"])

    def test_format(self):
        assert format_element(B1, (1, 2)) == "(1,2)"
        assert format_element(direct_product(Z2, Z1), ("g", (3,))) == "<g|(3)>"
