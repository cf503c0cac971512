"""
analysis.py — Invertibility structure of catalog monoids.

Key responsibilities
────────────────────
1. R(M), L(M), E(M), right/left inverse sets and divisibility ⊑ on finite handles
2. Dichotomy verdicts: a certified finite group for finite monoids, explicit
   ascending-chain prefixes with disjoint inverse sets for ℤᵏ / bicyclic classes
3. The finiteness gate: is R(N) finite for the submonoid N generated by a
   finite set of elements?

Gate methods
────────────
exhaustive-closure   finite handles, always decides
linear-feasibility   ℤᵏ, exact rational Phase-I simplex on a Gordan alternative
class-rule           bicyclic (normal-form shape of the generators), and
                     products whose projections are all finite
bounded-search       everything else, norm-capped; may answer "unknown"
"""

from __future__ import annotations

from collections import deque
from fractions import Fraction
from math import lcm
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

from config import CHAIN_PREFIX_LEN, GATE_SEARCH_LIMIT, NORM_CAP, logger
from errors import ElementMismatchError, EUnavailableError, ValenceError
from models import ChainStep, DichotomyCase, DichotomyVerdict, GateAnswer, GateMethod, GateVerdict
from monoid import (
    BICYCLIC,
    FINITE_TABLE,
    INT_VECTORS,
    PRODUCT,
    GenMap,
    MElem,
    MonoidHandle,
    bicyclic,
    check_element,
    elements_of,
    format_element,
    has_infinite_order,
    identity,
    is_torsion_unit,
    multiplier,
    norm,
    power,
    to_literal,
)


# ──────────────────────────────────────────────────────────────────────────────
# Helpers
# ──────────────────────────────────────────────────────────────────────────────

def _ordered(M: MonoidHandle, elems: Iterable[MElem]) -> Tuple[MElem, ...]:
    elems = set(elems)
    if M.is_finite:
        return tuple(e for e in elements_of(M) if e in elems)
    return tuple(sorted(elems, key=lambda e: (norm(M, e), format_element(M, e))))


def _carrier(M: MonoidHandle, within: Optional[Iterable[MElem]]) -> Tuple[MElem, ...]:
    if within is None:
        return elements_of(M)
    return _ordered(M, within)


# ──────────────────────────────────────────────────────────────────────────────
# Finite handles: closure, R / L / E, inverse sets, divisibility
# ──────────────────────────────────────────────────────────────────────────────

def submonoid_generated(M: MonoidHandle, gens: Iterable[MElem]) -> FrozenSet[MElem]:
    """Closure of gens ∪ {1} under multiplication (finite carrier)."""
    op = multiplier(M)
    gens = [check_element(M, g) for g in gens]
    seen = {identity(M)}
    queue = deque(seen)
    while queue:
        a = queue.popleft()
        for g in gens:
            b = op(a, g)
            if b not in seen:
                seen.add(b)
                queue.append(b)
    return frozenset(seen)


def rinv_set(M: MonoidHandle, a: MElem, within: Optional[Iterable[MElem]] = None) -> FrozenSet[MElem]:
    """All b with ab = 1."""
    op, one = multiplier(M), identity(M)
    check_element(M, a)
    return frozenset(b for b in _carrier(M, within) if op(a, b) == one)


def linv_set(M: MonoidHandle, a: MElem, within: Optional[Iterable[MElem]] = None) -> FrozenSet[MElem]:
    """All b with ba = 1."""
    op, one = multiplier(M), identity(M)
    check_element(M, a)
    return frozenset(b for b in _carrier(M, within) if op(b, a) == one)


def right_invertibles(M: MonoidHandle, within: Optional[Iterable[MElem]] = None) -> FrozenSet[MElem]:
    """R(M), or R(N) when `within` lists the carrier of a submonoid N."""
    carrier = _carrier(M, within)
    return frozenset(a for a in carrier if rinv_set(M, a, carrier))


def left_invertibles(M: MonoidHandle, within: Optional[Iterable[MElem]] = None) -> FrozenSet[MElem]:
    carrier = _carrier(M, within)
    return frozenset(a for a in carrier if linv_set(M, a, carrier))


def e_set(M: MonoidHandle, within: Optional[Iterable[MElem]] = None) -> FrozenSet[MElem]:
    """E(M) = {a | bac = 1 for some b, c}, by exhaustive pair scan."""
    op, one = multiplier(M), identity(M)
    carrier = _carrier(M, within)
    out = set()
    for a in carrier:
        left = {op(b, a) for b in carrier}
        if any(op(ba, c) == one for ba in left for c in carrier):
            out.add(a)
    return frozenset(out)


def divides(M: MonoidHandle, a: MElem, b: MElem) -> Tuple[bool, Optional[Tuple[MElem, MElem]]]:
    """a ⊑ b iff b = a·c and b = d·a for some c, d; returns one witness pair."""
    op = multiplier(M)
    check_element(M, a)
    check_element(M, b)
    carrier = elements_of(M)
    c = next((x for x in carrier if op(a, x) == b), None)
    d = next((x for x in carrier if op(x, a) == b), None)
    if c is None or d is None:
        return False, None
    return True, (c, d)


def disjoint_inverse_violations(M: MonoidHandle) -> List[Tuple[MElem, MElem]]:
    """Pairs s ≠ t, s ⊑ t, whose right or left inverse sets meet; empty on every monoid."""
    carrier = elements_of(M)
    rinv = {a: rinv_set(M, a) for a in carrier}
    linv = {a: linv_set(M, a) for a in carrier}
    bad = []
    for s in carrier:
        for t in carrier:
            if s != t and divides(M, s, t)[0]:
                if rinv[s] & rinv[t] or linv[s] & linv[t]:
                    bad.append((s, t))
    return bad


def check_group(M: MonoidHandle, group: Sequence[MElem], inverses: Dict[MElem, MElem]) -> None:
    """Raise ValenceError unless `group` with `inverses` is a subgroup of M."""
    op, one = multiplier(M), identity(M)
    members = set(group)
    if one not in members:
        raise ValenceError("group certificate misses the identity")
    for a in group:
        b = inverses.get(a)
        if b is None or b not in members or op(a, b) != one or op(b, a) != one:
            raise ValenceError(f"no two-sided inverse for {format_element(M, a)}")
        for c in group:
            if op(a, c) not in members:
                raise ValenceError("group certificate is not closed")


# ──────────────────────────────────────────────────────────────────────────────
# Dichotomy
# ──────────────────────────────────────────────────────────────────────────────

def classify_dichotomy(M: MonoidHandle) -> DichotomyVerdict:
    """
    Finite carriers always land in the finite-group case: R = L = E and the
    set, with its inverse map, is checked to be a group before returning.
    """
    R, L, E = right_invertibles(M), left_invertibles(M), e_set(M)
    if not (R == L == E):
        raise ValenceError(f"R, L and E differ on {M!r}; the table is not a monoid")
    group = _ordered(M, R)
    inverses = {a: next(iter(rinv_set(M, a, group))) for a in group}
    check_group(M, group, inverses)
    logger.info("Dichotomy on %r: finite group of order %d.", M, len(group))
    return DichotomyVerdict(M, DichotomyCase.FINITE_GROUP, "exhaustive", group=group, inverses=inverses)


def _chain_seed(M: MonoidHandle) -> Optional[Tuple[MElem, MElem, str]]:
    """
    (x, y, rule) with xy = 1 and x of infinite order, or None for finite handles.
    Powers of x form an ascending chain in R; powers of y one in L.
    """
    if M.kind == INT_VECTORS and M.rank > 0:
        x = (1,) + (0,) * (M.rank - 1)
        y = (-1,) + (0,) * (M.rank - 1)
        return x, y, "n ↦ n·e₁, inverse −n·e₁"
    if M.kind == BICYCLIC:
        rest = (0,) * (2 * M.power - 2)
        return (0, 1) + rest, (1, 0) + rest, "n ↦ pⁿ in R (inverse qⁿ), n ↦ qⁿ in L (inverse pⁿ)"
    if M.kind == PRODUCT:
        for i, f in enumerate(M.factors):
            seed = _chain_seed(f)
            if seed is None:
                continue
            x, y, rule = seed
            ones = [identity(g) for g in M.factors]
            xs, ys = list(ones), list(ones)
            xs[i], ys[i] = x, y
            return tuple(xs), tuple(ys), f"factor {i}: {rule}"
    return None


def classify_catalog(M: MonoidHandle, prefix_len: int = CHAIN_PREFIX_LEN) -> DichotomyVerdict:
    """
    Dichotomy for any catalog handle.

    Finite handles go through classify_dichotomy. Otherwise the verdict lists
    x, x², … (in R) and y, y², … (in L) with the c = d factors of each ⊑ step
    and the inverse witnesses, which are pairwise distinct because inverse
    sets along the chain are disjoint.
    """
    if M.is_finite:
        return classify_dichotomy(M)
    seed = _chain_seed(M)
    if seed is None:
        raise ValenceError(f"no chain rule for {M!r}")
    x, y, rule = seed

    def chain(gen: MElem) -> List[ChainStep]:
        return [ChainStep(power(M, gen, i), power(M, gen, i + 1), gen, gen) for i in range(1, prefix_len + 1)]

    verdict = DichotomyVerdict(
        M, DichotomyCase.INFINITE_CHAIN, "class-rule",
        r_chain=chain(x),
        l_chain=chain(y),
        r_inverse_witnesses=[power(M, y, i) for i in range(1, prefix_len + 1)],
        l_inverse_witnesses=[power(M, x, i) for i in range(1, prefix_len + 1)],
        chain_rule=rule,
    )
    logger.info("Dichotomy on %r: infinite ascending chains (%s).", M, rule)
    return verdict


# ──────────────────────────────────────────────────────────────────────────────
# Exact Phase-I simplex
# ──────────────────────────────────────────────────────────────────────────────

def _feasible_point(A: Sequence[Sequence[int]], b: Sequence[int]) -> Optional[List[Fraction]]:
    """
    A point x ≥ 0 with A·x = b, or None. Exact rationals, Bland's rule.
    """
    m = len(A)
    n = len(A[0]) if m else 0
    rows: List[List[Fraction]] = []
    for i in range(m):
        row = [Fraction(v) for v in A[i]]
        rhs = Fraction(b[i])
        if rhs < 0:
            row, rhs = [-v for v in row], -rhs
        rows.append(row + [Fraction(int(j == i)) for j in range(m)] + [rhs])
    basis = [n + i for i in range(m)]
    width = n + m

    # reduced costs for "minimise the sum of artificials"
    z = [Fraction(0)] * width
    for j in range(n):
        z[j] = -sum(r[j] for r in rows)

    while True:
        entering = next((j for j in range(width) if z[j] < 0), None)
        if entering is None:
            break
        best: Optional[int] = None
        for i, r in enumerate(rows):
            if r[entering] > 0:
                if best is None:
                    best = i
                    continue
                lhs, cur = r[-1] / r[entering], rows[best][-1] / rows[best][entering]
                if lhs < cur or (lhs == cur and basis[i] < basis[best]):
                    best = i
        if best is None:  # unbounded: cannot happen for a bounded-below objective
            break
        pivot = rows[best][entering]
        rows[best] = [v / pivot for v in rows[best]]
        for i in range(m):
            if i != best and rows[i][entering] != 0:
                f = rows[i][entering]
                rows[i] = [v - f * p for v, p in zip(rows[i], rows[best])]
        f = z[entering]
        z = [zj - f * p for zj, p in zip(z, rows[best][:width])]
        basis[best] = entering

    if any(rows[i][-1] != 0 for i in range(m) if basis[i] >= n):
        return None
    x = [Fraction(0)] * n
    for i, j in enumerate(basis):
        if j < n:
            x[j] = rows[i][-1]
    return x


def _zero_combination(gens: Sequence[Tuple[int, ...]]) -> Optional[List[int]]:
    """Nonnegative integers cᵢ, not all zero, with Σ cᵢgᵢ = 0."""
    k = len(gens[0])
    A = [[g[d] for g in gens] for d in range(k)] + [[1] * len(gens)]
    x = _feasible_point(A, [0] * k + [1])
    if x is None:
        return None
    scale = lcm(*(v.denominator for v in x))
    return [int(v * scale) for v in x]


def _separating_functional(gens: Sequence[Tuple[int, ...]]) -> Optional[List[Fraction]]:
    """y with y·gᵢ ≥ 1 for every generator; variables y⁺, y⁻ and slacks."""
    k, n = len(gens[0]), len(gens)
    A = []
    for i, g in enumerate(gens):
        A.append(list(g) + [-v for v in g] + [-int(j == i) for j in range(n)])
    x = _feasible_point(A, [1] * n)
    if x is None:
        return None
    return [x[d] - x[k + d] for d in range(k)]


# ──────────────────────────────────────────────────────────────────────────────
# Finiteness gate
# ──────────────────────────────────────────────────────────────────────────────

def _gate_finite_handle(M: MonoidHandle, gens: Sequence[MElem]) -> GateVerdict:
    N = submonoid_generated(M, gens)
    R = right_invertibles(M, N)
    return GateVerdict(
        M, GateAnswer.FINITE, GateMethod.EXHAUSTIVE_CLOSURE, _ordered(M, R),
        {"submonoid_size": len(N), "r_set_size": len(R)},
    )


def _gate_int_vectors(M: MonoidHandle, gens: Sequence[MElem]) -> GateVerdict:
    zero = identity(M)
    nonzero = [g for g in dict.fromkeys(gens) if g != zero]
    if not nonzero:
        return GateVerdict(M, GateAnswer.FINITE, GateMethod.LINEAR_FEASIBILITY, (zero,),
                           {"note": "no nonzero generators"})

    coeffs = _zero_combination(nonzero)
    if coeffs is not None:
        combo = [{"generator": list(g), "coefficient": c} for g, c in zip(nonzero, coeffs) if c]
        return GateVerdict(M, GateAnswer.INFINITE, GateMethod.LINEAR_FEASIBILITY, (),
                           {"combination": combo, "sum": list(zero)})

    functional = _separating_functional(nonzero)
    if functional is None:  # one of the two alternatives always holds
        raise ValenceError("linear feasibility found neither a combination nor a functional")
    return GateVerdict(M, GateAnswer.FINITE, GateMethod.LINEAR_FEASIBILITY, (zero,),
                       {"functional": [str(v) for v in functional]})


def _gate_bicyclic(M: MonoidHandle, gens: Sequence[MElem]) -> GateVerdict:
    """
    In ⟨p,q | pq=1⟩ a product has first coordinate 0 only if its first
    non-identity factor does, and second coordinate 0 only if its last one
    does. So R(N) ≠ {1} iff some generator is pᵇ and some generator is qᶜ.
    """
    one = identity(M)
    ps = [g for g in gens if g != one and g[0] == 0]
    qs = [g for g in gens if g != one and g[1] == 0]
    if not ps or not qs:
        return GateVerdict(M, GateAnswer.FINITE, GateMethod.CLASS_RULE, (one,),
                           {"rule": "no generator pair of shape pᵇ, qᶜ"})
    x, y = ps[0], qs[0]
    b, c = x[1], y[0]
    xc, yb = power(M, x, c), power(M, y, b)
    chain = [to_literal(M, power(M, xc, i)) for i in range(1, CHAIN_PREFIX_LEN + 1)]
    return GateVerdict(M, GateAnswer.INFINITE, GateMethod.CLASS_RULE, (), {
        "x": to_literal(M, x), "y": to_literal(M, y),
        "identity": f"x^{c} · y^{b} = 1",
        "right_invertible": to_literal(M, xc),
        "right_inverse": to_literal(M, yb),
        "chain_prefix": chain,
    })


def _projections(M: MonoidHandle, gens: Sequence[MElem]) -> List[Tuple[MonoidHandle, List[MElem]]]:
    if M.kind == BICYCLIC:
        return [(bicyclic(1), [g[2 * i: 2 * i + 2] for g in gens]) for i in range(M.power)]
    return [(f, [g[i] for g in gens]) for i, f in enumerate(M.factors)]


def _maybe_right_invertible(M: MonoidHandle, x: MElem) -> bool:
    if M.kind == BICYCLIC:
        return all(x[i] == 0 for i in range(0, len(x), 2))
    if M.kind == PRODUCT:
        return all(_maybe_right_invertible(f, v) for f, v in zip(M.factors, x))
    return True


def _maybe_right_inverse(M: MonoidHandle, y: MElem) -> bool:
    if M.kind == BICYCLIC:
        return all(y[i] == 0 for i in range(1, len(y), 2))
    if M.kind == PRODUCT:
        return all(_maybe_right_inverse(f, v) for f, v in zip(M.factors, y))
    return True


def _bounded_search(M: MonoidHandle, gens: Sequence[MElem], norm_cap: int, limit: int) -> Optional[Tuple[MElem, MElem, int]]:
    """Look for x·y = 1 in N with x of infinite order; returns (x, y, explored)."""
    op, one = multiplier(M), identity(M)
    seen = {one}
    queue = deque([one])
    while queue and len(seen) < limit:
        a = queue.popleft()
        for g in gens:
            b = op(a, g)
            if b not in seen and norm(M, b) <= norm_cap:
                seen.add(b)
                queue.append(b)
    xs = [x for x in seen if has_infinite_order(M, x) and _maybe_right_invertible(M, x)]
    ys = [y for y in seen if _maybe_right_inverse(M, y)]
    for x in sorted(xs, key=lambda e: (norm(M, e), format_element(M, e))):
        for y in ys:
            if op(x, y) == one:
                return x, y, len(seen)
    logger.debug("Bounded gate search explored %d elements of %r.", len(seen), M)
    return None


def gate_for_generators(
    M: MonoidHandle,
    gens: Iterable[MElem],
    norm_cap: int = NORM_CAP,
    limit: int = GATE_SEARCH_LIMIT,
) -> GateVerdict:
    """Is R(N) finite for N = ⟨gens⟩ ⊆ M?"""
    gens = list(dict.fromkeys(check_element(M, g) for g in gens))

    if M.is_finite:
        verdict = _gate_finite_handle(M, gens)
    elif M.kind == INT_VECTORS:
        verdict = _gate_int_vectors(M, gens)
    elif M.kind == BICYCLIC and M.power == 1:
        verdict = _gate_bicyclic(M, gens)
    else:
        verdict = _gate_composite(M, gens, norm_cap, limit)

    log = logger.warning if verdict.answer == GateAnswer.UNKNOWN else logger.info
    log("Gate on %r with %d generators: %s (%s).", M, len(gens), verdict.answer.value, verdict.method.value)
    return verdict


def _gate_composite(M: MonoidHandle, gens: List[MElem], norm_cap: int, limit: int) -> GateVerdict:
    parts = [gate_for_generators(f, fg, norm_cap, limit) for f, fg in _projections(M, gens)]
    if all(p.is_finite for p in parts):
        # R(N) is then a finite group; every generator in a factorisation of
        # one of its elements lies in it, so it is generated by the torsion units.
        units = [g for g in gens if is_torsion_unit(M, g)]
        R = submonoid_generated(M, units)
        return GateVerdict(M, GateAnswer.FINITE, GateMethod.CLASS_RULE, _ordered(M, R), {
            "rule": "every projection has finite R; R(N) generated by torsion-unit generators",
            "projections": [p.method.value for p in parts],
        })

    found = _bounded_search(M, gens, norm_cap, limit)
    if found is not None:
        x, y, explored = found
        return GateVerdict(M, GateAnswer.INFINITE, GateMethod.BOUNDED_SEARCH, (), {
            "right_invertible": to_literal(M, x),
            "right_inverse": to_literal(M, y),
            "explored": explored,
        })
    return GateVerdict(M, GateAnswer.UNKNOWN, GateMethod.BOUNDED_SEARCH, (), {
        "norm_cap": norm_cap, "limit": limit,
    })


def units_finite_gate(M: MonoidHandle, gm: GenMap, norm_cap: int = NORM_CAP) -> GateVerdict:
    if gm.monoid != M:
        raise ElementMismatchError("generator map belongs to a different monoid")
    return gate_for_generators(M, gm.generators, norm_cap)


def e_set_of(verdict: GateVerdict) -> FrozenSet[MElem]:
    """E(N); equal to R(N) whenever the gate answered finite."""
    if not verdict.is_finite:
        raise EUnavailableError(f"gate answered {verdict.answer.value}; E(N) is not certified")
    return frozenset(verdict.r_set)
