"""
monoid.py — Element arithmetic for the monoid catalog.

Catalog kinds
─────────────
finite-table   named elements + total multiplication table (validated on load)
int-vectors    ℤᵏ under addition, elements are k-tuples of ints
bicyclic       j-th power of ⟨p,q | pq = 1⟩; an element is the flat tuple
               (a₁,b₁,…,aⱼ,bⱼ) of normal forms q^a p^b, so power 1 is (a,b)
product        direct product, elements are tuples of component elements

Handles and elements are immutable; every function here is pure.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable, Dict, Hashable, Iterable, List, Mapping, Optional, Sequence, Tuple

from config import INT_MAX, INT_MIN, logger
from errors import (
    ElementMismatchError,
    MonoidOverflowError,
    MonoidTableError,
    UnsupportedMonoidError,
)
from utils import unknown_symbol

MElem = Hashable

FINITE_TABLE = "finite-table"
INT_VECTORS  = "int-vectors"
BICYCLIC     = "bicyclic"
PRODUCT      = "product"


# ──────────────────────────────────────────────────────────────────────────────
# Handle
# ──────────────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class MonoidHandle:
    kind: str
    elements: Tuple[str, ...] = ()
    identity_name: str = ""
    table: Tuple[Tuple[int, ...], ...] = ()
    rank: int = 0
    power: int = 0
    factors: Tuple["MonoidHandle", ...] = ()
    label: str = field(default="", compare=False)

    @cached_property
    def index(self) -> Dict[str, int]:
        return {name: i for i, name in enumerate(self.elements)}

    @property
    def is_finite(self) -> bool:
        if self.kind == FINITE_TABLE:
            return True
        if self.kind == INT_VECTORS:
            return self.rank == 0
        if self.kind == PRODUCT:
            return all(f.is_finite for f in self.factors)
        return False

    def __repr__(self) -> str:
        if self.label:
            return f"<Monoid {self.label}>"
        if self.kind == FINITE_TABLE:
            return f"<Monoid table|{len(self.elements)}|>"
        if self.kind == INT_VECTORS:
            return f"<Monoid Z^{self.rank}>"
        if self.kind == BICYCLIC:
            return f"<Monoid B^{self.power}>"
        return "<Monoid " + " x ".join(repr(f) for f in self.factors) + ">"


# ──────────────────────────────────────────────────────────────────────────────
# Constructors
# ──────────────────────────────────────────────────────────────────────────────

def finite_table(
    elements: Sequence[str],
    identity: str,
    table: "Mapping[str, Mapping[str, str]] | Sequence[Sequence[str]]",
    label: str = "",
) -> MonoidHandle:
    """
    Build and eagerly validate a finite monoid.

    `table` is either {"a": {"b": "ab", …}, …} or a square list of rows in
    the order of `elements`. Raises MonoidTableError unless the table is
    total, square, unital at `identity` and associative (checked O(n³)).
    """
    names = tuple(str(e) for e in elements)
    if not names:
        raise MonoidTableError("a monoid needs at least one element")
    if len(set(names)) != len(names):
        raise MonoidTableError("duplicate element names")
    if identity not in names:
        raise MonoidTableError(f"identity {identity!r} is not an element")
    idx = {n: i for i, n in enumerate(names)}

    rows: List[Tuple[int, ...]] = []
    for i, a in enumerate(names):
        if isinstance(table, Mapping):
            row_map = table.get(a)
            if row_map is None:
                raise MonoidTableError(f"table has no row for {a!r}")
            if set(row_map) != set(names):
                raise MonoidTableError(f"row {a!r} is not total over the elements")
            cells = [row_map[b] for b in names]
        else:
            if len(table) != len(names) or len(table[i]) != len(names):
                raise MonoidTableError("table is not square")
            cells = list(table[i])
        row = []
        for b, cell in zip(names, cells):
            if cell not in idx:
                raise MonoidTableError(f"{a}·{b} = {cell!r} is not an element")
            row.append(idx[cell])
        rows.append(tuple(row))

    e = idx[identity]
    for i in range(len(names)):
        if rows[e][i] != i or rows[i][e] != i:
            raise MonoidTableError(f"{identity!r} is not neutral for {names[i]!r}")

    n = len(names)
    for a, b, c in itertools.product(range(n), repeat=3):
        if rows[rows[a][b]][c] != rows[a][rows[b][c]]:
            raise MonoidTableError(
                f"not associative: ({names[a]}{names[b]}){names[c]} != {names[a]}({names[b]}{names[c]})"
            )

    logger.debug("Loaded finite monoid with %d elements.", n)
    return MonoidHandle(FINITE_TABLE, names, identity, tuple(rows), label=label)


def int_vectors(rank: int) -> MonoidHandle:
    if rank < 0:
        raise ValueError("rank must be >= 0")
    return MonoidHandle(INT_VECTORS, rank=rank)


def bicyclic(power: int = 1) -> MonoidHandle:
    if power < 1:
        raise ValueError("bicyclic power must be >= 1")
    return MonoidHandle(BICYCLIC, power=power)


def direct_product(*factors: MonoidHandle) -> MonoidHandle:
    """Componentwise operation; the identity is the tuple of identities."""
    if not factors:
        raise ValueError("direct_product needs at least one factor")
    return MonoidHandle(PRODUCT, factors=tuple(factors))


def trivial_monoid() -> MonoidHandle:
    return finite_table(["1"], "1", [["1"]], label="1")


def cyclic_group(n: int) -> MonoidHandle:
    """ℤₙ written multiplicatively: 1, g, g2, …, g{n-1}."""
    names = ["1", "g"] + [f"g{i}" for i in range(2, n)] if n > 1 else ["1"]
    rows = [[names[(i + j) % n] for j in range(n)] for i in range(n)]
    return finite_table(names, "1", rows, label=f"Z{n}")


def symmetric_group(n: int) -> MonoidHandle:
    """Sₙ on one-line notation names; (σ·τ)(x) = τ(σ(x))."""
    perms = list(itertools.permutations(range(1, n + 1)))
    names = ["".join(map(str, p)) for p in perms]
    pos = {p: i for i, p in enumerate(perms)}
    rows = [[names[pos[tuple(t[s[x] - 1] for x in range(n))]] for t in perms] for s in perms]
    return finite_table(names, names[0], rows, label=f"S{n}")


def full_transformations(n: int) -> MonoidHandle:
    """All maps {1..n} → {1..n} under composition (first apply left)."""
    maps = list(itertools.product(range(1, n + 1), repeat=n))
    names = ["".join(map(str, m)) for m in maps]
    pos = {m: i for i, m in enumerate(maps)}
    ident = tuple(range(1, n + 1))
    rows = [[names[pos[tuple(t[s[x] - 1] for x in range(n))]] for t in maps] for s in maps]
    return finite_table(names, names[pos[ident]], rows, label=f"T{n}")


# ──────────────────────────────────────────────────────────────────────────────
# Membership / identity
# ──────────────────────────────────────────────────────────────────────────────

def identity(M: MonoidHandle) -> MElem:
    if M.kind == FINITE_TABLE:
        return M.identity_name
    if M.kind == INT_VECTORS:
        return (0,) * M.rank
    if M.kind == BICYCLIC:
        return (0,) * (2 * M.power)
    return tuple(identity(f) for f in M.factors)


def contains(M: MonoidHandle, a: Any) -> bool:
    if M.kind == FINITE_TABLE:
        return isinstance(a, str) and a in M.index
    if M.kind == INT_VECTORS:
        return (isinstance(a, tuple) and len(a) == M.rank
                and all(isinstance(x, int) and not isinstance(x, bool) for x in a))
    if M.kind == BICYCLIC:
        return (isinstance(a, tuple) and len(a) == 2 * M.power
                and all(isinstance(x, int) and not isinstance(x, bool) and x >= 0 for x in a))
    return (isinstance(a, tuple) and len(a) == len(M.factors)
            and all(contains(f, x) for f, x in zip(M.factors, a)))


def check_element(M: MonoidHandle, a: Any) -> MElem:
    if not contains(M, a):
        raise ElementMismatchError(f"{a!r} is not an element of {M!r}")
    return a


def _checked_int(x: int) -> int:
    if x > INT_MAX or x < INT_MIN:
        raise MonoidOverflowError(f"coordinate {x} leaves the {INT_MIN}..{INT_MAX} range")
    return x


# ──────────────────────────────────────────────────────────────────────────────
# Multiplication
# ──────────────────────────────────────────────────────────────────────────────

def multiplier(M: MonoidHandle) -> Callable[[MElem, MElem], MElem]:
    """Unchecked binary operation for hot loops; inputs must already be elements."""
    if M.kind == FINITE_TABLE:
        names, idx, rows = M.elements, M.index, M.table
        return lambda a, b: names[rows[idx[a]][idx[b]]]

    if M.kind == INT_VECTORS:
        return lambda a, b: tuple(_checked_int(x + y) for x, y in zip(a, b))

    if M.kind == BICYCLIC:
        def bic(a: MElem, b: MElem) -> MElem:
            out: List[int] = []
            for i in range(0, len(a), 2):
                a1, b1, c1, d1 = a[i], a[i + 1], b[i], b[i + 1]
                t = min(b1, c1)
                out.append(_checked_int(a1 + c1 - t))
                out.append(_checked_int(b1 + d1 - t))
            return tuple(out)
        return bic

    parts = [multiplier(f) for f in M.factors]
    return lambda a, b: tuple(m(x, y) for m, x, y in zip(parts, a, b))


def mul(M: MonoidHandle, a: MElem, b: MElem) -> MElem:
    """
    The monoid product a·b.

    Bicyclic normal forms compose by (a,b)(c,d) = (a+c−t, b+d−t), t = min(b,c).
    Raises ElementMismatchError if either operand is not an element of M.
    """
    check_element(M, a)
    check_element(M, b)
    return multiplier(M)(a, b)


def product_of(M: MonoidHandle, elems: Iterable[MElem]) -> MElem:
    op = multiplier(M)
    acc = identity(M)
    for e in elems:
        acc = op(acc, e)
    return acc


def power(M: MonoidHandle, a: MElem, n: int) -> MElem:
    return product_of(M, [a] * n)


# ──────────────────────────────────────────────────────────────────────────────
# Generator maps
# ──────────────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class GenMap:
    """Symbol → element assignment; eval_word extends it to the homomorphism φ."""
    monoid: MonoidHandle
    images: Tuple[Tuple[str, MElem], ...]

    @classmethod
    def of(cls, M: MonoidHandle, mapping: Mapping[str, MElem]) -> "GenMap":
        for sym, elem in mapping.items():
            if not contains(M, elem):
                raise ElementMismatchError(f"generator {sym!r} ↦ {elem!r} is not in {M!r}")
        return cls(M, tuple(sorted(mapping.items(), key=lambda kv: kv[0])))

    @cached_property
    def mapping(self) -> Dict[str, MElem]:
        return dict(self.images)

    @property
    def alphabet(self) -> Tuple[str, ...]:
        return tuple(sym for sym, _ in self.images)

    @property
    def generators(self) -> Tuple[MElem, ...]:
        seen: Dict[MElem, None] = {}
        for _, elem in self.images:
            seen.setdefault(elem, None)
        return tuple(seen)


def eval_word(M: MonoidHandle, gm: GenMap, w: Sequence[str]) -> MElem:
    """φ(w), left to right; φ(λ) is the identity."""
    if gm.monoid != M:
        raise ElementMismatchError("generator map belongs to a different monoid")
    op = multiplier(M)
    acc = identity(M)
    for sym in w:
        if sym not in gm.mapping:
            raise unknown_symbol(sym, gm.alphabet)
        acc = op(acc, gm.mapping[sym])
    return acc


# ──────────────────────────────────────────────────────────────────────────────
# Derived handles
# ──────────────────────────────────────────────────────────────────────────────

def opposite(M: MonoidHandle) -> MonoidHandle:
    """a∘b := ba. Tables are transposed; ℤᵏ is commutative and self-opposite."""
    if M.kind == FINITE_TABLE:
        n = len(M.elements)
        rows = tuple(tuple(M.table[j][i] for j in range(n)) for i in range(n))
        return MonoidHandle(FINITE_TABLE, M.elements, M.identity_name, rows,
                            label=f"{M.label}^op" if M.label else "")
    if M.kind == INT_VECTORS:
        return M
    if M.kind == PRODUCT:
        return direct_product(*(opposite(f) for f in M.factors))
    raise UnsupportedMonoidError(f"opposite is not provided for {M.kind} handles")


def elements_of(M: MonoidHandle) -> Tuple[MElem, ...]:
    """Carrier of a finite handle, in a fixed order."""
    if M.kind == FINITE_TABLE:
        return M.elements
    if M.kind == INT_VECTORS and M.rank == 0:
        return ((),)
    if M.kind == PRODUCT and M.is_finite:
        return tuple(itertools.product(*(elements_of(f) for f in M.factors)))
    raise UnsupportedMonoidError(f"{M!r} has an infinite carrier")


def as_finite_table(M: MonoidHandle) -> MonoidHandle:
    """Re-express a finite handle (e.g. a product of tables) as a named table."""
    if M.kind == FINITE_TABLE:
        return M
    carrier = elements_of(M)
    op = multiplier(M)
    names = {e: format_element(M, e) for e in carrier}
    rows = [[names[op(a, b)] for b in carrier] for a in carrier]
    return finite_table([names[e] for e in carrier], names[identity(M)], rows)


# ──────────────────────────────────────────────────────────────────────────────
# Element properties
# ──────────────────────────────────────────────────────────────────────────────

def norm(M: MonoidHandle, a: MElem) -> int:
    """Search norm: 0 on tables, Σ|xᵢ| on ℤᵏ, a+b on bicyclic pairs, max over factors."""
    if M.kind == FINITE_TABLE:
        return 0
    if M.kind == INT_VECTORS:
        return sum(abs(x) for x in a)
    if M.kind == BICYCLIC:
        return max((a[i] + a[i + 1] for i in range(0, len(a), 2)), default=0)
    return max((norm(f, x) for f, x in zip(M.factors, a)), default=0)


def has_infinite_order(M: MonoidHandle, a: MElem) -> bool:
    if M.kind == FINITE_TABLE:
        return False
    if M.kind in (INT_VECTORS, BICYCLIC):
        return a != identity(M)
    return any(has_infinite_order(f, x) for f, x in zip(M.factors, a))


def is_torsion_unit(M: MonoidHandle, a: MElem) -> bool:
    """True iff aᵏ = 1 for some k ≥ 1."""
    if M.kind == FINITE_TABLE:
        op = multiplier(M)
        x = a
        for _ in range(len(M.elements)):
            if x == M.identity_name:
                return True
            x = op(x, a)
        return False
    if M.kind in (INT_VECTORS, BICYCLIC):
        return a == identity(M)
    return all(is_torsion_unit(f, x) for f, x in zip(M.factors, a))


# ──────────────────────────────────────────────────────────────────────────────
# Literals (JSON) and display
# ──────────────────────────────────────────────────────────────────────────────

def parse_literal(M: MonoidHandle, lit: Any) -> MElem:
    """
    JSON literal → element.

    finite → name, int-vectors → [x₁,…,xₖ] (a bare int for rank 1),
    bicyclic → [a,b] for power 1, [[a₁,b₁],…] or flat for higher powers,
    product → list of factor literals.
    """
    try:
        if M.kind == FINITE_TABLE:
            elem: Any = str(lit)
        elif M.kind == INT_VECTORS:
            elem = (int(lit),) if isinstance(lit, int) and M.rank == 1 else tuple(int(x) for x in lit)
        elif M.kind == BICYCLIC:
            flat: List[int] = []
            for x in lit:
                if isinstance(x, (list, tuple)):
                    flat.extend(int(v) for v in x)
                else:
                    flat.append(int(x))
            elem = tuple(flat)
        else:
            if len(lit) != len(M.factors):
                raise ElementMismatchError(f"{lit!r} has the wrong number of components")
            elem = tuple(parse_literal(f, x) for f, x in zip(M.factors, lit))
    except (TypeError, ValueError) as exc:
        raise ElementMismatchError(f"cannot read {lit!r} as an element of {M!r}") from exc
    return check_element(M, elem)


def to_literal(M: MonoidHandle, a: MElem) -> Any:
    if M.kind == FINITE_TABLE:
        return a
    if M.kind == INT_VECTORS:
        return list(a)
    if M.kind == BICYCLIC:
        pairs = [[a[i], a[i + 1]] for i in range(0, len(a), 2)]
        return pairs[0] if M.power == 1 else pairs
    return [to_literal(f, x) for f, x in zip(M.factors, a)]


def format_element(M: MonoidHandle, a: MElem) -> str:
    if M.kind == FINITE_TABLE:
        return str(a)
    if M.kind == INT_VECTORS:
        return "(" + ",".join(str(x) for x in a) + ")"
    if M.kind == BICYCLIC:
        return ".".join(f"({a[i]},{a[i + 1]})" for i in range(0, len(a), 2))
    return "<" + "|".join(format_element(f, x) for f, x in zip(M.factors, a)) + ">"


def describe(M: MonoidHandle) -> Dict[str, Any]:
    """The monoid file form of a handle."""
    if M.kind == FINITE_TABLE:
        return {
            "kind": FINITE_TABLE,
            "elements": list(M.elements),
            "identity": M.identity_name,
            "table": {a: {b: M.elements[M.table[i][j]] for j, b in enumerate(M.elements)}
                      for i, a in enumerate(M.elements)},
        }
    if M.kind == INT_VECTORS:
        return {"kind": INT_VECTORS, "rank": M.rank}
    if M.kind == BICYCLIC:
        return {"kind": BICYCLIC, "power": M.power}
    return {"kind": PRODUCT, "factors": [describe(f) for f in M.factors]}


def random_element(M: MonoidHandle, rng: random.Random, bound: int = 6) -> MElem:
    """Uniform-ish sample: table elements uniformly, coordinates within ±bound."""
    if M.kind == FINITE_TABLE:
        return rng.choice(M.elements)
    if M.kind == INT_VECTORS:
        return tuple(rng.randint(-bound, bound) for _ in range(M.rank))
    if M.kind == BICYCLIC:
        return tuple(rng.randint(0, bound) for _ in range(2 * M.power))
    return tuple(random_element(f, rng, bound) for f in M.factors)


def is_commutative(M: MonoidHandle) -> bool:
    if M.kind == FINITE_TABLE:
        n = len(M.elements)
        return all(M.table[i][j] == M.table[j][i] for i in range(n) for j in range(i + 1, n))
    if M.kind == INT_VECTORS:
        return True
    if M.kind == BICYCLIC:
        return False
    return all(is_commutative(f) for f in M.factors)
