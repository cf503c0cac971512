"""
valence_trees.py — Valence trees, evaluations and excursiveness.

A valence tree is a rooted tree whose nodes carry monoid elements. An
evaluation is a linear extension of the ancestor order (parents first);
its value is the product of the valences in that order.

For a node t with subtree U_t, the U_t-decomposition of an evaluation
w = y₀ x₁ y₁ … xₙ yₙ splits w into maximal blocks xᵢ ⊆ U_t. The values
φ(x₁), …, φ(xₙ) form t's valence sequence; the excursiveness of w is the
longest valence sequence over all t.

Key operations
──────────────
u_decomposition                 block structure of a word w.r.t. a symbol set
evaluations                     all linear extensions (exhaustive, capped)
commute_indices                 (k, ℓ) with g_k h_k ⋯ g_ℓ h_ℓ = g_k ⋯ g_ℓ h_k ⋯ h_ℓ
rewrite_evaluation              block swap lowering t's sequence length
minimize_excursiveness          rewrite until every sequence has length ≤ m
join_sequences / shuffle_sequences
bounded_excursiveness_values    values reachable with excursiveness ≤ m,
                                computed bottom-up through J and shuffle
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Callable, Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Sequence, Set, Tuple

import networkx as nx

from analysis import right_invertibles, submonoid_generated
from config import EXHAUSTIVE_EVAL_CAP, logger
from errors import (
    CommuteBoundError,
    EvaluationCapError,
    InvalidTreeError,
    RewriteError,
    TargetValueError,
    UnsupportedMonoidError,
)
from monoid import MElem, MonoidHandle, check_element, elements_of, format_element, identity, multiplier, product_of

Seq = Tuple[MElem, ...]


# ──────────────────────────────────────────────────────────────────────────────
# U-decompositions
# ──────────────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class UDecomposition:
    parts: Tuple[Tuple[str, ...], ...]   # y₀, x₁, y₁, …, xₙ, yₙ

    @property
    def count(self) -> int:
        return (len(self.parts) - 1) // 2

    @property
    def blocks(self) -> Tuple[Tuple[str, ...], ...]:
        return self.parts[1::2]

    @property
    def gaps(self) -> Tuple[Tuple[str, ...], ...]:
        return self.parts[0::2]


def u_decomposition(w: Sequence[str], U: Iterable[str]) -> UDecomposition:
    """
    Example (U = {a}):
        baaba  →  (b)(aa)(b)(a)(λ),  count 2
    """
    U = set(U)
    parts: List[Tuple[str, ...]] = []
    current: List[str] = []
    inside = False
    for sym in w:
        if (sym in U) != inside:
            parts.append(tuple(current))
            current = []
            inside = not inside
        current.append(sym)
    parts.append(tuple(current))
    if inside:
        parts.append(())
    return UDecomposition(tuple(parts))


def block_count(w: Sequence[str], U: Iterable[str]) -> int:
    """⌊w⌋_U"""
    return u_decomposition(w, U).count


# ──────────────────────────────────────────────────────────────────────────────
# Trees
# ──────────────────────────────────────────────────────────────────────────────

class ValenceTree:
    """
    Rooted tree given by parent links, with a valence per node.
    Node ids are strings; choice points are resolved in sorted id order.
    """

    def __init__(self, monoid: MonoidHandle, parents: Mapping[str, Optional[str]], valences: Mapping[str, MElem]):
        if not parents:
            raise InvalidTreeError("a tree needs at least one node")
        if set(valences) != set(parents):
            raise InvalidTreeError("every node needs exactly one valence")
        graph = nx.DiGraph()
        graph.add_nodes_from(parents)
        for node, parent in parents.items():
            if parent is not None:
                if parent not in parents:
                    raise InvalidTreeError(f"{node!r} has unknown parent {parent!r}")
                graph.add_edge(parent, node)
        if not nx.is_arborescence(graph):
            raise InvalidTreeError("parent links do not form a single rooted tree")

        self.monoid = monoid
        self.parents: Dict[str, Optional[str]] = dict(parents)
        self.valences: Dict[str, MElem] = {n: check_element(monoid, v) for n, v in valences.items()}
        self.graph = graph
        self.nodes: Tuple[str, ...] = tuple(sorted(parents))
        self.root: str = next(n for n, p in parents.items() if p is None)

    def __len__(self) -> int:
        return len(self.nodes)

    def __repr__(self) -> str:
        return f"<ValenceTree {len(self)} nodes over {self.monoid!r}>"

    def children(self, node: str) -> Tuple[str, ...]:
        return tuple(sorted(self.graph.successors(node)))

    @cached_property
    def subtrees(self) -> Dict[str, FrozenSet[str]]:
        """U_t for every node t."""
        return {t: frozenset({t} | nx.descendants(self.graph, t)) for t in self.nodes}


@dataclass(frozen=True)
class Evaluation:
    order:          Tuple[str, ...]
    value:          MElem
    excursiveness:  int


def is_linear_extension(tree: ValenceTree, order: Sequence[str]) -> bool:
    if len(order) != len(tree) or set(order) != set(tree.nodes):
        return False
    placed: Set[str] = set()
    for node in order:
        parent = tree.parents[node]
        if parent is not None and parent not in placed:
            return False
        placed.add(node)
    return True


def valence_sequence(tree: ValenceTree, order: Sequence[str], t: str) -> List[MElem]:
    """(φ(x₁), …, φ(xₙ)) for the U_t-decomposition of `order`."""
    blocks = u_decomposition(order, tree.subtrees[t]).blocks
    return [product_of(tree.monoid, (tree.valences[n] for n in block)) for block in blocks]


def profile(tree: ValenceTree, order: Sequence[str]) -> Dict[str, int]:
    """μ_w: node t ↦ ⌊w⌋_{U_t}."""
    return {t: block_count(order, tree.subtrees[t]) for t in tree.nodes}


def profile_leq(a: Mapping[str, int], b: Mapping[str, int]) -> bool:
    return all(a[t] <= b[t] for t in a)


def evaluate(tree: ValenceTree, order: Sequence[str]) -> Evaluation:
    order = tuple(order)
    if not is_linear_extension(tree, order):
        raise InvalidTreeError(f"{order} is not a linear extension of the tree order")
    value = product_of(tree.monoid, (tree.valences[n] for n in order))
    return Evaluation(order, value, max(profile(tree, order).values()))


def excursiveness(tree: ValenceTree, ev: Evaluation) -> int:
    return max(profile(tree, ev.order).values())


def preorder_evaluation(tree: ValenceTree) -> Evaluation:
    """Depth-first preorder; every subtree is one contiguous block."""
    order: List[str] = []
    stack = [tree.root]
    while stack:
        node = stack.pop()
        order.append(node)
        stack.extend(reversed(tree.children(node)))
    return evaluate(tree, order)


def evaluations(tree: ValenceTree, cap: int = EXHAUSTIVE_EVAL_CAP) -> Iterator[Evaluation]:
    """
    Every linear extension exactly once, lexicographic by node id at each
    choice point. Trees above `cap` nodes raise EvaluationCapError.
    """
    if len(tree) > cap:
        raise EvaluationCapError(
            f"{len(tree)} nodes exceed the exhaustive cap {cap}; use minimize_excursiveness instead"
        )
    op = multiplier(tree.monoid)
    order: List[str] = []

    def extend(available: Tuple[str, ...], value: MElem) -> Iterator[Tuple[Tuple[str, ...], MElem]]:
        if not available:
            yield tuple(order), value
            return
        for i, node in enumerate(available):
            rest = tuple(sorted(available[:i] + available[i + 1:] + tree.children(node)))
            order.append(node)
            yield from extend(rest, op(value, tree.valences[node]))
            order.pop()

    for seq, value in extend((tree.root,), identity(tree.monoid)):
        yield Evaluation(seq, value, max(profile(tree, seq).values()))


def value_set(tree: ValenceTree, cap: int = EXHAUSTIVE_EVAL_CAP) -> FrozenSet[MElem]:
    return frozenset(ev.value for ev in evaluations(tree, cap))


# ──────────────────────────────────────────────────────────────────────────────
# Commuting blocks
# ──────────────────────────────────────────────────────────────────────────────

def commute_bound(group_size: int) -> int:
    """m = 2(|G|³ + 1)"""
    return 2 * (group_size ** 3 + 1)


def commute_holds(M: MonoidHandle, pairs: Sequence[Tuple[MElem, MElem]], k: int, l: int) -> bool:
    """g_k h_k ⋯ g_ℓ h_ℓ = g_k ⋯ g_ℓ h_k ⋯ h_ℓ (1-based, inclusive)."""
    window = pairs[k - 1:l]
    mixed = product_of(M, itertools.chain.from_iterable(window))
    split = product_of(M, [g for g, _ in window] + [h for _, h in window])
    return mixed == split


def commute_indices(
    M: MonoidHandle,
    pairs: Sequence[Tuple[MElem, MElem]],
    group_size: Optional[int] = None,
) -> Tuple[int, int]:
    """
    Pigeonhole over odd prefixes: α(i) = (g₁⋯gᵢ, h₁⋯hᵢ, g₁h₁⋯gᵢhᵢ) takes at
    most |G|³ values, so two odd i < j collide. Then g_{i+1}⋯g_j, h_{i+1}⋯h_j
    and g_{i+1}h_{i+1}⋯g_jh_j are all 1 in a group, and (i+1, j) works.
    """
    size = group_size if group_size is not None else len(elements_of(M))
    m = commute_bound(size)
    if len(pairs) < m:
        raise CommuteBoundError(f"{len(pairs)} pairs supplied, at least {m} needed for |G| = {size}")
    op = multiplier(M)
    one = identity(M)
    g_acc, h_acc, gh_acc = one, one, one
    seen: Dict[Tuple[MElem, MElem, MElem], int] = {}
    for i, (g, h) in enumerate(pairs[:m], start=1):
        g_acc, h_acc, gh_acc = op(g_acc, g), op(h_acc, h), op(op(gh_acc, g), h)
        if i % 2 == 0:
            continue
        key = (g_acc, h_acc, gh_acc)
        if key in seen:
            return seen[key] + 1, i
        seen[key] = i
    raise CommuteBoundError("no collision among odd prefixes; the elements do not form a group")


def find_commuting_indices(M: MonoidHandle, pairs: Sequence[Tuple[MElem, MElem]]) -> Optional[Tuple[int, int]]:
    """Brute-force (k, ℓ), k < ℓ, preferring the widest window; for sequences below the bound."""
    n = len(pairs)
    for width in range(n - 1, 0, -1):
        for k in range(1, n - width + 1):
            if commute_holds(M, pairs, k, k + width):
                return k, k + width
    return None


def block_pairs(tree: ValenceTree, order: Sequence[str], t: str) -> List[Tuple[MElem, MElem]]:
    """(φ(xᵢ), φ(yᵢ)) for i = 1..n of the U_t-decomposition."""
    parts = u_decomposition(order, tree.subtrees[t]).parts
    value = lambda block: product_of(tree.monoid, (tree.valences[n] for n in block))  # noqa: E731
    return [(value(parts[2 * i - 1]), value(parts[2 * i])) for i in range(1, (len(parts) - 1) // 2 + 1)]


def rewrite_evaluation(tree: ValenceTree, ev: Evaluation, t: str, k: int, l: int) -> Evaluation:
    """Replace x_k y_k ⋯ x_ℓ y_ℓ by x_k ⋯ x_ℓ y_k ⋯ y_ℓ in t's decomposition."""
    parts = u_decomposition(ev.order, tree.subtrees[t]).parts
    n = (len(parts) - 1) // 2
    if not 1 <= k < l <= n:
        raise RewriteError(f"indices ({k}, {l}) out of range for {n} blocks")

    xs = [parts[2 * i - 1] for i in range(k, l + 1)]
    ys = [parts[2 * i] for i in range(k, l + 1)]
    head = list(itertools.chain.from_iterable(parts[:2 * k - 1]))
    tail = list(itertools.chain.from_iterable(parts[2 * l + 1:]))
    order = head + list(itertools.chain.from_iterable(xs)) + list(itertools.chain.from_iterable(ys)) + tail

    if not is_linear_extension(tree, order):
        raise RewriteError("rewritten order is not a linear extension")
    result = evaluate(tree, order)
    if result.value != ev.value:
        raise RewriteError(
            f"blocks {k}..{l} of {t!r} do not commute: "
            f"{format_element(tree.monoid, ev.value)} → {format_element(tree.monoid, result.value)}"
        )
    return result


def _finite_group_size(tree: ValenceTree) -> int:
    M = tree.monoid
    if not M.is_finite:
        raise UnsupportedMonoidError("excursiveness bounds need a finite group of valences")
    H = submonoid_generated(M, tree.valences.values())
    if right_invertibles(M, H) != H:
        raise UnsupportedMonoidError("tree valences do not generate a group")
    return len(H)


def minimize_excursiveness(
    tree: ValenceTree,
    target: MElem,
    start: Optional[Evaluation] = None,
    bound: Optional[int] = None,
    cap: int = EXHAUSTIVE_EVAL_CAP,
) -> Evaluation:
    """
    An evaluation with value `target` and excursiveness ≤ 2(|H|³+1), H the
    group generated by the valences.

    `start` defaults to the first evaluation with the target value. A
    smaller `bound` is pursued with brute-force commuting windows; the
    result then satisfies it only when such windows keep existing.
    """
    M = tree.monoid
    size = _finite_group_size(tree)
    m = commute_bound(size)
    goal = m if bound is None else min(bound, m)

    ev = start
    if ev is None:
        ev = next((e for e in evaluations(tree, cap) if e.value == target), None)
        if ev is None:
            raise TargetValueError(f"{format_element(M, target)} is not a value of {tree!r}")
    elif ev.value != target:
        raise TargetValueError("start evaluation does not have the target value")

    while True:
        mu = profile(tree, ev.order)
        pivot = next((t for t in tree.nodes if mu[t] > goal), None)
        if pivot is None:
            return ev
        pairs = block_pairs(tree, ev.order, pivot)
        if len(pairs) >= m:
            k, l = commute_indices(M, pairs, size)
        else:
            found = find_commuting_indices(M, pairs)
            if found is None:
                logger.warning("No commuting window at %r; excursiveness stays %d.", pivot, ev.excursiveness)
                return ev
            k, l = found
        ev = rewrite_evaluation(tree, ev, pivot, k, l)


# ──────────────────────────────────────────────────────────────────────────────
# Sequences: J and shuffle
# ──────────────────────────────────────────────────────────────────────────────

@lru_cache(maxsize=None)
def join_sequences(M: MonoidHandle, sigma: Seq) -> FrozenSet[Seq]:
    """
    J(λ) = {λ}, J(h) = {h},
    J(h₁□h₂□σ) = J((h₁h₂)□σ) ∪ {h₁□σ′ | σ′ ∈ J(h₂□σ)}.
    """
    if len(sigma) <= 1:
        return frozenset({sigma})
    h1, h2, rest = sigma[0], sigma[1], sigma[2:]
    joined = join_sequences(M, (multiplier(M)(h1, h2),) + rest)
    kept = frozenset((h1,) + tail for tail in join_sequences(M, (h2,) + rest))
    return joined | kept


def _shuffle_pair(a: Seq, b: Seq) -> Set[Seq]:
    if not a:
        return {b}
    if not b:
        return {a}
    return {(a[0],) + s for s in _shuffle_pair(a[1:], b)} | {(b[0],) + s for s in _shuffle_pair(a, b[1:])}


def shuffle_sequences(A: Iterable[Seq], B: Iterable[Seq]) -> FrozenSet[Seq]:
    """All order-preserving interleavings of a ∈ A with b ∈ B."""
    out: Set[Seq] = set()
    for a in A:
        for b in B:
            out |= _shuffle_pair(tuple(a), tuple(b))
    return frozenset(out)


def iter_shuffles(seqs: Sequence[Seq], tick: Optional[Callable[[int], None]] = None) -> Iterator[Seq]:
    """
    Lazy interleavings of several sequences; equal elements may repeat a result.
    `tick` is charged with the prefix length of every expanded state.
    """
    seqs = [tuple(s) for s in seqs if s]
    total = sum(len(s) for s in seqs)
    stack: List[Tuple[Tuple[int, ...], Seq]] = [((0,) * len(seqs), ())]
    while stack:
        pos, prefix = stack.pop()
        if tick is not None:
            tick(len(prefix) + 1)
        if len(prefix) == total:
            yield prefix
            continue
        for k in reversed(range(len(seqs))):
            if pos[k] < len(seqs[k]):
                nxt = pos[:k] + (pos[k] + 1,) + pos[k + 1:]
                stack.append((nxt, prefix + (seqs[k][pos[k]],)))


def iter_joins(M: MonoidHandle, sigma: Seq, drop: Optional[MElem] = None,
               limit: Optional[int] = None, tick: Optional[Callable[[int], None]] = None) -> Iterator[Seq]:
    """
    Lazy J(σ). Blocks whose product is `drop` are left out; results longer
    than `limit` are cut while they are built. `tick` as in iter_shuffles.
    """
    if not sigma:
        yield ()
        return
    op = multiplier(M)
    n = len(sigma)
    stack: List[Tuple[int, MElem, Seq]] = [(1, sigma[0], ())]
    while stack:
        i, cur, done = stack.pop()
        if tick is not None:
            tick(len(done) + 1)
        closed = done if cur == drop else done + (cur,)
        if i == n:
            if limit is None or len(closed) <= limit:
                yield closed
            continue
        stack.append((i + 1, op(cur, sigma[i]), done))
        if limit is None or len(closed) <= limit:
            stack.append((i + 1, sigma[i], closed))


def node_sequences(tree: ValenceTree, m: int) -> Dict[str, FrozenSet[Seq]]:
    """
    For every node t, the valence sequences of length ≤ m that t can have.

    Leaves have {(h)}. Otherwise, for j ∈ J(σ₁ ⧢ ⋯ ⧢ σₙ) over the children's
    sets, t contributes h□j (t alone in its first block) or (h·j₁)□j′.
    """
    M = tree.monoid
    op = multiplier(M)
    result: Dict[str, FrozenSet[Seq]] = {}
    for t in reversed(list(nx.topological_sort(tree.graph))):
        h = tree.valences[t]
        mixed: FrozenSet[Seq] = frozenset({()})
        for child in tree.children(t):
            mixed = shuffle_sequences(mixed, result[child])
        seqs: Set[Seq] = set()
        for s in mixed:
            for j in join_sequences(M, s):
                if len(j) + 1 <= m:
                    seqs.add((h,) + j)
                if j and len(j) <= m:
                    seqs.add((op(h, j[0]),) + j[1:])
        result[t] = frozenset(seqs)
    return result


def bounded_excursiveness_values(tree: ValenceTree, m: Optional[int] = None) -> FrozenSet[MElem]:
    """Values of evaluations with excursiveness ≤ m (default 2(|H|³+1))."""
    if m is None:
        m = commute_bound(_finite_group_size(tree))
    root_seqs = node_sequences(tree, m)[tree.root]
    return frozenset(s[0] for s in root_seqs if len(s) == 1)
