"""
grammars.py — Valence grammars, derivation trees and conversion to CFGs.

A derivation (S,1) ⇒* (w,1) multiplies the valences of the productions in
the order they are applied, so for non-commutative monoids the order of
rewriting matters; bounded_language explores every order in that case.

Conversion pipeline (to_cfg)
────────────────────────────
  1.  Require the normal form: (A → B₁⋯Bₙ; h) or (A → t; 1), t ∈ T ∪ {λ}
  2.  Gate on the production valences; refuse unless "finite"
  3.  Drop productions with valence outside the group H = E(N)
  4.  Binarize (bodies of length ≤ 2)
  5.  Sequence grammar over nonterminals (A, σ), σ ∈ H^{≤m}, m = 2(|H|³+1)

The sequence grammar is kept lazy: its bottom-up items (A, σ, w) are built
only for words up to the requested length. Items store σ without identity
entries; a block of value 1 never changes a product and joins into any
neighbour, so (A,λ) and (A,(1)) coincide and the start symbol is (S,λ).
"""

from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

from analysis import e_set_of, gate_for_generators
from config import CFG_ITEM_LIMIT, MAX_STEPS, NORM_CAP, logger
from errors import (
    ConversionBudgetError,
    DerivationError,
    GateRefusal,
    InvalidDeviceError,
    NotNormalizedError,
)
from models import LangSample, SearchBudget
from monoid import (
    GenMap,
    MElem,
    MonoidHandle,
    contains,
    describe,
    format_element,
    identity,
    is_commutative,
    multiplier,
    norm,
    to_literal,
    trivial_monoid,
)
from utils import Word, fresh_name, sorted_words, unknown_symbol
from valence_trees import Evaluation, Seq, ValenceTree, commute_bound, evaluate, iter_joins, iter_shuffles

LAMBDA = "λ"


# ──────────────────────────────────────────────────────────────────────────────
# Grammar
# ──────────────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class Production:
    lhs:     str
    rhs:     Word
    valence: MElem


@dataclass(frozen=True)
class ValenceGrammar:
    monoid:       MonoidHandle
    nonterminals: Tuple[str, ...]
    terminals:    Tuple[str, ...]
    start:        str
    productions:  Tuple[Production, ...]
    generators:   Optional[GenMap] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        N, T = set(self.nonterminals), set(self.terminals)
        if N & T:
            raise InvalidDeviceError(f"symbols {sorted(N & T)} are both terminal and nonterminal")
        if self.start not in N:
            raise InvalidDeviceError(f"start symbol {self.start!r} is not a nonterminal")
        for p in self.productions:
            if p.lhs not in N:
                raise unknown_symbol(p.lhs, self.nonterminals)
            for sym in p.rhs:
                if sym not in N and sym not in T:
                    raise unknown_symbol(sym, self.nonterminals + self.terminals)
            if not contains(self.monoid, p.valence):
                raise InvalidDeviceError(f"production valence {p.valence!r} is not in {self.monoid!r}")

    @cached_property
    def by_lhs(self) -> Dict[str, Tuple[Tuple[int, Production], ...]]:
        table: Dict[str, List[Tuple[int, Production]]] = defaultdict(list)
        for i, p in enumerate(self.productions):
            table[p.lhs].append((i, p))
        return {a: tuple(ps) for a, ps in table.items()}

    @cached_property
    def nonterminal_set(self) -> FrozenSet[str]:
        return frozenset(self.nonterminals)

    @property
    def valences(self) -> Tuple[MElem, ...]:
        return tuple(dict.fromkeys(p.valence for p in self.productions))

    def to_dict(self) -> Dict:
        M = self.monoid
        return {
            "monoid":       describe(M),
            "nonterminals": list(self.nonterminals),
            "terminals":    list(self.terminals),
            "start":        self.start,
            "productions": [
                {"lhs": p.lhs, "rhs": list(p.rhs), "valence": to_literal(M, p.valence)}
                for p in self.productions
            ],
        }


def grammar_gate(G: ValenceGrammar, norm_cap: int = NORM_CAP):
    return gate_for_generators(G.monoid, G.valences, norm_cap)


# ──────────────────────────────────────────────────────────────────────────────
# Bounded language
# ──────────────────────────────────────────────────────────────────────────────

def _successors(G: ValenceGrammar, form: Word, leftmost: bool) -> Iterable[Tuple[int, int, Production]]:
    N = G.nonterminal_set
    for pos, sym in enumerate(form):
        if sym in N:
            for idx, p in G.by_lhs.get(sym, ()):
                yield pos, idx, p
            if leftmost:
                return


def bounded_language(
    G: "ValenceGrammar | SequenceGrammar",
    maxlen: int,
    max_steps: Optional[int] = None,
    budget: Optional[SearchBudget] = None,
) -> LangSample:
    """
    Terminal words of length ≤ maxlen derivable with valence 1 in at most
    max_steps steps. Commutative monoids only need leftmost derivations.
    """
    if isinstance(G, SequenceGrammar):
        return G.language(maxlen)

    budget = budget or SearchBudget(NORM_CAP, MAX_STEPS)
    steps = budget.max_steps if max_steps is None else max_steps
    M = G.monoid
    op, one = multiplier(M), identity(M)
    N = G.nonterminal_set
    leftmost = is_commutative(M)

    start = ((G.start,), one)
    seen = {start}
    queue = deque([(start, 0)])
    words: Set[Word] = set()
    cut = False
    while queue:
        (form, m), depth = queue.popleft()
        open_symbols = sum(1 for s in form if s in N)
        if open_symbols == 0:
            if m == one:
                words.add(form)
            continue
        for pos, _, p in _successors(G, form, leftmost):
            nxt_form = form[:pos] + p.rhs + form[pos + 1:]
            if sum(1 for s in nxt_form if s not in N) > maxlen:
                continue
            nxt = (nxt_form, op(m, p.valence))
            if nxt in seen:
                continue
            remaining = steps - depth - 1
            if sum(1 for s in nxt_form if s in N) > remaining:
                cut = True
                continue
            if not M.is_finite and norm(M, nxt[1]) > budget.norm_cap:
                cut = True
                continue
            seen.add(nxt)
            queue.append((nxt, depth + 1))

    if cut:
        logger.debug("Grammar slice up to length %d cut by the budget.", maxlen)
    return LangSample(tuple(sorted_words(words)), maxlen, complete=not cut)


def find_derivation(
    G: ValenceGrammar,
    w: Sequence[str],
    budget: Optional[SearchBudget] = None,
) -> Optional[List[Tuple[int, int]]]:
    """A shortest derivation (S,1) ⇒* (w,1) as (position, production index) steps, or None."""
    budget = budget or SearchBudget(NORM_CAP, MAX_STEPS)
    M = G.monoid
    op, one = multiplier(M), identity(M)
    N = G.nonterminal_set
    target = tuple(w)

    start = ((G.start,), one)
    back: Dict[Tuple[Word, MElem], Optional[Tuple[Tuple[Word, MElem], Tuple[int, int]]]] = {start: None}
    queue = deque([(start, 0)])
    while queue:
        node, depth = queue.popleft()
        form, m = node
        if form == target and m == one:
            steps: List[Tuple[int, int]] = []
            while back[node] is not None:
                node, step = back[node]  # type: ignore[misc]
                steps.append(step)
            return steps[::-1]
        if depth >= budget.max_steps:
            continue
        for pos, idx, p in _successors(G, form, leftmost=False):
            nxt_form = form[:pos] + p.rhs + form[pos + 1:]
            if sum(1 for s in nxt_form if s not in N) > len(target):
                continue
            nxt = (nxt_form, op(m, p.valence))
            if nxt in back or (not M.is_finite and norm(M, nxt[1]) > budget.norm_cap):
                continue
            back[nxt] = (node, (pos, idx))
            queue.append((nxt, depth + 1))
    return None


# ──────────────────────────────────────────────────────────────────────────────
# Normal form
# ──────────────────────────────────────────────────────────────────────────────

def _is_normal(G: ValenceGrammar, p: Production) -> bool:
    if all(s in G.nonterminal_set for s in p.rhs):
        return True
    return len(p.rhs) == 1 and p.valence == identity(G.monoid)


def is_normalized(G: ValenceGrammar) -> bool:
    """Every production is (A → w; h) with w ∈ N*, or (A → t; 1) with t ∈ T."""
    return all(_is_normal(G, p) for p in G.productions)


def normalize(G: ValenceGrammar) -> ValenceGrammar:
    """
    Lift terminals out of mixed or weighted bodies through fresh
    nonterminals A_t with (A_t → t; 1). Normal productions are kept as they are.

    Example:
        (S → aSb; h)  →  (S → A_a S A_b; h), (A_a → a; 1), (A_b → b; 1)
    """
    if is_normalized(G):
        return G
    one = identity(G.monoid)
    taken = set(G.nonterminals) | set(G.terminals)
    lifted: Dict[str, str] = {}
    nonterminals = list(G.nonterminals)
    productions: List[Production] = []

    def lift(t: str) -> str:
        if t not in lifted:
            name = fresh_name(f"A_{t}", taken)
            taken.add(name)
            lifted[t] = name
            nonterminals.append(name)
        return lifted[t]

    for p in G.productions:
        if _is_normal(G, p):
            productions.append(p)
            continue
        body = tuple(s if s in G.nonterminal_set else lift(s) for s in p.rhs)
        productions.append(Production(p.lhs, body, p.valence))

    for t, name in lifted.items():
        productions.append(Production(name, (t,), one))

    logger.debug("Normalized grammar: %d terminals lifted.", len(lifted))
    return replace(G, nonterminals=tuple(nonterminals), productions=tuple(productions))


def binarize(G: ValenceGrammar) -> ValenceGrammar:
    """
    A → B₁⋯Bₙ; h (n ≥ 3) becomes A → B₁ X₁; h, X₁ → B₂ X₂; 1, …,
    X_{n-2} → B_{n-1} Bₙ; 1.
    """
    if all(len(p.rhs) <= 2 for p in G.productions):
        return G
    one = identity(G.monoid)
    taken = set(G.nonterminals) | set(G.terminals)
    nonterminals = list(G.nonterminals)
    productions: List[Production] = []
    for p in G.productions:
        if len(p.rhs) <= 2:
            productions.append(p)
            continue
        head, valence = p.lhs, p.valence
        for i, sym in enumerate(p.rhs[:-2]):
            link = fresh_name(f"{p.lhs}_{i + 1}", taken)
            taken.add(link)
            nonterminals.append(link)
            productions.append(Production(head, (sym, link), valence))
            head, valence = link, one
        productions.append(Production(head, p.rhs[-2:], valence))
    return replace(G, nonterminals=tuple(nonterminals), productions=tuple(productions))


# ──────────────────────────────────────────────────────────────────────────────
# Derivation trees
# ──────────────────────────────────────────────────────────────────────────────

class DerivationTree(ValenceTree):
    """
    Valence tree plus node labels and left-to-right child order.
    Internal nodes carry their production's valence; leaves carry 1.
    """

    def __init__(self, monoid, parents, valences, labels: Dict[str, str], ordered: Dict[str, Tuple[str, ...]],
                 steps: Sequence[str] = ()):
        super().__init__(monoid, parents, valences)
        self.labels = labels
        self.ordered = ordered
        self.step_order: Tuple[str, ...] = tuple(steps)

    @property
    def internal_nodes(self) -> Tuple[str, ...]:
        return tuple(n for n in self.nodes if self.ordered.get(n))


def _node_id(i: int) -> str:
    return f"n{i:03d}"


def derivation_tree_of(G: ValenceGrammar, derivation: Sequence[Tuple[int, int]]) -> DerivationTree:
    """Build the tree of a complete derivation given as (position, production index) steps."""
    N = G.nonterminal_set
    one = identity(G.monoid)
    counter = 0
    root = _node_id(counter)
    parents: Dict[str, Optional[str]] = {root: None}
    labels: Dict[str, str] = {root: G.start}
    valences: Dict[str, MElem] = {root: one}
    ordered: Dict[str, Tuple[str, ...]] = {}
    form: List[str] = [root]
    rewritten: List[str] = []

    for step, (pos, idx) in enumerate(derivation):
        if not 0 <= idx < len(G.productions):
            raise DerivationError(step, f"no production {idx}")
        if not 0 <= pos < len(form):
            raise DerivationError(step, f"position {pos} outside the sentential form")
        node = form[pos]
        p = G.productions[idx]
        if labels[node] != p.lhs:
            raise DerivationError(step, f"position {pos} holds {labels[node]!r}, production rewrites {p.lhs!r}")
        valences[node] = p.valence
        children: List[str] = []
        for sym in p.rhs or (LAMBDA,):
            counter += 1
            child = _node_id(counter)
            parents[child], labels[child], valences[child] = node, sym, one
            children.append(child)
        ordered[node] = tuple(children)
        rewritten.append(node)
        form[pos:pos + 1] = [c for c in children if labels[c] != LAMBDA]

    pending = [labels[n] for n in form if labels[n] in N]
    if pending:
        raise DerivationError(len(derivation), f"nonterminals {pending} left unexpanded")
    return DerivationTree(G.monoid, parents, valences, labels, ordered, rewritten)


def yield_of(dt: DerivationTree) -> Word:
    """Leaf labels left to right, λ leaves skipped."""
    out: List[str] = []
    stack = [dt.root]
    while stack:
        node = stack.pop()
        kids = dt.ordered.get(node)
        if kids:
            stack.extend(reversed(kids))
        elif dt.labels[node] != LAMBDA:
            out.append(dt.labels[node])
    return tuple(out)


def derivation_evaluation(dt: DerivationTree) -> Evaluation:
    """The evaluation induced by the derivation order (each leaf right after its parent)."""
    order: List[str] = []
    for node in dt.step_order:
        order.append(node)
        order.extend(c for c in dt.ordered[node] if not dt.ordered.get(c))
    return evaluate(dt, order)


def tree_value_check(dt: DerivationTree, ev: Evaluation) -> MElem:
    """Value of `ev` on `dt`, after checking it is an evaluation of the tree."""
    return evaluate(dt, ev.order).value


def derivation_from_evaluation(G: ValenceGrammar, dt: DerivationTree, ev: Evaluation) -> List[Tuple[int, int]]:
    """Rewrite internal nodes in evaluation order; the derivation's valence is ev's value."""
    evaluate(dt, ev.order)
    form: List[str] = [dt.root]
    steps: List[Tuple[int, int]] = []
    for node in ev.order:
        kids = dt.ordered.get(node)
        if not kids:
            continue
        rhs = tuple(dt.labels[c] for c in kids if dt.labels[c] != LAMBDA)
        idx = next(
            (i for i, p in G.by_lhs.get(dt.labels[node], ())
             if p.rhs == rhs and p.valence == dt.valences[node]),
            None,
        )
        if idx is None:
            raise DerivationError(len(steps), f"no production matches node {node!r}")
        pos = form.index(node)
        steps.append((pos, idx))
        form[pos:pos + 1] = [c for c in kids if dt.labels[c] != LAMBDA]
    return steps


# ──────────────────────────────────────────────────────────────────────────────
# Sequence grammar
# ──────────────────────────────────────────────────────────────────────────────

SeqSymbol = Tuple[str, Seq]


@dataclass(eq=False)
class SequenceGrammar:
    """
    Context-free grammar over nonterminals (A, σ), built from a normalized,
    binarized grammar whose valences lie in the finite group `group`.
    """
    source:  ValenceGrammar
    grammar: ValenceGrammar
    group:   Tuple[MElem, ...]
    m:       int
    item_limit: int = CFG_ITEM_LIMIT
    _cache: Dict[int, Tuple[Dict[SeqSymbol, Set[Word]], Set[Tuple[SeqSymbol, Tuple]]]] = field(
        default_factory=dict, repr=False)
    _combined: Dict[Tuple[MElem, Tuple[Seq, ...]], FrozenSet[Seq]] = field(default_factory=dict, repr=False)
    _work: int = field(default=0, repr=False)

    @property
    def monoid(self) -> MonoidHandle:
        return self.grammar.monoid

    @property
    def start(self) -> SeqSymbol:
        return (self.grammar.start, ())

    # ── exact production predicate on raw sequences ──────────────────────────

    def is_production(self, lhs: SeqSymbol, body: Sequence[object]) -> bool:
        """
        (A,σ) → (B₁,σ₁)⋯(Bₙ,σₙ) for (A → B₁⋯Bₙ; h) when σ ≠ λ, every length
        ≤ m, and σ = (h·j₁)□j′ or σ = h□j for some j ∈ J(σ₁ ⧢ ⋯ ⧢ σₙ).
        Terminal rules: (A,λ) → w and (A,(1)) → w for (A → w; 1), w ∈ T ∪ {λ}.
        """
        A, sigma = lhs
        G, M = self.grammar, self.monoid
        one = identity(M)
        if len(sigma) > self.m:
            return False

        if all(isinstance(b, str) for b in body):
            rhs = tuple(body)  # type: ignore[arg-type]
            terminal = sigma in ((), (one,)) and any(
                p.rhs == rhs and p.valence == one and all(s not in G.nonterminal_set for s in rhs)
                for _, p in G.by_lhs.get(A, ())
            )
            if terminal or body:
                return terminal

        if not sigma:
            return False
        names = tuple(b[0] for b in body)    # type: ignore[index]
        seqs = [tuple(b[1]) for b in body]   # type: ignore[index]
        if any(len(s) > self.m for s in seqs):
            return False
        op = multiplier(M)
        for _, p in G.by_lhs.get(A, ()):
            if p.rhs != names:
                continue
            h = p.valence
            for s in iter_shuffles(seqs):
                for j in iter_joins(M, s, limit=len(sigma)):
                    if sigma == (h,) + j:
                        return True
                    if j and sigma == (op(h, j[0]),) + j[1:]:
                        return True
        return False

    # ── lazy bottom-up items ─────────────────────────────────────────────────

    def _charge(self, cost: int) -> None:
        self._work += cost
        if self._work > self.item_limit:
            raise ConversionBudgetError(f"sequence grammar needs more than {self.item_limit} work units")

    def _combine(self, h: MElem, children: Tuple[Seq, ...]) -> FrozenSet[Seq]:
        """Sequences of the parent for children sequences `children`, charged against item_limit."""
        key = (h, children)
        if key in self._combined:
            return self._combined[key]
        M = self.monoid
        op, one = multiplier(M), identity(M)
        out: Set[Seq] = set()
        for s in iter_shuffles(children, self._charge):
            for j in iter_joins(M, s, drop=one, limit=self.m + 1, tick=self._charge):
                alone = ((h,) if h != one else ()) + j
                if len(alone) <= self.m:
                    out.add(alone)
                if j:
                    first = op(h, j[0])
                    merged = ((first,) if first != one else ()) + j[1:]
                    if len(merged) <= self.m:
                        out.add(merged)
        result = frozenset(out)
        self._combined[key] = result
        return result

    def items(self, maxlen: int) -> Tuple[Dict[SeqSymbol, Set[Word]], Set[Tuple[SeqSymbol, Tuple]]]:
        """
        Semi-naive fixpoint of (A, σ) ⇒* w for |w| ≤ maxlen.
        Returns the item table and the productions that produced items.
        """
        if maxlen in self._cache:
            return self._cache[maxlen]
        G = self.grammar
        N = G.nonterminal_set
        one = identity(self.monoid)

        table: Dict[SeqSymbol, Set[Word]] = defaultdict(set)
        by_name: Dict[str, List[Tuple[Seq, Word]]] = defaultdict(list)
        rules: Set[Tuple[SeqSymbol, Tuple]] = set()
        queue: deque = deque()
        self._work = 0
        uses: Dict[str, List[Tuple[int, Production]]] = defaultdict(list)
        for p in G.productions:
            for pos, sym in enumerate(p.rhs):
                if sym in N:
                    uses[sym].append((pos, p))

        def add(sym: SeqSymbol, w: Word) -> None:
            if w in table[sym]:
                return
            self._charge(1 + len(sym[1]))
            table[sym].add(w)
            by_name[sym[0]].append((sym[1], w))
            queue.append((sym, w))

        for p in G.productions:
            if all(s not in N for s in p.rhs) and p.rhs and p.valence == one:
                if len(p.rhs) <= maxlen:
                    rules.add(((p.lhs, ()), p.rhs))
                    add((p.lhs, ()), p.rhs)
            elif not p.rhs:
                for sigma in self._combine(p.valence, ()):
                    rules.add(((p.lhs, sigma), ()))
                    add((p.lhs, sigma), ())

        while queue:
            (name, sigma), w = queue.popleft()
            for pos, p in uses.get(name, ()):
                if len(p.rhs) == 1:
                    for out in self._combine(p.valence, (sigma,)):
                        rules.add(((p.lhs, out), ((name, sigma),)))
                        add((p.lhs, out), w)
                    continue
                other = p.rhs[1 - pos]
                for s2, w2 in list(by_name.get(other, ())):
                    if len(w) + len(w2) > maxlen:
                        continue
                    left, right = ((sigma, w), (s2, w2)) if pos == 0 else ((s2, w2), (sigma, w))
                    for out in self._combine(p.valence, (left[0], right[0])):
                        rules.add(((p.lhs, out), ((p.rhs[0], left[0]), (p.rhs[1], right[0]))))
                        add((p.lhs, out), left[1] + right[1])

        logger.debug("Sequence grammar: %d items up to length %d.", sum(len(v) for v in table.values()), maxlen)
        self._cache[maxlen] = (dict(table), rules)
        return self._cache[maxlen]

    def language(self, maxlen: int) -> LangSample:
        table, _ = self.items(maxlen)
        return LangSample(tuple(sorted_words(table.get(self.start, ()))), maxlen)

    def fragment(self, maxlen: int) -> ValenceGrammar:
        """
        The productions used by words up to `maxlen`, trimmed to symbols
        reachable from the start, as a classical grammar over the trivial monoid.
        """
        table, rules = self.items(maxlen)
        M = self.monoid

        def name(sym: SeqSymbol) -> str:
            A, sigma = sym
            return f"{A}[{'.'.join(format_element(M, x) for x in sigma) or '1'}]"

        by_head: Dict[SeqSymbol, List[Tuple]] = defaultdict(list)
        for head, body in rules:
            if all(not isinstance(b, tuple) or b in table for b in body):
                by_head[head].append(body)

        reachable = {self.start} if self.start in table else set()
        queue = deque(reachable)
        while queue:
            sym = queue.popleft()
            for body in by_head.get(sym, ()):
                for b in body:
                    if isinstance(b, tuple) and b not in reachable:
                        reachable.add(b)
                        queue.append(b)

        trivial = trivial_monoid()
        unit = identity(trivial)
        start_name = name(self.start)
        heads = sorted(reachable, key=name)
        productions = []
        for head in heads:
            for body in sorted(by_head.get(head, ()), key=repr):
                rhs = tuple(name(b) if isinstance(b, tuple) else b for b in body)
                productions.append(Production(name(head), rhs, unit))
        nonterminals = tuple(name(h) for h in heads) or (start_name,)
        return ValenceGrammar(trivial, nonterminals, self.grammar.terminals, start_name, tuple(productions))


def to_cfg(G: ValenceGrammar, norm_cap: int = NORM_CAP, item_limit: int = CFG_ITEM_LIMIT) -> SequenceGrammar:
    """Context-free grammar for L(G); raises GateRefusal unless R(N) is finite."""
    if not is_normalized(G):
        raise NotNormalizedError("to_cfg needs a normalized grammar; call normalize first")
    verdict = grammar_gate(G, norm_cap)
    if not verdict.is_finite:
        logger.warning("to_cfg refused: gate answered %s.", verdict.answer.value)
        raise GateRefusal(verdict, "to_cfg")
    H = e_set_of(verdict)
    kept = tuple(p for p in G.productions if p.valence in H)
    pruned = binarize(replace(G, productions=kept))
    m = commute_bound(len(H))
    logger.info("to_cfg: |H| = %d, m = %d, %d productions after pruning.", len(H), m, len(pruned.productions))
    group = tuple(x for x in verdict.r_set)
    return SequenceGrammar(G, pruned, group, m, item_limit)
