"""
machines.py — Valence automata and transducers.

A run counts only when the product of its edge valences is the identity.

Pipeline for conversion (to_nfa / to_fst):
  1.  Split multi-symbol edge labels through fresh identity-valued states
  2.  Run the finiteness gate on the edge valences; refuse unless "finite"
  3.  Drop edges whose valence lies outside E(N)
  4.  Product construction Q × E(N), start (q₀,1), finals F × {1}
  5.  Keep only reachable states

Search (accepts / enumerate / transduce) is breadth-first over
configurations keyed on element normal forms. Finite monoids are searched
exhaustively; infinite ones are cut by the norm cap and the run length,
and a cut search reports itself as incomplete instead of "no".
"""

from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple, Union

from analysis import e_set_of, gate_for_generators
from config import MAX_STEPS, NORM_CAP, logger
from errors import EUnavailableError, GateRefusal, InvalidDeviceError
from models import (
    Acceptance,
    DichotomyCase,
    DichotomyVerdict,
    GateVerdict,
    LangSample,
    SearchBudget,
    TransductionSample,
)
from monoid import (
    GenMap,
    MElem,
    MonoidHandle,
    contains,
    describe,
    format_element,
    identity,
    multiplier,
    norm,
    to_literal,
    trivial_monoid,
)
from utils import Word, fresh_name, sorted_words, unknown_symbol


# ──────────────────────────────────────────────────────────────────────────────
# Devices
# ──────────────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class Edge:
    source:  str
    input:   Word
    valence: MElem
    target:  str
    output:  Word = ()


@dataclass(frozen=True)
class ValenceAutomaton:
    monoid:     MonoidHandle
    alphabet:   Tuple[str, ...]
    states:     Tuple[str, ...]
    initial:    str
    final:      FrozenSet[str]
    edges:      Tuple[Edge, ...]
    generators: Optional[GenMap] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        states = set(self.states)
        if self.initial not in states:
            raise InvalidDeviceError(f"initial state {self.initial!r} is not a state")
        if not self.final <= states:
            raise InvalidDeviceError(f"final states {sorted(self.final - states)} are not states")
        for e in self.edges:
            if e.source not in states or e.target not in states:
                raise InvalidDeviceError(f"edge {e.source}->{e.target} uses an unknown state")
            for sym in e.input:
                if sym not in self.alphabet:
                    raise unknown_symbol(sym, self.alphabet)
            if not contains(self.monoid, e.valence):
                raise InvalidDeviceError(f"edge valence {e.valence!r} is not in {self.monoid!r}")
            self._check_output(e)

    def _check_output(self, e: Edge) -> None:
        if e.output:
            raise InvalidDeviceError("automaton edges carry no output")

    @cached_property
    def outgoing(self) -> Dict[str, Tuple[Edge, ...]]:
        by_source: Dict[str, List[Edge]] = defaultdict(list)
        for e in self.edges:
            by_source[e.source].append(e)
        return {q: tuple(es) for q, es in by_source.items()}

    @property
    def valences(self) -> Tuple[MElem, ...]:
        return tuple(dict.fromkeys(e.valence for e in self.edges))

    def to_dict(self) -> Dict[str, Any]:
        """Automaton file form; valences written as element literals."""
        M = self.monoid
        return {
            "monoid":  describe(M),
            "alphabet": list(self.alphabet),
            "states":  list(self.states),
            "initial": self.initial,
            "final":   [q for q in self.states if q in self.final],
            "edges": [
                {"from": e.source, "input": list(e.input), "valence": to_literal(M, e.valence), "to": e.target}
                for e in self.edges
            ],
        }


@dataclass(frozen=True)
class ValenceTransducer(ValenceAutomaton):
    output_alphabet: Tuple[str, ...] = ()

    def _check_output(self, e: Edge) -> None:
        for sym in e.output:
            if sym not in self.output_alphabet:
                raise unknown_symbol(sym, self.output_alphabet)

    def to_dict(self) -> Dict[str, Any]:
        result = super().to_dict()
        result["output_alphabet"] = list(self.output_alphabet)
        for row, e in zip(result["edges"], self.edges):
            row["output"] = list(e.output)
        return result


# Classical devices are the trivial-monoid special case.
Nfa = ValenceAutomaton
Fst = ValenceTransducer


def is_classical(A: ValenceAutomaton) -> bool:
    one = identity(A.monoid)
    return all(e.valence == one for e in A.edges)


# ──────────────────────────────────────────────────────────────────────────────
# Structural operations
# ──────────────────────────────────────────────────────────────────────────────

def normalize_edges(A: ValenceAutomaton) -> ValenceAutomaton:
    """
    Split every edge reading more than one symbol into a chain through fresh
    states. The first link carries the valence (and output), the rest 1.
    """
    if all(len(e.input) <= 1 for e in A.edges):
        return A
    one = identity(A.monoid)
    states = list(A.states)
    taken = set(states)
    edges: List[Edge] = []
    for e in A.edges:
        if len(e.input) <= 1:
            edges.append(e)
            continue
        prev = e.source
        for i, sym in enumerate(e.input):
            last = i == len(e.input) - 1
            nxt = e.target if last else fresh_name(f"{e.source}~{e.target}.{i + 1}", taken)
            if not last:
                taken.add(nxt)
                states.append(nxt)
            edges.append(Edge(prev, (sym,), e.valence if i == 0 else one, nxt, e.output if i == 0 else ()))
            prev = nxt
    return replace(A, states=tuple(states), edges=tuple(edges))


def is_deterministic(A: ValenceAutomaton) -> bool:
    """Every edge reads exactly one symbol and no (state, symbol) pair repeats."""
    seen: Set[Tuple[str, str]] = set()
    for e in A.edges:
        if len(e.input) != 1:
            return False
        key = (e.source, e.input[0])
        if key in seen:
            return False
        seen.add(key)
    return True


def edge_gate(A: ValenceAutomaton, norm_cap: int = NORM_CAP) -> GateVerdict:
    """Finiteness gate for the submonoid generated by the edge valences."""
    return gate_for_generators(A.monoid, A.valences, norm_cap)


def _as_e_set(analysis: Union[GateVerdict, DichotomyVerdict, Iterable[MElem], None]) -> FrozenSet[MElem]:
    if analysis is None:
        raise EUnavailableError("no E-set supplied")
    if isinstance(analysis, GateVerdict):
        return e_set_of(analysis)
    if isinstance(analysis, DichotomyVerdict):
        if analysis.case != DichotomyCase.FINITE_GROUP:
            raise EUnavailableError("dichotomy verdict has no finite E-set")
        return frozenset(analysis.group)
    return frozenset(analysis)


def prune_non_E_edges(
    A: ValenceAutomaton,
    analysis: Union[GateVerdict, DichotomyVerdict, Iterable[MElem], None],
) -> ValenceAutomaton:
    """Remove edges whose valence is outside E(N); such edges never occur in an accepting run."""
    E = _as_e_set(analysis)
    kept = tuple(e for e in A.edges if e.valence in E)
    if len(kept) != len(A.edges):
        logger.debug("Pruned %d edges outside E(N).", len(A.edges) - len(kept))
    return replace(A, edges=kept)


# ──────────────────────────────────────────────────────────────────────────────
# Bounded search
# ──────────────────────────────────────────────────────────────────────────────

def _budget(budget: Optional[SearchBudget]) -> SearchBudget:
    return budget or SearchBudget(NORM_CAP, MAX_STEPS)


def _within(A: ValenceAutomaton, elem: MElem, depth: int, budget: SearchBudget) -> bool:
    if A.monoid.is_finite:
        return True
    return depth <= budget.max_steps and norm(A.monoid, elem) <= budget.norm_cap


def accepts(A: ValenceAutomaton, w: Sequence[str], budget: Optional[SearchBudget] = None) -> Acceptance:
    """
    Is there a run from (q₀, 1) reading w into (q_f, 1)?

    `max_steps` bounds the run length and `norm_cap` the element norm; both
    are ignored for finite monoids, where the answer is always definitive.
    """
    budget = _budget(budget)
    for sym in w:
        if sym not in A.alphabet:
            raise unknown_symbol(sym, A.alphabet)
    A = normalize_edges(A)
    op, one = multiplier(A.monoid), identity(A.monoid)
    w = tuple(w)

    start = (A.initial, 0, one)
    seen = {start}
    queue = deque([(start, 0)])
    cut = False
    while queue:
        (q, pos, m), depth = queue.popleft()
        if pos == len(w) and m == one and q in A.final:
            return Acceptance.YES
        for e in A.outgoing.get(q, ()):
            if e.input and (pos >= len(w) or e.input[0] != w[pos]):
                continue
            nxt = (e.target, pos + len(e.input), op(m, e.valence))
            if nxt in seen:
                continue
            if not _within(A, nxt[2], depth + 1, budget):
                cut = True
                continue
            seen.add(nxt)
            queue.append((nxt, depth + 1))
    logger.debug("accepts: %d configurations, cut=%s", len(seen), cut)
    return Acceptance.NO_WITHIN_BUDGET if cut else Acceptance.NO


def enumerate_language(A: ValenceAutomaton, maxlen: int, budget: Optional[SearchBudget] = None) -> LangSample:
    """All accepted words of length ≤ maxlen, length-lexicographic."""
    budget = _budget(budget)
    A = normalize_edges(A)
    op, one = multiplier(A.monoid), identity(A.monoid)

    start = (A.initial, one, ())
    seen = {start}
    queue = deque([(start, 0)])
    words: Set[Word] = set()
    cut = False
    while queue:
        (q, m, word), depth = queue.popleft()
        if m == one and q in A.final:
            words.add(word)
        for e in A.outgoing.get(q, ()):
            if len(word) + len(e.input) > maxlen:
                continue
            nxt = (e.target, op(m, e.valence), word + e.input)
            if nxt in seen:
                continue
            if not _within(A, nxt[1], depth + 1, budget):
                cut = True
                continue
            seen.add(nxt)
            queue.append((nxt, depth + 1))

    if cut:
        logger.warning("Language slice up to length %d is incomplete under the budget.", maxlen)
    return LangSample(tuple(sorted_words(words)), maxlen, complete=not cut)


def transduce(
    T: ValenceTransducer,
    x: Sequence[str],
    budget: Optional[SearchBudget] = None,
    max_output: Optional[int] = None,
) -> TransductionSample:
    """All y with (x, y) ∈ T(A) and |y| ≤ max_output (default: the step budget)."""
    budget = _budget(budget)
    for sym in x:
        if sym not in T.alphabet:
            raise unknown_symbol(sym, T.alphabet)
    cap = budget.max_steps if max_output is None else max_output
    T = normalize_edges(T)
    op, one = multiplier(T.monoid), identity(T.monoid)
    x = tuple(x)

    start = (T.initial, 0, one, ())
    seen = {start}
    queue = deque([(start, 0)])
    outputs: Set[Word] = set()
    cut = False
    while queue:
        (q, pos, m, y), depth = queue.popleft()
        if pos == len(x) and m == one and q in T.final:
            outputs.add(y)
        for e in T.outgoing.get(q, ()):
            if e.input and (pos >= len(x) or e.input[0] != x[pos]):
                continue
            if len(y) + len(e.output) > cap:
                cut = True
                continue
            nxt = (e.target, pos + len(e.input), op(m, e.valence), y + e.output)
            if nxt in seen:
                continue
            if not _within(T, nxt[2], depth + 1, budget):
                cut = True
                continue
            seen.add(nxt)
            queue.append((nxt, depth + 1))
    pairs = tuple((x, y) for y in sorted_words(outputs))
    return TransductionSample(pairs, len(x), complete=not cut)


def transduction_slice(
    T: ValenceTransducer,
    maxlen: int,
    budget: Optional[SearchBudget] = None,
    max_output: Optional[int] = None,
) -> TransductionSample:
    """All pairs (x, y) of T(A) with |x| ≤ maxlen, ordered by x then y."""
    budget = _budget(budget)
    cap = budget.max_steps if max_output is None else max_output
    T = normalize_edges(T)
    op, one = multiplier(T.monoid), identity(T.monoid)

    start = (T.initial, one, (), ())
    seen = {start}
    queue = deque([(start, 0)])
    pairs: Set[Tuple[Word, Word]] = set()
    cut = False
    while queue:
        (q, m, x, y), depth = queue.popleft()
        if m == one and q in T.final:
            pairs.add((x, y))
        for e in T.outgoing.get(q, ()):
            if len(x) + len(e.input) > maxlen:
                continue
            if len(y) + len(e.output) > cap:
                cut = True
                continue
            nxt = (e.target, op(m, e.valence), x + e.input, y + e.output)
            if nxt in seen:
                continue
            if not _within(T, nxt[1], depth + 1, budget):
                cut = True
                continue
            seen.add(nxt)
            queue.append((nxt, depth + 1))
    ordered = sorted(pairs, key=lambda p: (len(p[0]), p[0], len(p[1]), p[1]))
    return TransductionSample(tuple(ordered), maxlen, complete=not cut)


# ──────────────────────────────────────────────────────────────────────────────
# Conversions
# ──────────────────────────────────────────────────────────────────────────────

def _product_construction(A: ValenceAutomaton, what: str, norm_cap: int) -> ValenceAutomaton:
    verdict = edge_gate(A, norm_cap)
    if not verdict.is_finite:
        logger.warning("%s refused: gate answered %s.", what, verdict.answer.value)
        raise GateRefusal(verdict, what)

    M = A.monoid
    H = e_set_of(verdict)
    A = prune_non_E_edges(normalize_edges(A), H)
    op, one = multiplier(M), identity(M)

    def name(q: str, h: MElem) -> str:
        # q is escaped; the first bare "@" separates state and element
        escaped = q.replace("\\", "\\\\").replace("@", "\\@")
        return f"{escaped}@{format_element(M, h)}"

    trivial = trivial_monoid()
    unit = identity(trivial)
    start = (A.initial, one)
    order = [start]
    seen = {start}
    queue = deque([start])
    edges: List[Edge] = []
    while queue:
        q, h = queue.popleft()
        for e in A.outgoing.get(q, ()):
            nxt = (e.target, op(h, e.valence))
            edges.append(Edge(name(q, h), e.input, unit, name(*nxt), e.output))
            if nxt not in seen:
                seen.add(nxt)
                order.append(nxt)
                queue.append(nxt)

    edges = list(dict.fromkeys(edges))
    states = tuple(name(q, h) for q, h in order)
    final = frozenset(name(q, h) for q, h in order if q in A.final and h == one)
    logger.info("%s: %d states, %d edges over |E(N)| = %d.", what, len(states), len(edges), len(H))

    if isinstance(A, ValenceTransducer):
        return ValenceTransducer(trivial, A.alphabet, states, name(*start), final, tuple(edges),
                                 output_alphabet=A.output_alphabet)
    return ValenceAutomaton(trivial, A.alphabet, states, name(*start), final, tuple(edges))


def to_nfa(A: ValenceAutomaton, norm_cap: int = NORM_CAP) -> Nfa:
    """Classical automaton with states Q × E(N); raises GateRefusal unless the gate says finite."""
    return _product_construction(A, "to_nfa", norm_cap)


def to_fst(T: ValenceTransducer, norm_cap: int = NORM_CAP) -> Fst:
    return _product_construction(T, "to_fst", norm_cap)
