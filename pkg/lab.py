"""
lab.py — Witness languages and desk-scale (non-)regularity evidence.

Witness languages
─────────────────
automaton-K    K  = X* ∪ {w ∈ X*Y* | φ(w) = 1}, Y a mirrored copy of X
grammar-K'     K′ = {r c s c rev(r) | r, s ∈ X*, φ(rs) = 1}

Each comes with a direct membership oracle and a device (valence automaton
or valence grammar) whose bounded slices must agree with the oracle.

Evidence tools
──────────────
nerode_separators   prefixes pairwise distinguished by some suffix
ogden_falsify       exhaustive z = uvwxy search against the marked-position
                    pumping conditions; zero survivors is evidence, not proof
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import combinations
from typing import Callable, Dict, Iterable, List, Literal, Optional, Sequence, Tuple

from config import DEFAULT_PUMP_SET, MAX_WORD_LEN, logger
from errors import InvalidDeviceError, OgdenInputError, ValenceError
from grammars import Production, ValenceGrammar, bounded_language
from machines import Edge, ValenceAutomaton, enumerate_language
from models import Decomposition, OgdenReport, SearchBudget, Separator
from monoid import GenMap, MonoidHandle, eval_word, identity, mul
from utils import Word, format_word, fresh_name, reverse_word, sorted_words, unknown_symbol, words_up_to

Oracle = Callable[[Word], bool]

AUTOMATON_K = "automaton-K"
GRAMMAR_K   = "grammar-K'"


# ──────────────────────────────────────────────────────────────────────────────
# Witness specification
# ──────────────────────────────────────────────────────────────────────────────

def default_mirror(xs: Sequence[str]) -> Dict[str, str]:
    """x1 → y1, x_p → y_p; symbols not starting with 'x' get a trailing prime."""
    taken = set(xs)
    mirror: Dict[str, str] = {}
    for x in xs:
        base = "y" + x[1:] if x.startswith("x") else x + "'"
        name = fresh_name(base, taken)
        taken.add(name)
        mirror[x] = name
    return mirror


@dataclass(frozen=True)
class WitnessSpec:
    kind:       Literal["automaton-K", "grammar-K'"]
    monoid:     MonoidHandle
    generators: GenMap
    mirror:     Tuple[Tuple[str, str], ...] = ()
    separator:  str = "c"

    def __post_init__(self) -> None:
        xs = set(self.xs)
        if self.kind == AUTOMATON_K:
            ys = set(self.ys)
            if len(ys) != len(self.mirror) or set(x for x, _ in self.mirror) != xs:
                raise InvalidDeviceError("mirror must map every X symbol to a distinct Y symbol")
            if xs & ys:
                raise InvalidDeviceError(f"X and Y overlap in {sorted(xs & ys)}")
        elif self.separator in xs:
            raise InvalidDeviceError(f"separator {self.separator!r} is also a generator")

    @classmethod
    def build(cls, kind: str, monoid: MonoidHandle, generators: GenMap,
              mirror: Optional[Dict[str, str]] = None, separator: str = "c") -> "WitnessSpec":
        if kind == AUTOMATON_K and mirror is None:
            mirror = default_mirror(generators.alphabet)
        pairs = tuple(sorted((mirror or {}).items()))
        return cls(kind, monoid, generators, pairs, separator)  # type: ignore[arg-type]

    @property
    def xs(self) -> Tuple[str, ...]:
        return self.generators.alphabet

    @property
    def ys(self) -> Tuple[str, ...]:
        return tuple(y for _, y in self.mirror)

    @property
    def alphabet(self) -> Tuple[str, ...]:
        if self.kind == AUTOMATON_K:
            return self.xs + self.ys
        return self.xs + (self.separator,)

    @cached_property
    def phi(self) -> GenMap:
        """φ on X, extended by φ(y) := φ(x) for mirrored symbols."""
        mapping = dict(self.generators.mapping)
        for x, y in self.mirror:
            mapping[y] = mapping[x]
        return GenMap.of(self.monoid, mapping)

    def oracle(self) -> Oracle:
        return lambda w: witness_membership(self, w)


def witness_membership(spec: WitnessSpec, w: Sequence[str]) -> bool:
    """Direct structural membership test for K or K′."""
    w = tuple(w)
    for sym in w:
        if sym not in spec.alphabet:
            raise unknown_symbol(sym, spec.alphabet)
    M, one = spec.monoid, identity(spec.monoid)
    xs = set(spec.xs)

    if spec.kind == AUTOMATON_K:
        if all(s in xs for s in w):
            return True
        cut = next(i for i, s in enumerate(w) if s not in xs)
        if any(s in xs for s in w[cut:]):
            return False
        return eval_word(M, spec.phi, w) == one

    c = spec.separator
    marks = [i for i, s in enumerate(w) if s == c]
    if len(marks) != 2:
        return False
    r, s, tail = w[:marks[0]], w[marks[0] + 1:marks[1]], w[marks[1] + 1:]
    if tail != reverse_word(r):
        return False
    return eval_word(M, spec.phi, r + s) == one


# ──────────────────────────────────────────────────────────────────────────────
# Witness devices
# ──────────────────────────────────────────────────────────────────────────────

def build_witness_automaton(spec: WitnessSpec) -> ValenceAutomaton:
    """
    States: s (start), f (free X* loop with identity valences),
    p (X phase, valences φ(x)), y (Y phase, valences φ(y)); all final.
    """
    if spec.kind != AUTOMATON_K:
        raise InvalidDeviceError("build_witness_automaton needs an automaton-K spec")
    M, one, phi = spec.monoid, identity(spec.monoid), spec.phi.mapping
    edges: List[Edge] = [Edge("s", (), one, "f"), Edge("s", (), one, "p")]
    edges += [Edge("f", (x,), one, "f") for x in spec.xs]
    edges += [Edge("p", (x,), phi[x], "p") for x in spec.xs]
    edges += [Edge("p", (y,), phi[y], "y") for y in spec.ys]
    edges += [Edge("y", (y,), phi[y], "y") for y in spec.ys]
    states = ("s", "f", "p", "y")
    return ValenceAutomaton(M, spec.alphabet, states, "s", frozenset(states), tuple(edges), spec.phi)


def build_witness_grammar(spec: WitnessSpec) -> ValenceGrammar:
    """
    (S0 → x S0 x; φ(x)), (S0 → c S1 c; 1), (S1 → x S1; φ(x)), (S1 → λ; 1).
    """
    if spec.kind != GRAMMAR_K:
        raise InvalidDeviceError("build_witness_grammar needs a grammar-K' spec")
    M, one, phi = spec.monoid, identity(spec.monoid), spec.generators.mapping
    c = spec.separator
    productions = [Production("S0", (x, "S0", x), phi[x]) for x in spec.xs]
    productions.append(Production("S0", (c, "S1", c), one))
    productions += [Production("S1", (x, "S1"), phi[x]) for x in spec.xs]
    productions.append(Production("S1", (), one))
    return ValenceGrammar(M, ("S0", "S1"), spec.alphabet, "S0", tuple(productions), spec.generators)


def cross_check_witness(spec: WitnessSpec, maxlen: int = MAX_WORD_LEN,
                        budget: Optional[SearchBudget] = None) -> Dict:
    """Compare the device's slice with the oracle on every word up to maxlen."""
    if spec.kind == AUTOMATON_K:
        sample = enumerate_language(build_witness_automaton(spec), maxlen, budget)
    else:
        sample = bounded_language(build_witness_grammar(spec), maxlen, budget=budget)
    oracle = spec.oracle()
    expected = [w for w in words_up_to(spec.alphabet, maxlen) if oracle(w)]
    device, truth = set(sample.words), set(expected)
    report = {
        "kind": spec.kind,
        "maxlen": maxlen,
        "checked": sum(len(spec.alphabet) ** n for n in range(maxlen + 1)),
        "accepted": len(truth),
        "complete": sample.complete,
        "agree": device == truth,
        "device_only": [format_word(w) for w in sorted_words(device - truth)],
        "oracle_only": [format_word(w) for w in sorted_words(truth - device)],
    }
    if not report["agree"]:
        logger.warning("Witness device and oracle disagree on %d words.",
                       len(report["device_only"]) + len(report["oracle_only"]))
    return report


def minimal_left_factor(spec: WitnessSpec, s: Sequence[str], maxlen: int = MAX_WORD_LEN) -> Optional[Word]:
    """Shortest r ∈ X* (length-lexicographic) with φ(rs) = 1."""
    M, one, s = spec.monoid, identity(spec.monoid), tuple(s)
    for r in words_up_to(spec.xs, maxlen):
        if eval_word(M, spec.generators, r + s) == one:
            return r
    return None


def kprime_word(spec: WitnessSpec, r: Sequence[str], s: Sequence[str]) -> Word:
    c = spec.separator
    return tuple(r) + (c,) + tuple(s) + (c,) + reverse_word(r)


def default_marks(r: Sequence[str]) -> Tuple[int, ...]:
    """The first |r| positions."""
    return tuple(range(len(r)))


def power_candidates(spec: WitnessSpec, n: int) -> Optional[Tuple[List[Word], List[Word]]]:
    """
    Prefix and suffix families built from a generator pair with φ(x)φ(y) = 1,
    φ(x) ≠ 1. K: prefixes xⁱ, suffixes yʲ (y ∈ Y). K′: prefixes xⁱc,
    suffixes yʲcxʲ (y ∈ X). None when no such pair exists.
    """
    M, one = spec.monoid, identity(spec.monoid)
    phi = spec.phi.mapping
    targets = spec.ys if spec.kind == AUTOMATON_K else spec.xs
    for x in spec.xs:
        for y in targets:
            if phi[x] == one or mul(M, phi[x], phi[y]) != one:
                continue
            if spec.kind == AUTOMATON_K:
                return [(x,) * i for i in range(n)], [(y,) * j for j in range(n)]
            c = (spec.separator,)
            return [(x,) * i + c for i in range(n)], [(y,) * j + c + (x,) * j for j in range(n)]
    return None


# ──────────────────────────────────────────────────────────────────────────────
# Myhill–Nerode separators
# ──────────────────────────────────────────────────────────────────────────────

def nerode_separators(
    oracle: Oracle,
    alphabet: Sequence[str],
    prefix_maxlen: int,
    suffix_maxlen: int,
    want: int,
    prefixes: Optional[Iterable[Sequence[str]]] = None,
    suffixes: Optional[Iterable[Sequence[str]]] = None,
    suffix_alphabet: Optional[Sequence[str]] = None,
) -> Separator:
    """
    Greedily keep prefixes whose membership signature over the candidate
    suffixes differs from every kept prefix, up to `want`. Each pair gets
    its first distinguishing suffix, re-verified against the oracle.
    """
    if prefixes is None:
        prefixes = words_up_to(alphabet, prefix_maxlen)
    if suffixes is None:
        suffixes = words_up_to(suffix_alphabet or alphabet, suffix_maxlen)
    suffix_list = [tuple(s) for s in suffixes]

    kept: List[Word] = []
    signatures: List[Tuple[bool, ...]] = []
    for u in prefixes:
        if len(kept) >= want:
            break
        u = tuple(u)
        sig = tuple(oracle(u + s) for s in suffix_list)
        if sig not in signatures:
            kept.append(u)
            signatures.append(sig)

    witnesses: Dict[Tuple[int, int], Word] = {}
    for i, j in combinations(range(len(kept)), 2):
        idx = next(n for n, (a, b) in enumerate(zip(signatures[i], signatures[j])) if a != b)
        s = suffix_list[idx]
        if oracle(kept[i] + s) == oracle(kept[j] + s):
            raise ValenceError(f"oracle is not deterministic on suffix {format_word(s)!r}")
        witnesses[(i, j)] = s

    if len(kept) < want:
        logger.info("Found %d of %d requested separators.", len(kept), want)
    return Separator(kept, witnesses)


# ──────────────────────────────────────────────────────────────────────────────
# Ogden falsifier
# ──────────────────────────────────────────────────────────────────────────────

def ogden_falsify(
    oracle: Oracle,
    z: Sequence[str],
    marks: Iterable[int],
    m: int,
    pump_set: Sequence[int] = DEFAULT_PUMP_SET,
) -> OgdenReport:
    """
    Try every z = uvwxy. A decomposition is eligible when w holds a marked
    position, u and v (or x and y) both hold marked positions, and vwx holds
    at most m; it survives when uvⁱwxⁱy is accepted for every i in pump_set.
    """
    z = tuple(z)
    n = len(z)
    marks = tuple(sorted(set(marks)))
    if any(not 0 <= p < n for p in marks):
        raise OgdenInputError(f"marked positions must lie in 0..{n - 1}")
    if len(marks) < m:
        raise OgdenInputError(f"{len(marks)} marked positions, at least m = {m} needed")

    marked = set(marks)
    prefix = [0] * (n + 1)
    for p in range(n):
        prefix[p + 1] = prefix[p] + (p in marked)
    count = lambda a, b: prefix[b] - prefix[a]   # noqa: E731

    cache: Dict[Word, bool] = {}

    def member(word: Word) -> bool:
        if word not in cache:
            cache[word] = oracle(word)
        return cache[word]

    report = OgdenReport(z, marks, m, tuple(pump_set))
    for i in range(n + 1):
        for j in range(i, n + 1):
            for k in range(j, n + 1):
                for l in range(k, n + 1):
                    report.examined += 1
                    if count(j, k) < 1:
                        continue
                    left = count(0, i) > 0 and count(i, j) > 0
                    right = count(k, l) > 0 and count(l, n) > 0
                    if not (left or right) or count(i, l) > m:
                        continue
                    report.eligible += 1
                    d = Decomposition((i, j, k, l), z[:i], z[i:j], z[j:k], z[k:l], z[l:])
                    if all(member(d.pumped(e)) for e in pump_set):
                        report.survivors.append(d)

    logger.info("Ogden search on |z| = %d: %d eligible, %d survivors.", n, report.eligible, len(report.survivors))
    return report
