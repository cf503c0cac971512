"""
data_loader.py — Loads device files and the finite-monoid corpus.

File kinds
──────────
1. monoid      {"kind": "finite-table" | "int-vectors" | "bicyclic" | "product", …}
2. genmap      {"x1": [1], "x2": [-1]}   symbol → element literal
3. automaton   states / edges with valences  (transducer when output_alphabet is set)
4. grammar     nonterminals / terminals / productions with valences
5. tree        nodes with parent links and valences
6. witness     automaton-K / grammar-K' description

A "monoid" field is an inline monoid object, a path to a monoid file
(relative to the referring file) or a catalog name such as "Z2", "S3",
"T2", "Z^2", "B" or "B^2".

Every failure surfaces as DeviceFileError("path:line: message"); the line
comes from the JSON decoder or from locating the offending key.
"""

from __future__ import annotations

import itertools
import json
import re
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Type, TypeVar, Union

from pydantic import BaseModel, ValidationError

from config import logger
from errors import DeviceFileError, UnknownSymbolError, ValenceError
from grammars import Production, ValenceGrammar
from lab import WitnessSpec
from machines import Edge, ValenceAutomaton, ValenceTransducer
from models import AutomatonFile, GrammarFile, MonoidFile, TreeFile, WitnessFile
from monoid import (
    BICYCLIC,
    FINITE_TABLE,
    INT_VECTORS,
    GenMap,
    MElem,
    MonoidHandle,
    as_finite_table,
    bicyclic,
    cyclic_group,
    direct_product,
    eval_word,
    finite_table,
    full_transformations,
    identity,
    int_vectors,
    parse_literal,
    symmetric_group,
    trivial_monoid,
)
from utils import tokenize
from valence_trees import ValenceTree

PathLike = Union[str, Path]
Schema = TypeVar("Schema", bound=BaseModel)


# ──────────────────────────────────────────────────────────────────────────────
# Raw JSON + line diagnostics
# ──────────────────────────────────────────────────────────────────────────────

def _line_of(text: str, key: str, occurrence: int = 0) -> int:
    """1-based line of the n-th `"key"` in text; 1 when absent."""
    hits = [m.start() for m in re.finditer(re.escape(json.dumps(key)), text)]
    if not hits:
        return 1
    return text.count("\n", 0, hits[min(occurrence, len(hits) - 1)]) + 1


def _read(path: PathLike) -> Tuple[Path, str, Any]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DeviceFileError(path, 0, f"cannot read file ({exc.strerror})") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DeviceFileError(path, exc.lineno, exc.msg) from exc
    return path, text, data


def _validate(schema: Type[Schema], data: Any, path: Path, text: str) -> Schema:
    try:
        return schema.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        loc = [p for p in first["loc"] if isinstance(p, str)]
        indices = [p for p in first["loc"] if isinstance(p, int)]
        line = _line_of(text, loc[0], indices[0] if indices else 0) if loc else 1
        where = ".".join(str(p) for p in first["loc"])
        raise DeviceFileError(path, line, f"{where}: {first['msg']}") from exc


# ──────────────────────────────────────────────────────────────────────────────
# Monoids
# ──────────────────────────────────────────────────────────────────────────────

_CATALOG_NAME = re.compile(r"^(Z|S|T|B)(?:\^?(\d+))?$")


def catalog_monoid(name: str) -> MonoidHandle:
    """
    "1" → trivial, "Zn" → cyclic group of order n, "Z^k" → ℤᵏ (plain "Z" is ℤ¹),
    "Sn" → symmetric group, "Tn" → full transformations, "B" / "B^j" → bicyclic power.
    """
    if name == "1":
        return trivial_monoid()
    m = _CATALOG_NAME.match(name.strip())
    if m is None:
        raise ValenceError(f"unknown catalog monoid {name!r}")
    letter, digits = m.group(1), m.group(2)
    caret = "^" in name
    n = int(digits) if digits else None
    if letter == "Z":
        if n is None or caret:
            return int_vectors(1 if n is None else n)
        return cyclic_group(n)
    if letter == "B":
        return bicyclic(n or 1)
    if n is None:
        raise ValenceError(f"catalog monoid {name!r} needs a size")
    return symmetric_group(n) if letter == "S" else full_transformations(n)


def monoid_from_model(model: MonoidFile, label: str = "") -> MonoidHandle:
    if model.kind == FINITE_TABLE:
        return finite_table(model.elements, model.identity, model.table, label=label)
    if model.kind == INT_VECTORS:
        return int_vectors(model.rank)
    if model.kind == BICYCLIC:
        return bicyclic(model.power or 1)
    return direct_product(*(monoid_from_model(f) for f in model.factors))


def _resolve_monoid(ref: Union[MonoidFile, str], path: Path, text: str) -> MonoidHandle:
    try:
        if isinstance(ref, MonoidFile):
            return monoid_from_model(ref, label=path.stem)
        candidate = (path.parent / ref)
        if candidate.suffix == ".json" or candidate.is_file():
            return load_monoid(candidate)
        return catalog_monoid(ref)
    except DeviceFileError:
        raise
    except ValenceError as exc:
        raise DeviceFileError(path, _line_of(text, "monoid"), str(exc)) from exc


def load_monoid(path: PathLike) -> MonoidHandle:
    path, text, data = _read(path)
    model = _validate(MonoidFile, data, path, text)
    try:
        M = monoid_from_model(model, label=path.stem)
    except ValenceError as exc:
        raise DeviceFileError(path, _line_of(text, "table"), str(exc)) from exc
    logger.info("Loaded monoid %r from '%s'.", M, path.name)
    return M


# ──────────────────────────────────────────────────────────────────────────────
# Generators and valences
# ──────────────────────────────────────────────────────────────────────────────

def genmap_from_dict(M: MonoidHandle, raw: Mapping[str, Any]) -> GenMap:
    return GenMap.of(M, {str(sym): parse_literal(M, lit) for sym, lit in raw.items()})


def load_genmap(path: PathLike, M: MonoidHandle) -> GenMap:
    path, text, data = _read(path)
    if not isinstance(data, dict) or not data:
        raise DeviceFileError(path, 1, "a generator map is a non-empty JSON object")
    try:
        return genmap_from_dict(M, data)
    except ValenceError as exc:
        raise DeviceFileError(path, 1, str(exc)) from exc


def resolve_valence(M: MonoidHandle, gm: Optional[GenMap], raw: Any) -> MElem:
    """
    None → identity. A string (or list of strings) is first read as a word
    over the generators; failing that, as an element literal.
    """
    if raw is None:
        return identity(M)
    if gm is not None and (isinstance(raw, str) or (isinstance(raw, list) and all(isinstance(s, str) for s in raw))):
        try:
            return eval_word(M, gm, tokenize(raw, gm.alphabet))
        except UnknownSymbolError:
            if M.kind != FINITE_TABLE:
                raise
    return parse_literal(M, raw)


def _genmap(M: MonoidHandle, raw: Optional[Mapping[str, Any]], path: Path, text: str) -> Optional[GenMap]:
    if raw is None:
        return None
    try:
        return genmap_from_dict(M, raw)
    except ValenceError as exc:
        raise DeviceFileError(path, _line_of(text, "generators"), str(exc)) from exc


# ──────────────────────────────────────────────────────────────────────────────
# Devices
# ──────────────────────────────────────────────────────────────────────────────

def load_automaton(path: PathLike) -> ValenceAutomaton:
    """Automaton or transducer file → device."""
    path, text, data = _read(path)
    model = _validate(AutomatonFile, data, path, text)
    M = _resolve_monoid(model.monoid, path, text)
    gm = _genmap(M, model.generators, path, text)
    alphabet = tuple(model.alphabet)
    out_alphabet = tuple(model.output_alphabet or ())

    edges: List[Edge] = []
    for i, e in enumerate(model.edges):
        try:
            word = tokenize(e.input, alphabet)
            out = tokenize(e.output, out_alphabet) if e.output is not None else ()
            edges.append(Edge(e.source, word, resolve_valence(M, gm, e.valence), e.target, out))
        except ValenceError as exc:
            raise DeviceFileError(path, _line_of(text, "from", i), f"edges[{i}]: {exc}") from exc

    try:
        if model.is_transducer:
            device: ValenceAutomaton = ValenceTransducer(
                M, alphabet, tuple(model.states), model.initial, frozenset(model.final),
                tuple(edges), gm, out_alphabet,
            )
        else:
            device = ValenceAutomaton(
                M, alphabet, tuple(model.states), model.initial, frozenset(model.final), tuple(edges), gm,
            )
    except ValenceError as exc:
        raise DeviceFileError(path, _line_of(text, "states"), str(exc)) from exc

    logger.info("Loaded %s with %d states and %d edges from '%s'.",
                "transducer" if model.is_transducer else "automaton",
                len(device.states), len(device.edges), path.name)
    return device


def load_grammar(path: PathLike) -> ValenceGrammar:
    path, text, data = _read(path)
    model = _validate(GrammarFile, data, path, text)
    M = _resolve_monoid(model.monoid, path, text)
    gm = _genmap(M, model.generators, path, text)
    symbols = tuple(model.nonterminals) + tuple(model.terminals)

    productions: List[Production] = []
    for i, p in enumerate(model.productions):
        try:
            productions.append(Production(p.lhs, tokenize(p.rhs, symbols), resolve_valence(M, gm, p.valence)))
        except ValenceError as exc:
            raise DeviceFileError(path, _line_of(text, "lhs", i), f"productions[{i}]: {exc}") from exc

    try:
        G = ValenceGrammar(M, tuple(model.nonterminals), tuple(model.terminals), model.start,
                           tuple(productions), gm)
    except ValenceError as exc:
        raise DeviceFileError(path, _line_of(text, "start"), str(exc)) from exc
    logger.info("Loaded grammar with %d productions from '%s'.", len(G.productions), path.name)
    return G


def load_tree(path: PathLike) -> ValenceTree:
    path, text, data = _read(path)
    model = _validate(TreeFile, data, path, text)
    M = _resolve_monoid(model.monoid, path, text)
    gm = _genmap(M, model.generators, path, text)

    parents: Dict[str, Optional[str]] = {}
    valences: Dict[str, MElem] = {}
    for i, node in enumerate(model.nodes):
        if node.id in parents:
            raise DeviceFileError(path, _line_of(text, "id", i), f"duplicate node id {node.id!r}")
        try:
            valences[node.id] = resolve_valence(M, gm, node.valence)
        except ValenceError as exc:
            raise DeviceFileError(path, _line_of(text, "id", i), f"nodes[{i}]: {exc}") from exc
        parents[node.id] = node.parent
    try:
        return ValenceTree(M, parents, valences)
    except ValenceError as exc:
        raise DeviceFileError(path, _line_of(text, "nodes"), str(exc)) from exc


def load_witness(path: PathLike) -> WitnessSpec:
    path, text, data = _read(path)
    model = _validate(WitnessFile, data, path, text)
    M = _resolve_monoid(model.monoid, path, text)
    gm = _genmap(M, model.generators, path, text)
    try:
        return WitnessSpec.build(model.kind, M, gm, model.mirror, model.separator)
    except ValenceError as exc:
        raise DeviceFileError(path, _line_of(text, "kind"), str(exc)) from exc


def load_device(path: PathLike) -> Union[ValenceAutomaton, ValenceGrammar]:
    """Dispatch on the file's keys: "productions" → grammar, otherwise automaton."""
    _, _, data = _read(path)
    if isinstance(data, dict) and "productions" in data:
        return load_grammar(path)
    return load_automaton(path)


# ──────────────────────────────────────────────────────────────────────────────
# Finite-monoid corpus
# ──────────────────────────────────────────────────────────────────────────────

def _table_monoid(elements: Sequence[str], identity_name: str, op, label: str) -> MonoidHandle:
    table = {a: {b: op(a, b) for b in elements} for a in elements}
    return finite_table(elements, identity_name, table, label=label)


def _canonical(names: Sequence[str], rows: Dict[Tuple[str, str], str]) -> Tuple:
    """Lexicographically least relabelling of the non-identity elements."""
    rest = names[1:]
    best = None
    for perm in itertools.permutations(rest):
        relabel = {names[0]: names[0], **dict(zip(rest, perm))}
        key = tuple(sorted((relabel[a], relabel[b], relabel[c]) for (a, b), c in rows.items()))
        if best is None or key < best:
            best = key
    return best


def monoids_of_order(n: int) -> List[MonoidHandle]:
    """
    Every monoid with n ≤ 3 elements, one per isomorphism class, by brute
    force over the tables with a fixed identity "1".
    """
    if n > 3:
        raise ValueError("exhaustive generation is limited to order ≤ 3")
    names = ("1", "a", "b")[:n]
    rest = names[1:]
    cells = [(x, y) for x in rest for y in rest]
    seen = set()
    found: List[MonoidHandle] = []
    for values in itertools.product(names, repeat=len(cells)):
        rows = {(x, y): v for (x, y), v in zip(cells, values)}
        op = lambda x, y: y if x == "1" else x if y == "1" else rows[(x, y)]   # noqa: E731
        if any(op(op(x, y), z) != op(x, op(y, z)) for x, y, z in itertools.product(names, repeat=3)):
            continue
        full = {(x, y): op(x, y) for x in names for y in names}
        key = _canonical(names, full)
        if key in seen:
            continue
        seen.add(key)
        found.append(_table_monoid(names, "1", op, f"M{n}.{len(found) + 1}"))
    return found


def load_monoid_corpus() -> List[MonoidHandle]:
    """All monoids of order ≤ 3 up to isomorphism plus selected larger tables."""
    corpus: List[MonoidHandle] = []
    for n in (1, 2, 3):
        corpus.extend(monoids_of_order(n))

    corpus.append(as_finite_table(cyclic_group(4)))
    corpus.append(as_finite_table(cyclic_group(5)))
    corpus.append(as_finite_table(cyclic_group(6)))
    corpus.append(as_finite_table(direct_product(cyclic_group(2), cyclic_group(2))))
    corpus.append(as_finite_table(symmetric_group(3)))
    corpus.append(as_finite_table(full_transformations(2)))

    # nilpotent: 1, a, a², 0 with a³ = 0
    powers = {"1": 0, "a": 1, "a2": 2, "0": 3}
    names = list(powers)
    corpus.append(_table_monoid(names, "1", lambda x, y: names[min(powers[x] + powers[y], 3)], "N4"))

    # semilattice: 1 above two incomparable idempotents meeting in 0
    corpus.append(_table_monoid(["1", "e", "f", "0"], "1",
                                lambda x, y: y if x == "1" else x if y in ("1", x) else "0", "SL4"))

    # rectangular band {(i,j)} with adjoined identity; (i,j)(k,l) = (i,l)
    band = ["1", "11", "12", "21", "22"]
    corpus.append(_table_monoid(band, "1",
                                lambda x, y: y if x == "1" else x if y == "1" else x[0] + y[1], "RB5"))

    # cyclic group of order 3 with adjoined zero
    z3 = cyclic_group(3)
    corpus.append(_table_monoid(list(z3.elements) + ["0"], "1",
                                lambda x, y: "0" if "0" in (x, y) else z3.elements[z3.table[z3.index[x]][z3.index[y]]],
                                "Z3^0"))

    # Brandt monoid: matrix units e_ij with e_ij e_jl = e_il, adjoined 1 and 0
    def brandt(x: str, y: str) -> str:
        if x == "1" or y == "1":
            return y if x == "1" else x
        if "0" in (x, y) or x[2] != y[1]:
            return "0"
        return "e" + x[1] + y[2]

    corpus.append(_table_monoid(["1", "e11", "e12", "e21", "e22", "0"], "1", brandt, "B2^1"))

    logger.info("Built finite-monoid corpus with %d tables.", len(corpus))
    return corpus
