"""
models.py — Data models for the valence toolkit.

Result records are plain dataclasses used internally by the analysis,
machine and lab code; each one serialises itself with `to_dict()` for the
CLI. Input files are validated with the Pydantic schemas further down.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from monoid import MElem, MonoidHandle, format_element, to_literal
from utils import Word, format_word


# ──────────────────────────────────────────────────────────────────────────────
# Enumerations
# ──────────────────────────────────────────────────────────────────────────────

class Acceptance(str, Enum):
    YES              = "yes"
    NO               = "no"
    NO_WITHIN_BUDGET = "no-within-budget"


class GateAnswer(str, Enum):
    FINITE   = "finite"
    INFINITE = "infinite"
    UNKNOWN  = "unknown"


class GateMethod(str, Enum):
    EXHAUSTIVE_CLOSURE = "exhaustive-closure"
    LINEAR_FEASIBILITY = "linear-feasibility"
    CLASS_RULE         = "class-rule"
    BOUNDED_SEARCH     = "bounded-search"


class DichotomyCase(str, Enum):
    FINITE_GROUP   = "finite-group"
    INFINITE_CHAIN = "infinite-chain"


# ──────────────────────────────────────────────────────────────────────────────
# Internal dataclasses  (used by machines / grammars / analysis / lab)
# ──────────────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class SearchBudget:
    norm_cap:  int = 64
    max_steps: int = 64


@dataclass(frozen=True)
class LangSample:
    """Length-bounded language slice in length-lexicographic order."""
    words:    Tuple[Word, ...]
    maxlen:   int
    complete: bool = True

    def __contains__(self, word: object) -> bool:
        return tuple(word) in set(self.words)  # type: ignore[arg-type]

    def __len__(self) -> int:
        return len(self.words)

    def to_dict(self) -> Dict:
        return {
            "maxlen":   self.maxlen,
            "complete": self.complete,
            "count":    len(self.words),
            "words":    [format_word(w) for w in self.words],
        }


@dataclass(frozen=True)
class TransductionSample:
    pairs:    Tuple[Tuple[Word, Word], ...]
    maxlen:   int
    complete: bool = True

    def to_dict(self) -> Dict:
        return {
            "maxlen":   self.maxlen,
            "complete": self.complete,
            "count":    len(self.pairs),
            "pairs":    [[format_word(x), format_word(y)] for x, y in self.pairs],
        }


@dataclass
class GateVerdict:
    monoid:      MonoidHandle
    answer:      GateAnswer
    method:      GateMethod
    r_set:       Tuple[MElem, ...] = ()          # R(N) when answer is finite
    certificate: Dict[str, Any]    = field(default_factory=dict)

    @property
    def is_finite(self) -> bool:
        return self.answer == GateAnswer.FINITE

    def to_dict(self) -> Dict:
        result: Dict[str, Any] = {
            "answer": self.answer.value,
            "method": self.method.value,
            "certificate": self.certificate,
        }
        if self.answer == GateAnswer.FINITE:
            # R(N) = L(N) = E(N) once R(N) is finite
            result["r_set"] = [to_literal(self.monoid, a) for a in self.r_set]
            result["e_set_equals_r_set"] = True
        return result


@dataclass
class ChainStep:
    """x ⊑ y witnessed by y = x·c = d·x."""
    lower: MElem
    upper: MElem
    c:     MElem
    d:     MElem


@dataclass
class DichotomyVerdict:
    monoid:   MonoidHandle
    case:     DichotomyCase
    basis:    str                                   # "exhaustive" | "class-rule"

    # finite-group case
    group:    Tuple[MElem, ...]        = ()
    inverses: Dict[MElem, MElem]       = field(default_factory=dict)

    # infinite-chain case
    r_chain:  List[ChainStep]          = field(default_factory=list)
    l_chain:  List[ChainStep]          = field(default_factory=list)
    r_inverse_witnesses: List[MElem]   = field(default_factory=list)   # bᵢ ∈ R_inv(xᵢ)
    l_inverse_witnesses: List[MElem]   = field(default_factory=list)
    chain_rule: str = ""

    def to_dict(self) -> Dict:
        M = self.monoid
        lit = lambda a: to_literal(M, a)   # noqa: E731
        result: Dict[str, Any] = {"case": self.case.value, "basis": self.basis}

        if self.case == DichotomyCase.FINITE_GROUP:
            result["group"] = [lit(a) for a in self.group]
            result["size"] = len(self.group)
            result["inverses"] = {format_element(M, a): lit(b) for a, b in self.inverses.items()}
            return result

        def steps(chain: List[ChainStep]) -> List[Dict]:
            return [{"x": lit(s.lower), "next": lit(s.upper), "c": lit(s.c), "d": lit(s.d)}
                    for s in chain]

        result["chain_rule"] = self.chain_rule
        result["r_chain"] = steps(self.r_chain)
        result["l_chain"] = steps(self.l_chain)
        result["r_inverse_witnesses"] = [lit(a) for a in self.r_inverse_witnesses]
        result["l_inverse_witnesses"] = [lit(a) for a in self.l_inverse_witnesses]
        return result


@dataclass
class Decomposition:
    """z = u·v·w·x·y, stored as the four cut points i ≤ j ≤ k ≤ l."""
    cuts: Tuple[int, int, int, int]
    u: Word
    v: Word
    w: Word
    x: Word
    y: Word

    def pumped(self, i: int) -> Word:
        return self.u + self.v * i + self.w + self.x * i + self.y

    def to_dict(self) -> Dict:
        return {k: format_word(getattr(self, k)) for k in ("u", "v", "w", "x", "y")}


@dataclass
class OgdenReport:
    word:       Word
    marks:      Tuple[int, ...]
    m:          int
    pump_set:   Tuple[int, ...]
    examined:   int = 0
    eligible:   int = 0
    survivors:  List[Decomposition] = field(default_factory=list)
    note: str = ("evidence only: zero survivors for one word and marking is consistent "
                 "with non-context-freeness but does not prove it")

    def to_dict(self, max_survivors: int = 20) -> Dict:
        return {
            "word":      format_word(self.word),
            "marks":     list(self.marks),
            "m":         self.m,
            "pump_set":  list(self.pump_set),
            "examined":  self.examined,
            "eligible":  self.eligible,
            "survivor_count": len(self.survivors),
            "survivors": [d.to_dict() for d in self.survivors[:max_survivors]],
            "note":      self.note,
        }


@dataclass
class Separator:
    prefixes: List[Word]
    witnesses: Dict[Tuple[int, int], Word]    # (i, j) → suffix s with oracle(uᵢs) ≠ oracle(uⱼs)

    def to_dict(self) -> Dict:
        return {
            "count":    len(self.prefixes),
            "prefixes": [format_word(p) for p in self.prefixes],
            "witnesses": [
                {"i": i, "j": j, "suffix": format_word(s)}
                for (i, j), s in sorted(self.witnesses.items())
            ],
        }


# ──────────────────────────────────────────────────────────────────────────────
# Pydantic file schemas  (used by data_loader)
# ──────────────────────────────────────────────────────────────────────────────

WordField = Union[str, List[str]]


class MonoidFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind:     Literal["finite-table", "int-vectors", "bicyclic", "product"]
    elements: Optional[List[str]] = None
    identity: Optional[str] = None
    table:    Optional[Union[Dict[str, Dict[str, str]], List[List[str]]]] = None
    rank:     Optional[int] = Field(default=None, ge=0)
    power:    Optional[int] = Field(default=None, ge=1)
    factors:  Optional[List["MonoidFile"]] = None

    @model_validator(mode="after")
    def _fields_for_kind(self) -> "MonoidFile":
        needed = {
            "finite-table": ("elements", "identity", "table"),
            "int-vectors":  ("rank",),
            "bicyclic":     (),
            "product":      ("factors",),
        }[self.kind]
        missing = [name for name in needed if getattr(self, name) is None]
        if missing:
            raise ValueError(f"{self.kind} monoid needs {', '.join(missing)}")
        if self.kind == "product" and not self.factors:
            raise ValueError("product monoid needs at least one factor")
        return self


MonoidFile.model_rebuild()


class EdgeModel(BaseModel):
    model_config = ConfigDict(populate_by_name=True, extra="forbid")

    source:  str = Field(alias="from")
    input:   WordField = ""
    output:  Optional[WordField] = None
    valence: Optional[Any] = None            # generator word or element literal; None → identity
    target:  str = Field(alias="to")


class AutomatonFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    monoid:          Union[MonoidFile, str]
    generators:      Optional[Dict[str, Any]] = None
    alphabet:        List[str]
    output_alphabet: Optional[List[str]] = None
    states:          List[str] = Field(..., min_length=1)
    initial:         str
    final:           List[str] = []
    edges:           List[EdgeModel] = []

    @property
    def is_transducer(self) -> bool:
        return self.output_alphabet is not None


class ProductionModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    lhs:     str
    rhs:     WordField = ""
    valence: Optional[Any] = None


class GrammarFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    monoid:       Union[MonoidFile, str]
    generators:   Optional[Dict[str, Any]] = None
    nonterminals: List[str] = Field(..., min_length=1)
    terminals:    List[str] = []
    start:        str
    productions:  List[ProductionModel] = []


class TreeNodeModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id:      str
    parent:  Optional[str] = None
    valence: Optional[Any] = None


class TreeFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    monoid:     Union[MonoidFile, str]
    generators: Optional[Dict[str, Any]] = None
    nodes:      List[TreeNodeModel] = Field(..., min_length=1)


class WitnessFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind:       Literal["automaton-K", "grammar-K'"]
    monoid:     Union[MonoidFile, str]
    generators: Dict[str, Any] = Field(..., min_length=1)
    mirror:     Optional[Dict[str, str]] = None
    separator:  str = "c"
