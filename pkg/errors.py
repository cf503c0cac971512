"""
errors.py — Typed exceptions for the valence toolkit.

Budget exhaustion and "unknown" gate answers are values, not errors;
everything here signals misuse or a refusal that callers must handle.
"""

from __future__ import annotations

from typing import Any, Optional


class ValenceError(Exception):
    """Base class for every error raised by this package."""


# ──────────────────────────────────────────────────────────────────────────────
# Monoid core
# ──────────────────────────────────────────────────────────────────────────────

class MonoidTableError(ValenceError):
    """A finite multiplication table is not total, square, unital or associative."""


class ElementMismatchError(ValenceError):
    """An element does not belong to the monoid handle it was used with."""


class UnsupportedMonoidError(ValenceError):
    """The operation is not defined for this catalog kind."""


class MonoidOverflowError(ValenceError):
    """An integer coordinate left the fixed-width range."""


class UnknownSymbolError(ValenceError):
    def __init__(self, symbol: str, alphabet: Any = (), suggestion: Optional[str] = None):
        self.symbol = symbol
        self.suggestion = suggestion
        msg = f"unknown symbol {symbol!r}"
        if suggestion:
            msg += f" (did you mean {suggestion!r}?)"
        super().__init__(msg)


class ConfigError(ValenceError):
    """A budget or flag is out of range."""


class InvalidDeviceError(ValenceError):
    """A device description breaks its structural invariants."""


class DeviceFileError(ValenceError):
    def __init__(self, path: Any, line: int, message: str):
        self.path = str(path)
        self.line = line
        super().__init__(f"{self.path}:{line}: {message}")


# ──────────────────────────────────────────────────────────────────────────────
# Analysis / conversions
# ──────────────────────────────────────────────────────────────────────────────

class GateRefusal(ValenceError):
    """A conversion was refused because the finiteness gate did not answer 'finite'."""

    def __init__(self, verdict: Any, what: str = "conversion"):
        self.verdict = verdict
        super().__init__(f"{what} refused: gate answered {verdict.answer.value} ({verdict.method.value})")


class EUnavailableError(ValenceError):
    """No certified E-set was supplied for pruning."""


class ConversionBudgetError(ValenceError):
    """The sequence-grammar work limit (items plus shuffle and join steps) was exceeded."""


# ──────────────────────────────────────────────────────────────────────────────
# Trees and grammars
# ──────────────────────────────────────────────────────────────────────────────

class EvaluationCapError(ValenceError):
    """Exhaustive linear-extension enumeration was asked for a tree above the cap."""


class CommuteBoundError(ValenceError):
    """Fewer pairs than 2(|G|^3 + 1) were supplied."""


class RewriteError(ValenceError):
    """Indices do not describe a value-preserving block swap."""


class TargetValueError(ValenceError):
    """The requested element is not a value of the tree."""


class NotNormalizedError(ValenceError):
    """The grammar still has productions outside the two normal forms."""


class DerivationError(ValenceError):
    def __init__(self, step: int, message: str):
        self.step = step
        super().__init__(f"derivation step {step}: {message}")


class InvalidTreeError(ValenceError):
    """Parent links do not describe a single rooted tree."""


# ──────────────────────────────────────────────────────────────────────────────
# Lab
# ──────────────────────────────────────────────────────────────────────────────

class OgdenInputError(ValenceError):
    """Marked positions are out of range or fewer than the candidate constant."""
