"""
utils.py — Word helpers for the valence toolkit.

Key responsibilities
────────────────────
1. Tokenise written words against an alphabet  ("x1x1x2" → ("x1","x1","x2"))
2. Format words back for JSON output            (("a","a") → "aa")
3. Length-lexicographic ordering and word enumeration
4. Fresh-name generation for constructed nonterminals / states
5. "Did you mean" hints for unknown symbols (rapidfuzz)
"""

from __future__ import annotations

import itertools
from typing import Collection, Iterable, Iterator, List, Optional, Sequence, Tuple

from rapidfuzz import fuzz, process

from config import SUGGESTION_THRESHOLD
from errors import UnknownSymbolError

Word = Tuple[str, ...]

EMPTY_WORD_MARKERS = {"", "λ", "lambda", "ε"}


# ──────────────────────────────────────────────────────────────────────────────
# Unknown-symbol hints
# ──────────────────────────────────────────────────────────────────────────────

def suggest_symbol(symbol: str, choices: Collection[str]) -> Optional[str]:
    """Closest known symbol by rapidfuzz ratio, or None below the threshold."""
    if not choices:
        return None
    result = process.extractOne(symbol, list(choices), scorer=fuzz.ratio)
    if result and result[1] >= SUGGESTION_THRESHOLD:
        return result[0]
    return None


def unknown_symbol(symbol: str, choices: Collection[str]) -> UnknownSymbolError:
    return UnknownSymbolError(symbol, choices, suggest_symbol(symbol, choices))


# ──────────────────────────────────────────────────────────────────────────────
# Tokenising / formatting
# ──────────────────────────────────────────────────────────────────────────────

def tokenize(text: "str | Sequence[str]", alphabet: Collection[str]) -> Word:
    """
    Split a written word into alphabet symbols.

    Lists are taken symbol-by-symbol. Strings are split on whitespace first,
    then each chunk by greedy longest match, so "x1x1x2" and "x1 x1 x2" agree.

    Example:
        tokenize("aSb", {"a", "b", "S"})  →  ("a", "S", "b")
    """
    if not isinstance(text, str):
        word = tuple(str(s) for s in text)
        for s in word:
            if s not in alphabet:
                raise unknown_symbol(s, alphabet)
        return word

    if text.strip() in EMPTY_WORD_MARKERS:
        return ()

    by_length = sorted(alphabet, key=len, reverse=True)
    out: List[str] = []
    for chunk in text.split():
        i = 0
        while i < len(chunk):
            match = next((s for s in by_length if s and chunk.startswith(s, i)), None)
            if match is None:
                raise unknown_symbol(chunk[i:], alphabet)
            out.append(match)
            i += len(match)
    return tuple(out)


def format_word(word: Sequence[str]) -> str:
    """Single-character symbols are glued together, longer ones space-separated."""
    if all(len(s) == 1 for s in word):
        return "".join(word)
    return " ".join(word)


def reverse_word(word: Sequence[str]) -> Word:
    return tuple(reversed(word))


# ──────────────────────────────────────────────────────────────────────────────
# Ordering / enumeration
# ──────────────────────────────────────────────────────────────────────────────

def length_lex_key(word: Sequence[str]) -> Tuple[int, Tuple[str, ...]]:
    return (len(word), tuple(word))


def sorted_words(words: Iterable[Sequence[str]]) -> List[Word]:
    return sorted({tuple(w) for w in words}, key=length_lex_key)


def words_up_to(alphabet: Sequence[str], maxlen: int) -> Iterator[Word]:
    """All words of length ≤ maxlen in length-lexicographic order."""
    symbols = sorted(alphabet)
    for n in range(maxlen + 1):
        yield from itertools.product(symbols, repeat=n)


# ──────────────────────────────────────────────────────────────────────────────
# Fresh names
# ──────────────────────────────────────────────────────────────────────────────

def fresh_name(base: str, taken: Collection[str]) -> str:
    """base, base', base'', …: the first one not in `taken`."""
    name = base
    while name in taken:
        name += "'"
    return name
