"""Membership oracles, written directly from the language definitions.

These never consult an automaton, so they can serve as the independent
side of every recognition check.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


@dataclass(frozen=True)
class Language:
    """A membership predicate over a fixed alphabet.

    ``bulk``, when given, evaluates ``prefix + w`` for every ``w`` of one
    length at once and must agree with ``member`` entry by entry. Suffixes
    are ordered lexicographically by the alphabet order.
    """

    name: str
    alphabet: tuple[str, ...]
    member: Callable[[tuple[str, ...]], bool]
    bulk: Callable[[tuple[str, ...], int], np.ndarray] | None = None

    def __call__(self, word: Sequence[str]) -> bool:
        return bool(self.member(tuple(word)))

    def extensions(self, prefix: Sequence[str], length: int) -> np.ndarray:
        prefix = tuple(prefix)
        if self.bulk is not None:
            return np.asarray(self.bulk(prefix, length), dtype=bool)
        return np.fromiter(
            (self.member(prefix + w) for w in itertools.product(self.alphabet, repeat=length)),
            dtype=bool,
            count=len(self.alphabet) ** length,
        )


BINARY = ("0", "1")


def _binary_words(prefix: tuple[str, ...], length: int) -> tuple[np.ndarray, int]:
    if len(prefix) + length > 62:
        raise ValueError("binary bulk evaluation is limited to 62 letters")
    head = int("".join(prefix), 2) if prefix else 0
    return (np.int64(head) << np.int64(length)) | np.arange(2**length, dtype=np.int64), len(prefix) + length


def _has_double_zero(words: np.ndarray, total: int) -> np.ndarray:
    if total < 2:
        return np.zeros(words.shape, dtype=bool)
    zeros = ~words & np.int64((1 << total) - 1)
    return (zeros & (zeros >> np.int64(1))) != 0


def contains00() -> Language:
    """Binary words with two adjacent zeros anywhere."""

    def bulk(prefix, length):
        words, total = _binary_words(prefix, length)
        return _has_double_zero(words, total)

    return Language("contains00", BINARY, lambda w: "00" in "".join(w), bulk)


def length_n_contains00(n: int) -> Language:
    """Binary words of length exactly ``n`` with two adjacent zeros."""

    def bulk(prefix, length):
        words, total = _binary_words(prefix, length)
        if total != n:
            return np.zeros(words.shape, dtype=bool)
        return _has_double_zero(words, total)

    return Language(f"L{n}", BINARY, lambda w: len(w) == n and "00" in "".join(w), bulk)


def unary_length(n: int, symbol: str = "a") -> Language:
    """The single word ``symbol * n``."""

    def bulk(prefix, length):
        out = np.zeros(1, dtype=bool)
        out[0] = len(prefix) + length == n
        return out

    return Language(f"{symbol}^{n}", (symbol,), lambda w: len(w) == n, bulk)


def always_false(alphabet: Sequence[str] = BINARY) -> Language:
    alphabet = tuple(alphabet)
    return Language("empty", alphabet, lambda w: False, lambda p, k: np.zeros(len(alphabet) ** k, dtype=bool))


def complement(lang: Language) -> Language:
    bulk = None if lang.bulk is None else (lambda p, k: ~lang.extensions(p, k))
    return Language(f"not({lang.name})", lang.alphabet, lambda w: not lang.member(w), bulk)
