"""Reduced words in the free group F_n.

The fundamental group of the plane with n punctures is free on generators
``c1 .. cn``.  A :class:`Word` is always stored in freely reduced form, so
equality of group elements is plain sequence equality.

Textual syntax: ``"c1 c2^-1 c1"``; the identity is spelled ``"e"``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np


class RankError(ValueError):
    """Generator index outside ``1..rank`` or mismatched ranks."""


class Letter(NamedTuple):
    gen: int
    sign: int

    def inverse(self) -> "Letter":
        return Letter(self.gen, -self.sign)

    def __str__(self) -> str:
        return f"c{self.gen}" if self.sign > 0 else f"c{self.gen}^-1"


def _coerce_letter(item) -> Letter:
    if isinstance(item, Letter):
        return item
    if isinstance(item, (int, np.integer)):
        # signed-int shorthand: +k is c_k, -k is c_k^-1
        k = int(item)
        if k == 0:
            raise RankError("letter 0 is not a generator")
        return Letter(abs(k), 1 if k > 0 else -1)
    gen, sign = item
    if sign not in (1, -1):
        raise ValueError(f"letter sign must be +1 or -1, got {sign}")
    return Letter(int(gen), int(sign))


def _free_reduce(letters: Iterable[Letter]) -> tuple[Letter, ...]:
    stack: list[Letter] = []
    for let in letters:
        if stack and stack[-1].gen == let.gen and stack[-1].sign == -let.sign:
            stack.pop()
        else:
            stack.append(let)
    return tuple(stack)


@dataclass(frozen=True)
class Word:
    """Element of F_rank as a reduced letter sequence.

    Construct through :func:`reduce` or :func:`parse_word`; the constructor
    itself trusts that ``letters`` is already reduced.
    """

    letters: tuple[Letter, ...]
    rank: int

    @classmethod
    def identity(cls, rank: int) -> "Word":
        return cls((), rank)

    @classmethod
    def generator(cls, k: int, rank: int, sign: int = 1) -> "Word":
        return reduce([Letter(k, sign)], rank)

    def __len__(self) -> int:
        return len(self.letters)

    def __iter__(self):
        return iter(self.letters)

    def __mul__(self, other: "Word") -> "Word":
        return concat(self, other)

    def __invert__(self) -> "Word":
        return invert(self)

    def __pow__(self, m: int) -> "Word":
        base = self if m >= 0 else invert(self)
        out = Word.identity(self.rank)
        for _ in range(abs(m)):
            out = concat(out, base)
        return out

    def is_identity(self) -> bool:
        return not self.letters

    def signed(self) -> tuple[int, ...]:
        """Letters as signed ints (+k for c_k, -k for its inverse)."""
        return tuple(let.gen * let.sign for let in self.letters)

    def __str__(self) -> str:
        return format_word(self)


def reduce(seq: Iterable, rank: int) -> Word:
    """Freely reduce a letter sequence into a :class:`Word`.

    Items may be :class:`Letter`, ``(gen, sign)`` pairs or signed ints.
    """
    letters = [_coerce_letter(x) for x in seq]
    for let in letters:
        if not 1 <= let.gen <= rank:
            raise RankError(f"generator c{let.gen} outside rank {rank}")
    return Word(_free_reduce(letters), rank)


def _check_rank(w1: Word, w2: Word) -> None:
    if w1.rank != w2.rank:
        raise RankError(f"rank mismatch: {w1.rank} vs {w2.rank}")


def concat(w1: Word, w2: Word) -> Word:
    _check_rank(w1, w2)
    left = list(w1.letters)
    right = w2.letters
    i = 0
    # cancellation can only happen at the junction
    while left and i < len(right) and left[-1] == right[i].inverse():
        left.pop()
        i += 1
    return Word(tuple(left) + tuple(right[i:]), w1.rank)


def invert(w: Word) -> Word:
    return Word(tuple(let.inverse() for let in reversed(w.letters)), w.rank)


def abelianize(w: Word) -> np.ndarray:
    """Image in Z^n: signed count of each generator."""
    out = np.zeros(w.rank, dtype=np.int64)
    for let in w.letters:
        out[let.gen - 1] += let.sign
    return out


def _letter_key(let: Letter) -> tuple[int, int]:
    # c1 < c1^-1 < c2 < c2^-1 < ...
    return (let.gen, 0 if let.sign > 0 else 1)


def cyclic_reduce(w: Word) -> Word:
    """Cyclically reduced conjugate of ``w``, canonicalized to the
    lexicographically least rotation."""
    letters = list(w.letters)
    lo, hi = 0, len(letters)
    while hi - lo >= 2 and letters[lo] == letters[hi - 1].inverse():
        lo += 1
        hi -= 1
    core = letters[lo:hi]
    if not core:
        return Word.identity(w.rank)
    rotations = [core[i:] + core[:i] for i in range(len(core))]
    best = min(rotations, key=lambda r: [_letter_key(x) for x in r])
    return Word(tuple(best), w.rank)


def is_reduced(letters: Sequence[Letter]) -> bool:
    return all(
        not (a.gen == b.gen and a.sign == -b.sign) for a, b in zip(letters, letters[1:])
    )


_TOKEN = re.compile(r"^c(\d+)(\^(-?\d+))?$")


def parse_word(text: str, rank: int) -> Word:
    """Parse ``"c1 c2^-1 c1"`` (whitespace separated).  ``"e"`` or an empty
    string is the identity.  Integer powers like ``c1^3`` are accepted."""
    letters: list[Letter] = []
    for tok in text.split():
        if tok == "e":
            continue
        m = _TOKEN.match(tok)
        if m is None:
            raise ValueError(f"cannot parse word token {tok!r}")
        gen = int(m.group(1))
        power = int(m.group(3)) if m.group(2) else 1
        sign = 1 if power > 0 else -1
        letters.extend([Letter(gen, sign)] * abs(power))
    return reduce(letters, rank)


def format_word(w: Word) -> str:
    if not w.letters:
        return "e"
    return " ".join(str(let) for let in w.letters)


def random_word(rng: np.random.Generator, rank: int, max_length: int) -> Word:
    """Random reduced word: uniform raw length in ``0..max_length`` then reduced."""
    length = int(rng.integers(0, max_length + 1))
    gens = rng.integers(1, rank + 1, size=length)
    signs = rng.choice([-1, 1], size=length)
    return reduce(zip(gens.tolist(), signs.tolist()), rank)
