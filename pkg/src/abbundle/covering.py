"""Universal cover of the wedge of n circles as the Cayley tree of F_n.

Vertices over the basepoint are reduced words; the root ``e`` is the fixed
lift of the basepoint.  The tree is never stored: a word is a complete
coordinate for its vertex.

The canonical map ``f(y) = (pi(y), 1)`` into the product bundle together
with the holonomy ``phi`` is *not* a principal bundle morphism: equivariance
would need ``f(g . y) = f(y) . phi(g)``, but the left side always has group
component 1.  :func:`equivariance_defect` measures the failure and
:func:`find_equivariance_witness` locates an explicit counterexample.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

from . import liegroups as lg
from .freegroup import Letter, RankError, Word, concat
from .holonomy import HolonomyMap, holonomy_of_word
from .liegroups import GroupElement

DEFAULT_BALL_CAP = 10**6


class ResourceCapError(RuntimeError):
    pass


@dataclass(frozen=True)
class TreeVertex:
    word: Word

    @property
    def rank(self) -> int:
        return self.word.rank

    @classmethod
    def root(cls, rank: int) -> "TreeVertex":
        return cls(Word.identity(rank))

    def __str__(self) -> str:
        return str(self.word)


@dataclass(frozen=True)
class TreeEdge:
    source: TreeVertex
    letter: Letter

    @property
    def target(self) -> TreeVertex:
        return TreeVertex(concat(self.source.word, Word((self.letter,), self.source.rank)))


def _letters(rank: int) -> list[Letter]:
    return [Letter(k, s) for k in range(1, rank + 1) for s in (1, -1)]


def edges(v: TreeVertex) -> list[TreeEdge]:
    """The 2n edges leaving ``v``."""
    return [TreeEdge(v, let) for let in _letters(v.rank)]


def _check(w: Word, v: TreeVertex) -> None:
    if w.rank != v.rank:
        raise RankError(f"rank mismatch: {w.rank} vs {v.rank}")


def lift_loop(w: Word, start: TreeVertex) -> TreeVertex:
    """End vertex of the lift of ``w`` starting at ``start``."""
    _check(w, start)
    return TreeVertex(concat(start.word, w))


def lift_trace(w: Word, start: TreeVertex) -> list[TreeVertex]:
    """Vertices visited by the lift, one edge per letter."""
    _check(w, start)
    out = [start]
    for let in w.letters:
        out.append(TreeEdge(out[-1], let).target)
    return out


def deck_transform(g: Word, v: TreeVertex) -> TreeVertex:
    """Left action of the deck group on the fiber over the basepoint."""
    _check(g, v)
    return TreeVertex(concat(g, v.word))


def ball_count(rank: int, radius: int) -> int:
    """Number of reduced words of length <= radius."""
    if rank == 0:
        return 1
    return 1 + sum(2 * rank * (2 * rank - 1) ** (i - 1) for i in range(1, radius + 1))


def fiber_ball(rank: int, radius: int, cap: int = DEFAULT_BALL_CAP) -> list[TreeVertex]:
    """All vertices within ``radius`` of the root, ordered by length then
    lexicographically (c1 < c1^-1 < c2 < ...)."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    count = ball_count(rank, radius)
    if count > cap:
        raise ResourceCapError(f"ball of radius {radius} in F_{rank} has {count} vertices (cap {cap})")
    letters = _letters(rank)
    layer = [()]
    out = [TreeVertex(Word((), rank))]
    for _ in range(radius):
        nxt = []
        for w in layer:
            for let in letters:
                if w and w[-1] == let.inverse():
                    continue
                nxt.append(w + (let,))
        out.extend(TreeVertex(Word(w, rank)) for w in nxt)
        layer = nxt
    return out


def monodromy_holonomy(phi: HolonomyMap, end: TreeVertex) -> GroupElement:
    """``phi(Psi(y))`` for a fiber point ``y``: the holonomy of its word."""
    if end.rank != phi.rank:
        raise RankError(f"rank mismatch: {end.rank} vs {phi.rank}")
    return holonomy_of_word(phi, end.word)


def equivariance_defect(phi: HolonomyMap, g: Word, v: TreeVertex) -> float:
    """Distance between the group parts of ``f(g . v)`` and ``f(v) . phi(g)``."""
    lhs = lg.identity(phi.group_tag)  # f(y) = (pi(y), 1) for every y
    rhs = lg.multiply(lg.identity(phi.group_tag), holonomy_of_word(phi, g))
    return lg.distance(lhs, rhs)


def find_equivariance_witness(phi: HolonomyMap, radius: int = 2, tol: float = 1e-9):
    """First ``(g, v, defect)`` in the ball with defect above ``tol``, else None."""
    ball = fiber_ball(phi.rank, radius)
    for g, v in itertools.product(ball, ball):
        defect = equivariance_defect(phi, g.word, v)
        if defect > tol:
            return g.word, v, defect
    return None
