"""Planar loops in the punctured plane and their homotopy classes.

Every puncture ``b_k`` carries a cut ray pointing straight down.  A loop's
word is the sequence of signed ray crossings in path order (``+k`` when the
path crosses ray ``k`` left-to-right, i.e. passes under ``b_k`` while turning
counter-clockwise about it), freely reduced.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _core
from .freegroup import Word, reduce

GENERIC_TOL = 1e-9
WINDING_RESIDUAL_MAX = 0.25


class DegeneratePositionError(ValueError):
    """Path not in generic position with respect to the cut rays."""

    def __init__(self, report: "GenericityReport"):
        self.report = report
        first = report.violations[0]
        super().__init__(f"{len(report.violations)} genericity violation(s); first: {first}")


class OpenPathError(ValueError):
    pass


class PathTooCoarseError(ValueError):
    pass


class PunctureLayoutError(ValueError):
    """Punctures coincide, share an x-coordinate, or sit on the basepoint."""


@dataclass(frozen=True)
class Puncture:
    position: tuple[float, float]
    label: int

    def __post_init__(self):
        object.__setattr__(self, "position", (float(self.position[0]), float(self.position[1])))


def punctures_from_points(points: Sequence[Sequence[float]]) -> list[Puncture]:
    return [Puncture((p[0], p[1]), i + 1) for i, p in enumerate(points)]


def puncture_arrays(punctures: Sequence[Puncture]) -> tuple[np.ndarray, np.ndarray]:
    pts = np.array([p.position for p in punctures], dtype=np.float64).reshape(-1, 2)
    return np.ascontiguousarray(pts[:, 0]), np.ascontiguousarray(pts[:, 1])


def check_puncture_layout(punctures: Sequence[Puncture], basepoint=None, tol: float = GENERIC_TOL) -> None:
    labels = sorted(p.label for p in punctures)
    if labels != list(range(1, len(punctures) + 1)):
        raise PunctureLayoutError(f"puncture labels must be 1..n, got {labels}")
    px, py = puncture_arrays(punctures)
    for i in range(len(px)):
        for j in range(i + 1, len(px)):
            if abs(px[i] - px[j]) <= tol:
                raise PunctureLayoutError(
                    f"punctures {punctures[i].label} and {punctures[j].label} share x={px[i]}; "
                    "use jitter_punctures"
                )
    if basepoint is not None:
        bx, by = float(basepoint[0]), float(basepoint[1])
        for p in punctures:
            if abs(bx - p.position[0]) <= tol and by < p.position[1] + tol:
                raise PunctureLayoutError(f"basepoint lies on the cut ray of puncture {p.label}")


def jitter_punctures(punctures: Sequence[Puncture], scale: float = 1e-6, seed: int = 0) -> list[Puncture]:
    """Deterministically nudge x-coordinates until all are distinct."""
    rng = np.random.default_rng(seed)
    out = list(punctures)
    while True:
        xs = [p.position[0] for p in out]
        if len(set(np.round(np.asarray(xs) / (10 * GENERIC_TOL)).tolist())) == len(xs):
            return out
        out = [
            Puncture((p.position[0] + scale * rng.uniform(-1, 1), p.position[1]), p.label)
            for p in out
        ]


@dataclass(frozen=True, eq=False)
class PlanePath:
    vertices: np.ndarray
    closed: bool = False

    def __post_init__(self):
        v = np.array(self.vertices, dtype=np.float64).reshape(-1, 2)
        if len(v) < 2:
            raise ValueError("a path needs at least 2 vertices")
        if self.closed and np.linalg.norm(v[0] - v[-1]) > GENERIC_TOL:
            raise OpenPathError("closed path must end at its first vertex")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @classmethod
    def loop(cls, vertices) -> "PlanePath":
        """Closed path; appends the first vertex if missing."""
        v = np.asarray(vertices, dtype=np.float64).reshape(-1, 2)
        if np.linalg.norm(v[0] - v[-1]) > GENERIC_TOL:
            v = np.vstack([v, v[:1]])
        return cls(v, closed=True)

    def reversed(self) -> "PlanePath":
        return PlanePath(self.vertices[::-1].copy(), self.closed)

    def then(self, other: "PlanePath") -> "PlanePath":
        """Concatenation; ``other`` must start where ``self`` ends."""
        if np.linalg.norm(self.vertices[-1] - other.vertices[0]) > GENERIC_TOL:
            raise ValueError("paths do not join")
        v = np.vstack([self.vertices, other.vertices[1:]])
        closed = np.linalg.norm(v[0] - v[-1]) <= GENERIC_TOL
        return PlanePath(v, closed=bool(closed))

    def refined(self, factor: int) -> "PlanePath":
        """Each segment split into ``factor`` equal pieces."""
        v = self.vertices
        s = np.linspace(0.0, 1.0, factor, endpoint=False)
        pieces = v[:-1, None, :] + s[None, :, None] * (v[1:] - v[:-1])[:, None, :]
        out = np.vstack([pieces.reshape(-1, 2), v[-1:]])
        return PlanePath(out, self.closed)

    @property
    def length(self) -> float:
        return float(np.linalg.norm(np.diff(self.vertices, axis=0), axis=1).sum())


@dataclass(frozen=True)
class Violation:
    kind: str  # "vertex-on-ray" | "segment-near-puncture"
    index: int  # vertex or segment index
    puncture: int  # puncture label
    distance: float

    def __str__(self) -> str:
        what = "vertex" if self.kind == "vertex-on-ray" else "segment"
        return f"{self.kind}: {what} {self.index} vs ray/puncture {self.puncture} (d={self.distance:.3e})"


@dataclass
class GenericityReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def segment_distances(vertices: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Distance from each segment (rows) to each point (columns)."""
    a = vertices[:-1, None, :]
    b = vertices[1:, None, :]
    p = points[None, :, :]
    ab = b - a
    denom = np.einsum("ijk,ijk->ij", ab, ab)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.einsum("ijk,ijk->ij", p - a, ab) / denom
    t = np.clip(np.nan_to_num(t), 0.0, 1.0)
    closest = a + t[..., None] * ab
    return np.linalg.norm(p - closest, axis=-1)


def check_generic(path: PlanePath, punctures: Sequence[Puncture], tol: float = GENERIC_TOL) -> GenericityReport:
    report = GenericityReport()
    if not punctures:
        return report
    v = path.vertices
    px, py = puncture_arrays(punctures)
    labels = [p.label for p in punctures]
    dx = np.abs(v[:, 0:1] - px[None, :])
    on_ray = (dx <= tol) & (v[:, 1:2] < py[None, :] + tol)
    for i, k in zip(*np.nonzero(on_ray)):
        report.violations.append(Violation("vertex-on-ray", int(i), labels[k], float(dx[i, k])))
    d = segment_distances(v, np.stack([px, py], axis=1))
    for i, k in zip(*np.nonzero(d <= tol)):
        report.violations.append(Violation("segment-near-puncture", int(i), labels[k], float(d[i, k])))
    return report


def _sorted_by_label(punctures: Sequence[Puncture]) -> list[Puncture]:
    return sorted(punctures, key=lambda p: p.label)


def crossing_letters(path: PlanePath, punctures: Sequence[Puncture]) -> np.ndarray:
    """Raw signed crossings (+label / -label) in path order, unreduced."""
    ps = _sorted_by_label(punctures)
    if not ps:
        return np.empty(0, dtype=np.int64)
    px, py = puncture_arrays(ps)
    return _core.ray_crossings(np.ascontiguousarray(path.vertices), px, py)


def word_of_loop(path: PlanePath, punctures: Sequence[Puncture], rank: int | None = None) -> Word:
    """Homotopy class of a closed loop as a reduced word in F_rank."""
    if not path.closed:
        raise OpenPathError("word_of_loop needs a closed path")
    rank = len(punctures) if rank is None else rank
    check_puncture_layout(punctures)
    report = check_generic(path, punctures)
    if not report.ok:
        raise DegeneratePositionError(report)
    return reduce(crossing_letters(path, punctures).tolist(), rank)


def winding_numbers(path: PlanePath, punctures: Sequence[Puncture]) -> np.ndarray:
    """Integer winding number of a closed path about each puncture (label order)."""
    if not path.closed:
        raise OpenPathError("winding numbers need a closed path")
    ps = _sorted_by_label(punctures)
    out = np.zeros(len(ps), dtype=np.int64)
    v = path.vertices
    for i, p in enumerate(ps):
        r = v - np.asarray(p.position)
        if np.any(np.linalg.norm(r, axis=1) == 0):
            raise PathTooCoarseError(f"vertex sits on puncture {p.label}")
        cross = r[:-1, 0] * r[1:, 1] - r[:-1, 1] * r[1:, 0]
        dot = np.einsum("ij,ij->i", r[:-1], r[1:])
        turns = np.arctan2(cross, dot).sum() / (2 * np.pi)
        k = int(np.rint(turns))
        if abs(turns - k) >= WINDING_RESIDUAL_MAX:
            raise PathTooCoarseError(
                f"winding about puncture {p.label} is {turns:.3f}, not near an integer"
            )
        out[i] = k
    return out


# -- standard loops ----------------------------------------------------------

def circle(center, radius: float, n: int = 65, start_angle: float = np.pi / 2, ccw: bool = True) -> PlanePath:
    """Closed ``n``-gon.  The default odd ``n`` with start at the top keeps
    vertices off the downward ray through ``center``."""
    ang = start_angle + np.linspace(0.0, 2 * np.pi, n + 1)
    if not ccw:
        ang = start_angle - np.linspace(0.0, 2 * np.pi, n + 1)
    pts = np.asarray(center, dtype=np.float64) + radius * np.stack([np.cos(ang), np.sin(ang)], axis=1)
    pts[-1] = pts[0]
    return PlanePath(pts, closed=True)


def _loop_radius(punctures: Sequence[Puncture], k: int) -> float:
    px, py = puncture_arrays(_sorted_by_label(punctures))
    i = k - 1
    gaps = [1.0]
    for j in range(len(px)):
        if j != i:
            gaps.append(0.25 * abs(px[j] - px[i]))
            gaps.append(0.25 * np.hypot(px[j] - px[i], py[j] - py[i]))
    return float(min(gaps))


def generator_loop(basepoint, punctures: Sequence[Puncture], k: int, n_circle: int = 65) -> PlanePath:
    """Loop based at ``basepoint`` representing the generator ``c_k``.

    Goes up above every puncture, across to ``x_k``, down to a small circle
    around ``b_k`` traversed counter-clockwise, and back the same way.
    """
    ps = _sorted_by_label(punctures)
    px, py = puncture_arrays(ps)
    x0, y0 = float(basepoint[0]), float(basepoint[1])
    r = _loop_radius(ps, k)
    xk, yk = px[k - 1], py[k - 1]
    top = max([y0] + py.tolist()) + 1.0
    ring = circle((xk, yk), r, n=n_circle).vertices
    pts = [(x0, y0), (x0, top), (xk, top)] + [tuple(p) for p in ring] + [(xk, top), (x0, top), (x0, y0)]
    return PlanePath(np.asarray(pts), closed=True)


def loop_for_word(basepoint, punctures: Sequence[Puncture], word: Word, n_circle: int = 65) -> PlanePath:
    """Concatenated generator loops realizing ``word`` (the identity gives a
    degenerate out-and-back loop)."""
    x0 = np.asarray(basepoint, dtype=np.float64)
    if word.is_identity():
        return PlanePath(np.array([x0, x0 + [0.0, 1e-3], x0]), closed=True)
    path = None
    for let in word.letters:
        piece = generator_loop(x0, punctures, let.gen, n_circle)
        if let.sign < 0:
            piece = piece.reversed()
        path = piece if path is None else path.then(piece)
    return path
