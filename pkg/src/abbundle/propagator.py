"""Homotopy-class decomposition of a lattice-walk propagator.

Random walks of ``T`` unit steps on a square lattice run from a source
point; each walk that ends on a detector is closed by a fixed reference
path back to the source and classified by its reduced word.  A class table
stores integer walk counts per word, so the assembled propagator

    K(detector) = sum_w count(w) * phi(w) / samples

is exact in the counts and independent of how the sampling was sharded.
All walks carry the same weight (plain walk counting).
"""
from __future__ import annotations

import itertools
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize_scalar

from . import _core
from . import liegroups as lg
from .freegroup import Word, format_word, parse_word, reduce
from .geometry import (
    DegeneratePositionError,
    PlanePath,
    check_generic,
    crossing_letters,
    puncture_arrays,
    word_of_loop,
)
from .holonomy import FluxScenario, HolonomyMap, holonomy_of_word
from .serialize import SCHEMA_VERSION, FormatError, complex_to_json, require_version

DEFAULT_SHARD_SIZE = 1 << 16
DEFAULT_MAX_WORD_LENGTH = 8
FLAT_PATTERN_TOL = 1e-12
LATTICE_TOL = 1e-9


class InsufficientSamplesError(RuntimeError):
    pass


class FlatPatternError(ValueError):
    pass


class LatticeError(ValueError):
    pass


@dataclass(frozen=True)
class Lattice:
    spacing: float = 1.0
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not self.spacing > 0:
            raise LatticeError("lattice spacing must be positive")
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))

    def to_lattice(self, pts) -> np.ndarray:
        return (np.asarray(pts, dtype=np.float64) - np.asarray(self.origin)) / self.spacing

    def to_plane(self, ij) -> np.ndarray:
        return np.asarray(self.origin) + self.spacing * np.asarray(ij, dtype=np.float64)

    def site(self, pt) -> tuple[int, int]:
        """Integer site of a plane point that must lie on the lattice."""
        u = self.to_lattice(pt)
        r = np.rint(u)
        if np.max(np.abs(u - r)) > LATTICE_TOL:
            raise LatticeError(f"point {tuple(pt)} is not a lattice site")
        return int(r[0]), int(r[1])


@dataclass(frozen=True, eq=False)
class WalkEnsemble:
    """Everything that determines a sample of walks.

    ``reference`` lists optional intermediate waypoints of the return path
    detector -> source (a straight segment by default).  ``excision_margin``
    rejects walks visiting any site within that Chebyshev distance (lattice
    units) of a puncture; ``None`` keeps every walk.
    """

    scenario: FluxScenario
    source: tuple[float, float]
    steps: int
    samples: int
    seed: int = 0
    lattice: Lattice = field(default_factory=Lattice)
    max_word_length: int = DEFAULT_MAX_WORD_LENGTH
    excision_margin: float | None = None
    reference: tuple = ()
    shard_size: int = DEFAULT_SHARD_SIZE

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("walk length T must be >= 1")
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.shard_size < 1:
            raise ValueError("shard_size must be >= 1")
        object.__setattr__(self, "source", (float(self.source[0]), float(self.source[1])))
        object.__setattr__(self, "reference", tuple(tuple(map(float, p)) for p in self.reference))
        self.lattice.site(self.source)
        _check_punctures_off_lines(self.scenario, self.lattice)

    @property
    def source_site(self) -> tuple[int, int]:
        return self.lattice.site(self.source)

    def puncture_sites(self) -> tuple[np.ndarray, np.ndarray]:
        px, py = puncture_arrays(self.scenario.punctures)
        uv = self.lattice.to_lattice(np.stack([px, py], axis=1)) if len(px) else np.empty((0, 2))
        return np.ascontiguousarray(uv[:, 0]), np.ascontiguousarray(uv[:, 1])

    def reference_path(self, detector) -> PlanePath:
        pts = [tuple(map(float, detector)), *self.reference, self.source]
        return PlanePath(np.asarray(pts))

    def shards(self) -> list[tuple[int, int]]:
        """``(shard index, walk count)``; fixed by ``samples`` and ``shard_size`` only."""
        full, rest = divmod(self.samples, self.shard_size)
        out = [(i, self.shard_size) for i in range(full)]
        if rest:
            out.append((full, rest))
        return out


def _check_punctures_off_lines(scenario: FluxScenario, lattice: Lattice) -> None:
    for p in scenario.punctures:
        u = lattice.to_lattice(p.position)
        if np.any(np.abs(u - np.rint(u)) <= LATTICE_TOL):
            raise LatticeError(f"puncture {p.label} lies on a lattice line")


def winding_bound(ens: WalkEnsemble) -> int:
    """A-priori bound on ``|abelianize(word)|`` for any class in a table.

    A lattice loop winding ``k`` times about a point off the lattice lines
    has length at least ``k * L_min``; the reference closure adds at most
    one more turn.
    """
    if ens.excision_margin is None:
        l_min = 4
    else:
        l_min = 4 * (int(np.floor(2 * ens.excision_margin)) + 1)
    return ens.steps // l_min + 1


# -- class tables -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ClassAmplitudeTable:
    rank: int
    detector: tuple[float, float]
    counts: dict  # Word -> int, sorted by (length, word)
    overflow: int
    samples: int

    @property
    def total(self) -> int:
        return sum(self.counts.values()) + self.overflow

    def amplitudes(self) -> dict:
        return {w: c / self.samples for w, c in self.counts.items()}

    @property
    def mass(self) -> float:
        return sum(self.counts.values()) / self.samples

    @property
    def overflow_mass(self) -> float:
        return self.overflow / self.samples

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "class_table",
            "rank": self.rank,
            "detector": list(self.detector),
            "samples": self.samples,
            "overflow": self.overflow,
            "counts": {format_word(w): c for w, c in self.counts.items()},
            "amplitudes": {format_word(w): complex_to_json(a) for w, a in self.amplitudes().items()},
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ClassAmplitudeTable":
        require_version(doc, "class_table")
        try:
            rank = int(doc["rank"])
            counts = {parse_word(k, rank): int(v) for k, v in doc["counts"].items()}
            return make_table(rank, doc["detector"], counts, int(doc["overflow"]), int(doc["samples"]))
        except (KeyError, ValueError) as exc:
            raise FormatError(f"bad class table: {exc}") from exc


def _word_key(w: Word):
    return (len(w), [(let.gen, -let.sign) for let in w.letters])


def make_table(rank: int, detector, counts: dict, overflow: int, samples: int) -> ClassAmplitudeTable:
    ordered = {w: counts[w] for w in sorted(counts, key=_word_key) if counts[w]}
    return ClassAmplitudeTable(rank, (float(detector[0]), float(detector[1])), ordered, overflow, samples)


# -- sampling ---------------------------------------------------------------

def _reference_letters(ens: WalkEnsemble, detector) -> list[int]:
    path = ens.reference_path(detector)
    report = check_generic(path, ens.scenario.punctures)
    if not report.ok:
        raise DegeneratePositionError(report)
    return crossing_letters(path, ens.scenario.punctures).tolist()


def _close(letters: np.ndarray, ref: list[int]) -> tuple[int, ...]:
    stack = letters.tolist()
    for let in ref:
        if stack and stack[-1] == -let:
            stack.pop()
        else:
            stack.append(let)
    return tuple(stack)


def _sample_shard(ens: WalkEnsemble, shard: int, n: int, det_codes: np.ndarray, refs: list) -> Counter:
    """Counter keyed by ``(detector index, signed-letter tuple or None)``."""
    rng = np.random.default_rng([ens.seed, shard])
    steps = rng.integers(0, 4, size=(n, ens.steps), dtype=np.int8)
    sx, sy = ens.source_site
    px, py = ens.puncture_sites()
    excise = -1.0 if ens.excision_margin is None else float(ens.excision_margin)
    accepted, ends = _core.walk_ends(steps, sx, sy, px, py, excise)
    codes = _encode(ends)
    pos = np.searchsorted(det_codes, codes)
    pos = np.minimum(pos, len(det_codes) - 1)
    hit = (accepted.astype(bool)) & (det_codes[pos] == codes)
    idx = np.ascontiguousarray(np.nonzero(hit)[0], dtype=np.int64)
    out: Counter = Counter()
    if len(idx) == 0:
        return out
    letters, offsets = _core.walk_letters(steps, idx, sx, sy, px, py)
    cap = ens.max_word_length
    for j, w in enumerate(idx):
        d = int(pos[w])
        word = _close(letters[offsets[j] : offsets[j + 1]], refs[d])
        out[(d, word if len(word) <= cap else None)] += 1
    return out


_CODE_SHIFT = 1 << 31


def _encode(ij: np.ndarray) -> np.ndarray:
    ij = np.asarray(ij, dtype=np.int64).reshape(-1, 2)
    return (ij[:, 0] + _CODE_SHIFT // 2) * _CODE_SHIFT + (ij[:, 1] + _CODE_SHIFT // 2)


def sample_screen_tables(ens: WalkEnsemble, detectors: Sequence, threads: int = 1) -> list[ClassAmplitudeTable]:
    """One class table per detector from a single shared walk sample."""
    dets = [tuple(map(float, d)) for d in detectors]
    if not dets:
        raise ValueError("no detector points")
    sites = np.array([ens.lattice.site(d) for d in dets], dtype=np.int64)
    codes = _encode(sites)
    if len(np.unique(codes)) != len(codes):
        raise ValueError("detector points must be distinct lattice sites")
    order = np.argsort(codes)
    det_codes = codes[order]
    refs = [_reference_letters(ens, dets[i]) for i in order]

    def work(shard):
        return _sample_shard(ens, shard[0], shard[1], det_codes, refs)

    total: Counter = Counter()
    if threads <= 1:
        for part in map(work, ens.shards()):
            total.update(part)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for part in pool.map(work, ens.shards()):
                total.update(part)

    rank = ens.scenario.rank
    per_det: list[dict] = [dict() for _ in dets]
    overflow = [0] * len(dets)
    for (d, word), c in total.items():
        orig = int(order[d])
        if word is None:
            overflow[orig] += c
        else:
            per_det[orig][reduce(word, rank)] = c
    return [make_table(rank, dets[i], per_det[i], overflow[i], ens.samples) for i in range(len(dets))]


def sample_class_amplitudes(ens: WalkEnsemble, detector, threads: int = 1) -> ClassAmplitudeTable:
    table = sample_screen_tables(ens, [detector], threads)[0]
    if table.total == 0:
        raise InsufficientSamplesError(
            f"none of {ens.samples} walks of length {ens.steps} reached {tuple(detector)}"
        )
    return table


# -- exhaustive oracle ------------------------------------------------------

_MOVES = ((1, 0), (-1, 0), (0, 1), (0, -1))


def exhaustive_class_amplitudes(ens: WalkEnsemble, detector) -> ClassAmplitudeTable:
    """Enumerate every walk of length ``T`` from source to ``detector`` and
    classify each closed loop with :func:`word_of_loop`.

    Counts are exact; ``samples`` is ``4**T`` so amplitudes are the exact
    probabilities a uniform sampler estimates.
    """
    T = ens.steps
    sx, sy = ens.source_site
    dx, dy = ens.lattice.site(detector)
    px, py = ens.puncture_sites()
    margin = ens.excision_margin
    ref = ens.reference_path(detector).vertices
    rank = ens.scenario.rank
    counts: Counter = Counter()
    overflow = 0
    path = [(sx, sy)]

    def blocked(i, j):
        if margin is None:
            return False
        return bool(np.any((np.abs(i - px) <= margin) & (np.abs(j - py) <= margin)))

    if blocked(sx, sy):
        return make_table(rank, detector, {}, 0, 4**T)

    def dfs(i, j, left):
        nonlocal overflow
        if abs(dx - i) + abs(dy - j) > left:
            return
        if left == 0:
            walk = ens.lattice.to_plane(np.array(path))
            loop = PlanePath(np.vstack([walk, ref[1:]]), closed=True)
            w = word_of_loop(loop, ens.scenario.punctures, rank)
            if len(w) > ens.max_word_length:
                overflow += 1
            else:
                counts[w] += 1
            return
        for mx, my in _MOVES:
            ni, nj = i + mx, j + my
            if blocked(ni, nj):
                continue
            path.append((ni, nj))
            dfs(ni, nj, left - 1)
            path.pop()

    dfs(sx, sy, T)
    return make_table(rank, detector, dict(counts), overflow, 4**T)


# -- assembly and observables -----------------------------------------------

def assemble_propagator(table: ClassAmplitudeTable, phi: HolonomyMap):
    """``sum_w amplitude(w) phi(w)``; a complex scalar for 1x1 groups."""
    if table.rank != phi.rank:
        raise ValueError(f"table rank {table.rank} vs holonomy rank {phi.rank}")
    d = lg.DIM[phi.group_tag]
    acc = np.zeros((d, d), dtype=np.complex128)
    for w, c in table.counts.items():
        acc += c * holonomy_of_word(phi, w).matrix
    k = acc / table.samples
    return complex(k[0, 0]) if d == 1 else k


def intensity(k) -> float:
    """Squared (Frobenius) norm of a propagator value."""
    return float(np.sum(np.abs(np.asarray(k)) ** 2))


def screen_line(start, end, points: int) -> np.ndarray:
    if points < 2:
        raise ValueError("a screen needs at least 2 points")
    t = np.linspace(0.0, 1.0, points)[:, None]
    return (1 - t) * np.asarray(start, dtype=np.float64) + t * np.asarray(end, dtype=np.float64)


def screen_coordinates(screen: np.ndarray) -> np.ndarray:
    """Arclength position of each screen point measured from the first."""
    screen = np.asarray(screen, dtype=np.float64)
    return np.linalg.norm(screen - screen[0], axis=1)


@dataclass(frozen=True, eq=False)
class ScanResult:
    screen: np.ndarray
    intensities: np.ndarray
    tables: list

    @property
    def coordinates(self) -> np.ndarray:
        return screen_coordinates(self.screen)

    def to_csv(self) -> str:
        rows = (f"{s!r},{i!r}" for s, i in zip(self.coordinates.tolist(), self.intensities.tolist()))
        return "".join(r + "\n" for r in rows)

    def summary(self) -> dict:
        return {
            "samples": self.tables[0].samples if self.tables else 0,
            "class_mass": float(sum(t.mass for t in self.tables)),
            "overflow_mass": float(sum(t.overflow_mass for t in self.tables)),
            "classes": sorted({format_word(w) for t in self.tables for w in t.counts}),
        }


def tables_intensities(tables: Sequence[ClassAmplitudeTable], phi: HolonomyMap) -> np.ndarray:
    return np.array([intensity(assemble_propagator(t, phi)) for t in tables])


def interference_scan(ens: WalkEnsemble, screen, phi: HolonomyMap, threads: int = 1) -> ScanResult:
    screen = np.asarray(screen, dtype=np.float64).reshape(-1, 2)
    tables = sample_screen_tables(ens, screen, threads)
    if sum(t.total for t in tables) == 0:
        raise InsufficientSamplesError(f"none of {ens.samples} walks reached the screen")
    return ScanResult(screen, tables_intensities(tables, phi), tables)


def _raw_shift(a: np.ndarray, b: np.ndarray) -> float:
    """Shift in pixels maximizing the correlation of ``a(x)`` with ``b(x - s)``."""
    n = len(a)
    xs = np.arange(n, dtype=np.float64)
    k = int(np.argmax(np.correlate(a - a.mean(), b - b.mean(), mode="full"))) - (n - 1)
    # refine on a fixed overlap so the objective is smooth in s
    mask = (xs - k - 1.5 >= 0) & (xs - k + 1.5 <= n - 1)
    if mask.sum() < 3:
        return float(k)
    spline = CubicSpline(xs, b)

    def neg_corr(s):
        return -np.corrcoef(a[mask], spline(xs[mask] - s))[0, 1]

    res = minimize_scalar(neg_corr, bounds=(k - 1.5, k + 1.5), method="bounded", options={"xatol": 1e-12})
    return float(res.x)


def fringe_shift(intensity_a, intensity_b, screen) -> float:
    """Offset ``s`` (screen units) with ``intensity_a(x) ~ intensity_b(x - s)``.

    The integer lag comes from the cross-correlation peak; a cubic-spline
    refinement then maximizes the normalized correlation.  The estimate is
    made exactly antisymmetric in its two inputs.  ``screen`` is either the
    uniformly spaced screen coordinates or the screen points themselves.
    """
    a = np.asarray(intensity_a, dtype=np.float64)
    b = np.asarray(intensity_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("patterns must be 1-D arrays on the same screen")
    scr = np.asarray(screen, dtype=np.float64)
    coords = screen_coordinates(scr) if scr.ndim == 2 else scr
    if len(coords) != len(a):
        raise ValueError("screen and patterns differ in length")
    steps = np.diff(coords)
    pitch = float(steps.mean())
    if not np.allclose(steps, pitch, rtol=1e-9, atol=0):
        raise ValueError("screen must be uniformly spaced")
    for name, x in (("first", a), ("second", b)):
        if x.var() <= FLAT_PATTERN_TOL * max(x.mean() ** 2, np.finfo(float).tiny):
            raise FlatPatternError(f"{name} pattern is flat; no fringe to locate")
    return 0.5 * (_raw_shift(a, b) - _raw_shift(b, a)) * pitch


def two_beam_intensity(a, b, alpha: float) -> np.ndarray:
    """``|a + b e^{i alpha}|^2`` for complex beam amplitudes."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    return np.abs(a) ** 2 + np.abs(b) ** 2 + 2 * np.abs(a) * np.abs(b) * np.cos(alpha + np.angle(b) - np.angle(a))


def dominant_classes(tables: Sequence[ClassAmplitudeTable], count: int = 2) -> list[Word]:
    """Words carrying the most total weight across a screen."""
    tot: Counter = Counter()
    for t in tables:
        tot.update(t.counts)
    ranked = sorted(tot.items(), key=lambda kv: (-kv[1], _word_key(kv[0])))
    return [w for w, _ in itertools.islice(ranked, count)]
