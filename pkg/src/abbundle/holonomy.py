"""Holonomy of an n-flux configuration.

The exact holonomy is the homomorphism ``phi: F_n -> G`` with
``phi(c_k) = exp(F_k)``.  Its numeric counterpart is the path-ordered
exponential of the vortex-sum connection

    A(x) = sum_k F_k / (2 pi) * (-(y - y_k), x - x_k) / r_k^2

which carries ``F_k / 2 pi`` so one counter-clockwise turn around ``b_k``
integrates to ``F_k``.  The vortex sum is flat only when the fluxes commute;
for non-commuting fluxes ``phi`` remains the definition and
:func:`verify_flatness` reports the curvature.

Ordering: ``phi`` multiplies letters left to right, while a Wilson line puts
later segments on the left.  The two agree whenever the fluxes commute,
which is exactly where the vortex connection is flat.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _core
from . import liegroups as lg
from .freegroup import RankError, Word
from .geometry import (
    PlanePath,
    Puncture,
    check_puncture_layout,
    puncture_arrays,
    segment_distances,
    word_of_loop,
)
from .liegroups import AlgebraElement, GroupElement

PROXIMITY_TOL = 1e-6
WILSON_CLEARANCE = 1e-3
REPROJECT_EVERY = 1024
NON_FLAT_TOL = 1e-12


class PunctureProximityError(ValueError):
    pass


class BasepointError(ValueError):
    pass


class NonConvergenceError(ArithmeticError):
    def __init__(self, msg: str, history: list[tuple[int, float]]):
        super().__init__(msg)
        self.history = history


@dataclass(frozen=True, eq=False)
class FluxScenario:
    rank: int
    punctures: tuple[Puncture, ...]
    basepoint: tuple[float, float]
    group_tag: str
    fluxes: tuple[AlgebraElement, ...]

    def __post_init__(self):
        ps = tuple(sorted(self.punctures, key=lambda p: p.label))
        object.__setattr__(self, "punctures", ps)
        object.__setattr__(self, "fluxes", tuple(self.fluxes))
        object.__setattr__(self, "basepoint", (float(self.basepoint[0]), float(self.basepoint[1])))
        if len(ps) != self.rank or len(self.fluxes) != self.rank:
            raise ValueError(
                f"rank {self.rank} needs {self.rank} punctures and fluxes, "
                f"got {len(ps)} and {len(self.fluxes)}"
            )
        check_puncture_layout(ps, self.basepoint)
        for p in ps:
            if np.hypot(p.position[0] - self.basepoint[0], p.position[1] - self.basepoint[1]) <= PROXIMITY_TOL:
                raise ValueError(f"basepoint coincides with puncture {p.label}")
        for f in self.fluxes:
            if f.tag != self.group_tag:
                raise lg.GroupError(f"flux tag {f.tag} does not match scenario group {self.group_tag}")
            err = lg.algebra_defect(f.tag, f.matrix)
            if err > lg.MEMBER_TOL:
                raise lg.GroupError(f"flux is not a {f.tag} algebra element (defect {err:.2e})")

    @property
    def dim(self) -> int:
        return lg.DIM[self.group_tag]

    def with_fluxes(self, fluxes: Sequence[AlgebraElement]) -> "FluxScenario":
        return FluxScenario(self.rank, self.punctures, self.basepoint, self.group_tag, tuple(fluxes))

    def is_abelian(self) -> bool:
        return all(
            lg.commutator_norm(a, b) <= NON_FLAT_TOL
            for i, a in enumerate(self.fluxes)
            for b in self.fluxes[i + 1 :]
        )


@dataclass(frozen=True, eq=False)
class HolonomyMap:
    group_tag: str
    images: tuple[GroupElement, ...]

    def __post_init__(self):
        object.__setattr__(self, "images", tuple(self.images))
        for g in self.images:
            if g.tag != self.group_tag:
                raise lg.GroupError("generator image tag mismatch")
            lg.check_member(g)
        object.__setattr__(self, "_inverses", tuple(lg.inverse(g) for g in self.images))

    @property
    def rank(self) -> int:
        return len(self.images)

    def __call__(self, w: Word) -> GroupElement:
        return holonomy_of_word(self, w)


def holonomy_map(scenario: FluxScenario) -> HolonomyMap:
    return HolonomyMap(scenario.group_tag, tuple(lg.exp(f) for f in scenario.fluxes))


def conjugate_map(phi: HolonomyMap, h: GroupElement) -> HolonomyMap:
    """Generator images replaced by ``h g h^-1`` (a basepoint gauge change)."""
    hi = lg.inverse(h)
    return HolonomyMap(phi.group_tag, tuple(h @ g @ hi for g in phi.images))


def holonomy_of_word(phi: HolonomyMap, w: Word) -> GroupElement:
    if w.rank != phi.rank:
        raise RankError(f"word rank {w.rank} vs holonomy rank {phi.rank}")
    m = np.eye(lg.DIM[phi.group_tag], dtype=np.complex128)
    for let in w.letters:
        g = phi.images[let.gen - 1] if let.sign > 0 else phi._inverses[let.gen - 1]
        m = m @ g.matrix
    return GroupElement(phi.group_tag, m)


def holonomy_of_loop(scenario: FluxScenario, path: PlanePath, phi: HolonomyMap | None = None) -> GroupElement:
    start = path.vertices[0]
    if np.hypot(start[0] - scenario.basepoint[0], start[1] - scenario.basepoint[1]) > 1e-9:
        raise BasepointError(f"loop starts at {tuple(start)}, basepoint is {scenario.basepoint}")
    phi = holonomy_map(scenario) if phi is None else phi
    return holonomy_of_word(phi, word_of_loop(path, scenario.punctures, scenario.rank))


# -- connection --------------------------------------------------------------

def connection_matrices(scenario: FluxScenario, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vortex-sum connection at many points: two stacks ``(m, d, d)``."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    d = scenario.dim
    ax = np.zeros((len(pts), d, d), dtype=np.complex128)
    ay = np.zeros_like(ax)
    for p, f in zip(scenario.punctures, scenario.fluxes):
        rx = pts[:, 0] - p.position[0]
        ry = pts[:, 1] - p.position[1]
        r2 = rx * rx + ry * ry
        if np.any(r2 <= PROXIMITY_TOL**2):
            raise PunctureProximityError(f"point within {PROXIMITY_TOL} of puncture {p.label}")
        coef = f.matrix / (2 * np.pi)
        ax -= (ry / r2)[:, None, None] * coef
        ay += (rx / r2)[:, None, None] * coef
    return ax, ay


def connection_at(scenario: FluxScenario, x) -> tuple[AlgebraElement, AlgebraElement]:
    ax, ay = connection_matrices(scenario, np.asarray(x, dtype=np.float64)[None, :])
    return AlgebraElement(scenario.group_tag, ax[0]), AlgebraElement(scenario.group_tag, ay[0])


# -- Wilson lines ------------------------------------------------------------

def midpoint_rule(vertices: np.ndarray, steps: int, start: int = 0, stop: int | None = None):
    """Midpoints and displacements of sub-segments ``start..stop`` when every
    path segment is split into ``steps`` equal pieces."""
    total = (len(vertices) - 1) * steps
    stop = total if stop is None else min(stop, total)
    idx = np.arange(start, stop)
    seg, j = np.divmod(idx, steps)
    a = vertices[:-1][seg]
    ab = (vertices[1:] - vertices[:-1])[seg]
    s = (j + 0.5) / steps
    return a + s[:, None] * ab, ab / steps


FieldFn = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]

_BLOCK = 256 * REPROJECT_EVERY


def ordered_exponential(tag: str, field_fn: FieldFn, vertices: np.ndarray, steps: int) -> np.ndarray:
    """Product of ``exp(A(mid) . dl)`` over the refined sub-segments, later
    factors on the left, re-projected to the group every ``REPROJECT_EVERY``
    factors."""
    d = lg.DIM[tag]
    w = np.eye(d, dtype=np.complex128)
    total = (len(vertices) - 1) * steps
    for start in range(0, total, _BLOCK):
        mids, dls = midpoint_rule(vertices, steps, start, start + _BLOCK)
        ax, ay = field_fn(mids)
        x = ax * dls[:, 0, None, None] + ay * dls[:, 1, None, None]
        mats = np.ascontiguousarray(lg.expm_batch(x))
        for c in _core.chunk_products(mats, REPROJECT_EVERY):
            w = lg.project_matrices(tag, c @ w)
    return w


def _check_clearance(scenario: FluxScenario, path: PlanePath, clearance: float) -> None:
    if not scenario.punctures:
        return
    px, py = puncture_arrays(scenario.punctures)
    d = segment_distances(path.vertices, np.stack([px, py], axis=1))
    if d.size and d.min() < clearance:
        seg, k = np.unravel_index(np.argmin(d), d.shape)
        raise PunctureProximityError(
            f"segment {seg} passes {d.min():.2e} from puncture {scenario.punctures[k].label}"
        )


def wilson_line(
    scenario: FluxScenario,
    path: PlanePath,
    steps: int,
    tol: float | None = None,
    max_steps: int = 2**20,
) -> GroupElement:
    """Path-ordered exponential of the vortex connection along ``path``.

    Every polygon segment is refined into ``steps`` midpoint sub-steps.  With ``tol`` the budget is
    doubled until successive results differ by at most ``tol``;
    :class:`NonConvergenceError` is raised past ``max_steps``.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    _check_clearance(scenario, path, WILSON_CLEARANCE)
    field_fn = lambda pts: connection_matrices(scenario, pts)  # noqa: E731

    def run(n: int) -> np.ndarray:
        return ordered_exponential(scenario.group_tag, field_fn, path.vertices, n)

    w = run(steps)
    if tol is not None:
        history: list[tuple[int, float]] = []
        n = steps
        while True:
            if 2 * n > max_steps:
                raise NonConvergenceError(
                    f"wilson_line not converged to {tol:g} by {n} steps", history
                )
            n *= 2
            w2 = run(n)
            diff = float(np.linalg.norm(w2 - w))
            history.append((n, diff))
            w = w2
            if diff <= tol:
                break
    return GroupElement(scenario.group_tag, w)


# -- flatness ----------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    xmin: float
    xmax: float
    ymin: float
    ymax: float
    nx: int = 41
    ny: int = 41
    plaquette: float = 1e-2
    substeps: int = 8


@dataclass
class FlatnessReport:
    max_deviation: float
    location: tuple[float, float] | None
    plaquette: float
    n_plaquettes: int
    n_skipped: int
    commutators: dict[str, float] = field(default_factory=dict)
    non_flat: bool = False

    def to_dict(self) -> dict:
        return {
            "max_deviation": self.max_deviation,
            "location": list(self.location) if self.location is not None else None,
            "plaquette": self.plaquette,
            "n_plaquettes": self.n_plaquettes,
            "n_skipped": self.n_skipped,
            "commutators": self.commutators,
            "non_flat": self.non_flat,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def plaquette_loops(scenario: FluxScenario, centers: np.ndarray, size: float, substeps: int) -> np.ndarray:
    """Counter-clockwise square Wilson loops of side ``size`` at each center,
    returned as a stack ``(m, d, d)``."""
    h = size / 2
    corners = np.array([[-h, -h], [h, -h], [h, h], [-h, h], [-h, -h]])
    s = (np.arange(substeps) + 0.5) / substeps
    offs = np.vstack([a + s[:, None] * (b - a) for a, b in zip(corners[:-1], corners[1:])])
    dl = np.vstack([np.broadcast_to((b - a) / substeps, (substeps, 2)) for a, b in zip(corners[:-1], corners[1:])])
    pts = centers[:, None, :] + offs[None, :, :]
    ax, ay = connection_matrices(scenario, pts.reshape(-1, 2))
    d = scenario.dim
    x = ax.reshape(len(centers), -1, d, d) * dl[None, :, 0, None, None] + ay.reshape(len(centers), -1, d, d) * dl[None, :, 1, None, None]
    return _core.tree_product(lg.expm_batch(x))


def verify_flatness(scenario: FluxScenario, grid: GridSpec) -> FlatnessReport:
    xs = np.linspace(grid.xmin, grid.xmax, grid.nx)
    ys = np.linspace(grid.ymin, grid.ymax, grid.ny)
    centers = np.stack(np.meshgrid(xs, ys, indexing="xy"), axis=-1).reshape(-1, 2)
    keep = np.ones(len(centers), dtype=bool)
    for p in scenario.punctures:
        dist = np.max(np.abs(centers - np.asarray(p.position)), axis=1)
        keep &= dist > grid.plaquette
    kept = centers[keep]
    commutators = {}
    for i in range(scenario.rank):
        for j in range(i + 1, scenario.rank):
            commutators[f"{i + 1},{j + 1}"] = lg.commutator_norm(scenario.fluxes[i], scenario.fluxes[j])
    non_flat = scenario.rank >= 2 and any(v > NON_FLAT_TOL for v in commutators.values())
    if len(kept) == 0:
        return FlatnessReport(0.0, None, grid.plaquette, 0, int((~keep).sum()), commutators, non_flat)
    d = scenario.dim
    devs = np.empty(len(kept))
    batch = 4096
    for s in range(0, len(kept), batch):
        w = plaquette_loops(scenario, kept[s : s + batch], grid.plaquette, grid.substeps)
        devs[s : s + batch] = np.linalg.norm(w - np.eye(d), axis=(1, 2))
    i = int(np.argmax(devs))
    return FlatnessReport(
        float(devs[i]),
        (float(kept[i, 0]), float(kept[i, 1])),
        grid.plaquette,
        len(kept),
        int((~keep).sum()),
        commutators,
        bool(non_flat),
    )
