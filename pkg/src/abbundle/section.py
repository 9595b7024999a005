"""Sections of the associated vector bundle in the defining representation.

Fiber points are triples ``(x, g, z)`` modulo ``(x, g h, h^-1 z)``.  The
coupling potential ``A`` enters the covariant derivative as
``∇_V ψ = dψ(V) + A(V) ψ`` and transport solves ``dz/dt = -A(ẋ) z``.  For a
flux scenario ``A`` is the negated vortex connection, so transport along a
path equals the Wilson line applied to ``z`` and a counter-clockwise loop
around ``b_k`` acts by ``exp(F_k)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from . import liegroups as lg
from .geometry import PlanePath
from .holonomy import FluxScenario, connection_matrices, ordered_exponential, wilson_line
from .liegroups import GroupElement
from .serialize import FormatError, section_from_csv, section_to_csv

FD_STEP = 1e-4
EQUIV_TOL = 1e-12
GRID_MATCH_TOL = 1e-12

PointFn = Callable[[np.ndarray], np.ndarray]  # (N, 2) -> (N, ...)


class GridTooSparseError(ValueError):
    pass


class DimensionError(ValueError):
    pass


# -- fiber points ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FiberPoint:
    x: tuple[float, float]
    g: GroupElement
    z: np.ndarray

    def __post_init__(self):
        z = np.array(self.z, dtype=np.complex128).reshape(-1)
        if z.shape[0] != lg.DIM[self.g.tag]:
            raise DimensionError(f"vector of length {z.shape[0]} for a {self.g.tag} fiber")
        z.setflags(write=False)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "x", (float(self.x[0]), float(self.x[1])))

    @property
    def m(self) -> int:
        return self.z.shape[0]

    def act(self, h: GroupElement) -> "FiberPoint":
        """Another representative of the same class: ``(x, g h, h^-1 z)``."""
        return FiberPoint(self.x, lg.multiply(self.g, h), lg.inverse(h).matrix @ self.z)


def canonical_rep(p: FiberPoint) -> FiberPoint:
    return FiberPoint(p.x, lg.identity(p.g.tag), p.g.matrix @ p.z)


def equivalent(p: FiberPoint, q: FiberPoint, tol: float = EQUIV_TOL) -> bool:
    if p.g.tag != q.g.tag or p.m != q.m:
        return False
    if np.hypot(p.x[0] - q.x[0], p.x[1] - q.x[1]) > tol:
        return False
    return bool(np.linalg.norm(canonical_rep(p).z - canonical_rep(q).z) <= tol)


# -- sampled sections --------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SampledSection:
    points: np.ndarray  # (N, 2)
    values: np.ndarray  # (N, m), canonical gauge

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64).reshape(-1, 2)
        vals = np.array(self.values, dtype=np.complex128)
        vals = vals.reshape(len(pts), -1)
        if not np.all(np.isfinite(pts)) or not np.all(np.isfinite(vals)):
            raise ValueError("section has non-finite entries")
        if len(np.unique(pts, axis=0)) != len(pts):
            raise ValueError("section grid points must be distinct")
        pts.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "values", vals)

    @property
    def m(self) -> int:
        return self.values.shape[1]

    @classmethod
    def from_function(cls, fn: PointFn, points) -> "SampledSection":
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        return cls(pts, fn(pts))

    def index_of(self, x, tol: float = GRID_MATCH_TOL) -> int | None:
        d = np.abs(self.points - np.asarray(x, dtype=np.float64)).max(axis=1)
        i = int(np.argmin(d))
        return i if d[i] <= tol else None

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        """Values at grid points (exact matches only)."""
        out = []
        for x in np.asarray(pts, dtype=np.float64).reshape(-1, 2):
            i = self.index_of(x)
            if i is None:
                raise GridTooSparseError(f"no grid point at {tuple(x)}")
            out.append(self.values[i])
        return np.array(out)

    def to_csv(self) -> str:
        return section_to_csv(self.points, self.values)

    @classmethod
    def from_csv(cls, text: str) -> "SampledSection":
        pts, vals = section_from_csv(text)
        if len(pts) == 0:
            raise FormatError("empty section file")
        return cls(pts, vals)


Section = Union[SampledSection, PointFn]


def _eval(psi: Section, pts: np.ndarray) -> np.ndarray:
    return np.asarray(psi(pts), dtype=np.complex128).reshape(len(pts), -1)


# -- coupling potentials -----------------------------------------------------

@dataclass(frozen=True, eq=False)
class GaugeField:
    """Coupling potential ``A = A_x dx + A_y dy`` with algebra-valued
    components, evaluated in batches: ``fn(pts) -> (ax, ay)``."""

    group_tag: str
    fn: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]

    @classmethod
    def from_scenario(cls, scenario: FluxScenario) -> "GaugeField":
        def fn(pts):
            ax, ay = connection_matrices(scenario, pts)
            return -ax, -ay

        return cls(scenario.group_tag, fn)

    def __call__(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return self.fn(np.asarray(pts, dtype=np.float64).reshape(-1, 2))

    def along(self, pts: np.ndarray, v) -> np.ndarray:
        ax, ay = self(pts)
        return ax * v[0] + ay * v[1]


def _as_field(f: FluxScenario | GaugeField) -> GaugeField:
    return GaugeField.from_scenario(f) if isinstance(f, FluxScenario) else f


def transport_matrix(field: FluxScenario | GaugeField, path: PlanePath, steps: int) -> np.ndarray:
    """Linear map ``z(0) -> z(1)`` of ``dz/dt = -A(ẋ) z`` along ``path``."""
    if isinstance(field, FluxScenario):
        return wilson_line(field, path, steps).matrix
    if steps < 1:
        raise ValueError("steps must be >= 1")

    def neg(pts):
        ax, ay = field(pts)
        return -ax, -ay

    return ordered_exponential(field.group_tag, neg, path.vertices, steps)


def parallel_transport(field: FluxScenario | GaugeField, z0, path: PlanePath, steps: int = 1000) -> np.ndarray:
    """Transport ``z0`` along ``path``; ``steps`` midpoint sub-steps per segment."""
    w = transport_matrix(field, path, steps)
    z0 = np.asarray(z0, dtype=np.complex128).reshape(-1)
    if z0.shape[0] != w.shape[0]:
        raise DimensionError(f"vector of length {z0.shape[0]} for a {w.shape[0]}-dimensional fiber")
    return w @ z0


# -- derivatives -------------------------------------------------------------

def _stencil(psi: Section, x: np.ndarray, v: np.ndarray, h: float) -> np.ndarray:
    pts = np.stack([x + h * v, x - h * v])
    if isinstance(psi, SampledSection):
        idx = [psi.index_of(p) for p in pts]
        if None in idx:
            raise GridTooSparseError(
                f"grid lacks the points x ± {h:g}·V needed at {tuple(x)}"
            )
        vals = psi.values[idx]
    else:
        vals = _eval(psi, pts)
    return (vals[0] - vals[1]) / (2 * h)


def covariant_derivative(
    field: FluxScenario | GaugeField,
    psi: Section,
    direction,
    x,
    h: float = FD_STEP,
) -> np.ndarray:
    """``dψ(V) + A(V) ψ`` at ``x`` with a central difference of step ``h``.

    ``psi`` is a batched callable or a :class:`SampledSection` whose grid
    contains ``x`` and ``x ± h V``.
    """
    f = _as_field(field)
    x = np.asarray(x, dtype=np.float64)
    v = np.asarray(direction, dtype=np.float64)
    dpsi = _stencil(psi, x, v, h)
    if isinstance(psi, SampledSection):
        i = psi.index_of(x)
        if i is None:
            raise GridTooSparseError(f"no grid point at {tuple(x)}")
        here = psi.values[i]
    else:
        here = _eval(psi, x[None])[0]
    a = f.along(x[None], v)[0]
    return dpsi + a @ here


def gauge_transform(
    psi: Section,
    field: FluxScenario | GaugeField,
    lam: PointFn,
    h: float = FD_STEP,
) -> tuple[Section, GaugeField]:
    """``ψ' = Λψ`` and ``A' = Λ A Λ^-1 - (dΛ) Λ^-1``.

    ``lam`` maps points ``(N, 2)`` to group matrices ``(N, d, d)``; ``dΛ``
    is taken by central differences.
    """
    f = _as_field(field)

    def lam_at(pts):
        return np.asarray(lam(np.asarray(pts, dtype=np.float64).reshape(-1, 2)), dtype=np.complex128)

    if isinstance(psi, SampledSection):
        new_psi: Section = SampledSection(psi.points, np.einsum("nij,nj->ni", lam_at(psi.points), psi.values))
    else:
        def new_psi(pts):
            return np.einsum("nij,nj->ni", lam_at(pts), _eval(psi, np.asarray(pts).reshape(-1, 2)))

    ex, ey = np.array([h, 0.0]), np.array([0.0, h])

    def new_fn(pts):
        pts = np.asarray(pts, dtype=np.float64).reshape(-1, 2)
        l0 = lam_at(pts)
        li = np.linalg.inv(l0)
        dlx = (lam_at(pts + ex) - lam_at(pts - ex)) / (2 * h)
        dly = (lam_at(pts + ey) - lam_at(pts - ey)) / (2 * h)
        ax, ay = f(pts)
        return l0 @ ax @ li - dlx @ li, l0 @ ay @ li - dly @ li

    return new_psi, GaugeField(f.group_tag, new_fn)


def constant_gauge(h: GroupElement) -> PointFn:
    """Global gauge transformation by a fixed group element."""
    m = h.matrix

    def lam(pts):
        return np.broadcast_to(m, (len(np.asarray(pts).reshape(-1, 2)),) + m.shape).copy()

    return lam
