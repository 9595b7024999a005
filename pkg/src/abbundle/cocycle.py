"""G-cocycles on the two-sets-per-circle cover of the wedge of n circles,
and their constructive trivialization.

Each circle ``k`` is covered by ``U_{k+}`` and ``U_{k-}``.  Up to homotopy,
``U_{k+} ∩ U_{k-}`` is the two points ``{x0, a_k}`` and every overlap of sets
from different circles is the single point ``x0``.  A cocycle is therefore

* a value ``g(α, β)`` at ``x0`` for every ordered pair of distinct sets, and
* a second value ``g(k+, k-)`` at ``a_k`` for every circle.

Conventions (one consistent set):

* antisymmetry   ``g(β, α) = g(α, β)^-1``
* cocycle law    ``g(β, γ) g(α, β) = g(α, γ)``
* gauge action   ``g'(α, β) = λ_β g(α, β) λ_α^-1``
* trivial        ``g(α, β) = Λ_β Λ_α^-1``  (a coboundary)

Every set is modelled as the parameter interval ``[0, 1]`` with ``x0`` at
``t = 0`` and ``a_k`` at ``t = 1``; a trivialization assigns each set a
sampled continuous path ``Λ: [0, 1] -> G``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb

import numpy as np

from . import liegroups as lg
from .liegroups import GroupElement
from .serialize import (
    SCHEMA_VERSION,
    FormatError,
    matrix_from_json,
    matrix_to_json,
    require_version,
)

CONSTRUCTION_TOL = 1e-9
VALIDATION_TOL = 1e-10
CONTINUITY_CONSTANT = 10.0

SetLabel = tuple[int, int]  # (circle k, sign +1/-1)


class CocycleError(ValueError):
    pass


class TrivializationError(RuntimeError):
    pass


def set_labels(n: int) -> list[SetLabel]:
    return [(k, s) for k in range(1, n + 1) for s in (1, -1)]


def label_str(a: SetLabel) -> str:
    return f"{a[0]}{'+' if a[1] > 0 else '-'}"


def parse_label(text: str) -> SetLabel:
    if len(text) < 2 or text[-1] not in "+-":
        raise FormatError(f"bad set label {text!r}")
    return int(text[:-1]), 1 if text[-1] == "+" else -1


def count_transition_functions(n: int) -> int:
    """Transition functions on the 2n-set cover, self-overlaps included:
    ``2 * C(2n, 2) + 2n``, which equals ``4 n^2``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return 2 * comb(2 * n, 2) + 2 * n


def count_cocycle_relations(n: int) -> int:
    """One relation per unordered triple of sets: ``C(2n, 3)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return comb(2 * n, 3)


@dataclass(frozen=True, eq=False)
class Cocycle:
    n: int
    group_tag: str
    at_x0: dict  # (α, β) -> GroupElement, all ordered pairs α != β
    at_a: dict  # k -> GroupElement, the value of g(k+, k-) at a_k

    def value(self, a: SetLabel, b: SetLabel) -> GroupElement:
        return self.at_x0[(a, b)]

    def g0(self, k: int) -> GroupElement:
        return self.at_x0[((k, 1), (k, -1))]

    def ga(self, k: int) -> GroupElement:
        return self.at_a[k]

    def replace(self, a: SetLabel, b: SetLabel, g: GroupElement) -> "Cocycle":
        """Copy with one stored x0 value overwritten (its reverse untouched)."""
        vals = dict(self.at_x0)
        vals[(a, b)] = g
        return Cocycle(self.n, self.group_tag, vals, dict(self.at_a))

    # -- JSON --------------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "cocycle",
            "group": self.group_tag,
            "n": self.n,
            "x0": {
                f"{label_str(a)},{label_str(b)}": matrix_to_json(g.matrix)
                for (a, b), g in self.at_x0.items()
            },
            "a": {str(k): matrix_to_json(g.matrix) for k, g in self.at_a.items()},
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Cocycle":
        require_version(doc, "cocycle")
        try:
            tag, n = doc["group"], int(doc["n"])
            at_x0 = {}
            for key, m in doc["x0"].items():
                a, b = (parse_label(s) for s in key.split(","))
                at_x0[(a, b)] = GroupElement(tag, matrix_from_json(m))
            at_a = {int(k): GroupElement(tag, matrix_from_json(m)) for k, m in doc["a"].items()}
        except (KeyError, ValueError, lg.GroupError) as exc:
            raise FormatError(f"bad cocycle document: {exc}") from exc
        labels = set_labels(n)
        expected = {(a, b) for a in labels for b in labels if a != b}
        if set(at_x0) != expected or set(at_a) != set(range(1, n + 1)):
            raise FormatError("cocycle document does not cover the 2n-set structure")
        return cls(n, tag, at_x0, at_a)


def identity_cocycle(n: int, tag: str) -> Cocycle:
    e = lg.identity(tag)
    labels = set_labels(n)
    return Cocycle(
        n, tag, {(a, b): e for a in labels for b in labels if a != b}, {k: e for k in range(1, n + 1)}
    )


def complete_from_root(n: int, tag: str, from_root: dict, at_a: dict) -> Cocycle:
    """Cocycle determined by ``u_α = g((1,+), α)`` for every ``α``:
    ``g(α, β) = u_β u_α^-1``."""
    root = (1, 1)
    u = {root: lg.identity(tag), **from_root}
    labels = set_labels(n)
    at_x0 = {}
    for a in labels:
        ua_inv = lg.inverse(u[a])
        for b in labels:
            if a != b:
                at_x0[(a, b)] = lg.multiply(u[b], ua_inv)
    return Cocycle(n, tag, at_x0, dict(at_a))


def random_cocycle(n: int, group_tag: str, seed: int) -> Cocycle:
    """Seeded random valid cocycle.

    Free data: ``g0_k = g(k+, k-)`` at x0 and ``g_k`` at ``a_k`` for every
    circle, plus ``g(1+, j+)`` for ``j >= 2``.  The rest follows from the
    cocycle law through the root set ``1+``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    lg._check_tag(group_tag)
    rng = np.random.default_rng(seed)
    g0 = {k: lg.random_element(group_tag, rng) for k in range(1, n + 1)}
    ga = {k: lg.random_element(group_tag, rng) for k in range(1, n + 1)}
    from_root = {(1, -1): g0[1]}
    for j in range(2, n + 1):
        f = lg.random_element(group_tag, rng)
        from_root[(j, 1)] = f
        from_root[(j, -1)] = lg.multiply(g0[j], f)
    return complete_from_root(n, group_tag, from_root, ga)


# -- validation --------------------------------------------------------------

@dataclass
class CocycleViolation:
    kind: str  # "antisymmetry" | "relation" | "membership" | "tag"
    sets: tuple
    residual: float

    def __str__(self) -> str:
        names = ",".join(label_str(s) if isinstance(s, tuple) else str(s) for s in self.sets)
        return f"{self.kind}({names}) residual {self.residual:.3e}"


@dataclass
class CocycleReport:
    violations: list[CocycleViolation] = field(default_factory=list)
    max_residual: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_cocycle(c: Cocycle, tol: float = VALIDATION_TOL) -> CocycleReport:
    report = CocycleReport()

    def note(kind, sets, r):
        report.max_residual = max(report.max_residual, r)
        if not r <= tol:
            report.violations.append(CocycleViolation(kind, sets, r))

    for (a, b), g in c.at_x0.items():
        if g.tag != c.group_tag:
            report.violations.append(CocycleViolation("tag", (a, b), np.inf))
            return report
        note("membership", (a, b), lg.membership_defect(c.group_tag, g.matrix))
    for k, g in c.at_a.items():
        note("membership", (f"a{k}",), lg.membership_defect(c.group_tag, g.matrix))
    labels = set_labels(c.n)
    eye = np.eye(lg.DIM[c.group_tag])
    for a, b in itertools.combinations(labels, 2):
        r = np.linalg.norm(c.value(b, a).matrix @ c.value(a, b).matrix - eye)
        note("antisymmetry", (a, b), float(r))
    for a, b, g in itertools.combinations(labels, 3):
        lhs = c.value(b, g).matrix @ c.value(a, b).matrix
        note("relation", (a, b, g), float(np.linalg.norm(lhs - c.value(a, g).matrix)))
    return report


# -- gauge action ------------------------------------------------------------

def apply_constant_lambda(c: Cocycle, lam: dict) -> Cocycle:
    """``g'(α, β) = λ_β g(α, β) λ_α^-1`` at every overlap point."""
    for a in set_labels(c.n):
        if lam[a].tag != c.group_tag:
            raise lg.GroupError(f"lambda for {label_str(a)} has tag {lam[a].tag}")
    inv = {a: lg.inverse(g) for a, g in lam.items()}
    at_x0 = {(a, b): lam[b] @ g @ inv[a] for (a, b), g in c.at_x0.items()}
    at_a = {k: lam[(k, -1)] @ g @ inv[(k, 1)] for k, g in c.at_a.items()}
    return Cocycle(c.n, c.group_tag, at_x0, at_a)


# -- trivialization ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Trivialization:
    n: int
    group_tag: str
    samples: int
    paths: dict  # label -> ndarray (samples + 1, d, d); index 0 is x0, last is a_k

    @property
    def delta_max(self) -> float:
        return CONTINUITY_CONSTANT / self.samples

    def at_x0(self, a: SetLabel) -> np.ndarray:
        return self.paths[a][0]

    def at_a(self, a: SetLabel) -> np.ndarray:
        return self.paths[a][-1]

    def to_dict(self) -> dict:
        return {
            "group": self.group_tag,
            "n": self.n,
            "samples": self.samples,
            "paths": {label_str(a): [matrix_to_json(m) for m in p] for a, p in self.paths.items()},
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Trivialization":
        try:
            paths = {
                parse_label(k): np.array([matrix_from_json(m) for m in v])
                for k, v in doc["paths"].items()
            }
            return cls(int(doc["n"]), doc["group"], int(doc["samples"]), paths)
        except (KeyError, ValueError) as exc:
            raise FormatError(f"bad trivialization document: {exc}") from exc


def _uniform_arclength(path_fn, samples: int, oversample: int = 8) -> np.ndarray:
    """Resample a batched path ``ts -> (N, d, d)`` uniformly in arclength."""
    fine_t = np.linspace(0.0, 1.0, oversample * samples + 1)
    fine = path_fn(fine_t)
    s = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(fine, axis=0), axis=(1, 2)))])
    if s[-1] == 0:
        return np.repeat(fine[:1], samples + 1, axis=0)
    t = np.interp(np.linspace(0.0, s[-1], samples + 1), s, fine_t)
    t[0], t[-1] = 0.0, 1.0
    return path_fn(t)


def _path_ok(tag: str, pts: np.ndarray, delta_max: float) -> bool:
    gaps = np.linalg.norm(np.diff(pts, axis=0), axis=(1, 2))
    return bool(np.all(gaps <= delta_max)) and lg.membership_defects(tag, pts).max() <= CONSTRUCTION_TOL


def _interpolate(tag: str, start: GroupElement, end: GroupElement, samples: int) -> np.ndarray:
    delta_max = CONTINUITY_CONSTANT / samples
    pts = _uniform_arclength(lambda ts: lg.geodesic_samples(start, end, ts), samples)
    if _path_ok(tag, pts, delta_max):
        return pts
    # one retry through an interior waypoint
    kick = lg.exp(lg.AlgebraElement(tag, lg._detour_generator(tag)))
    way = lg.multiply(lg.geodesic(start, end, 0.5), kick)

    def two_leg(ts):
        out = np.empty((len(ts),) + start.matrix.shape, dtype=np.complex128)
        first = ts <= 0.5
        out[first] = lg.geodesic_samples(start, way, 2 * ts[first])
        out[~first] = lg.geodesic_samples(way, end, 2 * ts[~first] - 1)
        return out

    pts = _uniform_arclength(two_leg, samples)
    if _path_ok(tag, pts, delta_max):
        return pts
    raise TrivializationError(
        f"could not interpolate {tag} path within step bound {delta_max:.3g} using {samples} samples"
    )


def trivialize(c: Cocycle, samples: int = 64) -> Trivialization:
    """Continuous ``Λ`` per set with ``g(α, β) = Λ_β Λ_α^-1`` at every
    overlap point.

    At ``x0`` the values are gauge-fixed along the tree rooted at ``1+``:
    ``Λ_α(x0) = g(1+, α)``.  ``Λ_{k+}`` is then held constant and ``Λ_{k-}``
    runs along a group path to ``g_k Λ_{k+}``, its required value at
    ``a_k``.  Paths are sampled uniformly in arclength.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    report = validate_cocycle(c)
    if not report.ok:
        raise CocycleError(f"invalid cocycle: {report.violations[0]}")
    tag = c.group_tag
    root = (1, 1)
    anchor = {a: (lg.identity(tag) if a == root else c.value(root, a)) for a in set_labels(c.n)}
    paths = {}
    for k in range(1, c.n + 1):
        plus = anchor[(k, 1)]
        paths[(k, 1)] = np.repeat(plus.matrix[None], samples + 1, axis=0)
        target = lg.multiply(c.ga(k), plus)
        paths[(k, -1)] = _interpolate(tag, anchor[(k, -1)], target, samples)
    return Trivialization(c.n, tag, samples, paths)


@dataclass
class TrivializationReport:
    max_residual: float
    worst_residual: str
    max_gap: float
    worst_gap: str
    delta_max: float
    max_membership: float
    tol: float

    @property
    def passed(self) -> bool:
        return (
            self.max_residual <= self.tol
            and self.max_gap <= self.delta_max
            and self.max_membership <= CONSTRUCTION_TOL
        )

    def to_dict(self) -> dict:
        return {
            "max_residual": self.max_residual,
            "worst_residual": self.worst_residual,
            "max_gap": self.max_gap,
            "worst_gap": self.worst_gap,
            "delta_max": self.delta_max,
            "max_membership": self.max_membership,
            "tol": self.tol,
            "passed": self.passed,
        }


def _inv(tag: str, m: np.ndarray) -> np.ndarray:
    return lg.inverse(GroupElement(tag, m)).matrix


def verify_trivialization(c: Cocycle, triv: Trivialization, tol: float = CONSTRUCTION_TOL) -> TrivializationReport:
    """Recompute every coboundary residual and continuity gap from scratch."""
    labels = set_labels(c.n)
    if triv.n != c.n or triv.group_tag != c.group_tag or set(triv.paths) != set(labels):
        raise FormatError("trivialization does not match the cocycle's shape")
    tag = c.group_tag
    worst_r, where_r = 0.0, ""
    for (a, b), g in c.at_x0.items():
        lhs = triv.at_x0(b) @ _inv(tag, triv.at_x0(a))
        r = float(np.linalg.norm(lhs - g.matrix))
        if r > worst_r or not where_r:
            worst_r, where_r = r, f"x0:{label_str(a)},{label_str(b)}"
    for k, g in c.at_a.items():
        lhs = triv.at_a((k, -1)) @ _inv(tag, triv.at_a((k, 1)))
        r = float(np.linalg.norm(lhs - g.matrix))
        if r > worst_r:
            worst_r, where_r = r, f"a{k}:{k}+,{k}-"
    worst_g, where_g, member = 0.0, "", 0.0
    for a, p in triv.paths.items():
        if len(p) != triv.samples + 1:
            raise FormatError(f"set {label_str(a)} has {len(p)} samples, expected {triv.samples + 1}")
        gaps = np.linalg.norm(np.diff(p, axis=0), axis=(1, 2))
        if len(gaps) and gaps.max() > worst_g:
            i = int(np.argmax(gaps))
            worst_g, where_g = float(gaps[i]), f"{label_str(a)}[{i}:{i + 1}]"
        member = max(member, float(lg.membership_defects(tag, p).max()))
    return TrivializationReport(worst_r, where_r, worst_g, where_g, triv.delta_max, float(member), tol)


def certificate(c: Cocycle, triv: Trivialization) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "certificate",
        "cocycle": c.to_dict(),
        "trivialization": triv.to_dict(),
    }


def load_certificate(doc: dict) -> tuple[Cocycle, Trivialization]:
    require_version(doc, "certificate")
    try:
        return Cocycle.from_dict(doc["cocycle"]), Trivialization.from_dict(doc["trivialization"])
    except KeyError as exc:
        raise FormatError(f"certificate missing {exc}") from exc
