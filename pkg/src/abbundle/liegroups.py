"""Matrix backends for U(1), SU(2), SU(3) and SL(2,C).

Elements and Lie-algebra elements are small complex matrices tagged with
their group.  Algebra coefficient bases (used by scenario files):

* U1   : ``{i}``
* SU2  : ``i * sigma_a / 2``            (a = 1..3)
* SU3  : ``i * lambda_a / 2``           (Gell-Mann, a = 1..8)
* SL2C : ``i * sigma_a / 2`` then ``sigma_a / 2``  (6 real coefficients)
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

TAGS = ("U1", "SU2", "SU3", "SL2C")
DIM = {"U1": 1, "SU2": 2, "SU3": 3, "SL2C": 2}

MEMBER_TOL = 1e-9
BRANCH_TOL = 1e-12


class GroupError(ValueError):
    """Unknown tag, tag mismatch or failed membership check."""


class BranchError(ArithmeticError):
    """Principal logarithm undefined: an eigenphase sits on the branch cut."""


def _check_tag(tag: str) -> str:
    if tag not in TAGS:
        raise GroupError(f"unknown group tag {tag!r}; expected one of {TAGS}")
    return tag


def membership_defect(tag: str, m: np.ndarray) -> float:
    """Largest violation of the defining equations of ``tag`` at ``m``."""
    d = DIM[tag]
    m = np.asarray(m)
    if m.shape != (d, d):
        return np.inf
    if tag == "U1":
        return abs(abs(m[0, 0]) - 1.0)
    det_err = abs(np.linalg.det(m) - 1.0)
    if tag == "SL2C":
        return det_err
    unit_err = np.linalg.norm(m.conj().T @ m - np.eye(d))
    return max(det_err, unit_err)


def membership_defects(tag: str, m: np.ndarray) -> np.ndarray:
    """:func:`membership_defect` over a stack ``(N, d, d)``."""
    m = np.asarray(m)
    d = DIM[tag]
    if tag == "U1":
        return np.abs(np.abs(m[:, 0, 0]) - 1.0)
    det_err = np.abs(np.linalg.det(m) - 1.0)
    if tag == "SL2C":
        return det_err
    unit_err = np.linalg.norm(np.swapaxes(m.conj(), 1, 2) @ m - np.eye(d), axis=(1, 2))
    return np.maximum(det_err, unit_err)


def algebra_defect(tag: str, x: np.ndarray) -> float:
    d = DIM[tag]
    x = np.asarray(x)
    if x.shape != (d, d):
        return np.inf
    if tag == "U1":
        return abs(x[0, 0].real)
    tr = abs(np.trace(x))
    if tag == "SL2C":
        return tr
    return max(tr, np.linalg.norm(x + x.conj().T))


@dataclass(frozen=True, eq=False)
class GroupElement:
    tag: str
    matrix: np.ndarray

    def __post_init__(self):
        _check_tag(self.tag)
        m = np.array(self.matrix, dtype=np.complex128)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return DIM[self.tag]

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return multiply(self, other)

    def __repr__(self) -> str:
        return f"GroupElement({self.tag}, {np.array2string(self.matrix, precision=6)})"


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    tag: str
    matrix: np.ndarray

    def __post_init__(self):
        _check_tag(self.tag)
        m = np.array(self.matrix, dtype=np.complex128)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def __mul__(self, s) -> "AlgebraElement":
        return AlgebraElement(self.tag, self.matrix * s)

    __rmul__ = __mul__

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        _same_tag(self, other)
        return AlgebraElement(self.tag, self.matrix + other.matrix)

    def __sub__(self, other: "AlgebraElement") -> "AlgebraElement":
        _same_tag(self, other)
        return AlgebraElement(self.tag, self.matrix - other.matrix)


def _same_tag(a, b) -> None:
    if a.tag != b.tag:
        raise GroupError(f"group tag mismatch: {a.tag} vs {b.tag}")


def check_member(g: GroupElement, tol: float = MEMBER_TOL) -> GroupElement:
    err = membership_defect(g.tag, g.matrix)
    if not err <= tol:
        raise GroupError(f"{g.tag} membership violated by {err:.3e}")
    return g


def element(tag: str, matrix, tol: float = MEMBER_TOL) -> GroupElement:
    """Validated constructor."""
    return check_member(GroupElement(tag, matrix), tol)


def identity(tag: str) -> GroupElement:
    return GroupElement(tag, np.eye(DIM[_check_tag(tag)]))


def multiply(a: GroupElement, b: GroupElement) -> GroupElement:
    _same_tag(a, b)
    return GroupElement(a.tag, a.matrix @ b.matrix)


def inverse(a: GroupElement) -> GroupElement:
    if a.tag == "SL2C":
        m = a.matrix
        # adjugate; det = 1
        inv = np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]]) / np.linalg.det(m)
        return GroupElement(a.tag, inv)
    return GroupElement(a.tag, a.matrix.conj().T)


def distance(a: GroupElement, b: GroupElement) -> float:
    """Frobenius norm of ``a - b``."""
    _same_tag(a, b)
    return float(np.linalg.norm(a.matrix - b.matrix))


def commutator_norm(x: AlgebraElement, y: AlgebraElement) -> float:
    _same_tag(x, y)
    return float(np.linalg.norm(x.matrix @ y.matrix - y.matrix @ x.matrix))


# -- projection --------------------------------------------------------------

def project_matrices(tag: str, m: np.ndarray) -> np.ndarray:
    """Nearest group element (polar projection), batched over leading axes."""
    m = np.asarray(m, dtype=np.complex128)
    d = DIM[tag]
    if tag == "U1":
        return m / np.abs(m)
    if tag == "SL2C":
        det = np.linalg.det(m)
        return m / np.sqrt(det)[..., None, None]
    u, _, vh = np.linalg.svd(m)
    p = u @ vh
    det = np.linalg.det(p)
    # det(p) is a phase near 1; remove it with the root closest to 1
    return p * np.exp(-1j * np.angle(det) / d)[..., None, None]


def project(g: GroupElement) -> GroupElement:
    return GroupElement(g.tag, project_matrices(g.tag, g.matrix))


# -- exponential -------------------------------------------------------------

def _expm2_traceless(x: np.ndarray) -> np.ndarray:
    # exp(X) = cosh(s) I + sinh(s)/s X,  s^2 = -det X,  tr X = 0
    det = x[..., 0, 0] * x[..., 1, 1] - x[..., 0, 1] * x[..., 1, 0]
    s = np.sqrt(-det + 0j)
    small = np.abs(s) < 1e-8
    s_safe = np.where(small, 1.0, s)
    sinhc = np.where(small, 1.0 + s * s / 6.0, np.sinh(s_safe) / s_safe)
    eye = np.eye(2, dtype=np.complex128)
    return np.cosh(s)[..., None, None] * eye + sinhc[..., None, None] * x


def expm_batch(x: np.ndarray) -> np.ndarray:
    """Matrix exponential over a stack ``(..., d, d)`` of small matrices.

    Scalars use ``exp``; 2x2 uses the closed form after splitting off the
    trace; larger anti-Hermitian stacks use a Hermitian eigendecomposition
    and anything else falls back to scaling-and-squaring.
    """
    x = np.asarray(x, dtype=np.complex128)
    d = x.shape[-1]
    if d == 1:
        return np.exp(x)
    if d == 2:
        half_tr = 0.5 * (x[..., 0, 0] + x[..., 1, 1])
        core = x - half_tr[..., None, None] * np.eye(2)
        return np.exp(half_tr)[..., None, None] * _expm2_traceless(core)
    if np.allclose(x, -np.swapaxes(x.conj(), -1, -2), atol=1e-13, rtol=0):
        h = -1j * x
        h = 0.5 * (h + np.swapaxes(h.conj(), -1, -2))
        w, v = np.linalg.eigh(h)
        return (v * np.exp(1j * w)[..., None, :]) @ np.swapaxes(v.conj(), -1, -2)
    return scipy.linalg.expm(x)


def exp(x: AlgebraElement) -> GroupElement:
    if x.tag == "SL2C":
        m = scipy.linalg.expm(x.matrix)
    else:
        m = expm_batch(x.matrix)
    return GroupElement(x.tag, m)


# -- logarithm ---------------------------------------------------------------

def log(g: GroupElement) -> AlgebraElement:
    """Principal logarithm.

    For SU(3) the principal eigenphases may sum to a nonzero multiple of
    2*pi; the phase(s) of largest magnitude are then shifted by 2*pi so the
    result is traceless (still a logarithm, closest to principal).
    """
    tag = g.tag
    m = g.matrix
    if tag == "U1":
        z = m[0, 0]
        th = np.angle(z)
        if abs(abs(th) - np.pi) <= BRANCH_TOL:
            raise BranchError("U1 element at -1")
        return AlgebraElement(tag, [[1j * th]])
    if tag == "SL2C":
        ev = np.linalg.eigvals(m)
        for lam in ev:
            if abs(lam.imag) <= BRANCH_TOL * max(1.0, abs(lam)) and lam.real < 0:
                raise BranchError("SL2C element has a negative real eigenvalue")
        x = scipy.linalg.logm(m)
        x = x - np.trace(x) / 2 * np.eye(2)
        return AlgebraElement(tag, x)
    t, z = scipy.linalg.schur(m, output="complex")
    phases = np.angle(np.diag(t))
    if np.any(np.abs(np.abs(phases) - np.pi) <= BRANCH_TOL):
        raise BranchError(f"{tag} element has an eigenphase at pi")
    total = int(np.rint(phases.sum() / (2 * np.pi)))
    while total != 0:
        i = int(np.argmax(phases)) if total > 0 else int(np.argmin(phases))
        phases[i] -= np.sign(total) * 2 * np.pi
        total -= int(np.sign(total))
    x = (z * (1j * phases)) @ z.conj().T
    x = 0.5 * (x - x.conj().T)
    x = x - np.trace(x) / x.shape[0] * np.eye(x.shape[0])
    return AlgebraElement(tag, x)


# -- paths -------------------------------------------------------------------

@lru_cache(maxsize=None)
def _detour_generator(tag: str) -> np.ndarray:
    rng = np.random.default_rng(20240531)
    coeffs = rng.normal(size=len(basis(tag)))
    x = algebra_from_coeffs(tag, coeffs).matrix
    return 0.3 * x / np.linalg.norm(x)


def path_to_identity(g: GroupElement, t: float) -> GroupElement:
    """Continuous path with value ``g`` at ``t=0`` and identity at ``t=1``.

    Uses ``exp((1-t) log g)``.  When ``g`` is on the branch cut the path is
    split through ``h = exp(eps X)`` for a fixed algebra direction ``X``:
    first half runs ``g -> h``, second half ``h -> 1``.
    """
    if t == 0:
        return g
    try:
        x = log(g)
    except BranchError:
        h = exp(AlgebraElement(g.tag, _detour_generator(g.tag)))
        if t <= 0.5:
            rest = multiply(g, inverse(h))
            y = log(rest)
            return multiply(exp(y * (1 - 2 * t)), h)
        return exp(log(h) * (2 - 2 * t))
    return exp(x * (1 - t))


def geodesic(a: GroupElement, b: GroupElement, t: float) -> GroupElement:
    """Path from ``a`` (t=0) to ``b`` (t=1) built from :func:`path_to_identity`."""
    return multiply(b, path_to_identity(multiply(inverse(b), a), t))


def geodesic_samples(a: GroupElement, b: GroupElement, ts) -> np.ndarray:
    """Matrices of :func:`geodesic` at every parameter in ``ts``, batched."""
    _same_tag(a, b)
    ts = np.asarray(ts, dtype=np.float64)
    try:
        x = log(multiply(inverse(b), a)).matrix
    except BranchError:
        return np.array([geodesic(a, b, float(t)).matrix for t in ts])
    out = b.matrix @ expm_batch((1.0 - ts)[:, None, None] * x)
    out[ts == 0] = a.matrix
    return out


# -- bases -------------------------------------------------------------------

_PAULI = np.array(
    [[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]], dtype=np.complex128
)


def _gell_mann() -> np.ndarray:
    lam = np.zeros((8, 3, 3), dtype=np.complex128)
    lam[0][0, 1] = lam[0][1, 0] = 1
    lam[1][0, 1], lam[1][1, 0] = -1j, 1j
    lam[2][0, 0], lam[2][1, 1] = 1, -1
    lam[3][0, 2] = lam[3][2, 0] = 1
    lam[4][0, 2], lam[4][2, 0] = -1j, 1j
    lam[5][1, 2] = lam[5][2, 1] = 1
    lam[6][1, 2], lam[6][2, 1] = -1j, 1j
    lam[7] = np.diag([1, 1, -2]) / np.sqrt(3)
    return lam


PAULI = _PAULI
GELL_MANN = _gell_mann()


def basis(tag: str) -> np.ndarray:
    """Fixed real basis of the Lie algebra, shape ``(k, d, d)``."""
    _check_tag(tag)
    if tag == "U1":
        return np.array([[[1j]]])
    if tag == "SU2":
        return 1j * _PAULI / 2
    if tag == "SU3":
        return 1j * GELL_MANN / 2
    return np.concatenate([1j * _PAULI / 2, _PAULI / 2])


def algebra_from_coeffs(tag: str, coeffs) -> AlgebraElement:
    b = basis(tag)
    c = np.asarray(coeffs, dtype=np.float64)
    if c.shape != (len(b),):
        raise GroupError(f"{tag} expects {len(b)} coefficients, got {c.shape}")
    return AlgebraElement(tag, np.tensordot(c, b, axes=1))


def zero_algebra(tag: str) -> AlgebraElement:
    d = DIM[_check_tag(tag)]
    return AlgebraElement(tag, np.zeros((d, d)))


# -- random elements ---------------------------------------------------------

def random_algebra(tag: str, rng: np.random.Generator, scale: float = 1.0) -> AlgebraElement:
    return algebra_from_coeffs(tag, scale * rng.normal(size=len(basis(tag))))


def random_element(tag: str, rng: np.random.Generator) -> GroupElement:
    """Haar-random for the compact groups; for SL2C the exponential of a
    Gaussian algebra element of moderate size."""
    _check_tag(tag)
    if tag == "U1":
        return GroupElement(tag, [[np.exp(1j * rng.uniform(-np.pi, np.pi))]])
    if tag == "SL2C":
        return exp(random_algebra(tag, rng, scale=0.5))
    d = DIM[tag]
    z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    q = q * np.exp(-1j * np.angle(np.linalg.det(q)) / d)
    return GroupElement(tag, q)
