import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from abbundle import geometry as geo
from abbundle import holonomy as hol
from abbundle import liegroups as lg
from abbundle import section as sec
from abbundle.serialize import FormatError
from conftest import scenario, u1_scenario

PUNCTURE = (0.5, 0.25)


def su2_scenario(seed=40):
    return scenario("SU2", [lg.random_algebra("SU2", np.random.default_rng(seed))], [PUNCTURE])


def smooth_su2_gauge(pts):
    pts = np.asarray(pts).reshape(-1, 2)
    x, y = pts[:, 0], pts[:, 1]
    coeffs = np.stack([np.sin(x), np.cos(0.7 * y), 0.2 * x * y], axis=1)
    gen = np.einsum("na,aij->nij", coeffs, lg.basis("SU2"))
    return lg.expm_batch(gen)


def smooth_psi(pts):
    pts = np.asarray(pts).reshape(-1, 2)
    x, y = pts[:, 0], pts[:, 1]
    return np.stack([np.exp(1j * x) * (1 + y * y), np.cos(x * y) + 0.3j * x], axis=1)


@given(st.integers(0, 2**32 - 1))
def test_canonical_rep_class_invariance(seed):
    rng = np.random.default_rng(seed)
    g, h = lg.random_element("SU2", rng), lg.random_element("SU2", rng)
    z = rng.normal(size=2) + 1j * rng.normal(size=2)
    p = sec.FiberPoint((1.0, 2.0), g, z)
    q = p.act(h)
    assert np.linalg.norm(sec.canonical_rep(p).z - sec.canonical_rep(q).z) <= 1e-12
    assert sec.equivalent(p, q)


def test_canonical_rep_examples():
    z = np.array([1.0, 2.0j])
    p = sec.FiberPoint((0.0, 0.0), lg.identity("SU2"), z)
    assert np.array_equal(sec.canonical_rep(p).z, z)
    g = lg.random_element("SU3", np.random.default_rng(41))
    p = sec.FiberPoint((0.0, 0.0), g, [1, 0, 0])
    once = sec.canonical_rep(p)
    assert np.array_equal(sec.canonical_rep(once).z, once.z)
    assert not sec.equivalent(p, sec.FiberPoint((0.0, 1.0), g, [1, 0, 0]))
    with pytest.raises(sec.DimensionError):
        sec.FiberPoint((0.0, 0.0), lg.identity("SU2"), [1, 0, 0])


def test_transport_examples():
    zero = u1_scenario([0.0], points=[PUNCTURE])
    loop = geo.circle(PUNCTURE, 1.0)
    assert sec.parallel_transport(zero, [1.0], loop)[0] == pytest.approx(1.0, abs=1e-15)
    alpha = 1.7
    s = u1_scenario([alpha], points=[PUNCTURE])
    z = sec.parallel_transport(s, [1.0], loop, steps=10_000)
    assert abs(z[0] - np.exp(1j * alpha)) <= 1e-8
    with pytest.raises(sec.DimensionError):
        sec.parallel_transport(s, [1.0, 0.0], loop)
    with pytest.raises(hol.PunctureProximityError):
        sec.parallel_transport(s, [1.0], geo.PlanePath(np.array([[0.0, 0.25], [1.0, 0.25]])))


def test_transport_matches_holonomy_on_based_loops():
    s = su2_scenario()
    base = (-3.0, 4.0)
    loop = geo.generator_loop(base, s.punctures, 1)
    z0 = np.array([1.0, 0.5j])
    z = sec.parallel_transport(s, z0, loop, steps=5000)
    expect = hol.holonomy_of_loop(s, loop).matrix @ z0
    assert np.linalg.norm(z - expect) <= 1e-6


def test_transport_round_trip_and_laws():
    s = su2_scenario()
    p = geo.PlanePath(np.array([[-2.0, -1.0], [1.0, -2.0], [3.0, 1.5]]))
    q = geo.PlanePath(np.array([[3.0, 1.5], [1.0, 3.0], [-1.0, 2.0]]))
    rng = np.random.default_rng(42)
    z0 = rng.normal(size=2) + 1j * rng.normal(size=2)
    z1 = rng.normal(size=2) + 1j * rng.normal(size=2)
    there = sec.parallel_transport(s, z0, p)
    assert np.linalg.norm(sec.parallel_transport(s, there, p.reversed()) - z0) <= 1e-8
    a, b = 2 - 1j, 0.5j
    lhs = sec.parallel_transport(s, a * z0 + b * z1, p)
    rhs = a * sec.parallel_transport(s, z0, p) + b * sec.parallel_transport(s, z1, p)
    assert np.linalg.norm(lhs - rhs) <= 1e-12
    whole = sec.parallel_transport(s, z0, p.then(q))
    assert np.linalg.norm(whole - sec.parallel_transport(s, there, q)) <= 1e-8


def test_flat_null_homotopic_loop_is_identity():
    s = su2_scenario()
    loop = geo.circle((4.0, -2.0), 1.5)
    z0 = np.array([0.3, 1.0 + 0.2j])
    assert np.linalg.norm(sec.parallel_transport(s, z0, loop) - z0) <= 1e-6


def test_covariant_derivative_constant_zero_flux():
    s = u1_scenario([0.0], points=[PUNCTURE])
    out = sec.covariant_derivative(s, lambda pts: np.ones((len(pts), 1)), (1.0, 0.3), (2.0, 2.0))
    assert np.abs(out).max() <= 1e-15


def test_covariant_derivative_of_parallel_section():
    s = su2_scenario()
    origin = np.array([-2.0, -2.0])
    z0 = np.array([1.0, 1j]) / np.sqrt(2)

    def psi(pts):
        return np.array([
            sec.parallel_transport(s, z0, geo.PlanePath(np.array([origin, x])), steps=200)
            for x in np.asarray(pts).reshape(-1, 2)
        ])

    x = np.array([1.5, 3.0])
    v = (x - origin) / np.linalg.norm(x - origin)
    perp = np.array([-v[1], v[0]])
    assert np.linalg.norm(sec.covariant_derivative(s, psi, v, x)) <= 1e-6
    # the field is flat away from the puncture, so the section is horizontal sideways too
    assert np.linalg.norm(sec.covariant_derivative(s, psi, perp, x)) <= 1e-6


def test_curved_field_radial_section_not_horizontal():
    t1 = lg.basis("SU2")[0]

    def fn(pts):
        x = pts[:, 0][:, None, None]
        return np.zeros((len(pts), 2, 2), dtype=complex), x * t1

    field = sec.GaugeField("SU2", fn)
    origin = np.array([0.0, 0.0])
    z0 = np.array([1.0, 0.0])

    def psi(pts):
        return np.array([
            sec.parallel_transport(field, z0, geo.PlanePath(np.array([origin, x])), steps=200)
            for x in np.asarray(pts).reshape(-1, 2)
        ])

    x = np.array([1.0, 1.0])
    v = x / np.linalg.norm(x)
    assert np.linalg.norm(sec.covariant_derivative(field, psi, v, x)) <= 1e-6
    assert np.linalg.norm(sec.covariant_derivative(field, psi, (-v[1], v[0]), x)) > 1e-2


def test_covariant_derivative_linearity_and_leibniz():
    s = su2_scenario()
    x, v = np.array([2.0, 1.0]), np.array([0.6, -0.8])

    def psi2(pts):
        return np.conj(smooth_psi(pts))[:, ::-1]

    d1 = sec.covariant_derivative(s, smooth_psi, v, x)
    d2 = sec.covariant_derivative(s, psi2, v, x)
    mix = sec.covariant_derivative(s, lambda p: 2j * smooth_psi(p) - 3 * psi2(p), v, x)
    assert np.linalg.norm(mix - (2j * d1 - 3 * d2)) <= 1e-10
    d_2v = sec.covariant_derivative(s, smooth_psi, 2 * v, x)
    assert np.linalg.norm(d_2v - 2 * d1) <= 1e-6

    def f(pts):
        pts = np.asarray(pts).reshape(-1, 2)
        return np.exp(0.3 * pts[:, 0]) * np.sin(pts[:, 1])

    fx = f(x[None])[0]
    df = (f((x + 1e-6 * v)[None])[0] - f((x - 1e-6 * v)[None])[0]) / 2e-6
    lhs = sec.covariant_derivative(s, lambda p: f(p)[:, None] * smooth_psi(p), v, x)
    rhs = df * smooth_psi(x[None])[0] + fx * d1
    assert np.linalg.norm(lhs - rhs) <= 1e-6


def test_gauge_covariance():
    s = su2_scenario()
    x, v = np.array([1.7, -0.9]), np.array([0.0, 1.0])
    psi2, field2 = sec.gauge_transform(smooth_psi, s, smooth_su2_gauge)
    lhs = sec.covariant_derivative(field2, psi2, v, x)
    rhs = smooth_su2_gauge(x)[0] @ sec.covariant_derivative(s, smooth_psi, v, x)
    assert np.linalg.norm(lhs - rhs) <= 1e-6


def test_gauge_covariance_converges_quadratically():
    s = su2_scenario()
    x, v = np.array([1.7, -0.9]), np.array([0.8, 0.6])
    errs = []
    for h in (1e-1, 5e-2, 2.5e-2):
        psi2, field2 = sec.gauge_transform(smooth_psi, s, smooth_su2_gauge, h=h)
        lhs = sec.covariant_derivative(field2, psi2, v, x, h=h)
        rhs = smooth_su2_gauge(x)[0] @ sec.covariant_derivative(s, smooth_psi, v, x, h=h)
        errs.append(np.linalg.norm(lhs - rhs))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.abs(rates - 2) <= 0.3)


def test_identity_gauge_is_noop():
    s = su2_scenario()
    psi2, field2 = sec.gauge_transform(smooth_psi, s, sec.constant_gauge(lg.identity("SU2")))
    pts = np.array([[1.0, 2.0], [-1.0, 0.5]])
    assert np.array_equal(psi2(pts), smooth_psi(pts))
    ax, ay = field2(pts)
    bx, by = sec.GaugeField.from_scenario(s)(pts)
    assert np.abs(ax - bx).max() <= 1e-15 and np.abs(ay - by).max() <= 1e-15


def test_constant_gauge_conjugates_loop_holonomy():
    s = su2_scenario()
    h = lg.random_element("SU2", np.random.default_rng(43))
    _, field2 = sec.gauge_transform(smooth_psi, s, sec.constant_gauge(h))
    loop = geo.circle(PUNCTURE, 1.0)
    w = sec.transport_matrix(s, loop, 1000)
    w2 = sec.transport_matrix(field2, loop, 1000)
    assert np.linalg.norm(w2 - h.matrix @ w @ lg.inverse(h).matrix) <= 1e-8


def test_abelian_gauge_leaves_wilson_loop():
    alpha = 0.9
    s = u1_scenario([alpha], points=[PUNCTURE])

    def lam(pts):
        pts = np.asarray(pts).reshape(-1, 2)
        chi = np.sin(pts[:, 0]) + 0.5 * pts[:, 0] * pts[:, 1]
        return np.exp(1j * chi)[:, None, None]

    _, field2 = sec.gauge_transform(lambda p: np.ones((len(p), 1)), s, lam)
    loop = geo.circle(PUNCTURE, 1.0)
    w = sec.transport_matrix(s, loop, 2000)[0, 0]
    w2 = sec.transport_matrix(field2, loop, 2000)[0, 0]
    assert abs(w2 - w) <= 1e-6
    assert abs(w - np.exp(1j * alpha)) <= 1e-6


def test_sampled_section_stencil_and_errors():
    h = sec.FD_STEP
    x = np.array([2.0, 1.0])
    grid = np.array([x, x + [h, 0], x - [h, 0]])
    psi = sec.SampledSection.from_function(smooth_psi, grid)
    s = su2_scenario()
    d = sec.covariant_derivative(s, psi, (1.0, 0.0), x)
    assert np.linalg.norm(d - sec.covariant_derivative(s, smooth_psi, (1.0, 0.0), x)) <= 1e-12
    with pytest.raises(sec.GridTooSparseError):
        sec.covariant_derivative(s, psi, (0.0, 1.0), x)
    with pytest.raises(sec.GridTooSparseError):
        psi(np.array([[9.0, 9.0]]))
    with pytest.raises(ValueError):
        sec.SampledSection(np.array([x, x]), np.ones((2, 2)))
    with pytest.raises(ValueError):
        sec.SampledSection(np.array([x]), np.array([[np.nan, 1.0]]))


def test_sampled_section_csv_roundtrip():
    grid = np.random.default_rng(44).uniform(-3, 3, size=(20, 2))
    psi = sec.SampledSection.from_function(smooth_psi, grid)
    back = sec.SampledSection.from_csv(psi.to_csv())
    assert np.array_equal(back.points, psi.points)
    assert np.array_equal(back.values, psi.values)
    with pytest.raises(FormatError):
        sec.SampledSection.from_csv("")
