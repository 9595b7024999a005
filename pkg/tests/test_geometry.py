import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from abbundle import geometry as geo
from abbundle.freegroup import abelianize, concat, invert, parse_word

P2 = geo.punctures_from_points([(0.0, 0.0), (3.0, 0.5)])
BASE = (-2.0, 3.0)


def random_fourier_loop(rng, n_vertices=200, center=(1.5, 0.2), modes=4, scale=3.0):
    t = np.linspace(0, 2 * np.pi, n_vertices, endpoint=False)
    z = np.zeros_like(t, dtype=complex)
    for k in range(-modes, modes + 1):
        z += scale * (rng.normal() + 1j * rng.normal()) / (1 + abs(k)) * np.exp(1j * k * t)
    z += complex(*center)
    pts = np.stack([z.real, z.imag], axis=1)
    return geo.PlanePath.loop(pts)


def test_circle_words():
    p = geo.punctures_from_points([(0.0, 0.0)])
    ccw = geo.circle((0, 0), 1.0, n=32, start_angle=0.1)
    assert str(geo.word_of_loop(ccw, p)) == "c1"
    assert str(geo.word_of_loop(ccw.reversed(), p)) == "c1^-1"
    assert geo.winding_numbers(ccw, p).tolist() == [1]


def test_double_circle_winding():
    p = geo.punctures_from_points([(0.0, 0.0), (5.0, 0.0)])
    t = 0.1 + np.linspace(0, 4 * np.pi, 129)
    loop = geo.PlanePath.loop(np.stack([np.cos(t), np.sin(t)], axis=1))
    assert geo.winding_numbers(loop, p).tolist() == [2, 0]
    assert str(geo.word_of_loop(loop, p)) == "c1 c1"


def test_figure_path_c1_c2():
    loop = geo.loop_for_word(BASE, P2, parse_word("c1 c2", 2))
    w = geo.word_of_loop(loop, P2)
    assert str(w) == "c1 c2"
    assert geo.winding_numbers(loop, P2).tolist() == [1, 1]


@pytest.mark.parametrize("text", ["e", "c1", "c2^-1", "c1 c2 c1^-1 c2^-1", "c2 c2 c1^-1"])
def test_loop_for_word_roundtrip(text):
    w = parse_word(text, 2)
    assert geo.word_of_loop(geo.loop_for_word(BASE, P2, w), P2) == w


def test_open_path_rejected():
    path = geo.PlanePath(np.array([[0.0, 1.0], [1.0, 1.0]]))
    with pytest.raises(geo.OpenPathError):
        geo.word_of_loop(path, P2)
    with pytest.raises(geo.OpenPathError):
        geo.PlanePath(np.array([[0.0, 1.0], [1.0, 1.0]]), closed=True)


def test_vertex_on_ray_reported():
    loop = geo.PlanePath.loop([(-1.0, 1.0), (1.0, 1.0), (0.0, -1.0)])
    rep = geo.check_generic(loop, P2)
    assert not rep.ok
    v = rep.violations[0]
    assert v.kind == "vertex-on-ray" and v.index == 2 and v.puncture == 1
    with pytest.raises(geo.DegeneratePositionError) as exc:
        geo.word_of_loop(loop, P2)
    assert exc.value.report is not None


def test_segment_through_puncture_reported():
    loop = geo.PlanePath.loop([(-1.0, 0.0), (1.0, 0.0), (1.0, 2.0)])
    rep = geo.check_generic(loop, P2)
    assert any(v.kind == "segment-near-puncture" and v.puncture == 1 for v in rep.violations)


def test_circle_offset_is_generic():
    assert geo.check_generic(geo.circle((0.2, 0.1), 0.7), P2).ok


def test_genericity_fuzz():
    rng = np.random.default_rng(10)
    hits = 0
    for _ in range(200):
        loop = random_fourier_loop(rng, 50)
        v = np.array(loop.vertices)
        i = int(rng.integers(1, len(v) - 1))
        k = int(rng.integers(0, 2))
        px, py = P2[k].position
        v[i] = (px + rng.uniform(-0.9e-9, 0.9e-9), py - rng.uniform(0.1, 3.0))
        rep = geo.check_generic(geo.PlanePath(v, closed=True), P2)
        flagged = [x for x in rep.violations if x.kind == "vertex-on-ray" and x.index == i]
        hits += bool(flagged)
    assert hits == 200


def test_puncture_layout_checks():
    with pytest.raises(geo.PunctureLayoutError):
        geo.check_puncture_layout(geo.punctures_from_points([(1.0, 0.0), (1.0, 2.0)]))
    with pytest.raises(geo.PunctureLayoutError):
        geo.check_puncture_layout(P2, basepoint=(0.0, -4.0))
    jittered = geo.jitter_punctures(geo.punctures_from_points([(1.0, 0.0), (1.0, 2.0)]))
    geo.check_puncture_layout(jittered)


def test_too_coarse_winding():
    p = geo.punctures_from_points([(0.0, 0.0)])
    # a single segment passing straight over the puncture subtends ~pi
    loop = geo.PlanePath(np.array([[-1.0, 1e-3], [1.0, 1e-3], [-1.0, 1e-3]]), closed=True)
    assert geo.winding_numbers(loop, p).tolist() == [0]
    with pytest.raises(geo.PathTooCoarseError):
        geo.winding_numbers(geo.PlanePath(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 0.0]]), closed=True), p)


def test_random_loops_abelianization_equals_winding():
    rng = np.random.default_rng(11)
    p3 = geo.punctures_from_points([(0.0, 0.0), (3.0, 0.5), (1.3, -1.7)])
    nontrivial = 0
    for i in range(500):
        ps = p3[: 1 + i % 3]
        loop = random_fourier_loop(rng)
        w = geo.word_of_loop(loop, ps)
        wind = geo.winding_numbers(loop, ps)
        assert np.array_equal(abelianize(w), wind)
        nontrivial += bool(np.any(wind))
    assert nontrivial > 100


def _deformations(base_loop, rng):
    v = base_loop.vertices
    yield base_loop.refined(3)
    jitter = v + rng.uniform(-0.02, 0.02, size=v.shape)
    jitter[-1] = jitter[0]
    yield geo.PlanePath(jitter, closed=True)
    spike = np.vstack([v[:2], [v[1] + [0.0, 2.0]], v[1:]])
    yield geo.PlanePath(spike, closed=True)
    rot = np.vstack([v[5:-1], v[:6]])
    # a rotated start gives a conjugate loop; conjugate back by the path to the new start
    yield geo.PlanePath(np.vstack([v[:6], rot[1:], v[5::-1][1:]]), closed=True)
    scaled = v.copy()
    scaled[1:-1] += rng.uniform(-0.05, 0.05, size=(len(v) - 2, 2))
    yield geo.PlanePath(scaled, closed=True).refined(2)


@pytest.mark.parametrize("text", ["c1 c2", "c2^-1 c1", "c1 c1 c2^-1", "c2 c1 c2^-1 c1^-1", "c1^-1"])
def test_homotopic_deformations_same_word(text):
    rng = np.random.default_rng(12)
    w = parse_word(text, 2)
    base = geo.loop_for_word(BASE, P2, w)
    for deformed in _deformations(base, rng):
        assert geo.word_of_loop(deformed, P2) == w


def test_reversal_and_concatenation():
    rng = np.random.default_rng(13)
    for _ in range(50):
        a = random_fourier_loop(rng, 80)
        b = random_fourier_loop(rng, 80)
        # base both at the same point by prepending a connector
        start = np.array([-10.0, 10.0])
        la = geo.PlanePath.loop(np.vstack([start, a.vertices[0], a.vertices[1:], a.vertices[0]]))
        lb = geo.PlanePath.loop(np.vstack([start, b.vertices[0], b.vertices[1:], b.vertices[0]]))
        wa, wb = geo.word_of_loop(la, P2), geo.word_of_loop(lb, P2)
        assert geo.word_of_loop(la.reversed(), P2) == invert(wa)
        assert geo.word_of_loop(la.then(lb), P2) == concat(wa, wb)


@given(st.integers(0, 2**32 - 1), st.integers(2, 5))
def test_refinement_invariance(seed, factor):
    loop = random_fourier_loop(np.random.default_rng(seed), 60)
    assert geo.word_of_loop(loop.refined(factor), P2) == geo.word_of_loop(loop, P2)


def test_crossing_order_within_a_segment():
    # one long segment crosses both rays; order follows the path direction
    loop = geo.PlanePath.loop([(-1.0, -2.0), (4.0, -2.0), (4.0, 5.0), (-1.0, 5.0)])
    assert geo.crossing_letters(loop, P2).tolist() == [1, 2]
    assert geo.crossing_letters(loop.reversed(), P2).tolist() == [-2, -1]
