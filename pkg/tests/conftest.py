import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from abbundle import liegroups as lg
from abbundle.freegroup import Letter, reduce
from abbundle.geometry import punctures_from_points
from abbundle.holonomy import FluxScenario
from abbundle.propagator import WalkEnsemble

settings.register_profile(
    "default", max_examples=100, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def letters(rank: int, max_size: int = 64):
    return st.lists(
        st.builds(Letter, st.integers(1, rank), st.sampled_from([1, -1])), max_size=max_size
    )


@st.composite
def words(draw, rank=None, max_size=32):
    n = draw(st.integers(1, 4)) if rank is None else rank
    return reduce(draw(letters(n, max_size)), n)


def u1_scenario(alphas, points=None, basepoint=(-3.0, 4.0)):
    points = points or [(float(k) + 0.5, 0.25 * k) for k in range(len(alphas))]
    return FluxScenario(
        len(alphas),
        tuple(punctures_from_points(points)),
        basepoint,
        "U1",
        tuple(lg.algebra_from_coeffs("U1", [a]) for a in alphas),
    )


def scenario(tag, fluxes, points, basepoint=(-3.0, 4.0)):
    return FluxScenario(len(fluxes), tuple(punctures_from_points(points)), basepoint, tag, tuple(fluxes))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


FRINGE_PUNCTURE = (4.5, 2.5)
FRINGE_SCREEN = np.stack([np.full(11, 8.0), np.arange(-10.0, 11.0, 2.0)], axis=1)


def fringe_ensemble(alpha=0.0, samples=1 << 20, seed=0, punctures=True):
    """U1 two-beam setup: the puncture splits walks reaching the screen
    into the classes e and c1^-1."""
    if punctures:
        s = u1_scenario([alpha], points=[FRINGE_PUNCTURE])
    else:
        s = FluxScenario(0, (), (-3.0, 4.0), "U1", ())
    return WalkEnsemble(s, (0.0, 0.0), 24, samples, seed=seed)
