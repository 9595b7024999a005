import itertools

import numpy as np
import pytest
from hypothesis import given

from abbundle import covering as cov
from abbundle import holonomy as hol
from abbundle import liegroups as lg
from abbundle.freegroup import Word, concat, invert, is_reduced, parse_word, random_word, reduce
from conftest import scenario, u1_scenario, words


def v(text, rank=2):
    return cov.TreeVertex(parse_word(text, rank))


def brute_ball(rank, radius):
    # every reduced sequence of length <= radius, found by filtering all sequences
    alphabet = [k * s for k in range(1, rank + 1) for s in (1, -1)]
    out = set()
    for n in range(radius + 1):
        for seq in itertools.product(alphabet, repeat=n):
            w = reduce(seq, rank)
            if len(w) == n:
                out.add(w)
    return out


@pytest.mark.parametrize("rank", [1, 2, 3])
@pytest.mark.parametrize("radius", range(0, 7))
def test_ball_counts_against_enumeration(rank, radius):
    ball = cov.fiber_ball(rank, radius)
    assert len(ball) == cov.ball_count(rank, radius)
    assert {x.word for x in ball} == brute_ball(rank, radius)
    assert all(is_reduced(x.word.letters) for x in ball)


def test_ball_count_examples():
    assert cov.ball_count(1, 3) == 7
    assert cov.ball_count(2, 1) == 5
    assert cov.ball_count(2, 3) == 53
    assert len(cov.fiber_ball(3, 6)) == cov.ball_count(3, 6) == 1 + 6 * (5**6 - 1) // 4


def test_ball_order_and_cap():
    ball = [str(x) for x in cov.fiber_ball(2, 1)]
    assert ball == ["e", "c1", "c1^-1", "c2", "c2^-1"]
    with pytest.raises(cov.ResourceCapError):
        cov.fiber_ball(3, 12)
    with pytest.raises(cov.ResourceCapError):
        cov.fiber_ball(2, 3, cap=52)
    with pytest.raises(ValueError):
        cov.fiber_ball(2, -1)


def test_lift_examples():
    root = cov.TreeVertex.root(2)
    assert cov.lift_loop(parse_word("c1", 2), root) == v("c1")
    assert cov.lift_loop(parse_word("c2^-1", 2), v("c2")) == root
    assert cov.lift_loop(Word.identity(2), v("c1 c2")) == v("c1 c2")
    with pytest.raises(Exception):
        cov.lift_loop(parse_word("c1", 3), root)


def test_edges():
    es = cov.edges(v("c1"))
    assert len(es) == 4
    targets = {str(e.target) for e in es}
    assert targets == {"c1 c1", "e", "c1 c2", "c1 c2^-1"}


def test_lift_trace_is_a_tree_path():
    tr = cov.lift_trace(parse_word("c1 c2 c2 c1^-1", 2), cov.TreeVertex.root(2))
    assert [str(x) for x in tr] == ["e", "c1", "c1 c2", "c1 c2 c2", "c1 c2 c2 c1^-1"]
    # reduced words never revisit a vertex
    assert len({x for x in tr}) == len(tr)


def test_deck_action_freeness_sweep():
    rng = np.random.default_rng(30)
    root = cov.TreeVertex.root(3)
    for _ in range(500):
        g = random_word(rng, 3, 12)
        if g.is_identity():
            continue
        y = cov.TreeVertex(random_word(rng, 3, 12))
        assert cov.deck_transform(g, y) != y
        assert cov.deck_transform(g, root).word == g


@given(words(rank=2), words(rank=2), words(rank=2))
def test_deck_action_composition(g, h, y):
    y = cov.TreeVertex(y)
    assert cov.deck_transform(g, cov.deck_transform(h, y)) == cov.deck_transform(concat(g, h), y)
    assert cov.deck_transform(invert(g), cov.deck_transform(g, y)) == y


@given(words(rank=2), words(rank=2))
def test_deck_commutes_with_lifting(g, w):
    # deck transformations map lifts to lifts
    root = cov.TreeVertex.root(2)
    assert cov.lift_loop(w, cov.deck_transform(g, root)) == cov.deck_transform(g, cov.lift_loop(w, root))


def test_monodromy_examples():
    s = u1_scenario([0.7, -1.1])
    phi = hol.holonomy_map(s)
    assert lg.distance(cov.monodromy_holonomy(phi, cov.TreeVertex.root(2)), lg.identity("U1")) == 0
    g = cov.monodromy_holonomy(phi, v("c1 c2^-1"))
    assert abs(g.matrix[0, 0] - np.exp(1j * (0.7 + 1.1))) <= 1e-14
    with pytest.raises(Exception):
        cov.monodromy_holonomy(phi, v("c1", 3))


def test_equivariance_defect_and_witness():
    s = u1_scenario([0.7, -1.1])
    phi = hol.holonomy_map(s)
    assert cov.equivariance_defect(phi, Word.identity(2), v("c1")) == 0
    d = cov.equivariance_defect(phi, parse_word("c1", 2), cov.TreeVertex.root(2))
    assert d == pytest.approx(abs(np.exp(0.7j) - 1), abs=1e-15)
    g, y, defect = cov.find_equivariance_witness(phi)
    assert str(g) == "c1" and defect > 1e-9
    trivial = hol.holonomy_map(u1_scenario([0.0, 0.0]))
    assert cov.find_equivariance_witness(trivial) is None


def test_equivariance_witness_nonabelian():
    rng = np.random.default_rng(31)
    s = scenario("SU2", [lg.random_algebra("SU2", rng) for _ in range(2)], [(0.5, 0.0), (2.5, 0.3)])
    found = cov.find_equivariance_witness(hol.holonomy_map(s))
    assert found is not None and found[2] > 0.01
