import math

import numpy as np
import pytest
from oracles import chi2_goodness, chi2_two_sample

from lfbgw.cmj import GeometricTail, LifeLaw, life_law
from lfbgw.errors import DecodeError, InvalidArgumentError
from lfbgw.model import ModelTriplet, generation_law
from lfbgw.sim import (
    ContourPath,
    JumpingContour,
    LabeledContourChain,
    PlanarTree,
    contour_to_tree,
    descents_from,
    extract_individuals,
    individuals_alive,
    run_replicates,
    sample_life,
    simulate_bgw,
    simulate_cmj,
    simulate_population,
    spinal_decompose,
    tree_to_contour,
    tree_to_jumping,
)

P_MIN = 1e-3


@pytest.fixture
def reference_tree():
    """Two-type tree stopped at level 5; ids are already breadth-first."""
    types = [0, 1, 0, 1, 1, 0, 0, 1, 1, 0, 0, 0, 1, 0]
    children = [[1, 2, 3], [], [4, 5], [], [], [6, 7], [8, 9], [10], [11], [12], [13], [], [], []]
    return PlanarTree.from_children(types, children, horizon=5)


REFERENCE_CONTOUR = [
    (-1, 0), (0, 1), (1, 2), (0, 0), (1, 1), (2, 2), (1, 0), (2, 1), (3, 1), (4, 2), (5, 1), (4, 0),
    (3, 0), (4, 1), (5, 2), (4, 0), (3, 0), (2, 0), (3, 2), (4, 1), (5, 1), (4, 0), (3, 0), (2, 0),
    (1, 0), (0, 0), (1, 2), (0, 0), (-1, 0),
]


def labeled(states, horizon=None):
    lev, lab = zip(*states)
    return ContourPath("labeled", np.array(lev), np.array(lab), horizon=horizon)


# -- trees and codecs ------------------------------------------------------


def test_reference_tree_shape(reference_tree):
    assert reference_tree.size == 14 and reference_tree.height() == 5
    assert reference_tree.level_counts(2).sum(axis=1).tolist() == [1, 3, 2, 2, 3, 3]
    assert list(reference_tree.children(2)) == [4, 5]
    assert reference_tree.child_index(5) == 1


def test_reference_contour(reference_tree):
    path = tree_to_contour(reference_tree)
    assert path.states() == REFERENCE_CONTOUR
    assert len(path) == 2 * reference_tree.size + 1
    assert contour_to_tree(path) == reference_tree


def test_reference_jumping_contour(reference_tree):
    jc = tree_to_jumping(reference_tree)
    jumps = jc.steps[jc.steps > 0].tolist()
    # one jump per individual, of size equal to its life length
    assert jumps == [2, 2, 4, 2, 3, 1]
    assert np.all(jc.steps[jc.steps < 0] == -1)
    assert jc.levels[0] == -1 and jc.levels[-1] == -1
    for level in range(6):
        assert descents_from(jc, level) == reference_tree.level_counts(2)[level].sum()


def test_reference_individuals(reference_tree):
    inds = extract_individuals(reference_tree)
    assert [i.particles for i in inds] == [(0, 1), (2, 4), (3,), (5, 6, 8, 11), (7, 10, 13), (9, 12)]
    assert [i.censored for i in inds] == [False, False, False, True, True, True]
    assert inds[0].births_by_age == (2, 0)
    assert sum(i.life for i in inds) == reference_tree.size
    assert len(inds) == 1 + sum(sum(i.births_by_age) for i in inds)
    assert individuals_alive(inds, 5).tolist() == reference_tree.level_counts(2).sum(axis=1).tolist()


def test_reference_spine(reference_tree):
    sp = spinal_decompose(reference_tree)
    assert sp.ok
    assert sp.spine == (0, 2, 5, 6, 8, 11)
    assert sp.right_counts == (1, 0, 1, 1, 0)
    assert spinal_decompose(reference_tree, 6).status == "extinct"


def test_small_hand_contour():
    tree = PlanarTree.from_children([0, 1, 0, 1], [[1, 2], [], [3], []])
    expected = [(-1, 0), (0, 1), (1, 2), (0, 0), (1, 1), (2, 2), (1, 0), (0, 0), (-1, 0)]
    assert tree_to_contour(tree).states() == expected


def test_from_children_relabels():
    a = PlanarTree.from_children([5, 6, 7], [[2, 1], [], []])
    b = PlanarTree.from_children([5, 7, 6], [[1, 2], [], []])
    assert a == b
    with pytest.raises(InvalidArgumentError):
        PlanarTree.from_children([0, 0, 0], [[1], [], []])


@pytest.mark.parametrize("seed", range(5))
def test_codec_roundtrip_random(worked2, seed):
    rng = np.random.default_rng(seed)
    for _ in range(40):
        tree = simulate_bgw(worked2, 6, rng).tree
        path = tree_to_contour(tree)
        assert contour_to_tree(path) == tree
        assert tree_to_contour(contour_to_tree(path)) == path


@pytest.mark.parametrize(
    "states,horizon,match",
    [
        ([(-1, 0), (0, 1), (2, 1), (1, 0), (-1, 0)], None, "moves by"),
        ([(-1, 0), (0, 1), (1, 0), (0, 0), (-1, 0)], None, "up-step"),
        ([(-1, 0), (0, 1), (-1, 1)], None, "down-step"),
        ([(-1, 0), (0, 1), (-1, 0), (0, 1), (-1, 0)], None, "absorbed"),
        ([(-1, 0), (0, 1), (1, 1), (0, 0)], None, "ends before"),
        ([(-1, 0), (0, 1), (1, 1), (0, 0), (-1, 0)], 0, "horizon"),
        ([(0, 1), (-1, 0)], None, "start"),
    ],
)
def test_decode_errors(states, horizon, match):
    with pytest.raises(DecodeError, match=match):
        contour_to_tree(labeled(states, horizon))


# -- labeled chain ---------------------------------------------------------


def test_chain_kernel_rows(worked2):
    chain = LabeledContourChain(worked2)
    for i in range(3):
        law = chain.transition((2, i))
        assert sum(law.values()) == pytest.approx(1.0)
    assert chain.transition((3, 0))[(4, 1)] == pytest.approx(0.5 * 0.5)
    assert chain.transition((3, 0))[(2, 0)] == pytest.approx(0.5)
    assert chain.transition((3, 1))[(4, 2)] == pytest.approx(0.2)
    assert chain.transition((3, 2))[(2, 0)] == pytest.approx(0.7)
    assert chain.transition((-1, 0)) == {(-1, 0): 1.0}
    assert LabeledContourChain(worked2, horizon=3).transition((3, 1)) == {(2, 0): 1.0}


def test_chain_paths_decode(worked2):
    chain = LabeledContourChain(worked2, horizon=8)
    rng = np.random.default_rng(3)
    for _ in range(100):
        path = chain.sample_path(rng)
        tree = contour_to_tree(path)
        assert tree_to_contour(tree) == path


def test_chain_excursion_lengths_match_trees(worked2):
    n = 6
    chain = LabeledContourChain(worked2, horizon=n)
    rng = np.random.default_rng(11)
    from_chain = [len(chain.sample_path(rng)) // 2 for _ in range(4000)]
    from_tree = [simulate_bgw(worked2, n, rng).tree.size for _ in range(4000)]
    assert chi2_two_sample(from_chain, from_tree) > P_MIN


def test_chain_step_cap():
    t = ModelTriplet([[0.9]], [1.0], 3.0)
    path = LabeledContourChain(t).sample_path(np.random.default_rng(0), step_cap=50)
    assert path.truncated and len(path) == 50


# -- forward engines -------------------------------------------------------


def lf_total_pmf(gl, i, K):
    """P(Z^(n) 1 = k | Z^(0) = e_i) for k < K; the total given survival is 1 + geometric."""
    h0 = gl.h0n[i]
    q = gl.mn / (1.0 + gl.mn)
    k = np.arange(1, K)
    return np.concatenate([[h0], (1 - h0) * q ** (k - 1) / (1 + gl.mn)])


@pytest.mark.parametrize("n", [1, 3])
def test_bgw_totals_match_generation_law(worked2, n):
    rng = np.random.default_rng(100 + n)
    runs = [simulate_bgw(worked2, n, rng, start=0, record_tree=False) for _ in range(6000)]
    totals = [int(r.totals[n]) for r in runs]
    assert chi2_goodness(totals, lf_total_pmf(generation_law(worked2, n), 0, 12)) > P_MIN


def test_population_engine_matches_particle(left2):
    rng = np.random.default_rng(5)
    a = [int(simulate_bgw(left2, 4, rng, start=1, record_tree=False).totals[4]) for _ in range(4000)]
    b = [int(simulate_population(left2, 4, rng, start=1).totals[4]) for _ in range(4000)]
    assert chi2_two_sample(a, b) > P_MIN


def test_cmj_totals_match_bgw(worked2):
    life = life_law(worked2)
    rng = np.random.default_rng(8)
    n = 5
    a = [int(simulate_bgw(worked2, n, rng, record_tree=False).totals[n]) for _ in range(4000)]
    b = [int(simulate_cmj(life, worked2.m, n, rng).totals[n]) for _ in range(4000)]
    assert chi2_two_sample(a, b) > P_MIN


def test_individuals_alive_equals_population(worked2):
    rng = np.random.default_rng(9)
    for _ in range(50):
        tree = simulate_bgw(worked2, 7, rng).tree
        inds = extract_individuals(tree)
        assert individuals_alive(inds, 7).tolist() == tree.level_counts(2).sum(axis=1).tolist()


def test_conditional_mean_given_survival(left2):
    n = 5
    rng = np.random.default_rng(12)
    totals = np.array([simulate_bgw(left2, n, rng, start=0, record_tree=False).totals[n] for _ in range(8000)])
    alive = totals[totals > 0] - 1
    mn = generation_law(left2, n).mn
    se = alive.std(ddof=1) / math.sqrt(alive.size)
    assert abs(alive.mean() - mn) < 4 * se


def test_spine_right_counts_have_mean_m(left2):
    n = 4
    rng = np.random.default_rng(13)
    counts = []
    for _ in range(6000):
        sp = spinal_decompose(simulate_bgw(left2, n, rng).tree)
        if sp.ok:
            counts.extend(sp.right_counts)
    counts = np.array(counts)
    q = left2.m / (1 + left2.m)
    geo = (1 - q) * q ** np.arange(15)
    assert chi2_goodness(counts, geo) > P_MIN
    se = counts.std(ddof=1) / math.sqrt(counts.size)
    assert abs(counts.mean() - left2.m) < 4 * se


def test_population_cap_truncates():
    t = ModelTriplet([[1.0]], [1.0], 3.0)
    run = simulate_bgw(t, 50, np.random.default_rng(1), cap=200)
    assert run.truncated and run.tree is None
    run = simulate_population(t, 50, np.random.default_rng(1), start=0, cap=200)
    assert run.truncated
    assert simulate_cmj(LifeLaw([1.0], 3.0, GeometricTail(1.0)), 3.0, 50, np.random.default_rng(1), cap=200).truncated


def test_sample_life_inversion():
    d = np.array([0.8, 0.5, 0.2, 0.0])
    probs = np.array([0.2, 0.3, 0.3, 0.2])
    u = np.random.default_rng(0).random(20000)
    lives = np.array([sample_life(d, x) for x in u]) - 1
    assert chi2_goodness(lives, probs) > P_MIN
    assert sample_life(d, 0.0) == 4 and sample_life(d, 0.99) == 1


# -- jumping contour -------------------------------------------------------


def test_jumping_contour_descents_critical():
    life = LifeLaw([0.5], 1.0, GeometricTail(0.5))
    n = 4
    jc = JumpingContour(life, 1.0, horizon=n)
    rng = np.random.default_rng(21)
    desc = np.array([descents_from(jc.sample_path(rng), n) for _ in range(10000)])
    # critical single type: P(Z_n > 0) = 1/(1+n) and E Z_n = 1
    p = 1.0 / (1 + n)
    assert abs(np.mean(desc > 0) - p) < 4 * math.sqrt(p * (1 - p) / desc.size)
    assert abs(desc.mean() - 1.0) < 4 * desc.std(ddof=1) / math.sqrt(desc.size)


def test_jumping_contour_matches_tree_jumps(worked2):
    life = life_law(worked2)
    n = 5
    jc = JumpingContour(life, worked2.m, horizon=n)
    rng = np.random.default_rng(22)
    a = [len(jc.sample_path(rng)) for _ in range(4000)]
    b = [len(tree_to_jumping(simulate_bgw(worked2, n, rng).tree)) for _ in range(4000)]
    assert chi2_two_sample(a, b) > P_MIN


def test_jumping_contour_unbounded_and_drift():
    life = LifeLaw([0.5], 0.8, GeometricTail(0.5))
    jc = JumpingContour(life, 0.8)
    assert jc.drift < 0
    path = jc.sample_path(np.random.default_rng(2))
    assert path.levels[-1] == -1 and np.all(path.levels[1:-1] >= 0)
    with pytest.raises(InvalidArgumentError):
        JumpingContour(life, 0.0)


# -- reproducibility -------------------------------------------------------


def test_replicates_reproducible(worked2):
    fn = lambda rng: simulate_bgw(worked2, 6, rng, record_tree=False).totals.tolist()
    a = run_replicates(fn, 42, 30)
    assert a == run_replicates(fn, 42, 30)
    assert a == run_replicates(fn, 42, 30, workers=4)
    assert a != run_replicates(fn, 43, 30)
    with pytest.raises(InvalidArgumentError):
        run_replicates(fn, -1, 3)
