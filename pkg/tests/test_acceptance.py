"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the report lines.
"""

import io
import math
import time

import numpy as np
import pytest
from conftest import MODELS, TRIPLET_FILES, load
from oracles import chi2_two_sample, generation_series
from scipy.special import zeta
from test_sim import REFERENCE_CONTOUR, labeled, reference_tree  # noqa: F401

from lfbgw import cli, lf_law
from lfbgw.cmj import example1_law, life_law, malthus
from lfbgw.lf_law import OrderedSampler
from lfbgw.limits import adaptive_value, mn_limit, normalized_mn, yaglom_law
from lfbgw.model import ModelTriplet, generation_laws, scaled_generations
from lfbgw.sim import (
    PlanarTree,
    contour_to_tree,
    extract_individuals,
    individuals_alive,
    simulate_bgw,
    simulate_cmj,
    tree_to_contour,
)
from lfbgw.spectral import (
    CRITICAL,
    SUPERCRITICAL,
    classify,
    renewal_limit,
    scaled_newborn_means,
    verify_limit_matrix,
)


@pytest.fixture
def report(capsys):
    def emit(k, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {k}: {detail}")
        assert ok, detail

    return emit


def test_c01_generation_law_vs_series_oracle(report, worked2):
    start = time.perf_counter()
    D = 40
    oracle = generation_series(worked2.H, worked2.g, worked2.m, 4, D)
    worst = 0.0
    for n, gl in enumerate(generation_laws(worked2, 4), start=1):
        for i in range(2):
            law = gl.law(i)
            coef = oracle[n - 1][i]
            for k1 in range(D + 1):
                for k2 in range(D + 1 - k1):
                    worst = max(worst, abs(lf_law.pmf(law, [k1, k2]) - coef[k1, k2]))
    elapsed = time.perf_counter() - start
    report(1, worst <= 1e-10 and elapsed < 10, f"max pmf error {worst:.3g} over total degree <= {D}, {elapsed:.2f} s")


def test_c02_critical_single_type(report, critical1):
    start = time.perf_counter()
    worst_m = worst_s = 0.0
    for gl in generation_laws(critical1, 1000):
        worst_m = max(worst_m, abs(gl.mn - gl.n))
        worst_s = max(worst_s, abs(1.0 - gl.h0n[0] - 1.0 / (1 + gl.n)))
    rng = np.random.default_rng(20240917)
    samplers = [OrderedSampler(critical1.row_law(0))]
    reps = 10**5
    alive = sum(
        int(simulate_bgw(critical1, 10, rng, record_tree=False, samplers=samplers).totals[10] > 0) for _ in range(reps)
    )
    p = 1 / 11
    z = (alive / reps - p) / math.sqrt(p * (1 - p) / reps)
    elapsed = time.perf_counter() - start
    ok = worst_m <= 1e-12 and worst_s <= 1e-12 and abs(z) < 4 and elapsed < 30
    report(2, ok, f"|m_n - n| <= {worst_m:.3g}, survival error {worst_s:.3g}, MC z-score {z:.2f}, {elapsed:.1f} s")


def test_c03_spectral_identities(report):
    worst = {}
    for name in TRIPLET_FILES:
        s = classify(load(name))
        if s.positive:
            worst[name] = max(s.residuals.values())
    report(3, max(worst.values()) <= 1e-8, f"max residual {max(worst.values()):.3g} over {len(worst)} models")


def test_c04_row_sum_and_left_eigen_closed_forms(report, left2):
    rng = np.random.default_rng(4)
    err_v = float(np.abs(classify(left2).v - left2.g).max())
    err_u = err_rho = err_beta = 0.0
    models = [load("two_type_rowsum"), load("three_type_rowsum")]
    for _ in range(5):
        a = int(rng.integers(2, 5))
        r = float(rng.uniform(0.1, 0.9))
        H = rng.random((a, a))
        H *= r / H.sum(axis=1, keepdims=True)
        g = rng.random(a)
        models.append(ModelTriplet(H, g / g.sum(), float(rng.uniform(0.2, 3.0))))
    for t in models:
        r = float(t.H.sum(axis=1)[0])
        s = classify(t)
        err_u = max(err_u, float(np.abs(s.u - 1).max()))
        err_rho = max(err_rho, abs(s.rho - (1 + t.m) * r))
        err_beta = max(err_beta, abs(s.beta - (1 + t.m) / t.m))
    ok = max(err_v, err_u, err_rho, err_beta) <= 1e-10
    report(4, ok, f"v-g {err_v:.2g}, u-1 {err_u:.2g}, rho {err_rho:.2g}, beta {err_beta:.2g}")


def test_c05_example1_trichotomy(report):
    checks = []
    for gamma, m in ((math.log(2), 1.0), (0.5, 3.0), (1.2, 0.7)):
        law, pred = example1_law(1.0, gamma, 0.0, m)
        res = malthus(law)
        checks.append(pred.branch == "A>1/m" and abs(res.alpha - (math.log1p(m) - gamma)) <= 1e-10)
    law, pred = example1_law(1.0, 0.5, 2.0, 1.0)
    res = malthus(law)
    checks.append(pred.branch == "A>1/m" and math.isfinite(res.alpha) and res.alpha > -0.5)
    for k in (1.5, 3.0):
        law, pred = example1_law(1.0, 1.0, k, 1 / zeta(k))
        res = malthus(law)
        finite = math.isfinite(res.beta)
        checks.append(pred.branch == "A=1/m" and abs(res.alpha + 1.0) <= 1e-10 and finite == (k > 2))
        if finite:
            checks.append(abs(res.beta - zeta(k - 1) / zeta(k)) <= 1e-10 * res.beta)
    law, pred = example1_law(1.0, 1.0, 1.5, 0.2)
    res = malthus(law)
    checks.append(pred.branch == "A<1/m" and res.alpha == -math.inf)
    report(5, all(checks), f"{sum(checks)}/{len(checks)} branch and closed-form checks")


def _first_below(seq, level):
    idx = np.flatnonzero(np.asarray(seq) < level)
    return int(idx[0]) if idx.size else None


def test_c06_limit_matrix(report):
    firsts = {}
    for name in TRIPLET_FILES:
        t = load(name)
        s = classify(t)
        if s.positive:
            firsts[name] = verify_limit_matrix(t, s, n_max=500).first_below
    positive_ok = all(v is not None for v in firsts.values())
    # R-null: d_n = n^-1.1 e^-n with m = 1/zeta(1.1); transient: A < 1/m
    null, _ = example1_law(1.0, 1.0, 1.1, 1 / zeta(1.1))
    below, _ = example1_law(1.0, 0.5, 1.5, 0.1)
    n_null = _first_below(scaled_newborn_means(null, malthus(null).R, 5000), 1e-4)
    n_below = _first_below(scaled_newborn_means(below, malthus(below).R, 5000), 1e-4)
    ok = positive_ok and n_null is not None and n_below is not None
    report(6, ok, f"R-positive first n below 1e-6: {max(firsts.values())}; R-null below 1e-4 at n={n_null}; "
           f"transient at n={n_below}")


def test_c07_yaglom(report, worked2):
    # single type: m^(n) = 5 (1 - 0.8^n), so the error at n = 60 is 5 * 0.8^60 = 7.7e-6
    t = load("single_subcritical")
    s = classify(t)
    y = yaglom_law(t, s)
    first = None
    for sg in scaled_generations(t, s.R, 60):
        mn = sg.scaled_mn * s.rho**sg.n
        err = max(abs(mn - y.m), abs(sg.conditional_h[0, 0] - 1.0), abs(sg.gn[0] - 1.0))
        if err <= 1e-6 and first is None:
            first = sg.n
    single_ok = first is not None and abs(y.m - 5) <= 1e-12
    s2 = classify(worked2)
    y2 = yaglom_law(worked2, s2)
    first2 = None
    for sg in scaled_generations(worked2, s2.R, 60):
        mn = sg.scaled_mn * s2.rho**sg.n
        err = max(abs(mn - y2.m), float(np.abs(sg.conditional_h - y2.h).max()), float(np.abs(sg.gn - y2.g).max()))
        if err <= 1e-6 and first2 is None:
            first2 = sg.n
    report(7, single_ok and first2 is not None,
           f"single type within 1e-6 by n={first} (error at 60: {5 * 0.8**60:.2g}); two-type by n={first2}")


def test_c08_growth_asymptotics(report):
    details = []
    ok = True
    for name in TRIPLET_FILES:
        t = load(name)
        s = classify(t)
        if s.criticality not in (CRITICAL, SUPERCRITICAL):
            continue
        n, val = adaptive_value(lambda n, t=t, s=s: normalized_mn(t, s, n), n_cap=10**4)
        rel = abs(val / mn_limit(s) - 1)
        ok &= rel < 0.01 and n <= 10**4
        details.append(f"{name} {rel:.1e}@{n}")
    report(8, ok and len(details) >= 2, "; ".join(details))


def _random_tree(rng, max_nodes=1000):
    """Critical geometric Galton-Watson tree in breadth-first order, stopped at max_nodes."""
    types = [int(rng.integers(3))]
    children = [[]]
    head = 0
    while head < len(types) and len(types) < max_nodes:
        k = min(int(rng.geometric(0.5)) - 1, max_nodes - len(types))
        for _ in range(k):
            children[head].append(len(types))
            types.append(int(rng.integers(3)))
            children.append([])
        head += 1
    return PlanarTree.from_children(types, children)


def test_c09_contour_codec(report, reference_tree):  # noqa: F811
    rng = np.random.default_rng(9)
    sizes = []
    ok = True
    for _ in range(1000):
        tree = _random_tree(rng)
        sizes.append(tree.size)
        ok &= contour_to_tree(tree_to_contour(tree)) == tree
    fig = tree_to_contour(reference_tree).states() == REFERENCE_CONTOUR
    fig &= contour_to_tree(labeled(REFERENCE_CONTOUR, 5)) == reference_tree
    report(9, ok and fig, f"1000 trees (max size {max(sizes)}) roundtrip={ok}, reference fixture={fig}")


def test_c10_cmj_bgw(report, left2):
    start = time.perf_counter()
    rng = np.random.default_rng(10)
    identity = True
    for _ in range(10**4):
        tree = simulate_bgw(left2, 6, rng).tree
        inds = extract_individuals(tree)
        identity &= sum(i.life for i in inds) == tree.size
        identity &= np.array_equal(individuals_alive(inds, 6), tree.level_counts(2).sum(axis=1))
    samplers = [OrderedSampler(left2.row_law(i)) for i in range(2)]
    life = life_law(left2)
    reps = 10**5
    a = [int(simulate_bgw(left2, 6, rng, record_tree=False, samplers=samplers).totals[6]) for _ in range(reps)]
    b = [int(simulate_cmj(life, left2.m, 6, rng).totals[6]) for _ in range(reps)]
    p = chi2_two_sample(a, b)
    elapsed = time.perf_counter() - start
    report(10, identity and p > 1e-3 and elapsed < 120,
           f"count identity on 10^4 trees={identity}, chi-square p={p:.3g}, {elapsed:.1f} s")


def test_c11_renewal(report):
    fixtures = [
        ([0.0, 1.0], [1.0], 1.0),
        ([0.0] + [0.5**k for k in range(1, 80)], [1.0], 0.5),
        ([0.0, 0.5, 0.5], [1.0, 1.0], 4 / 3),
    ]
    errs = []
    for a, b, limit in fixtures:
        res = renewal_limit(a, b, n_terms=200)
        errs.append(max(abs(res.limit - limit), abs(res.t[200] - limit)))
    report(11, max(errs) <= 1e-8, "errors " + ", ".join(f"{e:.2g}" for e in errs))


def test_c12_reproducibility(report, tmp_path):
    args = ["simulate", "--model", str(MODELS / "three_type_rowsum.lfm"), "--n", "8", "--reps", "500", "--seed", "12"]
    outs = []
    for k, workers in enumerate((1, 1, 4)):
        cli.main([*args, "--workers", str(workers), "--out", str(tmp_path / str(k))], stdout=io.StringIO())
        outs.append((tmp_path / str(k) / "simulate.csv").read_bytes())
    ok = outs[0] == outs[1] == outs[2] and len(outs[0]) > 0
    report(12, ok, f"three runs (workers 1, 1, 4) byte-identical={ok}, {len(outs[0])} bytes")
