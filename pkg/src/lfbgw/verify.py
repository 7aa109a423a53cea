"""Self-consistency checks run by ``lfbgw verify`` on a single model."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import cmj, lf_law, spectral
from .errors import LFError
from .model import (
    ModelTriplet,
    check_irreducible_aperiodic,
    generation_laws,
    mean_matrix,
)

IDENTITY_TOL = 1e-8
COMPOSITION_TOL = 1e-9
BETA_TOL = 1e-10
LIMIT_TOL = 1e-6


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def _pgf_grid(dim: int, n_points: int = 5) -> list[np.ndarray]:
    rng = np.random.default_rng(12345)
    pts = [np.zeros(dim), np.full(dim, 0.5), np.ones(dim) * 0.99]
    pts += [rng.random(dim) for _ in range(n_points)]
    return pts


def check_composition(t: ModelTriplet, n_max: int = 4) -> Check:
    """phi_i^(n+1)(s) = phi_i(phi^(n)(s)) on a grid of s."""
    laws = list(generation_laws(t, n_max + 1))
    worst = 0.0
    for n in range(n_max):
        gl, nxt = laws[n], laws[n + 1]
        for s in _pgf_grid(t.dim):
            inner = np.array([lf_law.pgf(gl.law(j), s) for j in range(t.dim)])
            for i in range(t.dim):
                worst = max(worst, abs(lf_law.pgf(nxt.law(i), s) - lf_law.pgf(t.row_law(i), inner)))
    return Check("generation-law composition", worst <= COMPOSITION_TOL, f"max error {worst:.3g}")


def check_means(t: ModelTriplet, n_max: int = 10) -> Check:
    """Mean of LF(h_i^(n), g^(n), m^(n)) equals row i of M^n."""
    M = mean_matrix(t)
    P = np.eye(t.dim)
    worst = 0.0
    for gl in generation_laws(t, n_max):
        P = P @ M
        means = np.array([lf_law.mean(gl.law(i)) for i in range(t.dim)])
        worst = max(worst, float(np.abs(means - P).max() / max(1.0, np.abs(P).max())))
    return Check("generation-law means", worst <= COMPOSITION_TOL, f"max relative error {worst:.3g}")


def _s_with_mf(law: cmj.LifeLaw, target: float, s_max: float) -> float:
    lo, hi = 0.0, s_max
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        v = law.series(mid, 0)
        if v.finite and law.m * v.value < target:
            lo = mid
        else:
            hi = mid
    return lo


def check_mseries(t: ModelTriplet, life: cmj.LifeLaw, R: float) -> list[Check]:
    s = _s_with_mf(life, 0.5, R if math.isfinite(R) else 1e6)
    Ms = spectral.mseries(t, s)
    # partial sums converge like (s/R)^N
    ratio = s / R
    n_terms = int(min(10**5, max(50, math.ceil(math.log(1e-16) / math.log(ratio))))) if ratio > 0 else 1
    partial = spectral.mseries_partial(t, s, n_terms)
    err = float(np.abs(Ms - partial).max() / max(1.0, np.abs(Ms).max()))
    f = life.series(s, 0).value
    scalar = float(t.g @ Ms @ np.ones(t.dim))
    pred = (1.0 + f) / (1.0 - life.m * f)
    return [
        Check("power series of M vs partial sums", err <= IDENTITY_TOL, f"s={s:.6g}, relative error {err:.3g}"),
        Check("scalar generating function g M(s) 1", abs(scalar - pred) <= IDENTITY_TOL * pred, f"{scalar!r} vs {pred!r}"),
    ]


def verify_triplet(t: ModelTriplet, tol: float = IDENTITY_TOL) -> list[Check]:
    checks = [check_composition(t), check_means(t)]
    report = check_irreducible_aperiodic(t)
    checks.append(
        Check(
            "irreducible and aperiodic",
            report.ok,
            f"irreducible={report.irreducible}, aperiodic={report.aperiodic}, phantom={sorted(report.phantom)}",
        )
    )
    if not report.ok:
        return checks
    life = cmj.life_law(t)
    try:
        summary = spectral.classify(t, life=life)
    except LFError as exc:
        checks.append(Check("classification", False, str(exc)))
        return checks
    checks.append(Check("classification", True, f"{summary.criticality}, {summary.recurrence_short}"))
    sign_rho = np.sign(round(summary.rho - 1.0, 10))
    sign_mu = np.sign(round(summary.mu - 1.0, 10))
    expected = {"subcritical": -1, "critical": 0, "supercritical": 1}[summary.criticality]
    checks.append(
        Check("criticality vs rho and mu", sign_rho == expected == sign_mu, f"rho={summary.rho!r}, mu={summary.mu!r}")
    )
    checks += check_mseries(t, life, summary.R)
    if summary.positive:
        for name, val in summary.residuals.items():
            checks.append(Check(f"identity {name}", val <= tol, f"residual {val:.3g}"))
        b2 = spectral.beta_series(t, summary.R)
        rel = abs(b2 - summary.beta) / summary.beta
        checks.append(Check("mean age by direct series", rel <= BETA_TOL, f"{b2!r} vs {summary.beta!r}"))
        lim = spectral.verify_limit_matrix(t, summary, threshold=LIMIT_TOL)
        checks.append(
            Check(
                "R^n M^n -> u v",
                lim.first_below is not None,
                f"below {LIMIT_TOL:g} from n={lim.first_below}, final error {lim.final_error:.3g}",
            )
        )
    return checks


def verify_life_law(life: cmj.LifeLaw) -> list[Check]:
    res = cmj.malthus(life)
    checks = [Check("Malthusian parameter", res.status == "ok", f"alpha={res.alpha!r}, status={res.status}")]
    if res.status != "ok":
        return checks
    if math.isfinite(res.alpha):
        resid = abs(life.m * life.series(res.R, 0).value - 1.0)
        checks.append(Check("m f(exp(-alpha)) = 1", resid <= 1e-10, f"residual {resid:.3g}"))
        if math.isfinite(res.beta):
            reg = cmj.regeneration_law(life, res)
            checks.append(
                Check("regeneration law mass", abs(reg.tail_mass) <= 1e-10, f"missing mass {reg.tail_mass:.3g}")
            )
            checks.append(
                Check("regeneration mean = beta", abs(reg.mean - res.beta) <= 1e-6 * res.beta, f"{reg.mean!r}")
            )
    if math.isfinite(life.mu):
        drift = life.drift
        agree = (drift > 0) == (life.mu > 1)
        checks.append(Check("contour drift sign vs mu", agree, f"drift={drift!r}, mu={life.mu!r}"))
    return checks
