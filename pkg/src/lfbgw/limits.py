"""Limit laws of positively recurrent linear-fractional processes.

Subcritical processes have an LF Yaglom limit. Critical processes conditioned
on survival grow linearly with an exponential limit. Supercritical processes
grow like rho^n, also with an exponential limit. The scalar CMJ versions
follow by averaging over the newborn type law g.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InvalidArgumentError
from .lf_law import LFLaw
from .model import ModelTriplet, mean_matrix, scaled_generations
from .spectral import CRITICAL, SUBCRITICAL, SUPERCRITICAL, SpectralSummary

VW_TOL = 1e-12
SUM_TOL = 1e-10
ADAPTIVE_REL = 1e-3
ADAPTIVE_CAP = 10**4


@dataclass(frozen=True, eq=False)
class YaglomLaw:
    """Limit law LF(h~, g~, m~) of Z^(n) given survival, subcritical case."""

    law: LFLaw

    @property
    def h(self) -> np.ndarray:
        return self.law.h

    @property
    def g(self) -> np.ndarray:
        return self.law.g

    @property
    def m(self) -> float:
        return self.law.m


@dataclass(frozen=True, eq=False)
class ExponentialLimit:
    """Exponential limit of Z^(n) w / scale(n) given survival.

    ``scaling`` is ``"linear"`` (scale n) or ``"geometric"`` (scale rho^n);
    the limit tail is exp(-rate x).
    """

    c_w: float
    rate: float
    scaling: str
    w: np.ndarray
    survival: np.ndarray

    @property
    def mean(self) -> float:
        return 1.0 / self.rate

    def tail(self, x):
        return np.exp(-self.rate * np.asarray(x, dtype=float))


def _require(summary: SpectralSummary, criticality: str):
    if not summary.positive:
        raise DomainError(f"limit laws need an R-positive process, got {summary.recurrence}")
    if summary.criticality != criticality:
        raise DomainError(f"expected a {criticality} process, got {summary.criticality}")


def yaglom_law(t: ModelTriplet, summary: SpectralSummary) -> YaglomLaw:
    """Yaglom limit LF(h~, g~, m~) with

    m~ = m lam / (1 - mu),  h~ = (1+m)/(1-mu) v - m g (I-M)^-1,
    g~ = (1-mu)/lam g (I-M)^-1.
    """
    _require(summary, SUBCRITICAL)
    M = mean_matrix(t)
    x = np.linalg.solve((np.eye(t.dim) - M).T, t.g)
    lam, mu = summary.lam, summary.mu
    m_tilde = t.m * lam / (1.0 - mu)
    h_tilde = (1.0 + t.m) / (1.0 - mu) * summary.v - t.m * x
    g_tilde = (1.0 - mu) / lam * x
    for name, vec in (("h~", h_tilde), ("g~", g_tilde)):
        if abs(vec.sum() - 1.0) > SUM_TOL:
            raise ArithmeticError(f"{name} sums to {vec.sum()!r}, expected 1")
    h_tilde = np.clip(h_tilde, 0.0, None)
    g_tilde = np.clip(g_tilde, 0.0, None)
    return YaglomLaw(LFLaw(h_tilde / h_tilde.sum(), g_tilde / g_tilde.sum(), m_tilde, h0=0.0))


def subcritical_survival_asym(summary: SpectralSummary, n: int) -> np.ndarray:
    """rho^n (1+m)^-1 (1-mu) u, the asymptote of P(Z^(n) != 0) per initial type."""
    _require(summary, SUBCRITICAL)
    return summary.rho**n * (1.0 - summary.mu) / (1.0 + summary.m) * summary.u


def _vw(summary: SpectralSummary, w) -> tuple[np.ndarray, float]:
    w = np.asarray(w, dtype=float).reshape(-1)
    if w.size != summary.v.size:
        raise InvalidArgumentError(f"w has {w.size} entries, expected {summary.v.size}")
    vw = float(summary.v @ w)
    if vw <= VW_TOL:
        raise DomainError(f"v.w = {vw!r} must be positive")
    return w, vw


def critical_limit(summary: SpectralSummary, w=None) -> ExponentialLimit:
    """Z^(n) w / n given survival tends to an exponential law with mean c_w = (1+m)/beta v.w.

    ``survival`` holds the limit of n P(Z^(n) != 0), namely beta u / (1+m).
    """
    _require(summary, CRITICAL)
    w, vw = _vw(summary, np.ones_like(summary.v) if w is None else w)
    c_w = (1.0 + summary.m) / summary.beta * vw
    survival = summary.beta / (1.0 + summary.m) * summary.u
    return ExponentialLimit(c_w, 1.0 / c_w, "linear", w, survival)


def supercritical_limit(summary: SpectralSummary, w=None) -> ExponentialLimit:
    """P(Z^(n) w > rho^n x | survival) -> exp(-x (rho-1) / c_w).

    ``survival`` holds lim P(Z^(n) != 0) = (rho-1) beta u / (1+m).
    """
    _require(summary, SUPERCRITICAL)
    w, vw = _vw(summary, np.ones_like(summary.v) if w is None else w)
    c_w = (1.0 + summary.m) / summary.beta * vw
    rho = summary.rho
    survival = (rho - 1.0) * summary.beta / (1.0 + summary.m) * summary.u
    return ExponentialLimit(c_w, (rho - 1.0) / c_w, "geometric", w, survival)


@dataclass(frozen=True, eq=False)
class CMJAsymptotics:
    """Scalar survival asymptote and conditional limit for a CMJ started by a newborn.

    ``survival(n)`` approximates P(population at time n > 0).
    Subcritical: ``conditional(k)`` is the limiting P(size = k | survival).
    Otherwise: ``conditional(x)`` is the limiting tail of size / n (critical)
    or size / rho^n (supercritical).
    """

    case: str
    survival: Callable[[int], float]
    conditional: Callable
    m_limit: float | None = None


def cmj_asymptotics(summary: SpectralSummary) -> CMJAsymptotics:
    if not summary.positive:
        raise DomainError(f"CMJ asymptotics need an R-positive process, got {summary.recurrence}")
    a, b, m, mu, lam = summary.alpha, summary.beta, summary.m, summary.mu, summary.lam
    if summary.criticality == SUBCRITICAL:
        # total size of the LF Yaglom law is 1 + Geometric(mean m~)
        m_tilde = m * lam / (1.0 - mu)

        def pmf(k):
            k = np.asarray(k)
            return np.where(k >= 1, m_tilde ** (k - 1.0) / (1.0 + m_tilde) ** k, 0.0)

        return CMJAsymptotics(SUBCRITICAL, lambda n: math.exp(a * n) * (1.0 - mu) / (m * b), pmf, m_tilde)
    if summary.criticality == CRITICAL:
        return CMJAsymptotics(
            CRITICAL,
            lambda n: 1.0 / (n * m),
            lambda x: np.exp(-b * np.asarray(x, dtype=float) / (1.0 + m)),
        )
    ea = math.exp(a)
    return CMJAsymptotics(
        SUPERCRITICAL,
        lambda n: (ea - 1.0) / m,
        lambda x: np.exp(-np.asarray(x, dtype=float) * b * (ea - 1.0) / (1.0 + m)),
    )


# -- exact sequences and adaptive comparison -------------------------------


def normalized_mn(t: ModelTriplet, summary: SpectralSummary, n: int) -> float:
    """m^(n)/n when critical, rho^-n m^(n) when supercritical, m^(n) otherwise."""
    sg = None
    for sg in scaled_generations(t, summary.R, n):
        pass
    if summary.criticality == CRITICAL:
        return sg.scaled_mn / n
    if summary.criticality == SUPERCRITICAL:
        return sg.scaled_mn
    return sg.scaled_mn * math.exp(-n * math.log(summary.R))


def mn_limit(summary: SpectralSummary) -> float:
    """Predicted limit of :func:`normalized_mn`."""
    if summary.criticality == CRITICAL:
        return (1.0 + summary.m) / summary.beta
    if summary.criticality == SUPERCRITICAL:
        return (1.0 + summary.m) / (summary.beta * (summary.rho - 1.0))
    raise DomainError("m^(n) stays bounded in the subcritical case")


def adaptive_value(
    fn: Callable[[int], float], n0: int = 16, rel_tol: float = ADAPTIVE_REL, n_cap: int = ADAPTIVE_CAP
) -> tuple[int, float]:
    """Double n until fn(n) changes by less than ``rel_tol`` relatively, capped at ``n_cap``."""
    n, prev = n0, fn(n0)
    while n < n_cap:
        n = min(2 * n, n_cap)
        cur = fn(n)
        if abs(cur - prev) <= rel_tol * abs(prev):
            return n, cur
        prev = cur
    return n, prev
