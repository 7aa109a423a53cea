"""Criticality and recurrence classification of the mean matrix M.

The convergence parameter R, the eigenvectors u (right, reproductive values)
and v (left, stable type distribution) come from explicit power series in
R H rather than from a generic eigensolver. Each series is summed with a
certified tail bound: once some power (R H)^p is a strict contraction, the
remainder after a window of p terms is bounded geometrically.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from . import cmj
from .cmj import LifeLaw, MalthusResult
from .errors import (
    DomainError,
    InvalidArgumentError,
    PreconditionError,
    SeriesDivergenceError,
)
from .model import ModelTriplet, check_irreducible_aperiodic, mean_matrix

CRITICAL_TOL = 1e-10
IDENTITY_TOL = 1e-8
SERIES_TOL = 1e-15
MAX_CONTRACTION_POWER = 2**24
MAX_TERMS = 10**6

SUBCRITICAL, CRITICAL, SUPERCRITICAL = "subcritical", "critical", "supercritical"
R_TRANSIENT, R_NULL, R_POSITIVE = "R-transient", "R-null-recurrent", "R-positive-recurrent"


# -- certified power series ------------------------------------------------


def _contraction(A: np.ndarray, ord_) -> tuple[int, float]:
    """Smallest p = 2^j with ||A^p|| < 1 in the given operator norm."""
    P, p = A, 1
    with np.errstate(over="ignore", invalid="ignore"):
        while True:
            q = float(np.linalg.norm(P, ord_))
            if q < 1.0:
                return p, q
            if p >= MAX_CONTRACTION_POWER or not math.isfinite(q):
                raise SeriesDivergenceError("no power of the series ratio matrix is a contraction")
            P = P @ P
            p *= 2


def power_sum(
    A: np.ndarray,
    x0: np.ndarray,
    side: str = "right",
    weight: int = 0,
    offset: int = 0,
    tol: float = SERIES_TOL,
) -> tuple[np.ndarray, float]:
    """Sum_{j>=0} (offset+j)^weight * term_j with term_j = A^j x0 (right) or x0 A^j (left).

    Returns ``(total, bound)`` where ``bound`` certifies the norm of the
    omitted remainder (infinity norm for right action, 1-norm for left).
    """
    if side not in ("right", "left"):
        raise InvalidArgumentError("side must be 'right' or 'left'")
    ord_ = np.inf if side == "right" else 1
    p, q = _contraction(A, ord_)

    def vnorm(x):
        if x.ndim == 1:
            return float(np.abs(x).max() if side == "right" else np.abs(x).sum())
        return float(np.linalg.norm(x, ord_))

    def wgt(n):
        return 1.0 if weight == 0 else float(n) ** weight

    total = np.zeros_like(x0, dtype=float)
    x = np.array(x0, dtype=float)
    window = []
    for j in range(MAX_TERMS):
        n = offset + j
        total += wgt(n) * x
        window.append((n, vnorm(x)))
        if len(window) > p:
            window.pop(0)
        if len(window) == p:
            if weight == 0:
                bound = sum(nx for _, nx in window) / (1.0 - q)
            else:
                bound = sum(nx * (k / (1.0 - q) + p * q / (1.0 - q) ** 2) for k, nx in window)
            scale = vnorm(total)
            if bound == 0.0 or bound <= tol * scale:
                return total, bound
        x = A @ x if side == "right" else x @ A
    raise SeriesDivergenceError(f"series not certified after {MAX_TERMS} terms")


def h_series(H: np.ndarray, s: float) -> tuple[np.ndarray, float]:
    """H(s) = sum_{k>=0} s^k H^k with a certified bound on the omitted part."""
    return power_sum(s * H, np.eye(H.shape[0]), side="right")


# -- eigenvectors ----------------------------------------------------------


def eigen_u(t: ModelTriplet, R: float, beta: float) -> np.ndarray:
    """Right eigenvector u = (1+m)/beta * sum_{k>=1} R^k H^k 1."""
    if not (math.isfinite(beta) and beta > 0):
        raise DomainError("u needs a finite mean age at childbearing")
    RH = R * t.H
    total, _ = power_sum(RH, RH.sum(axis=1), side="right")
    return (1.0 + t.m) / beta * total


def eigen_v(t: ModelTriplet, R: float) -> np.ndarray:
    """Left eigenvector v = m/(1+m) * sum_{k>=0} R^k g H^k, a probability vector."""
    total, _ = power_sum(R * t.H, t.g, side="left")
    return t.m / (1.0 + t.m) * total


def beta_series(t: ModelTriplet, R: float) -> float:
    """Mean age at childbearing recomputed as m sum_{n>=1} n R^n g H^n 1."""
    RH = R * t.H
    total, _ = power_sum(RH, t.g @ RH, side="left", weight=1, offset=1)
    return t.m * float(total.sum())


# -- classification --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SpectralSummary:
    """Convergence parameter, eigenvectors and the double classification."""

    R: float
    rho: float
    alpha: float
    beta: float
    Rf: float
    m: float
    lam: float
    mu: float
    criticality: str
    recurrence: str
    u: np.ndarray | None = None
    v: np.ndarray | None = None
    residuals: dict = field(default_factory=dict)

    @property
    def positive(self) -> bool:
        return self.recurrence == R_POSITIVE

    @property
    def recurrence_short(self) -> str:
        return {R_TRANSIENT: "R-transient", R_NULL: "R-null", R_POSITIVE: "R-positive"}[self.recurrence]


def criticality_of(alpha: float, R: float) -> str:
    if alpha == -math.inf:
        if abs(R - 1.0) <= CRITICAL_TOL:
            return CRITICAL
        return SUBCRITICAL if R > 1.0 else SUPERCRITICAL
    if abs(alpha) <= CRITICAL_TOL:
        return CRITICAL
    return SUBCRITICAL if alpha < 0 else SUPERCRITICAL


def recurrence_of(res: MalthusResult) -> str:
    if res.alpha == -math.inf:
        return R_TRANSIENT
    return R_POSITIVE if math.isfinite(res.beta) else R_NULL


def classify_life(life: LifeLaw) -> tuple[MalthusResult, str, str]:
    """Criticality and recurrence class of a (possibly countable) life law.

    Works directly on the CMJ description, so it covers countable-type
    models whose finite age embeddings are reducible.
    """
    res = cmj.malthus(life)
    if res.status != "ok":
        raise PreconditionError(f"Malthusian parameter is {res.status}", diagnostics={"status": res.status})
    return res, criticality_of(res.alpha, res.R), recurrence_of(res)


def identity_residuals(t: ModelTriplet, R: float, beta: float, u: np.ndarray, v: np.ndarray) -> dict:
    """Sup-norm residuals of every eigen-identity and normalization."""
    M = mean_matrix(t)
    return {
        "RMu-u": float(np.abs(R * (M @ u) - u).max()),
        "RvM-v": float(np.abs(R * (v @ M) - v).max()),
        "vu-1": abs(float(v @ u) - 1.0),
        "v1-1": abs(float(v.sum()) - 1.0),
        "gu-(1+m)/(m beta)": abs(float(t.g @ u) - (1.0 + t.m) / (t.m * beta)),
    }


def classify(t: ModelTriplet, res: MalthusResult | None = None, life: LifeLaw | None = None) -> SpectralSummary:
    """Classify ``t`` by criticality and by R-transience / null / positive recurrence.

    ``res`` defaults to the Malthusian parameter of the associated CMJ life
    law; pass it (and ``life``) to reuse an earlier computation.

    Raises
    ------
    PreconditionError
        If M is reducible or periodic, or the Malthusian parameter is undecidable.
    """
    report = check_irreducible_aperiodic(t)
    if not report.ok:
        raise PreconditionError(
            "classification needs an irreducible aperiodic mean matrix",
            diagnostics={
                "irreducible": report.irreducible,
                "aperiodic": report.aperiodic,
                "phantom": sorted(report.phantom),
                "zero_rows": list(report.zero_rows),
                "periods": list(report.component_periods),
            },
        )
    if life is None:
        life = cmj.life_law(t)
    if res is None:
        res = cmj.malthus(life)
    if res.status != "ok":
        raise PreconditionError(f"Malthusian parameter is {res.status}", diagnostics={"status": res.status})
    alpha, R, beta = res.alpha, res.R, res.beta
    crit, rec = criticality_of(alpha, R), recurrence_of(res)
    u = v = None
    residuals = {}
    if rec == R_POSITIVE:
        u = eigen_u(t, R, beta)
        v = eigen_v(t, R)
        residuals = identity_residuals(t, R, beta, u, v)
    return SpectralSummary(
        R=R,
        rho=1.0 / R,
        alpha=alpha,
        beta=beta,
        Rf=res.Rf,
        m=t.m,
        lam=life.lam,
        mu=life.mu,
        criticality=crit,
        recurrence=rec,
        u=u,
        v=v,
        residuals=residuals,
    )


# -- power series of M and renewal utilities -------------------------------


def mseries(t: ModelTriplet, s: float) -> np.ndarray:
    """M(s) = sum_n s^n M^n through H(s); an all-inf matrix when m f(s) >= 1.

    M(s) = H(s) + m / (1 - m f(s)) (H(s) - I) 1 g H(s), f(s) = g (H(s) - I) 1.
    """
    if s < 0:
        raise InvalidArgumentError("s must be nonnegative")
    a = t.dim
    if s == 0:
        return np.eye(a)
    try:
        Hs, _ = h_series(t.H, s)
    except SeriesDivergenceError:
        return np.full((a, a), np.inf)
    col = (Hs - np.eye(a)).sum(axis=1)
    f = float(t.g @ col)
    if t.m * f >= 1.0:
        return np.full((a, a), np.inf)
    return Hs + t.m / (1.0 - t.m * f) * np.outer(col, t.g @ Hs)


def mseries_partial(t: ModelTriplet, s: float, n_terms: int) -> np.ndarray:
    """Brute-force partial sum sum_{n<=N} s^n M^n."""
    M = s * mean_matrix(t)
    P = np.eye(t.dim)
    out = P.copy()
    for _ in range(n_terms):
        P = P @ M
        out += P
    return out


@dataclass(frozen=True, eq=False)
class RenewalResult:
    """Renewal sequence t_n and its predicted limit B(1)/A'(1)."""

    limit: float
    t: np.ndarray
    a_mean: float
    b_total: float


def _as_array(seq, n_terms):
    if callable(seq):
        return np.array([float(seq(n)) for n in range(n_terms + 1)])
    arr = np.zeros(n_terms + 1)
    seq = np.asarray(seq, dtype=float)
    k = min(seq.size, n_terms + 1)
    arr[:k] = seq[:k]
    return arr


def renewal_limit(
    a_seq: Sequence[float] | Callable[[int], float],
    b_seq: Sequence[float] | Callable[[int], float],
    n_terms: int = 200,
    a_mean: float | None = None,
    b_total: float | None = None,
    check_mass: bool = True,
) -> RenewalResult:
    """Solve t_n = b_n + sum_{k<=n} a_k t_{n-k} and return the limit B(1)/A'(1).

    ``a_seq`` is a probability sequence on {0, 1, ...}, ``b_seq`` nonnegative
    and summable; either may be a callable n -> value. ``a_mean`` overrides
    A'(1) (pass ``inf`` for an infinite-mean law, whose limit is 0).
    """
    a = _as_array(a_seq, n_terms)
    b = _as_array(b_seq, n_terms)
    if np.any(a < 0) or np.any(b < 0):
        raise InvalidArgumentError("renewal sequences must be nonnegative")
    if check_mass and a_mean is None and abs(a.sum() - 1.0) > 1e-10:
        raise InvalidArgumentError(f"a must be a probability sequence (sum={a.sum()!r})")
    support = np.flatnonzero(a[1:] > 0) + 1
    if support.size == 0 or reduce(math.gcd, support.tolist()) != 1:
        raise PreconditionError("the renewal law a is periodic", diagnostics={"support": support[:20].tolist()})
    if a[0] >= 1.0:
        raise InvalidArgumentError("a_0 must be < 1")
    mean = float(np.arange(a.size) @ a) if a_mean is None else float(a_mean)
    btot = float(b.sum()) if b_total is None else float(b_total)
    t = np.zeros(n_terms + 1)
    rev_a = a[1:]
    for n in range(n_terms + 1):
        acc = b[n] + float(rev_a[:n] @ t[n - 1 :: -1][:n]) if n else b[0]
        t[n] = acc / (1.0 - a[0])
    limit = 0.0 if math.isinf(mean) else btot / mean
    return RenewalResult(limit, t, mean, btot)


def scaled_newborn_means(life: LifeLaw, R: float, n_max: int) -> np.ndarray:
    """R^n m_11^(n) for the (countable) age-structure embedding of ``life``, n = 0..n_max.

    Newborn means obey B_n = m sum_{k=1}^n d_k B_{n-k}, so the scaled sequence
    solves a (possibly defective) renewal equation with a_k = m d_k R^k.
    """
    log_d = life.log_d_upto(n_max)
    k = np.arange(1, n_max + 1, dtype=float)
    a = np.zeros(n_max)
    pos = np.isfinite(log_d)
    a[pos] = life.m * np.exp(log_d[pos] + k[pos] * math.log(R))
    t = np.zeros(n_max + 1)
    t[0] = 1.0
    for n in range(1, n_max + 1):
        t[n] = float(a[:n] @ t[n - 1 :: -1])
    return t


@dataclass(frozen=True, eq=False)
class LimitMatrixReport:
    """Sup-norm distance of R^n M^n from its limit for n = 1..n_max."""

    errors: np.ndarray
    threshold: float
    first_below: int | None
    final_error: float
    tail_monotone: bool

    @property
    def passed(self) -> bool:
        return self.final_error <= self.threshold


def verify_limit_matrix(
    t: ModelTriplet, summary: SpectralSummary, n_max: int = 500, threshold: float = 1e-6
) -> LimitMatrixReport:
    """Track max |R^n M^n - u^t v| (or max R^n m_ij^(n) when not R-positive)."""
    RM = summary.R * mean_matrix(t)
    target = np.outer(summary.u, summary.v) if summary.positive else np.zeros_like(RM)
    P = np.eye(t.dim)
    errors = np.empty(n_max)
    for n in range(n_max):
        P = P @ RM
        errors[n] = float(np.abs(P - target).max())
    below = np.flatnonzero(errors < threshold)
    half = errors[n_max // 2 :]
    monotone = bool(np.all(half <= errors[n_max // 2 - 1] + 1e-14)) if n_max > 1 else True
    return LimitMatrixReport(
        errors=errors,
        threshold=threshold,
        first_below=int(below[0]) + 1 if below.size else None,
        final_error=float(errors[-1]),
        tail_monotone=monotone,
    )
