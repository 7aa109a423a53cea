"""The linear-fractional CMJ process associated with a triplet (H, g, m).

An individual lives ``L`` units with P(L > n) = d_n and gives birth to an iid
geometric(mean m) number of daughters at every age before death. Everything
here is driven by the generating function f(s) = sum_{n>=1} d_n s^n, whose
behaviour at its radius R_f decides the Malthusian parameter.

A :class:`LifeLaw` stores a finite prefix of ``d`` plus a tail rule. Series
evaluations come back as :class:`SeriesValue` with an explicit status so a
truncated law never produces a silently wrong number.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import NamedTuple

import mpmath
import numpy as np
from scipy.special import zeta

from .errors import DomainError, InvalidArgumentError
from .model import ModelTriplet, TruncationInfo, phantom_types

MONO_TOL = 1e-12
RESIDUAL_TOL = 1e-12
MAX_BISECTION = 200
N_MAX = 10**6
DIVERGENCE_CAP = 1e300


class SeriesValue(NamedTuple):
    """A series sum with an absolute error bound.

    ``status`` is ``"ok"`` (value within ``error``), ``"divergent"``
    (value is ``inf``) or ``"unknown"`` (the data cannot certify a value;
    ``value`` is then only a lower bound).
    """

    value: float
    error: float
    status: str

    @property
    def finite(self) -> bool:
        return self.status == "ok" and math.isfinite(self.value)


class RadiusResult(NamedTuple):
    value: float
    exact: bool


_DIVERGENT = SeriesValue(math.inf, 0.0, "divergent")


def _prefix_sum(d: np.ndarray, s: float, power: int) -> float:
    if d.size == 0 or s == 0.0:
        return 0.0
    n = np.arange(1, d.size + 1, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        terms = d * n**power * np.exp(n * math.log(s))
    terms[d == 0] = 0.0
    return float(terms.sum())


# -- tail rules ------------------------------------------------------------


class TailRule:
    """How d_n continues past the stored prefix."""

    name = "abstract"

    def extend(self, d: np.ndarray, n_total: int) -> np.ndarray:
        raise NotImplementedError

    def log_extend(self, d: np.ndarray, n_total: int) -> np.ndarray:
        """log d_1, ..., log d_n; rules whose terms underflow override this."""
        with np.errstate(divide="ignore"):
            return np.log(self.extend(d, n_total))

    def series(self, d: np.ndarray, s: float, power: int) -> SeriesValue:
        raise NotImplementedError

    def radius(self, d: np.ndarray) -> RadiusResult:
        raise NotImplementedError

    def describe(self) -> str:
        return self.name


class ZeroTail(TailRule):
    """d_n = 0 beyond the prefix; f is a polynomial."""

    name = "zero"

    def extend(self, d, n_total):
        out = np.zeros(n_total)
        k = min(n_total, d.size)
        out[:k] = d[:k]
        return out

    def series(self, d, s, power):
        value = _prefix_sum(d, s, power)
        if not math.isfinite(value) or value > DIVERGENCE_CAP:
            return _DIVERGENT
        return SeriesValue(value, 4 * np.finfo(float).eps * value, "ok")

    def radius(self, d):
        return RadiusResult(math.inf, True)

    def __eq__(self, other):
        return isinstance(other, ZeroTail)


class GeometricTail(TailRule):
    """d_n = d_N r^(n - N) for n > N (with d_0 = 1 when the prefix is empty)."""

    name = "geometric"

    def __init__(self, r: float):
        if not 0.0 <= r <= 1.0:
            raise InvalidArgumentError(f"geometric tail ratio must lie in [0, 1], got {r!r}")
        self.r = float(r)

    def _last(self, d):
        return (d.size, float(d[-1])) if d.size else (0, 1.0)

    def extend(self, d, n_total):
        out = np.empty(n_total)
        k = min(n_total, d.size)
        out[:k] = d[:k]
        N, dN = self._last(d)
        j = np.arange(k + 1, n_total + 1) - N
        out[k:] = dN * self.r**j
        return out

    def series(self, d, s, power):
        head = _prefix_sum(d, s, power)
        N, dN = self._last(d)
        q = self.r * s
        if dN == 0.0 or self.r == 0.0 or s == 0.0:
            return SeriesValue(head, 4 * np.finfo(float).eps * head, "ok")
        if q >= 1.0:
            return _DIVERGENT
        geo = q / (1.0 - q)
        tail = geo if power == 0 else N * geo + q / (1.0 - q) ** 2
        value = head + dN * s**N * tail
        if not math.isfinite(value) or value > DIVERGENCE_CAP:
            return _DIVERGENT
        return SeriesValue(value, 8 * np.finfo(float).eps * value / (1.0 - q), "ok")

    def radius(self, d):
        _, dN = self._last(d)
        if dN == 0.0 or self.r == 0.0:
            return RadiusResult(math.inf, True)
        return RadiusResult(1.0 / self.r, True)

    def describe(self):
        return f"geometric {self.r!r}"

    def __eq__(self, other):
        return isinstance(other, GeometricTail) and other.r == self.r


class Example1Tail(TailRule):
    """d_n = c_n n^(-k) exp(-gamma n) with c periodic (a constant when len(c) == 1).

    Full sums use the polylogarithm (constant c) or the Lerch transcendent
    (periodic c); at the radius they reduce to (Hurwitz) zeta values.
    """

    name = "example1"

    def __init__(self, gamma: float, k: float, c: Sequence[float] = (1.0,)):
        c = tuple(float(x) for x in np.atleast_1d(c))
        if gamma < 0 or k < 0:
            raise InvalidArgumentError("example1 tail needs gamma >= 0 and k >= 0")
        if not c or min(c) <= 0 or not all(math.isfinite(x) for x in c):
            raise InvalidArgumentError("example1 coefficients c must be positive and finite")
        self.gamma = float(gamma)
        self.k = float(k)
        self.c = c

    def value(self, n: np.ndarray) -> np.ndarray:
        n = np.asarray(n, dtype=float)
        cn = np.asarray(self.c)[(n.astype(np.int64) - 1) % len(self.c)]
        return cn * n ** (-self.k) * np.exp(-self.gamma * n)

    def extend(self, d, n_total):
        return self.value(np.arange(1, n_total + 1))

    def log_extend(self, d, n_total):
        n = np.arange(1, n_total + 1, dtype=float)
        cn = np.asarray(self.c)[(n.astype(np.int64) - 1) % len(self.c)]
        return np.log(cn) - self.k * np.log(n) - self.gamma * n

    def boundary_sum(self, power: int) -> float:
        """sum_n c_n n^(power - k): the series at s = R_f, inf when it diverges."""
        x = self.k - power
        if x <= 1.0:
            return math.inf
        P = len(self.c)
        if P == 1:
            return self.c[0] * float(zeta(x))
        return float(sum(cr * P ** (-x) * zeta(x, r / P) for r, cr in enumerate(self.c, start=1)))

    def series(self, d, s, power):
        q = s * math.exp(-self.gamma)
        if s == 0.0:
            return SeriesValue(0.0, 0.0, "ok")
        # exp(gamma) * exp(-gamma) is 1 only up to rounding
        if abs(q - 1.0) <= 4 * np.finfo(float).eps:
            v = self.boundary_sum(power)
            return SeriesValue(v, 1e-14 * v, "ok") if math.isfinite(v) else _DIVERGENT
        if q > 1.0:
            return _DIVERGENT
        x = self.k - power
        P = len(self.c)
        if P == 1:
            v = self.c[0] * float(mpmath.polylog(x, q))
        else:
            qP = q**P
            v = float(
                sum(
                    cr * q**r * P ** (-x) * mpmath.lerchphi(qP, x, r / P)
                    for r, cr in enumerate(self.c, start=1)
                )
            )
        if not math.isfinite(v) or v > DIVERGENCE_CAP:
            return _DIVERGENT
        return SeriesValue(v, 1e-13 * abs(v), "ok")

    def radius(self, d):
        return RadiusResult(math.exp(self.gamma), True)

    def describe(self):
        return f"example1 {self.gamma!r} {self.k!r} " + ",".join(repr(x) for x in self.c)

    def __eq__(self, other):
        return (
            isinstance(other, Example1Tail)
            and (other.gamma, other.k, other.c) == (self.gamma, self.k, self.c)
        )


class PhaseTypeTail(TailRule):
    """d_n = g H^n 1 for a finite substochastic H (absorption time of a Markov chain).

    H and g are restricted to the non-phantom types, so R_f = 1/spectral_radius(H).
    """

    name = "phase-type"

    def __init__(self, H: np.ndarray, g: np.ndarray):
        self.H = np.array(H, dtype=float)
        self.g = np.array(g, dtype=float)
        ev = np.linalg.eigvals(self.H) if self.H.size else np.zeros(0)
        self.spectral_radius = float(np.max(np.abs(ev))) if ev.size else 0.0

    def extend(self, d, n_total):
        out = np.empty(n_total)
        x = self.g.copy()
        for n in range(n_total):
            x = x @ self.H
            out[n] = x.sum()
        return out

    def series(self, d, s, power):
        if s == 0.0:
            return SeriesValue(0.0, 0.0, "ok")
        if s * self.spectral_radius >= 1.0 - 1e-15:
            return _DIVERGENT
        A = np.eye(self.H.shape[0]) - s * self.H
        sH = s * self.H
        # f(s) = g (I - sH)^-1 sH 1 ;  s f'(s) = g (I - sH)^-1 sH (I - sH)^-1 1
        y = np.linalg.solve(A, np.ones(self.H.shape[0]))
        rhs = sH @ y if power == 1 else sH.sum(axis=1)
        z = np.linalg.solve(A, rhs)
        value = float(self.g @ z)
        if not math.isfinite(value) or value > DIVERGENCE_CAP:
            return _DIVERGENT
        err = abs(value) * np.linalg.cond(A) * 8 * np.finfo(float).eps
        return SeriesValue(value, err, "ok")

    def radius(self, d):
        if self.spectral_radius == 0.0:
            return RadiusResult(math.inf, True)
        return RadiusResult(1.0 / self.spectral_radius, True)

    def describe(self):
        return "phase-type"

    def __eq__(self, other):
        return (
            isinstance(other, PhaseTypeTail)
            and np.array_equal(other.H, self.H)
            and np.array_equal(other.g, self.g)
        )


class TruncatedTail(TailRule):
    """Prefix only: beyond N we know just 0 <= d_n <= d_N."""

    name = "truncated"

    def extend(self, d, n_total):
        if n_total > d.size and d.size and d[-1] > 0:
            raise InvalidArgumentError(
                f"life law is known only up to n={d.size}; cannot extend to n={n_total}"
            )
        return ZeroTail().extend(d, n_total)

    def series(self, d, s, power):
        head = _prefix_sum(d, s, power)
        N = d.size
        dN = float(d[-1]) if N else 1.0
        if dN == 0.0 or s == 0.0:
            return SeriesValue(head, 4 * np.finfo(float).eps * head, "ok")
        if s >= 1.0:
            return SeriesValue(head, math.inf, "unknown")
        if power == 0:
            bound = dN * s ** (N + 1) / (1.0 - s)
        else:
            bound = dN * s ** (N + 1) * ((N + 1) - N * s) / (1.0 - s) ** 2
        # the tail lies in [0, bound]; report the midpoint
        return SeriesValue(head + bound / 2, bound / 2, "ok")

    def radius(self, d):
        N = d.size
        if N == 0:
            return RadiusResult(1.0, False)
        if d[-1] == 0.0:
            return RadiusResult(math.inf, True)
        return RadiusResult(float(d[-1]) ** (-1.0 / N), False)

    def __eq__(self, other):
        return isinstance(other, TruncatedTail)


# -- life law --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LifeLaw:
    """Life-length tail d = (d_1, d_2, ...) and birth mean m of a linear-fractional CMJ process.

    Derived values ``f1 = f(1)``, ``lam = E L = 1 + f(1)`` and
    ``mu = m f(1)`` are computed at construction (``nan`` when the tail rule
    cannot certify f(1)).
    """

    d: np.ndarray
    m: float
    tail: TailRule = field(default_factory=ZeroTail)
    f1: float = field(init=False)
    lam: float = field(init=False)
    mu: float = field(init=False)

    def __post_init__(self):
        d = np.array(self.d, dtype=float, copy=True).reshape(-1)
        if np.any(d < 0) or np.any(d > 1.0 + MONO_TOL):
            raise InvalidArgumentError("life tail probabilities must lie in [0, 1]")
        bad = np.flatnonzero(np.diff(d) > MONO_TOL)
        if bad.size:
            n = int(bad[0]) + 1
            raise InvalidArgumentError(f"life law not monotone: d_{n + 1} > d_{n}")
        if not (self.m > 0 and math.isfinite(self.m)):
            raise InvalidArgumentError(f"m must be positive, got {self.m!r}")
        d.setflags(write=False)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "m", float(self.m))
        f1 = self.tail.series(d, 1.0, 0)
        if f1.status == "unknown":
            val = math.nan
        else:
            val = f1.value
        object.__setattr__(self, "f1", val)
        object.__setattr__(self, "lam", 1.0 + val)
        object.__setattr__(self, "mu", self.m * val)

    def d_upto(self, n: int) -> np.ndarray:
        """d_1, ..., d_n, extending the prefix through the tail rule."""
        if n <= self.d.size:
            return self.d[:n].copy()
        return self.tail.extend(self.d, n)

    def log_d_upto(self, n: int) -> np.ndarray:
        """log d_1, ..., log d_n (``-inf`` for zero terms), exact where d_n underflows."""
        if n <= self.d.size:
            with np.errstate(divide="ignore"):
                return np.log(self.d[:n])
        return self.tail.log_extend(self.d, n)

    def series(self, s: float, power: int = 0) -> SeriesValue:
        """sum_{n>=1} n^power d_n s^n with an error bound."""
        if s < 0 or not math.isfinite(s):
            raise InvalidArgumentError(f"series argument must be finite and >= 0, got {s!r}")
        return self.tail.series(self.d, float(s), power)

    @property
    def drift(self) -> float:
        """Drift lambda - 1 - 1/m of the jumping contour process."""
        return self.lam - 1.0 - 1.0 / self.m

    def __eq__(self, other):
        if not isinstance(other, LifeLaw):
            return NotImplemented
        return self.m == other.m and np.array_equal(self.d, other.d) and self.tail == other.tail


def life_law(t: ModelTriplet, max_prefix: int = 10_000) -> LifeLaw:
    """Life law of the CMJ process associated with ``t``: d_n = g H^n 1.

    Phantom types are dropped first. If the remaining positivity graph of H
    is acyclic the law has finite support and gets an exact zero tail;
    otherwise it is phase-type with R_f = 1 / spectral_radius(H).
    The stored prefix runs until d_n falls below 1e-16 d_1 (or ``max_prefix``).
    """
    keep = np.array(sorted(set(range(t.dim)) - phantom_types(t)), dtype=np.int64)
    H = t.H[np.ix_(keep, keep)]
    g = t.g[keep]
    d = []
    x = g.copy()
    while len(d) < max_prefix:
        x = x @ H
        dn = float(x.sum())
        if dn == 0.0 or (d and dn < 1e-16 * d[0]):
            if dn > 0:
                d.append(dn)
            break
        d.append(dn)
    d = np.minimum.accumulate(np.asarray(d)) if d else np.zeros(0)
    if _is_acyclic(H > 0):
        return LifeLaw(d, t.m, ZeroTail())
    return LifeLaw(d, t.m, PhaseTypeTail(H, g))


def _is_acyclic(adj: np.ndarray) -> bool:
    indeg = adj.sum(axis=0).astype(np.int64)
    alive = np.ones(adj.shape[0], dtype=bool)
    stack = list(np.flatnonzero(indeg == 0))
    while stack:
        u = stack.pop()
        alive[u] = False
        for v in np.flatnonzero(adj[u]):
            indeg[v] -= 1
            if indeg[v] == 0:
                stack.append(v)
    return not alive.any()


def f_eval(law: LifeLaw, s: float) -> SeriesValue:
    """f(s) = sum_{n>=1} d_n s^n."""
    return law.series(s, 0)


def radius_Rf(law: LifeLaw) -> RadiusResult:
    """Radius of convergence R_f of f; ``exact=False`` marks a root-test estimate."""
    return law.tail.radius(law.d)


# -- Malthusian parameter --------------------------------------------------


@dataclass(frozen=True)
class MalthusResult:
    """Malthusian parameter and mean age at childbearing.

    ``alpha`` is ``-inf`` when m f(R_f) < 1, in which case ``R = R_f`` and
    ``beta = inf``. ``status`` is ``"ok"`` or ``"boundary-undecidable"``
    (then alpha, R and beta are nan).
    """

    alpha: float
    R: float
    beta: float
    Rf: float
    status: str = "ok"
    bracket: tuple = (math.nan, math.nan)
    iterations: int = 0
    residual: float = math.nan

    @property
    def rho(self) -> float:
        return 1.0 / self.R


def _f_at_radius(law: LifeLaw, Rf: float) -> SeriesValue:
    if math.isinf(Rf):
        if not np.any(law.d > 0):
            return SeriesValue(0.0, 0.0, "ok")
        return _DIVERGENT
    return law.series(Rf, 0)


def malthus(law: LifeLaw) -> MalthusResult:
    """Solve m f(exp(-alpha)) = 1 by bracketed bisection on alpha.

    If m f(R_f) < 1 the Malthusian parameter is -inf and R = R_f. The mean
    age at childbearing is beta = m sum n d_n exp(-alpha n).
    """
    m = law.m
    Rf, exact = radius_Rf(law)
    edge = _f_at_radius(law, Rf)
    undecidable = MalthusResult(math.nan, math.nan, math.nan, Rf, status="boundary-undecidable")
    if not exact and edge.status != "divergent":
        return undecidable
    if edge.status == "unknown":
        return undecidable
    if edge.status == "ok":
        gap = m * edge.value - 1.0
        if abs(gap) <= max(RESIDUAL_TOL, m * edge.error):
            if m * edge.error > RESIDUAL_TOL:
                return undecidable
            alpha = -math.log(Rf)
            beta = _beta(law, Rf)
            return MalthusResult(alpha, Rf, beta, Rf, "ok", (alpha, alpha), 0, abs(gap))
        if gap < 0:
            return MalthusResult(-math.inf, Rf, math.inf, Rf, "ok", (-math.inf, -math.inf), 0, math.nan)

    def F(alpha):
        v = law.series(math.exp(-alpha), 0)
        if v.status == "divergent":
            return math.inf
        return m * v.value - 1.0

    # lower end: F(lo) > 0
    if math.isinf(Rf):
        lo = -1.0
        while F(lo) <= 0:
            lo *= 2.0
            if lo < -1e4:
                raise DomainError("could not bracket the Malthusian parameter from below")
    else:
        lo = -math.log(Rf)
    hi = max(lo, 0.0) + 1.0
    while F(hi) >= 0:
        hi = lo + 2.0 * (hi - lo)
        if hi > 1e4:
            raise DomainError("could not bracket the Malthusian parameter from above")
    bracket = (lo, hi)
    it = 0
    f_lo, f_hi = math.inf, F(hi)
    while it < MAX_BISECTION:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        fm = F(mid)
        it += 1
        if fm == 0.0:
            lo = hi = mid
            f_lo = f_hi = 0.0
            break
        if fm > 0:
            lo, f_lo = mid, fm
        else:
            hi, f_hi = mid, fm
    alpha = lo if abs(f_lo) < abs(f_hi) else hi
    residual = min(abs(f_lo), abs(f_hi))
    R = math.exp(-alpha)
    return MalthusResult(alpha, R, _beta(law, R), Rf, "ok", bracket, it, residual)


def _beta(law: LifeLaw, R: float) -> float:
    v = law.series(R, 1)
    if v.status != "ok":
        return math.inf
    return law.m * v.value


@dataclass(frozen=True, eq=False)
class RegenerationLaw:
    """Regeneration age law d_hat_n = m d_n exp(-alpha n) on n = 1..len(probs)."""

    probs: np.ndarray
    tail_mass: float

    @property
    def mean(self) -> float:
        n = np.arange(1, self.probs.size + 1)
        return float(n @ self.probs)


def regeneration_law(law: LifeLaw, res: MalthusResult, tol: float = 1e-12) -> RegenerationLaw:
    """d_hat_n = m d_n e^{-alpha n}, computed until the missing mass drops below ``tol``."""
    if not (res.status == "ok" and res.alpha > -math.inf):
        raise DomainError("the regeneration law needs a finite Malthusian parameter")
    n = 64
    while True:
        log_d = law.log_d_upto(n)
        k = np.arange(1, n + 1, dtype=float)
        probs = np.zeros(n)
        pos = np.isfinite(log_d)
        # d_n and exp(-alpha n) can under- and overflow separately
        probs[pos] = law.m * np.exp(log_d[pos] - res.alpha * k[pos])
        tail = 1.0 - float(probs.sum())
        if abs(tail) < tol or n >= N_MAX or not pos[-1]:
            return RegenerationLaw(probs, tail)
        n *= 2


# -- age-structure embedding and the power-exponential family ------------


def age_structure_embedding(law: LifeLaw, n_terms: int | None = None) -> ModelTriplet:
    """Triplet whose types are ages: H[j, j+1] = d_j / d_(j-1) (1-based, d_0 = 1), g = e_1.

    Reproducing d_1..d_K needs K + 1 ages. When d_a > 0 = d_(a+1) the chain
    stops at age a + 1 (a final type with a zero row). Otherwise the chain is
    cut after ``n_terms`` (default: the stored prefix length) and the dropped
    transition d_(K+1)/d_K is recorded in ``truncation_info``.
    """
    K = law.d.size if n_terms is None else int(n_terms)
    d = law.d_upto(K)
    if d.size == 0 or d[0] <= 0:
        raise InvalidArgumentError("the embedding needs d_1 > 0")
    if np.any(np.diff(d) > 0):
        raise InvalidArgumentError("invalid life law: d is not nonincreasing")
    zeros = np.flatnonzero(d == 0)
    info = None
    if zeros.size:
        K = int(zeros[0])
        d = d[:K]
    else:
        try:
            nxt = float(law.d_upto(K + 1)[-1])
        except InvalidArgumentError:
            nxt = math.nan
        if nxt != 0.0:
            info = TruncationInfo("countable", 0.0, nxt / d[-1] if math.isfinite(nxt) else math.nan)
    a = K + 1
    H = np.zeros((a, a))
    prev = np.concatenate(([1.0], d[:-1]))
    H[np.arange(K), np.arange(1, a)] = d / prev
    g = np.zeros(a)
    g[0] = 1.0
    return ModelTriplet(H, g, law.m, info)


@dataclass(frozen=True)
class Example1Prediction:
    """Trichotomy of the power-exponential family d_n = c_n n^-k e^(-gamma n) from A = sum c_n n^-k against 1/m."""

    A: float
    inv_m: float
    branch: str  # "A>1/m", "A=1/m" or "A<1/m"
    alpha_at_boundary: float  # -gamma on the A = 1/m branch
    beta_finite: bool


def example1_law(
    c: Sequence[float] | float,
    gamma: float,
    k: float,
    m: float,
    n_prefix: int = 256,
    rel_tol: float = 1e-12,
) -> tuple[LifeLaw, Example1Prediction]:
    """Life law d_n = c_n n^-k e^(-gamma n) with periodic ``c``, and its predicted branch."""
    tail = Example1Tail(gamma, k, np.atleast_1d(c))
    d = tail.value(np.arange(1, n_prefix + 1))
    if d[0] > 1.0 + MONO_TOL:
        raise InvalidArgumentError("example1 law needs c_1 exp(-gamma) <= 1")
    law = LifeLaw(d, m, tail)
    A = tail.boundary_sum(0)
    inv_m = 1.0 / m
    if math.isfinite(A) and abs(A - inv_m) <= rel_tol * inv_m:
        branch = "A=1/m"
        beta_finite = k > 2
    elif A > inv_m:
        branch = "A>1/m"
        beta_finite = True
    else:
        branch = "A<1/m"
        beta_finite = False
    return law, Example1Prediction(A, inv_m, branch, -gamma, beta_finite)
