"""Multivariate linear-fractional (LF) distributions.

A random vector ``Z`` over ``a`` types is LF(h, g, m) when

    P(Z = 0)         = h0
    P(Z = k + e_i)   = h_i m^k / (1+m)^(k+1) * multinomial(k) * g^k,   k = |k|

Equivalently ``Z = X + (Y_1 + ... + Y_N) 1{X != 0}`` with ``X`` a Bernoulli
vector over ``{0, e_1, ..., e_a}`` (masses h0, h), ``N`` geometric with
``P(N = k) = m^k (1+m)^(-k-1)`` and the ``Y_j`` iid draws from ``g``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import ConditioningError, InvalidArgumentError

PROB_TOL = 1e-12


def _frozen(x) -> np.ndarray:
    arr = np.array(x, dtype=float, copy=True).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class LFLaw:
    """Parameters (h0, h, g, m) of a linear-fractional law.

    ``h0`` is optional on construction; it defaults to ``1 - sum(h)``.
    """

    h: np.ndarray
    g: np.ndarray
    m: float
    h0: float | None = None

    def __post_init__(self):
        h = _frozen(self.h)
        g = _frozen(self.g)
        if h.shape != g.shape:
            raise InvalidArgumentError(f"h has {h.size} types but g has {g.size}")
        if np.any(h < 0) or not np.all(np.isfinite(h)):
            raise InvalidArgumentError("h must be nonnegative and finite")
        if np.any(g < 0) or abs(g.sum() - 1.0) > PROB_TOL:
            raise InvalidArgumentError(f"g must be a probability vector (sum={g.sum()!r})")
        h0 = 1.0 - float(h.sum()) if self.h0 is None else float(self.h0)
        if abs(h0 + h.sum() - 1.0) > PROB_TOL or h0 < -PROB_TOL:
            raise InvalidArgumentError(f"h0 + sum(h) must equal 1 (h0={h0!r}, sum(h)={h.sum()!r})")
        if not (self.m > 0 and math.isfinite(self.m)):
            raise InvalidArgumentError(f"m must be positive, got {self.m!r}")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "h0", max(h0, 0.0))
        object.__setattr__(self, "m", float(self.m))

    @property
    def dim(self) -> int:
        return self.h.size

    def __eq__(self, other):
        if not isinstance(other, LFLaw):
            return NotImplemented
        return (
            self.h0 == other.h0
            and self.m == other.m
            and np.array_equal(self.h, other.h)
            and np.array_equal(self.g, other.g)
        )

    def __repr__(self):
        return f"LFLaw(h0={self.h0!r}, h={self.h.tolist()!r}, g={self.g.tolist()!r}, m={self.m!r})"


def _check_dim(law: LFLaw, x, name="s") -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != law.dim:
        raise InvalidArgumentError(f"{name} has dimension {x.size}, law has {law.dim} types")
    return x


def pgf(law: LFLaw, s) -> float:
    """Evaluate E[s^Z] = h0 + <h, s> / (1 + m - m <g, s>)."""
    s = _check_dim(law, s)
    return law.h0 + float(law.h @ s) / (1.0 + law.m - law.m * float(law.g @ s))


def log_multinomial(k) -> float:
    k = np.asarray(k)
    return float(gammaln(k.sum() + 1) - gammaln(k + 1).sum())


def pmf(law: LFLaw, k) -> float:
    """Point mass P(Z = k) for a nonnegative integer vector ``k``.

    Multinomial coefficients and powers are combined in log space, so totals
    in the thousands are fine.
    """
    k = _check_dim(law, k, "k")
    if np.any(k < 0) or np.any(k != np.round(k)):
        raise InvalidArgumentError("k must be a nonnegative integer vector")
    k = k.astype(np.int64)
    total = int(k.sum())
    if total == 0:
        return law.h0
    n_extra = total - 1
    with np.errstate(divide="ignore"):
        log_g = np.log(law.g)
    geo = n_extra * math.log(law.m) - (n_extra + 1) * math.log1p(law.m)
    out = 0.0
    for i in np.flatnonzero((k > 0) & (law.h > 0)):
        rest = k.copy()
        rest[i] -= 1
        mask = rest > 0
        if np.any(np.isneginf(log_g[mask])):
            continue
        logp = math.log(law.h[i]) + geo + log_multinomial(rest) + float(rest[mask] @ log_g[mask])
        out += math.exp(logp)
    return out


def mean(law: LFLaw) -> np.ndarray:
    """Mean vector h + m (1 - h0) g."""
    return law.h + law.m * (1.0 - law.h0) * law.g


def conditional_law(law: LFLaw) -> LFLaw:
    """Law of Z given Z != 0: the shifted geometric LF(h / (1-h0), g, m) with h0 = 0."""
    if law.h0 >= 1.0 - PROB_TOL:
        raise ConditioningError("cannot condition on Z != 0: the law is degenerate at zero")
    return LFLaw(law.h / (1.0 - law.h0), law.g, law.m, h0=0.0)


def geometric_inverse_cdf(u: float, m: float) -> int:
    """Geometric count N with P(N >= k) = (m/(1+m))^k from one uniform ``u`` in [0, 1)."""
    return math.floor(math.log1p(-u) / math.log(m / (1.0 + m)))


class OrderedSampler:
    """Offspring sampler with precomputed cumulative masses for repeated draws.

    Draw layout: one uniform picks the first daughter from ``h`` (or no
    offspring), one uniform gives the geometric count ``N`` by inversion and
    one uniform per subsequent daughter picks its type from ``g``.
    """

    def __init__(self, law: LFLaw):
        self.dim = law.dim
        self.alive = 1.0 - law.h0
        self.cum_h = np.cumsum(law.h)
        self.cum_g = np.cumsum(law.g)
        self.m = law.m

    def draw(self, rng: np.random.Generator) -> list[int]:
        u = rng.random()
        if u >= self.alive:
            return []
        first = int(np.searchsorted(self.cum_h, u, side="right"))
        # u beyond the cumulative h mass lands on index dim, the no-offspring atom
        if first >= self.dim:
            return []
        n = geometric_inverse_cdf(rng.random(), self.m)
        if n == 0:
            return [first]
        others = np.searchsorted(self.cum_g, rng.random(n), side="right")
        np.minimum(others, self.dim - 1, out=others)
        return [first, *others.tolist()]


def sample_ordered(law: LFLaw, rng: np.random.Generator) -> list[int]:
    """Draw offspring types in planar order (0-based type indices).

    The first entry, if any, is the first daughter drawn from ``h``; the rest
    are the geometric number of daughters with types iid from ``g``.
    """
    return OrderedSampler(law).draw(rng)


def sample(law: LFLaw, rng: np.random.Generator) -> np.ndarray:
    """Draw one offspring count vector."""
    return np.bincount(np.asarray(sample_ordered(law, rng), dtype=np.int64), minlength=law.dim)
