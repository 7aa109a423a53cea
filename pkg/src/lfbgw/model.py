"""Linear-fractional multi-type BGW processes and their exact generation laws.

Types are 0-based throughout the Python API. A countable model is always
handled through a finite truncation; :class:`TruncationInfo` records how much
mass the truncation dropped so callers can bound the error.
"""

from __future__ import annotations

import math
from collections import deque
from collections.abc import Callable, Iterator
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components

from . import lf_law
from .errors import ConditioningError, InvalidArgumentError
from .lf_law import PROB_TOL, LFLaw

MAX_GENERATION = 10**6


@dataclass(frozen=True)
class TruncationInfo:
    """Bookkeeping for a finite section of a countable model."""

    original: str = "countable"
    g_tail_mass: float = 0.0
    max_row_deficit: float = 0.0


@dataclass(frozen=True, eq=False)
class ModelTriplet:
    """Parameters (H, g, m) of a linear-fractional BGW process.

    ``H`` is substochastic; row ``i`` holds the first-daughter masses of a
    type ``i`` mother and ``h0[i] = 1 - H[i].sum()`` is her probability of
    having no offspring.
    """

    H: np.ndarray
    g: np.ndarray
    m: float
    truncation_info: TruncationInfo | None = None

    def __post_init__(self):
        H = np.array(self.H, dtype=float, copy=True)
        g = np.array(self.g, dtype=float, copy=True).reshape(-1)
        if H.ndim != 2 or H.shape[0] != H.shape[1]:
            raise InvalidArgumentError(f"H must be square, got shape {H.shape}")
        if H.shape[0] != g.size:
            raise InvalidArgumentError(f"H is {H.shape[0]}x{H.shape[0]} but g has {g.size} entries")
        if not np.all(np.isfinite(H)) or np.any(H < 0):
            raise InvalidArgumentError("H entries must be finite and nonnegative")
        rows = H.sum(axis=1)
        bad = np.flatnonzero(rows > 1.0 + PROB_TOL)
        if bad.size:
            raise InvalidArgumentError(f"row {bad[0] + 1} sum exceeds 1 ({rows[bad[0]]!r})")
        if np.any(g < 0) or abs(g.sum() - 1.0) > PROB_TOL:
            raise InvalidArgumentError(f"g must be a probability vector (sum={g.sum()!r})")
        if not (self.m > 0 and math.isfinite(self.m)):
            raise InvalidArgumentError(f"m must be positive, got {self.m!r}")
        H.setflags(write=False)
        g.setflags(write=False)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "m", float(self.m))

    @property
    def dim(self) -> int:
        return self.g.size

    @property
    def h0(self) -> np.ndarray:
        return np.clip(1.0 - self.H.sum(axis=1), 0.0, 1.0)

    def row_law(self, i: int) -> LFLaw:
        """Offspring law LF(h_i, g, m) of a type ``i`` particle."""
        return LFLaw(self.H[i], self.g, self.m, h0=float(self.h0[i]))

    def __eq__(self, other):
        if not isinstance(other, ModelTriplet):
            return NotImplemented
        return (
            self.m == other.m
            and np.array_equal(self.H, other.H)
            and np.array_equal(self.g, other.g)
            and self.truncation_info == other.truncation_info
        )

    def __repr__(self):
        return f"ModelTriplet(H={self.H.tolist()!r}, g={self.g.tolist()!r}, m={self.m!r})"


@dataclass(frozen=True, eq=False)
class GenerationLaw:
    """Exact law of Z^(n): from type i it is LF(Hn[i], gn, mn)."""

    n: int
    Hn: np.ndarray
    gn: np.ndarray
    mn: float

    @property
    def h0n(self) -> np.ndarray:
        return np.clip(1.0 - self.Hn.sum(axis=1), 0.0, 1.0)

    def law(self, i: int) -> LFLaw:
        return LFLaw(self.Hn[i], self.gn, self.mn, h0=float(self.h0n[i]))


@dataclass(frozen=True, eq=False)
class ScaledGeneration:
    """Generation-n summaries stored in the scaled form R^n (.) to avoid overflow.

    ``scaled_mn`` is R^n m^(n) and ``scaled_Mn1`` is R^n M^n 1.
    ``conditional_h`` has rows h_i^(n) / (1 - h_i0^(n)).
    """

    n: int
    R: float
    scaled_mn: float
    gn: np.ndarray
    scaled_Mn1: np.ndarray
    survival: np.ndarray
    conditional_h: np.ndarray = field(repr=False)


def mean_matrix(t: ModelTriplet) -> np.ndarray:
    """M = H + m (H 1) g."""
    return t.H + t.m * np.outer(t.H.sum(axis=1), t.g)


def _check_n(n: int) -> int:
    if int(n) != n or n < 1:
        raise InvalidArgumentError(f"generation index must be a positive integer, got {n!r}")
    if n > MAX_GENERATION:
        raise InvalidArgumentError(f"generation index capped at {MAX_GENERATION}")
    return int(n)


def generation_laws(
    t: ModelTriplet, n_max: int, progress: Callable[[int], None] | None = None
) -> Iterator[GenerationLaw]:
    """Yield the exact generation laws for n = 1, ..., n_max.

    Tracks M^n and the running sum g(I + M + ... + M^(n-1)); memory is O(a^2).
    ``progress`` is called after each generation and may raise to abort.

    Raises
    ------
    OverflowError
        When M^n leaves the double range; use :func:`scaled_generations`.
    """
    n_max = _check_n(n_max)
    M = mean_matrix(t)
    P = np.eye(t.dim)
    S = np.zeros(t.dim)
    for n in range(1, n_max + 1):
        # overflow is detected below and reported as OverflowError
        with np.errstate(over="ignore", invalid="ignore"):
            S += t.g @ P
            P = P @ M
            mn = t.m * S.sum()
        if n == 1:
            yield GenerationLaw(1, t.H.copy(), t.g.copy(), t.m)
        else:
            if not (math.isfinite(mn) and np.all(np.isfinite(P))):
                raise OverflowError(f"M^n overflows at n={n}; use scaled_generations with R")
            gn = t.m * S / mn
            Hn = P - (mn / (1.0 + mn)) * np.outer(P.sum(axis=1), gn)
            # cancellation leaves entries of order -eps * |M^n|
            Hn[Hn < 0] = 0.0
            yield GenerationLaw(n, Hn, gn, mn)
        if progress is not None:
            progress(n)


def generation_law(t: ModelTriplet, n: int) -> GenerationLaw:
    """Parameters (H^(n), g^(n), m^(n)) of Z^(n).

    m^(n) = m sum_{k<n} g M^k 1,  m^(n) g^(n) = m g (I + ... + M^(n-1)),
    H^(n) = M^n - m^(n)/(1+m^(n)) M^n 1 g^(n).
    """
    law = None
    for law in generation_laws(t, n):
        pass
    return law


def scaled_generations(t: ModelTriplet, R: float, n_max: int) -> Iterator[ScaledGeneration]:
    """Yield generation summaries in scaled form, safe for large n in any regime."""
    n_max = _check_n(n_max)
    RM = R * mean_matrix(t)
    Q = np.eye(t.dim)  # R^n M^n
    S = np.zeros(t.dim)  # R^n sum_{k<n} g M^k
    log_R = math.log(R)
    for n in range(1, n_max + 1):
        S = R * (S + t.g @ Q)
        Q = Q @ RM
        smn = t.m * S.sum()
        gn = S / S.sum()
        Q1 = Q.sum(axis=1)
        Rn = math.exp(n * log_R)
        survival = Q1 / (Rn + smn)
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            mn = smn / Rn if Rn > 0 else math.inf
            if math.isfinite(mn):
                cond = (1.0 + mn) * Q / Q1[:, None] - mn * gn[None, :]
            else:
                cond = np.full_like(Q, np.nan)
        yield ScaledGeneration(n, R, smn, gn, Q1, survival, cond)


def survival_probability(t: ModelTriplet, n: int) -> np.ndarray:
    """P(Z^(n) != 0 | Z^(0) = e_i) = (M^n 1)_i / (1 + m^(n)) for every i."""
    n = _check_n(n)
    if n == 1:
        return t.H.sum(axis=1)
    M = mean_matrix(t)
    Mn1 = np.ones(t.dim)
    S = 0.0
    gMk = t.g.copy()
    for _ in range(n):
        S += gMk.sum()
        gMk = gMk @ M
        Mn1 = M @ Mn1
    return Mn1 / (1.0 + t.m * S)


def conditional_pgf(t: ModelTriplet, i: int, n: int, s) -> float:
    """E[s^Z^(n) | Z^(n) != 0, Z^(0) = e_i]."""
    gl = generation_law(t, n)
    law = gl.law(i)
    if law.h0 >= 1.0 - PROB_TOL:
        raise ConditioningError(f"a type {i} ancestor is extinct by generation {n} with probability 1")
    return lf_law.pgf(lf_law.conditional_law(law), s)


def phantom_types(t: ModelTriplet, horizon: int | None = None) -> frozenset[int]:
    """Types j with (g H^n)_j = 0 for every 0 <= n <= horizon.

    Uses boolean reachability from the support of g along the positivity
    graph of H, so there is no underflow. The default horizon ``a`` is past
    the point where the reachable set stops growing, making the answer exact.
    """
    a = t.dim
    horizon = a if horizon is None else int(horizon)
    adj = t.H > 0
    reached = t.g > 0
    frontier = reached.copy()
    for _ in range(horizon):
        nxt = adj[frontier].any(axis=0) & ~reached
        if not nxt.any():
            break
        reached |= nxt
        frontier = nxt
    return frozenset(np.flatnonzero(~reached).tolist())


@dataclass(frozen=True)
class IrreducibilityReport:
    irreducible: bool
    aperiodic: bool
    period: int | None
    phantom: frozenset
    zero_rows: tuple
    n_components: int
    component_periods: tuple

    @property
    def ok(self) -> bool:
        return self.irreducible and self.aperiodic


def _period(adj: np.ndarray, nodes: np.ndarray) -> int:
    """Period of the strongly connected class ``nodes`` (0 when it has no cycle)."""
    inside = np.zeros(adj.shape[0], dtype=bool)
    inside[nodes] = True
    level = {int(nodes[0]): 0}
    queue = deque([int(nodes[0])])
    d = 0
    while queue:
        u = queue.popleft()
        for v in np.flatnonzero(adj[u] & inside):
            v = int(v)
            if v not in level:
                level[v] = level[u] + 1
                queue.append(v)
            else:
                d = math.gcd(d, level[u] + 1 - level[v])
    return abs(d)


def check_irreducible_aperiodic(t: ModelTriplet) -> IrreducibilityReport:
    """Irreducibility via the phantom / zero-row criterion, period via cycle gcds.

    The criterion is cross-checked against strongly connected components of
    the positivity pattern of M.
    """
    M = mean_matrix(t)
    adj = M > 0
    phantom = phantom_types(t)
    zero_rows = tuple(np.flatnonzero(~(t.H > 0).any(axis=1)).tolist())
    irreducible = not phantom and not zero_rows
    n_comp, labels = connected_components(adj.astype(np.int8), directed=True, connection="strong")
    if irreducible != (n_comp == 1):
        raise AssertionError("phantom/zero-row criterion disagrees with the SCC decomposition")
    periods = []
    for c in range(n_comp):
        nodes = np.flatnonzero(labels == c)
        periods.append(_period(adj, nodes))
    aperiodic = all(p in (0, 1) for p in periods) and any(p == 1 for p in periods)
    period = periods[0] if irreducible else None
    return IrreducibilityReport(
        irreducible=irreducible,
        aperiodic=bool(aperiodic),
        period=period,
        phantom=phantom,
        zero_rows=zero_rows,
        n_components=int(n_comp),
        component_periods=tuple(periods),
    )
