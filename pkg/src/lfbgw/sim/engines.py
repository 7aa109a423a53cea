"""Forward Monte-Carlo engines and deterministic replicate streams."""

from __future__ import annotations

from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import TypeVar

import numpy as np

from ..cmj import LifeLaw
from ..errors import InvalidArgumentError
from ..lf_law import OrderedSampler, geometric_inverse_cdf
from ..model import ModelTriplet
from .trees import PlanarTree

POPULATION_CAP = 10**6

T = TypeVar("T")


def replicate_rng(seed: int, k: int) -> np.random.Generator:
    """Private stream for replicate ``k`` of master ``seed``.

    Stream k is the child SeedSequence with spawn key (k,), so results do
    not depend on how replicates are scheduled.
    """
    if not 0 <= seed < 2**64:
        raise InvalidArgumentError("seed must be an unsigned 64-bit integer")
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(k,)))


def run_replicates(fn: Callable[[np.random.Generator], T], seed: int, reps: int, workers: int = 1) -> list[T]:
    """Evaluate ``fn`` on replicates 0..reps-1 and return results in index order."""
    if reps < 1:
        raise InvalidArgumentError("reps must be >= 1")
    task = lambda k: fn(replicate_rng(seed, k))
    if workers <= 1:
        return [task(k) for k in range(reps)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(task, range(reps)))


def _start_type(t: ModelTriplet, start, rng) -> int:
    if start is None:
        return int(min(np.searchsorted(np.cumsum(t.g), rng.random(), side="right"), t.dim - 1))
    start = int(start)
    if not 0 <= start < t.dim:
        raise InvalidArgumentError(f"start type {start} out of range")
    return start


@dataclass(frozen=True, eq=False)
class BGWRun:
    """Population path Z[k, i] for k = 0..n and, optionally, the stopped tree.

    ``truncated`` flags a run that hit the population cap; ``path`` then
    stops at the last complete generation and ``tree`` is ``None``.
    """

    path: np.ndarray
    tree: PlanarTree | None
    truncated: bool = False

    @property
    def totals(self) -> np.ndarray:
        return self.path.sum(axis=1)


def simulate_bgw(
    t: ModelTriplet,
    n: int,
    rng: np.random.Generator,
    start: int | None = None,
    cap: int = POPULATION_CAP,
    record_tree: bool = True,
    samplers: list[OrderedSampler] | None = None,
) -> BGWRun:
    """Particle-level simulation up to generation ``n`` with planar genealogy.

    ``start`` is the ancestor's type; ``None`` draws it from g. Offspring of
    a type-i particle come from LF(h_i, g, m) in planar order.
    """
    if n < 0:
        raise InvalidArgumentError("horizon must be nonnegative")
    samplers = samplers or [OrderedSampler(t.row_law(i)) for i in range(t.dim)]
    types = [_start_type(t, start, rng)]
    children: list[list[int]] = [[]]
    path = np.zeros((n + 1, t.dim), dtype=np.int64)
    path[0, types[0]] = 1
    level = [0]
    for k in range(1, n + 1):
        nxt = []
        for v in level:
            kids = samplers[types[v]].draw(rng)
            if not kids:
                continue
            ids = list(range(len(types), len(types) + len(kids)))
            types.extend(kids)
            if record_tree:
                children[v] = ids
                children.extend([] for _ in kids)
            nxt.extend(ids)
            path[k] += np.bincount(kids, minlength=t.dim)
            if len(types) > cap:
                return BGWRun(path[:k], None, truncated=True)
        level = nxt
        if not level:
            break
    tree = PlanarTree.from_children(types, children, horizon=n) if record_tree else None
    return BGWRun(path, tree)


def simulate_population(
    t: ModelTriplet, n: int, rng: np.random.Generator, start: int | None = None, cap: int = POPULATION_CAP
) -> BGWRun:
    """Type-count simulation without genealogy.

    Given Z^(k), first daughters are multinomial per mother type, the extra
    daughters of the K mothers with a first daughter total a negative
    binomial (K, 1/(1+m)) count, and their types are multinomial(g).
    """
    a = t.dim
    probs = np.hstack([t.H, t.h0[:, None]])
    probs /= probs.sum(axis=1, keepdims=True)
    p_success = 1.0 / (1.0 + t.m)
    path = np.zeros((n + 1, a), dtype=np.int64)
    path[0, _start_type(t, start, rng)] = 1
    for k in range(1, n + 1):
        z = path[k - 1]
        if not z.any():
            break
        nxt = np.zeros(a, dtype=np.int64)
        for i in np.flatnonzero(z):
            nxt += rng.multinomial(z[i], probs[i])[:a]
        mothers = int(nxt.sum())
        if mothers:
            extra = int(rng.negative_binomial(mothers, p_success))
            if extra:
                nxt += rng.multinomial(extra, t.g)
        path[k] = nxt
        if int(nxt.sum()) > cap:
            return BGWRun(path[: k + 1], None, truncated=True)
    return BGWRun(path, None)


@dataclass(frozen=True, eq=False)
class CMJRun:
    totals: np.ndarray
    individuals: int
    truncated: bool = False


def sample_life(d: np.ndarray, u: float) -> int:
    """Life length L with P(L > k) = d[k-1], by inversion; capped at len(d) + 1."""
    # d is nonincreasing, so L - 1 = #{k : d_k > u}
    return 1 + int(np.searchsorted(-d, -u, side="left"))


def simulate_cmj(life: LifeLaw, m: float, n: int, rng: np.random.Generator, cap: int = POPULATION_CAP) -> CMJRun:
    """Discrete-time CMJ process started by one newborn, observed at times 0..n.

    An individual with life L is alive at ages 0..L-1 and bears an iid
    geometric(m) number of daughters at each of the ages 1..L-1.
    """
    if n < 0:
        raise InvalidArgumentError("horizon must be nonnegative")
    d = life.d_upto(n) if n > 0 else np.zeros(0)
    totals = np.zeros(n + 1, dtype=np.int64)
    pending = [0]
    count = 0
    while pending:
        b = pending.pop()
        count += 1
        if count > cap:
            return CMJRun(totals, count, truncated=True)
        L = sample_life(d[: n - b], rng.random())
        last = min(b + L - 1, n)
        totals[b : last + 1] += 1
        for age in range(1, L):
            born = b + age
            if born > n:
                break
            k = geometric_inverse_cdf(rng.random(), m)
            pending.extend([born] * k)
    return CMJRun(totals, count)
