"""Markov descriptions of the contour of a linear-fractional BGW tree.

Labeled chain on states (l, i): label i >= 1 means level l was reached by an
up-step onto a type i-1 particle, label 0 means it was reached by a
down-step. From (l, i) the walk climbs to a first daughter of type j with
probability H[i-1, j-1] and otherwise descends; from (l, 0) it climbs to a
further daughter of type j with probability m/(1+m) g_j and otherwise
descends. (-1, 0) is absorbing.

The jumping contour merges every run of up-steps into a single jump whose
size is distributed as the life length L.
"""

from __future__ import annotations

import numpy as np

from ..cmj import LifeLaw
from ..errors import InvalidArgumentError
from ..model import ModelTriplet
from .engines import sample_life
from .trees import ContourPath

STEP_CAP = 10**7


class LabeledContourChain:
    """Labeled contour kernel of the triplet ``t``, optionally stopped at ``horizon``.

    With a horizon, states at that level have no daughters and step down.
    The compulsory first move from (-1, 0) lands on (0, i) with i - 1 ~ g
    unless a start type is given.
    """

    def __init__(self, t: ModelTriplet, horizon: int | None = None):
        self.t = t
        self.horizon = horizon
        a = t.dim
        up_from_type = np.hstack([t.H, t.h0[:, None]])
        up_from_down = np.append(t.m / (1.0 + t.m) * t.g, 1.0 / (1.0 + t.m))
        # row 0 is the down-label state, rows 1..a the typed states; last column = descend
        self.kernel = np.vstack([up_from_down, up_from_type])
        self._cum = np.cumsum(self.kernel, axis=1)
        self._cum[:, -1] = 1.0
        self._cum_g = np.cumsum(t.g)
        self.dim = a

    def transition(self, state: tuple[int, int]) -> dict[tuple[int, int], float]:
        """Exact one-step law from ``state``."""
        l, i = state
        if not 0 <= i <= self.dim:
            raise InvalidArgumentError(f"label {i} out of range")
        if (l, i) == (-1, 0):
            return {(-1, 0): 1.0}
        if l < 0:
            raise InvalidArgumentError(f"level {l} is not a chain state")
        if self.horizon is not None and l >= self.horizon:
            return {(l - 1, 0): 1.0}
        out = {}
        row = self.kernel[i]
        for j in range(self.dim):
            if row[j] > 0:
                out[(l + 1, j + 1)] = float(row[j])
        if row[-1] > 0:
            out[(l - 1, 0)] = float(row[-1])
        return out

    def step(self, state: tuple[int, int], rng: np.random.Generator) -> tuple[int, int]:
        l, i = state
        if (l, i) == (-1, 0):
            return state
        if self.horizon is not None and l >= self.horizon:
            return (l - 1, 0)
        j = int(np.searchsorted(self._cum[i], rng.random(), side="right"))
        j = min(j, self.dim)
        return (l - 1, 0) if j == self.dim else (l + 1, j + 1)

    def sample_path(
        self, rng: np.random.Generator, start: int | None = None, step_cap: int = STEP_CAP
    ) -> ContourPath:
        """One excursion from (-1, 0) back to absorption.

        A path that would exceed ``step_cap`` states is returned with
        ``truncated=True`` and is not a complete excursion.
        """
        if start is None:
            start = int(min(np.searchsorted(self._cum_g, rng.random(), side="right"), self.dim - 1))
        levels = [-1, 0]
        labels = [0, start + 1]
        state = (0, start + 1)
        truncated = False
        while state != (-1, 0):
            if len(levels) >= step_cap:
                truncated = True
                break
            state = self.step(state, rng)
            levels.append(state[0])
            labels.append(state[1])
        return ContourPath(
            "labeled",
            np.asarray(levels, dtype=np.int64),
            np.asarray(labels, dtype=np.int64),
            horizon=self.horizon,
            truncated=truncated,
        )


def labeled_contour_chain(t: ModelTriplet, horizon: int | None = None) -> LabeledContourChain:
    return LabeledContourChain(t, horizon)


class JumpingContour:
    """Constant-speed descent with iid upward jumps distributed as L.

    From level -1 the process jumps up by L; afterwards it repeatedly moves
    one level down and then, unless it reached -1, jumps up by a fresh L
    with probability m/(1+m). With a horizon, jumps are clipped so the path
    never exceeds it; this keeps the counts of descents from every level
    <= horizon unchanged.
    """

    def __init__(self, life: LifeLaw, m: float, horizon: int | None = None, step_cap: int = STEP_CAP):
        if not m > 0:
            raise InvalidArgumentError("m must be positive")
        self.life = life
        self.m = float(m)
        self.horizon = horizon
        self.step_cap = int(step_cap)
        self._p_jump = self.m / (1.0 + self.m)
        self._d = life.d_upto(horizon + 1) if horizon is not None else None

    @property
    def drift(self) -> float:
        return self.life.drift

    def _jump(self, level: int, rng: np.random.Generator) -> int:
        if self._d is not None:
            room = self.horizon - level
            return min(sample_life(self._d[:room], rng.random()), room)
        u = rng.random()
        # unbounded: extend the life law prefix on demand
        n = max(64, self.life.d.size)
        while True:
            d = self.life.d_upto(n)
            if d[-1] <= u:
                return sample_life(d, u)
            n *= 2

    def sample_path(self, rng: np.random.Generator) -> ContourPath:
        steps = [self._jump(-1, rng)]
        level = -1 + steps[0]
        truncated = False
        while level > -1:
            if len(steps) >= self.step_cap:
                truncated = True
                break
            steps.append(-1)
            level -= 1
            if level > -1 and rng.random() < self._p_jump:
                k = self._jump(level, rng)
                steps.append(k)
                level += k
        steps = np.asarray(steps, dtype=np.int64)
        levels = -1 + np.concatenate([[0], np.cumsum(steps)])
        return ContourPath("jumping", levels, steps=steps, horizon=self.horizon, truncated=truncated)


def jumping_contour_chain(
    life: LifeLaw, m: float, horizon: int | None = None, step_cap: int = STEP_CAP
) -> JumpingContour:
    return JumpingContour(life, m, horizon, step_cap)
