"""Planar typed trees, their labeled contour encoding and derived views.

A tree lives in a flat arena indexed in breadth-first order: node 0 is the
root and the children of every node occupy a contiguous id range in planar
order, first daughter first. Breadth-first relabelling makes the arena a
canonical form, so two trees are equal exactly when their arrays are.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from itertools import pairwise

import numpy as np

from ..errors import DecodeError, InvalidArgumentError

ABSORBING = (-1, 0)


@dataclass(frozen=True, eq=False)
class PlanarTree:
    """Ordered genealogy with 0-based particle types.

    ``horizon`` is the observation level at which the tree was stopped
    (``None`` for a tree grown to extinction).
    """

    types: np.ndarray
    gen: np.ndarray
    parent: np.ndarray
    first_child: np.ndarray
    n_children: np.ndarray
    horizon: int | None = None

    root = 0

    @classmethod
    def from_children(cls, types: Sequence[int], children: Sequence[Sequence[int]], root: int = 0, horizon=None):
        """Build from per-node child lists in any id order, relabelling breadth-first."""
        order = [root]
        head = 0
        while head < len(order):
            order.extend(children[order[head]])
            head += 1
        if len(order) != len(types):
            raise InvalidArgumentError("child lists do not form a single tree rooted at root")
        new_id = {old: k for k, old in enumerate(order)}
        size = len(order)
        t = np.empty(size, dtype=np.int64)
        gen = np.zeros(size, dtype=np.int64)
        parent = np.full(size, -1, dtype=np.int64)
        first = np.full(size, -1, dtype=np.int64)
        nch = np.zeros(size, dtype=np.int64)
        for k, old in enumerate(order):
            t[k] = types[old]
            kids = children[old]
            nch[k] = len(kids)
            if kids:
                first[k] = new_id[kids[0]]
                for c in kids:
                    parent[new_id[c]] = k
                    gen[new_id[c]] = gen[k] + 1
        return cls(t, gen, parent, first, nch, horizon)

    @property
    def size(self) -> int:
        return int(self.types.size)

    def children(self, v: int) -> range:
        f = int(self.first_child[v])
        return range(f, f + int(self.n_children[v])) if f >= 0 else range(0)

    def child_index(self, v: int) -> int:
        """Planar position of ``v`` among its siblings (0 for the first daughter)."""
        p = int(self.parent[v])
        return -1 if p < 0 else v - int(self.first_child[p])

    def height(self) -> int:
        return int(self.gen.max())

    def level_counts(self, dim: int, n: int | None = None) -> np.ndarray:
        """Array Z with Z[k, i] = number of type-i nodes at level k, k = 0..n."""
        n = (self.horizon if self.horizon is not None else self.height()) if n is None else n
        out = np.zeros((n + 1, dim), dtype=np.int64)
        mask = self.gen <= n
        np.add.at(out, (self.gen[mask], self.types[mask]), 1)
        return out

    def preorder(self) -> list[int]:
        out, stack = [], [self.root]
        while stack:
            v = stack.pop()
            out.append(v)
            stack.extend(reversed(self.children(v)))
        return out

    def __eq__(self, other):
        if not isinstance(other, PlanarTree):
            return NotImplemented
        return (
            self.horizon == other.horizon
            and np.array_equal(self.types, other.types)
            and np.array_equal(self.first_child, other.first_child)
            and np.array_equal(self.n_children, other.n_children)
        )

    def __repr__(self):
        return f"PlanarTree(size={self.size}, height={self.height()}, horizon={self.horizon})"


@dataclass(frozen=True, eq=False)
class ContourPath:
    """Contour of a planar tree.

    ``kind == "labeled"``: ``levels`` and ``labels`` list the visited states
    (l, i); label i >= 1 marks arrival at a type i-1 particle by an up-step,
    label 0 marks a down-step. ``kind == "jumping"``: ``steps`` holds +k for
    an upward jump of k levels and -1 for a unit descent, starting at -1.
    """

    kind: str
    levels: np.ndarray
    labels: np.ndarray | None = None
    steps: np.ndarray | None = None
    horizon: int | None = None
    truncated: bool = False

    def states(self) -> list[tuple[int, int]]:
        if self.kind != "labeled":
            raise InvalidArgumentError("only labeled contours have (level, label) states")
        return list(zip(self.levels.tolist(), self.labels.tolist()))

    def __len__(self):
        return int(self.levels.size)

    def __eq__(self, other):
        if not isinstance(other, ContourPath):
            return NotImplemented
        same = self.kind == other.kind and self.horizon == other.horizon and np.array_equal(self.levels, other.levels)
        if self.kind == "labeled":
            return same and np.array_equal(self.labels, other.labels)
        return same and np.array_equal(self.steps, other.steps)


def tree_to_contour(tree: PlanarTree) -> ContourPath:
    """Depth-first labeled contour: an excursion from (-1, 0) back to (-1, 0)."""
    levels = [-1]
    labels = [0]
    # stack entries: (node, next child offset)
    stack = [(tree.root, 0)]
    levels.append(0)
    labels.append(int(tree.types[tree.root]) + 1)
    while stack:
        v, k = stack[-1]
        if k < tree.n_children[v]:
            stack[-1] = (v, k + 1)
            c = int(tree.first_child[v]) + k
            stack.append((c, 0))
            levels.append(int(tree.gen[c]))
            labels.append(int(tree.types[c]) + 1)
        else:
            stack.pop()
            levels.append(int(tree.gen[v]) - 1)
            labels.append(0)
    return ContourPath(
        "labeled",
        np.asarray(levels, dtype=np.int64),
        np.asarray(labels, dtype=np.int64),
        horizon=tree.horizon,
    )


def contour_to_tree(path: ContourPath) -> PlanarTree:
    """Rebuild the planar tree of a labeled excursion.

    Raises
    ------
    DecodeError
        On level moves other than +-1, inconsistent labels, absorption before
        the last state, or a path that does not end at (-1, 0).
    """
    if path.kind != "labeled":
        raise DecodeError("contour_to_tree expects a labeled contour")
    lev = np.asarray(path.levels, dtype=np.int64)
    lab = np.asarray(path.labels, dtype=np.int64)
    if lev.size != lab.size:
        raise DecodeError("levels and labels differ in length")
    if lev.size < 3 or (int(lev[0]), int(lab[0])) != ABSORBING:
        raise DecodeError("excursion must start at (-1, 0) and visit at least one particle")
    types: list[int] = []
    children: list[list[int]] = []
    stack: list[int] = []
    for k in range(1, lev.size):
        d = int(lev[k] - lev[k - 1])
        if d == 1:
            if lab[k] < 1:
                raise DecodeError(f"step {k}: up-step must carry a type label >= 1")
            if not stack and k != 1:
                raise DecodeError(f"step {k}: path left level -1 after absorption")
            v = len(types)
            types.append(int(lab[k]) - 1)
            children.append([])
            if stack:
                children[stack[-1]].append(v)
            stack.append(v)
            if path.horizon is not None and lev[k] > path.horizon:
                raise DecodeError(f"step {k}: level {lev[k]} exceeds the horizon {path.horizon}")
        elif d == -1:
            if lab[k] != 0:
                raise DecodeError(f"step {k}: down-step must carry label 0")
            if not stack:
                raise DecodeError(f"step {k}: descent below level -1")
            stack.pop()
            if not stack and k != lev.size - 1:
                raise DecodeError(f"step {k}: absorbed at level -1 before the end of the path")
        else:
            raise DecodeError(f"step {k}: level moves by {d}, expected +1 or -1")
    if stack:
        raise DecodeError("path ends before returning to level -1")
    return PlanarTree.from_children(types, children, horizon=path.horizon)


def tree_to_jumping(tree: PlanarTree) -> ContourPath:
    """Jumping contour: each maximal run of up-steps collapses to one jump."""
    labeled = tree_to_contour(tree)
    diffs = np.diff(labeled.levels)
    steps = []
    run = 0
    for d in diffs.tolist():
        if d == 1:
            run += 1
        else:
            if run:
                steps.append(run)
                run = 0
            steps.append(-1)
    steps = np.asarray(steps, dtype=np.int64)
    return ContourPath("jumping", -1 + np.concatenate([[0], np.cumsum(steps)]), steps=steps, horizon=tree.horizon)


def descents_from(path: ContourPath, level: int) -> int:
    """Number of unit descents that start at ``level``."""
    if path.kind == "labeled":
        lev = path.levels
        return int(np.count_nonzero((lev[:-1] == level) & (lev[1:] == level - 1)))
    lev = path.levels
    return int(np.count_nonzero((lev[:-1] == level) & (path.steps == -1)))


@dataclass(frozen=True)
class Individual:
    """A CMJ individual: a maximal chain of first daughters.

    ``life`` counts the particles of the chain; ``censored`` is set when the
    chain reaches the horizon, so the true life length is at least ``life``.
    ``births_by_age[j]`` is the number of daughters born at age j + 1.
    """

    birth: int
    life: int
    censored: bool
    births_by_age: tuple
    particles: tuple


def extract_individuals(tree: PlanarTree) -> list[Individual]:
    """Split the tree into first-daughter chains, in breadth-first order of their founders."""
    out = []
    for v in range(tree.size):
        if tree.parent[v] >= 0 and tree.child_index(v) == 0:
            continue
        chain = [v]
        while tree.n_children[chain[-1]] > 0:
            chain.append(int(tree.first_child[chain[-1]]))
        last = chain[-1]
        censored = tree.horizon is not None and int(tree.gen[last]) >= tree.horizon
        births = tuple(max(int(tree.n_children[p]) - 1, 0) for p in chain)
        out.append(Individual(int(tree.gen[v]), len(chain), censored, births, tuple(chain)))
    return out


def individuals_alive(individuals: Sequence[Individual], n: int) -> np.ndarray:
    """Number of individuals alive at each time 0..n."""
    out = np.zeros(n + 1, dtype=np.int64)
    for ind in individuals:
        lo = ind.birth
        hi = min(ind.birth + ind.life - 1, n)
        if lo <= n:
            out[lo : hi + 1] += 1
    return out


@dataclass(frozen=True)
class SpinalDecomposition:
    """Leftmost lineage reaching the horizon and the branches to its right.

    ``right_counts[k]`` is the number of daughters of the level-k spine
    particle that sit to the right of the spine, k = 0..n-1.
    """

    status: str
    spine: tuple = ()
    right_counts: tuple = ()

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def spinal_decompose(tree: PlanarTree, n: int | None = None) -> SpinalDecomposition:
    """Spine of a tree that reaches level ``n`` (default: its horizon)."""
    n = tree.horizon if n is None else n
    if n is None:
        raise InvalidArgumentError("horizon n is required for a tree without one")
    at_n = np.flatnonzero(tree.gen == n)
    if at_n.size == 0:
        return SpinalDecomposition("extinct")
    # breadth-first ids order each level left to right
    tip = int(at_n.min())
    spine = [tip]
    while tree.parent[spine[-1]] >= 0:
        spine.append(int(tree.parent[spine[-1]]))
    spine.reverse()
    counts = tuple(int(tree.n_children[p]) - tree.child_index(c) - 1 for p, c in pairwise(spine))
    return SpinalDecomposition("ok", tuple(spine), counts)
