"""Regression trees grown best-first to a fixed number of leaves.

Each step splits the leaf whose best split yields the largest SSE reduction,
so a tree asked for ``n_leaves`` terminal nodes performs ``n_leaves - 1``
greedy splits (fewer if no admissible split remains).  Split thresholds sit
at midpoints between adjacent distinct sorted values; a row goes left when
``x[feature] < threshold``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

__all__ = ["TreeNode", "fit_tree", "tree_predict", "leaf_count"]

# a split must explain more than this fraction of its node's SSE;
# guards against float-noise "gains" on (near-)constant targets
_GAIN_EPS = 1e-12


@dataclass
class TreeNode:
    """One node; ``feature is None`` marks a leaf.

    ``value`` is the mean target of the training rows that reached the node
    (the prediction, for leaves) and ``count`` is how many rows those were.
    """

    value: float
    count: int
    feature: int | None = None
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None


class _Candidate:
    """A grown leaf plus its best admissible split, if any."""

    __slots__ = ("node", "idx", "gain", "feature", "threshold", "n_left")

    def __init__(self, node, idx, X, z, min_leaf):
        self.node = node
        self.idx = idx
        self.gain = -np.inf
        self.feature = -1
        self.threshold = 0.0
        self.n_left = 0
        self._search(X, z, min_leaf)

    def _search(self, X, z, min_leaf):
        idx = self.idx
        n = idx.size
        if n < 2 * min_leaf:
            return
        zs_all = z[idx]
        total = float(zs_all.sum())
        base = total * total / n
        sse = float(zs_all @ zs_all) - base
        if sse <= 0.0:
            return
        floor_gain = _GAIN_EPS * sse
        nl = np.arange(1, n)
        ok_size = (nl >= min_leaf) & (nl <= n - min_leaf)
        for j in range(X.shape[1]):
            xj = X[idx, j]
            order = np.argsort(xj, kind="stable")
            xs = xj[order]
            valid = ok_size & (xs[1:] > xs[:-1])
            if not valid.any():
                continue
            lsum = np.cumsum(zs_all[order])[:-1]
            gain = lsum * lsum / nl + (total - lsum) ** 2 / (n - nl) - base
            gain = np.where(valid, gain, -np.inf)
            i = int(np.argmax(gain))  # first max -> lowest threshold on ties
            g = float(gain[i])
            # strict > keeps the lowest feature index on exact ties
            if g > floor_gain and g > self.gain:
                self.gain = g
                self.feature = j
                self.threshold = 0.5 * (xs[i] + xs[i + 1])
                self.n_left = i + 1

    @property
    def splittable(self) -> bool:
        return self.feature >= 0

    def split(self, X, z, min_leaf):
        """Apply the stored split; returns the two child candidates."""
        j, c = self.feature, self.threshold
        idx = self.idx
        mask = X[idx, j] < c
        li, ri = idx[mask], idx[~mask]
        node = self.node
        node.feature = j
        node.threshold = c
        node.left = TreeNode(value=float(z[li].mean()), count=li.size)
        node.right = TreeNode(value=float(z[ri].mean()), count=ri.size)
        return (_Candidate(node.left, li, X, z, min_leaf),
                _Candidate(node.right, ri, X, z, min_leaf))


def fit_tree(rows, targets, X, n_leaves: int, min_leaf: int) -> TreeNode:
    """Grow a tree on ``X[rows]`` against ``targets[rows]``.

    Args:
        rows: Indices of the rows to train on.
        targets: Full-length target vector.
        X: Full covariate matrix.
        n_leaves: Terminal-node budget (>= 2).
        min_leaf: Minimum rows in each child.

    Returns:
        The root node.  With fewer than ``2 * min_leaf`` rows the root itself
        is the single leaf.
    """
    if n_leaves < 2:
        raise ConfigError(f"n_leaves must be >= 2, got {n_leaves}")
    if min_leaf < 1:
        raise ConfigError(f"min_leaf must be >= 1, got {min_leaf}")
    rows = np.asarray(rows, dtype=np.intp)
    if rows.size == 0:
        raise ConfigError("cannot fit a tree on zero rows")
    targets = np.asarray(targets, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    root = TreeNode(value=float(targets[rows].mean()), count=rows.size)
    frontier = [_Candidate(root, rows, X, targets, min_leaf)]
    while len(frontier) < n_leaves:
        best = None
        for cand in frontier:  # first wins ties -> creation order
            if cand.splittable and (best is None or cand.gain > best.gain):
                best = cand
        if best is None:
            break
        frontier.remove(best)
        frontier.extend(best.split(X, targets, min_leaf))
    return root


def tree_predict(root: TreeNode, X) -> np.ndarray:
    """Vectorized prediction: each row gets its leaf's value."""
    X = np.asarray(X, dtype=np.float64)
    out = np.empty(X.shape[0])
    stack = [(root, np.arange(X.shape[0]))]
    while stack:
        node, idx = stack.pop()
        if node.is_leaf:
            out[idx] = node.value
        else:
            mask = X[idx, node.feature] < node.threshold
            stack.append((node.left, idx[mask]))
            stack.append((node.right, idx[~mask]))
    return out


def leaf_count(root: TreeNode) -> int:
    stack, n = [root], 0
    while stack:
        node = stack.pop()
        if node.is_leaf:
            n += 1
        else:
            stack.extend((node.left, node.right))
    return n
