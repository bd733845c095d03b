"""Gradient boosting on transformed outcomes, and rule compilation.

The ensemble starts from the global mean and adds shrunken regression trees
fit to pseudo-residuals on row subsamples.  Each tree's terminal-node budget
is drawn as ``2 + floor(u)`` with ``u ~ Exp(mean Lbar - 2)``, so trees vary in
size around the configured mean; ``Lbar == 2`` always yields stumps.

Each tree with ``t_m`` leaves contributes ``2 * (t_m - 1)`` candidate rules:
one per non-root node, read off the path from the root.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .basis import Rule
from .data import Dataset
from .errors import ConfigError, ShapeError, ValidationError
from .trees import TreeNode, fit_tree, tree_predict

__all__ = [
    "GbtConfig", "BoostedEnsemble", "draw_terminal_count",
    "subsample_size", "fit_boosted", "extract_rules",
]


@dataclass(frozen=True)
class GbtConfig:
    """Boosting controls.

    ``subsample`` is a row fraction when <= 1 and an absolute row count when
    > 1.  ``mean_leaves`` is the target mean terminal-node count (>= 2).
    """

    n_trees: int = 333
    mean_leaves: float = 2.0
    shrinkage: float = 0.01
    subsample: float = 0.5
    min_leaf: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ConfigError(f"n_trees must be >= 1, got {self.n_trees}")
        if self.mean_leaves < 2.0:
            raise ConfigError(
                f"mean_leaves must be >= 2, got {self.mean_leaves}")
        if not 0.0 < self.shrinkage <= 1.0:
            raise ConfigError(
                f"shrinkage must lie in (0, 1], got {self.shrinkage}")
        if self.subsample <= 0.0:
            raise ConfigError(
                f"subsample must be positive, got {self.subsample}")
        if self.min_leaf < 1:
            raise ConfigError(f"min_leaf must be >= 1, got {self.min_leaf}")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")


def draw_terminal_count(mean_leaves: float, rng: np.random.Generator) -> int:
    """Draw a terminal-node budget ``2 + floor(Exp(mean mean_leaves - 2))``.

    The degenerate setting ``mean_leaves == 2`` returns 2 without consuming
    randomness, so stump ensembles are exactly reproducible across the two
    RNG streams.
    """
    if mean_leaves < 2.0:
        raise ConfigError(f"mean_leaves must be >= 2, got {mean_leaves}")
    if mean_leaves == 2.0:
        return 2
    u = rng.exponential(scale=mean_leaves - 2.0)
    return 2 + int(math.floor(u))


def subsample_size(n: int, subsample: float) -> int:
    """Rows per tree: ``floor(subsample * n)`` as a fraction, capped count otherwise."""
    if subsample <= 1.0:
        return int(math.floor(subsample * n))
    return min(int(math.floor(subsample)), n)


@dataclass
class BoostedEnsemble:
    """Fitted boosting ensemble: ``F(x) = f0 + shrinkage * sum_m tree_m(x)``."""

    f0: float
    shrinkage: float
    trees: list[TreeNode] = field(default_factory=list)
    subsamples: list[np.ndarray] = field(default_factory=list)

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2:
            raise ShapeError(f"X must be 2-d, got shape {X.shape}")
        out = np.full(X.shape[0], self.f0)
        for tree in self.trees:
            out += self.shrinkage * tree_predict(tree, X)
        return out


def fit_boosted(ds: Dataset, ytilde, cfg: GbtConfig) -> BoostedEnsemble:
    """Run the boosting loop on the transformed outcomes.

    Randomness uses two Philox streams split from ``cfg.seed``: one for the
    terminal-node draws, one for row subsampling, so the two kinds of draws
    never interleave.

    Args:
        ds: Training data (covariates only are read here).
        ytilde: Transformed outcomes, length ``ds.n``.
        cfg: Boosting controls.

    Returns:
        The fitted ensemble; ``subsamples[m]`` records the rows that grew
        tree m.
    """
    ytilde = np.asarray(ytilde, dtype=np.float64)
    if ytilde.shape != (ds.n,):
        raise ShapeError(
            f"ytilde has shape {ytilde.shape}, expected ({ds.n},)")
    h = subsample_size(ds.n, cfg.subsample)
    if h < 2 * cfg.min_leaf:
        raise ConfigError(
            f"subsample of {h} rows cannot honor min_leaf={cfg.min_leaf}")
    size_seq, row_seq = np.random.SeedSequence(cfg.seed).spawn(2)
    rng_size = np.random.Generator(np.random.Philox(size_seq))
    rng_rows = np.random.Generator(np.random.Philox(row_seq))
    f0 = float(ytilde.mean())
    F = np.full(ds.n, f0)
    ens = BoostedEnsemble(f0=f0, shrinkage=cfg.shrinkage)
    for _ in range(cfg.n_trees):
        z = ytilde - F
        rows = rng_rows.choice(ds.n, size=h, replace=False)
        t_m = draw_terminal_count(cfg.mean_leaves, rng_size)
        tree = fit_tree(rows, z, ds.X, t_m, cfg.min_leaf)
        F += cfg.shrinkage * tree_predict(tree, ds.X)
        ens.trees.append(tree)
        ens.subsamples.append(rows)
    return ens


def _tree_rules(root: TreeNode) -> list[Rule]:
    """One rule per non-root node, breadth first, left child before right."""
    out = []
    queue = [(root, {})]
    while queue:
        node, conds = queue.pop(0)
        if node.is_leaf:
            continue
        j, c = node.feature, node.threshold
        for child, bound in ((node.left, "hi"), (node.right, "lo")):
            child_conds = dict(conds)
            lo, hi = child_conds.get(j, (-math.inf, math.inf))
            if bound == "hi":
                hi = min(hi, c)
            else:
                lo = max(lo, c)
            if not lo < hi:
                raise ValidationError(
                    f"contradictory path conditions on feature {j}")
            child_conds[j] = (lo, hi)
            out.append(Rule(tuple(sorted(
                (f, b[0], b[1]) for f, b in child_conds.items()))))
            queue.append((child, child_conds))
    return out


def extract_rules(ens: BoostedEnsemble, dedup: bool = True) -> list[Rule]:
    """Compile the ensemble's trees into rules.

    Rules follow tree order, breadth first within a tree.  With ``dedup``
    (the default) duplicates are dropped keeping the first occurrence; with
    ``dedup=False`` the full list is returned, whose length is exactly
    ``sum_m 2 * (leaves_m - 1)``.
    """
    rules = []
    for tree in ens.trees:
        rules.extend(_tree_rules(tree))
    if not dedup:
        return rules
    seen = set()
    unique = []
    for rule in rules:
        if rule.conditions not in seen:
            seen.add(rule.conditions)
            unique.append(rule)
    return unique
