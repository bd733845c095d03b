"""Rule and linear basis terms, and the grouped two-column design.

A rule is a conjunction of half-open interval conditions, one per feature at
most: ``r(x) = prod_j 1[lo_j <= x_j < hi_j]``.  A linear term is a winsorized
covariate rescaled to a common magnitude: ``l_j(x) = s_j * clip(x_j)`` with
``s_j = 0.4 / std(clip(x_j))``.

Every basis term b contributes one coefficient group with the two columns
``(t * b, (1 - t) * b)``: the treated-arm and control-arm copies whose fitted
coefficients are the (alpha, beta) pair of the joint outcome model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import ConfigError, ShapeError, ValidationError

__all__ = [
    "Rule", "LinearTerm", "GroupedDesign",
    "evaluate_rule", "rule_activations", "support",
    "linear_values", "fit_linear_terms", "build_grouped_design",
]

# population std below which a winsorized column counts as constant
_STD_FLOOR = 1e-12


@dataclass(frozen=True)
class Rule:
    """Conjunction of interval conditions ``(feature, lo, hi)``, lo < hi.

    Conditions are kept sorted by feature index with at most one interval per
    feature, so two rules are equal exactly when they test the same region.
    """

    conditions: tuple[tuple[int, float, float], ...]

    def __post_init__(self):
        conds = tuple((int(j), float(lo), float(hi))
                      for j, lo, hi in self.conditions)
        if not conds:
            raise ValidationError("a rule needs at least one condition")
        feats = [j for j, _, _ in conds]
        if feats != sorted(set(feats)):
            raise ValidationError(
                "conditions must be sorted by feature with one interval each")
        for j, lo, hi in conds:
            if j < 0:
                raise ValidationError(f"negative feature index {j}")
            if not lo < hi:
                raise ValidationError(f"empty interval [{lo}, {hi}) on feature {j}")
        object.__setattr__(self, "conditions", conds)

    def describe(self, feature_names) -> str:
        parts = []
        for j, lo, hi in self.conditions:
            parts.append(f"{feature_names[j]}∈[{format(lo, '.6g')},{format(hi, '.6g')})")
        return " & ".join(parts)


def rule_activations(rule: Rule, X) -> np.ndarray:
    """0/1 activation of ``rule`` for every row of ``X``."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ShapeError(f"X must be 2-d, got shape {X.shape}")
    active = np.ones(X.shape[0], dtype=bool)
    for j, lo, hi in rule.conditions:
        col = X[:, j]
        active &= (col >= lo) & (col < hi)
    return active.astype(np.float64)


def evaluate_rule(rule: Rule, x) -> int:
    """Rule indicator for a single row."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ShapeError(f"x must be 1-d, got shape {x.shape}")
    return int(rule_activations(rule, x[None, :])[0])


def support(rule: Rule, ds: Dataset) -> float:
    """Fraction of dataset rows the rule covers."""
    return float(rule_activations(rule, ds.X).mean())


@dataclass(frozen=True)
class LinearTerm:
    """Winsorized, rescaled covariate term.

    ``lo``/``hi`` are the winsor cut points, ``scale`` the normalization
    multiplier; ``scale == 0`` marks a constant column excluded from designs.
    """

    feature: int
    lo: float
    hi: float
    scale: float

    @property
    def included(self) -> bool:
        return self.scale > 0.0


def linear_values(term: LinearTerm, X) -> np.ndarray:
    """Normalized winsorized values ``scale * clip(x)`` for each row."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ShapeError(f"X must be 2-d, got shape {X.shape}")
    return term.scale * np.clip(X[:, term.feature], term.lo, term.hi)


def fit_linear_terms(ds: Dataset, q: float = 0.025) -> list[LinearTerm]:
    """Fit winsor cut points and scales for every covariate.

    Cut points are the q and 1-q empirical quantiles (linear interpolation).
    The scale 0.4 / std uses the population std of the winsorized column;
    columns that winsorize to a constant get scale 0.
    """
    if not 0.0 <= q < 0.5:
        raise ConfigError(f"winsor quantile must lie in [0, 0.5), got {q}")
    terms = []
    for j in range(ds.p):
        col = ds.X[:, j]
        lo, hi = np.quantile(col, [q, 1.0 - q], method="linear")
        w = np.clip(col, lo, hi)
        std = float(w.std())
        scale = 0.4 / std if std >= _STD_FLOOR else 0.0
        terms.append(LinearTerm(feature=j, lo=float(lo), hi=float(hi), scale=scale))
    return terms


@dataclass(frozen=True)
class GroupedDesign:
    """Two-column-per-term design for the arm-paired coefficient fit.

    Group g occupies columns ``2g`` (treated copy) and ``2g + 1`` (control
    copy).  Rule groups come first, then the included linear terms.
    """

    Z: np.ndarray
    t: np.ndarray
    rules: tuple[Rule, ...]
    linear_terms: tuple[LinearTerm, ...]

    def __post_init__(self):
        if self.Z.ndim != 2:
            raise ShapeError(f"Z must be 2-d, got shape {self.Z.shape}")
        if self.Z.shape[1] != 2 * self.n_groups:
            raise ShapeError(
                f"Z has {self.Z.shape[1]} columns for {self.n_groups} groups")
        if self.t.shape[0] != self.Z.shape[0]:
            raise ShapeError("t and Z row counts differ")

    @property
    def n_groups(self) -> int:
        return len(self.rules) + len(self.linear_terms)

    @property
    def n(self) -> int:
        return self.Z.shape[0]

    def basis_column(self, g: int) -> np.ndarray:
        """Raw basis values of group g (arm copies summed back together)."""
        return self.Z[:, 2 * g] + self.Z[:, 2 * g + 1]


def build_grouped_design(ds: Dataset, rules, linear_terms) -> GroupedDesign:
    """Assemble the grouped design from rules and fitted linear terms.

    Linear terms with scale 0 are dropped.  Column pairs follow the group
    order: all rules first, then included linear terms.
    """
    rules = tuple(rules)
    included = tuple(lt for lt in linear_terms if lt.included)
    t = ds.t.astype(np.float64)
    ct = 1.0 - t
    cols = []
    for rule in rules:
        b = rule_activations(rule, ds.X)
        cols.append(t * b)
        cols.append(ct * b)
    for term in included:
        v = linear_values(term, ds.X)
        cols.append(t * v)
        cols.append(ct * v)
    Z = (np.column_stack(cols) if cols
         else np.empty((ds.n, 0), dtype=np.float64))
    return GroupedDesign(Z=Z, t=ds.t.copy(), rules=rules, linear_terms=included)
