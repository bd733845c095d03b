"""Inverse-propensity transformed outcomes.

For a row with outcome y, arm t, and propensity pi, the transformed outcome is

    ytilde = t * y / pi + (1 - t) * (-y) / (1 - pi)

whose conditional mean equals the treatment effect at x under unconfoundedness.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import ColumnError, PropensityRangeError

__all__ = ["PropensitySource", "resolve_propensity", "transformed_outcome", "CLIP_EPS"]

# clamp width used when clipping is switched on
CLIP_EPS = 0.01


@dataclass(frozen=True)
class PropensitySource:
    """Where per-row propensities come from.

    ``constant`` broadcasts one value in (0, 1) to every row; when it is None
    the dataset's stored pscore column is used.  ``clip`` clamps resolved
    scores to [CLIP_EPS, 1 - CLIP_EPS]; it is off by default.
    """

    constant: float | None = None
    clip: bool = False

    def __post_init__(self):
        c = self.constant
        if c is not None and not (0.0 < float(c) < 1.0):
            raise PropensityRangeError(
                f"constant propensity must lie in (0, 1), got {c!r}")


def resolve_propensity(ds: Dataset, ps: PropensitySource) -> np.ndarray:
    """Materialize one propensity per row, validated to lie in (0, 1)."""
    if ps.constant is not None:
        pi = np.full(ds.n, float(ps.constant))
    else:
        if ds.pscore is None:
            raise ColumnError(
                "propensity source references the stored column, "
                "but the dataset has none")
        pi = ds.pscore.copy()
    if ps.clip:
        np.clip(pi, CLIP_EPS, 1.0 - CLIP_EPS, out=pi)
    bad = np.nonzero((pi <= 0.0) | (pi >= 1.0) | ~np.isfinite(pi))[0]
    if bad.size:
        raise PropensityRangeError(
            f"propensity must lie in (0, 1); row {bad[0]} has {pi[bad[0]]!r}")
    return pi


def transformed_outcome(ds: Dataset, ps: PropensitySource) -> np.ndarray:
    """Per-row transformed outcomes; finite whenever propensities are valid."""
    pi = resolve_propensity(ds, ps)
    t = ds.t
    yt = t * ds.y / pi - (1 - t) * ds.y / (1.0 - pi)
    # valid pi and finite y guarantee finiteness; assert the contract anyway
    if not np.all(np.isfinite(yt)):
        raise PropensityRangeError("transformed outcome overflowed")
    return yt
