"""Group lasso over paired columns, solved by block coordinate descent.

The problem, for centered response ``y - ybar`` and G two-column groups:

    min_theta  0.5 * ||y - b0 - Z theta||^2  +  lam * sqrt(2) * sum_g ||theta_g||_2

The sqrt(2) factor is the common sqrt(group size) weight.  Columns are
orthonormalized per group before solving: each group is centered and mapped
through its eigendecomposition so that ``X_g^T X_g = n * I`` on the retained
rank.  On that scale the blockwise minimizer has the closed form

    theta_g <- (1/n) * max(0, 1 - w / ||rho_g||) * rho_g,
    rho_g = X_g^T r + n * theta_g,   w = lam * sqrt(2)

so each sweep applies exact group updates while the residual ``r`` is
maintained incrementally.  The intercept equals the response mean throughout
because every column is centered.

The penalty lives on the orthonormalized scale (objective values and KKT
certificates refer to that problem); solutions are also back-transformed to
raw-scale per-group coefficient pairs for downstream use.  Path solving uses
warm starts, sequential strong-rule screening, and a full KKT sweep before a
solution is accepted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ConvergenceError, FoldConstructionError, ValidationError

__all__ = [
    "SolverConfig", "GroupSolution", "LambdaSelection", "PairedDesign",
    "group_soft_threshold", "lambda_max", "solve_path", "select_lambda",
    "kkt_margins", "stratified_folds",
]

SQRT2 = math.sqrt(2.0)

# retain eigendirections above this fraction of the leading eigenvalue
_RANK_TOL = 1e-10
# shrink factors at or below this are snapped to an exact zero block
_ZERO_SLACK = 1e-12
# screening threshold slack when hunting KKT violations during the solve
_VIOLATION_SLACK = 1e-9

# when True, every sweep asserts the objective has not increased
DEBUG_CHECK_OBJECTIVE = False


@dataclass(frozen=True)
class SolverConfig:
    """Path and cross-validation controls."""

    path_length: int = 100
    path_min_ratio: float = 1e-3
    tol: float = 1e-7
    max_sweeps: int = 100_000
    cv_folds: int = 10
    cv_repeats: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.path_length < 1:
            raise ConfigError(f"path_length must be >= 1, got {self.path_length}")
        if not 0.0 < self.path_min_ratio <= 1.0:
            raise ConfigError(
                f"path_min_ratio must lie in (0, 1], got {self.path_min_ratio}")
        if self.tol <= 0.0:
            raise ConfigError(f"tol must be positive, got {self.tol}")
        if self.max_sweeps < 1:
            raise ConfigError(f"max_sweeps must be >= 1, got {self.max_sweeps}")
        if self.cv_folds < 2:
            raise ConfigError(f"cv_folds must be >= 2, got {self.cv_folds}")
        if self.cv_repeats < 1:
            raise ConfigError(f"cv_repeats must be >= 1, got {self.cv_repeats}")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")


@dataclass(frozen=True)
class PairedDesign:
    """Minimal design container: paired columns plus the arm labels.

    Any object with ``.Z`` (n x 2G) and ``.t`` works where a design is
    expected; this class exists for callers that have no rule metadata.
    """

    Z: np.ndarray
    t: np.ndarray | None = None


@dataclass(frozen=True)
class GroupSolution:
    """One point on the path.

    ``coefs`` holds raw-scale (treated, control) pairs per group; inactive
    groups are exactly zero.  ``std_coef`` is the concatenated solution of
    the orthonormalized problem that ``objective`` and the KKT certificates
    refer to.
    """

    lam: float
    intercept: float
    coefs: np.ndarray
    objective: float
    sweeps: int
    std_coef: np.ndarray


@dataclass(frozen=True)
class LambdaSelection:
    """Cross-validated penalty choice with its error curve."""

    lam: float
    index: int
    lambdas: np.ndarray
    cv_curve: np.ndarray


def group_soft_threshold(rho, w: float) -> np.ndarray:
    """Proximal map of ``w * ||.||_2`` at ``rho`` (identity design scale)."""
    rho = np.asarray(rho, dtype=np.float64)
    nrm = float(np.linalg.norm(rho))
    if nrm <= w * (1.0 + _ZERO_SLACK):
        return np.zeros_like(rho)
    return (1.0 - w / nrm) * rho


class _Standardized:
    """Groupwise-orthonormalized view of a paired design."""

    __slots__ = ("X", "slices", "transforms", "means", "n", "n_groups", "widths")

    def __init__(self, Z: np.ndarray):
        Z = np.asarray(Z, dtype=np.float64)
        if Z.ndim != 2 or Z.shape[1] % 2:
            raise ValidationError(
                f"design must have paired columns, got shape {Z.shape}")
        n, c2 = Z.shape
        G = c2 // 2
        self.n = n
        self.n_groups = G
        self.means = Z.mean(axis=0)
        Zc = Z - self.means
        cols, self.slices, self.transforms, self.widths = [], [], [], []
        pos = 0
        for g in range(G):
            B = Zc[:, 2 * g:2 * g + 2]
            M = (B.T @ B) / n
            evals, evecs = np.linalg.eigh(M)
            keep = evals > _RANK_TOL * max(float(evals[-1]), 1.0)
            r = int(keep.sum())
            T = evecs[:, keep] / np.sqrt(evals[keep])
            if r:
                cols.append(B @ T)
            self.transforms.append(T)
            self.slices.append(slice(pos, pos + r))
            self.widths.append(r)
            pos += r
        # column-major so per-group column blocks slice contiguously
        self.X = (np.asfortranarray(np.concatenate(cols, axis=1)) if cols
                  else np.empty((n, 0), dtype=np.float64))

    @property
    def n_cols(self) -> int:
        return self.X.shape[1]

    def group_score_norms(self, r: np.ndarray) -> np.ndarray:
        """Per-group ``||X_g^T r||`` computed from one full matvec."""
        s = self.X.T @ r
        out = np.zeros(self.n_groups)
        for g, sl in enumerate(self.slices):
            if sl.start != sl.stop:
                out[g] = np.linalg.norm(s[sl])
        return out

    def back_transform(self, theta: np.ndarray) -> np.ndarray:
        """Map an orthonormal-scale solution to raw (treated, control) pairs."""
        raw = np.zeros((self.n_groups, 2))
        for g, sl in enumerate(self.slices):
            if sl.start != sl.stop:
                raw[g] = self.transforms[g] @ theta[sl]
        return raw

    def group_norms(self, theta: np.ndarray) -> np.ndarray:
        out = np.zeros(self.n_groups)
        for g, sl in enumerate(self.slices):
            if sl.start != sl.stop:
                out[g] = np.linalg.norm(theta[sl])
        return out


class _WorkingSet:
    """Grow-only cache of screened groups and their Gram block.

    The strong rule only ever admits more groups as lambda decreases, so the
    stacked columns, Gram matrix and linear term can be extended
    incrementally along a path instead of rebuilt at every point.
    """

    __slots__ = ("std", "y_c", "groups", "members", "cols", "A", "G", "q",
                 "bounds")

    def __init__(self, std: _Standardized, y_c: np.ndarray):
        self.std = std
        self.y_c = y_c
        self.groups: list[int] = []
        self.members: set[int] = set()
        self.cols = np.empty(0, dtype=np.intp)
        self.A = np.empty((std.n, 0))
        self.G = np.empty((0, 0))
        self.q = np.empty(0)
        self.bounds: list[tuple[int, int]] = []

    @property
    def m(self) -> int:
        return self.A.shape[1]

    def add(self, group_ids) -> None:
        new = [g for g in group_ids if g not in self.members
               and self.std.slices[g].start != self.std.slices[g].stop]
        if not new:
            return
        new_cols = np.concatenate(
            [np.arange(self.std.slices[g].start, self.std.slices[g].stop)
             for g in new])
        An = self.std.X[:, new_cols]
        cross = self.A.T @ An
        m_old = self.m
        pos = m_old
        for g in new:
            width = self.std.slices[g].stop - self.std.slices[g].start
            self.bounds.append((pos, pos + width))
            pos += width
            self.groups.append(g)
            self.members.add(g)
        grown = np.empty((pos, pos))
        grown[:m_old, :m_old] = self.G
        grown[:m_old, m_old:] = cross
        grown[m_old:, :m_old] = cross.T
        grown[m_old:, m_old:] = An.T @ An
        self.G = grown
        self.q = np.concatenate([self.q, An.T @ self.y_c])
        self.cols = np.concatenate([self.cols, new_cols])
        self.A = np.concatenate([self.A, An], axis=1)


def _as_design(design):
    if isinstance(design, np.ndarray):
        return PairedDesign(Z=design)
    return design


def _objective(std: _Standardized, y_c, theta, w: float) -> float:
    r = y_c - std.X @ theta
    return 0.5 * float(r @ r) + w * float(std.group_norms(theta).sum())


def _bcd_gram(G, q, n, w, theta, bounds, tol, sweep_budget, debug_state=None):
    """Cycle exact block updates against the active-set Gram matrix.

    ``G = A^T A`` and ``q = A^T y_c`` for the stacked active columns A, so a
    block update reads its gradient from ``s = G @ theta`` instead of the
    length-n residual; the iterates are identical to residual-mode descent.
    ``theta`` (the stacked active coefficients) is updated in place.

    Returns ``(sweeps_used, converged)``.
    """
    s = G @ theta
    w_zero = w * (1.0 + _ZERO_SLACK)
    for sweep in range(1, sweep_budget + 1):
        max_delta = 0.0
        for a, b in bounds:
            tg = theta[a:b]
            rho = q[a:b] - s[a:b] + n * tg
            nrm = math.sqrt(float(rho @ rho))
            if nrm <= w_zero:
                if not tg.any():
                    continue
                delta = -tg
                theta[a:b] = 0.0
            else:
                new = ((1.0 - w / nrm) / n) * rho
                delta = new - tg
                theta[a:b] = new
            d = float(np.abs(delta).max())
            if d > 0.0:
                s += delta @ G[a:b]  # G is symmetric: rows double as columns
                if d > max_delta:
                    max_delta = d
        if debug_state is not None:
            std, y_c, cols, full = debug_state
            full[cols] = theta
            obj = _objective(std, y_c, full, w)
            prev = getattr(_bcd_gram, "_prev_obj", None)
            assert prev is None or obj <= prev + 1e-10 * (1.0 + abs(prev)), \
                f"objective rose from {prev} to {obj}"
            _bcd_gram._prev_obj = obj
        scale = max(1.0, float(np.abs(theta).max(initial=0.0)))
        if max_delta <= tol * scale:
            return sweep, True
    return sweep_budget, False


def _manifold_newton(G, q, w, theta, bounds, gtol, max_iter=60):
    """Damped Newton on the manifold where the current support stays active.

    Away from zero norms the subproblem is smooth with gradient
    ``G theta - q + w theta_g/||theta_g||``; Levenberg-style damping keeps
    the step well defined along the exactly flat valleys carved out by
    collinear rule columns, which is where plain sweeps crawl.  Groups whose
    norm collapses are snapped to zero (the stationary system has no root
    with them active).  Support growth is left to the exact sweeps outside.
    Purely an accelerator: the blockwise descent afterwards owns the
    convergence contract.  ``theta`` is updated in place.
    """
    if theta.shape[0] == 0:
        return
    mu = 0.0
    it = 0
    rebuild = True
    while it < max_iter:
        if rebuild:
            rebuild = False
            sup = [(a, b) for a, b in bounds if theta[a:b].any()]
            if not sup:
                return
            cols = np.concatenate([np.arange(a, b) for a, b in sup])
            Gs = G[np.ix_(cols, cols)]
            qs = q[cols]
            ts = theta[cols].copy()
            starts = []
            widths = []
            pos = 0
            for a, b in sup:
                starts.append(pos)
                widths.append(b - a)
                pos += b - a
            starts = np.array(starts)
            widths = np.array(widths)
        it += 1
        v = Gs @ ts - qs
        norms = np.sqrt(np.add.reduceat(ts * ts, starts))
        floor = 1e-9 * max(1.0, float(norms.max()))
        if bool((norms < floor).any()):
            vn = np.sqrt(np.add.reduceat(v * v, starts))
            leave = (norms < floor) & (vn < w)
            if bool(leave.any()):
                # score below the penalty weight while the norm collapses:
                # the stationary system has no root with these active
                for i in np.nonzero(leave)[0]:
                    a = starts[i]
                    ts[a:a + widths[i]] = 0.0
                theta[cols] = ts
                rebuild = True
                continue
        inv = w / np.repeat(norms, widths)
        grad = v + inv * ts
        if float(np.abs(grad).max()) <= gtol:
            theta[cols] = ts
            return
        H = Gs.copy()
        for a, wd, nrm in zip(starts, widths, norms):
            c = w / nrm
            if wd == 2:
                u0 = ts[a] / nrm
                u1 = ts[a + 1] / nrm
                H[a, a] += c * (1.0 - u0 * u0)
                H[a + 1, a + 1] += c * (1.0 - u1 * u1)
                cross = -c * u0 * u1
                H[a, a + 1] += cross
                H[a + 1, a] += cross
            # width-1 blocks have no penalty curvature off zero
        if mu > 0.0:
            H[np.diag_indices_from(H)] += mu
        try:
            step = np.linalg.solve(H, -grad)
            if not np.all(np.isfinite(step)):
                raise np.linalg.LinAlgError("non-finite step")
        except np.linalg.LinAlgError:
            mu = max(10.0 * mu, 1e-6 * w)
            continue
        d0 = float(grad @ step)
        if d0 >= 0.0:
            mu = max(10.0 * mu, 1e-6 * w)
            continue
        # line search on the exact decrease: the quadratic part is
        # parametric in t, only the penalty needs recomputing per trial
        gstep = Gs @ step
        quad_b = float(step @ v)
        quad_a = 0.5 * float(step @ gstep)
        pen0 = float(norms.sum())
        noise = 1e-12 * (1.0 + w * pen0)
        t_ls = 1.0
        accepted = False
        while t_ls >= 1e-8:
            cand = ts + t_ls * step
            pen_t = float(np.sqrt(
                np.add.reduceat(cand * cand, starts)).sum())
            df = t_ls * quad_b + t_ls * t_ls * quad_a + w * (pen_t - pen0)
            if df <= 1e-4 * t_ls * d0 + noise:
                accepted = True
                break
            t_ls *= 0.5
        if not accepted:
            mu = max(10.0 * mu, 1e-6 * w)
            continue
        ts = cand
        theta[cols] = ts
        if t_ls == 1.0:
            mu /= 3.0
            if mu < 1e-12 * w:
                mu = 0.0
        elif t_ls < 0.25:
            # barely moving: the model needs damping along the valleys
            mu = max(10.0 * mu, 1e-6 * w)


def _solve_one(std, y_c, lam, theta, r, cfg, score_prev, lam_prev, ws):
    """Solve at one lambda from a warm start; returns (sweeps, scores).

    ``theta`` and ``r`` are updated in place; on return ``r`` is the exact
    residual of the converged solution, and ``scores`` its per-group
    ``||X_g^T r||`` (used by the next point's strong-rule screen).  ``ws``
    is the path's working set; sweeping a superset of the strong-rule
    candidates is harmless because every update is an exact block minimum
    and the full KKT screen still gates the exit.
    """
    w = lam * SQRT2
    need = [g for g, sl in enumerate(std.slices)
            if sl.start != sl.stop and np.any(theta[sl])]
    if score_prev is not None and lam_prev is not None:
        # sequential strong rule on the previous residual's scores
        cut = SQRT2 * (2.0 * lam - lam_prev)
        have = ws.members
        need += [int(g) for g in np.nonzero(score_prev > cut)[0]
                 if int(g) not in have]
    ws.add(need)
    sweeps = 0
    while True:
        budget = cfg.max_sweeps - sweeps
        if budget <= 0:
            raise ConvergenceError(
                f"no convergence within {cfg.max_sweeps} sweeps", lam=lam,
                coefs=theta.copy())
        if ws.m:
            theta_a = theta[ws.cols].copy()
            debug_state = (std, y_c, ws.cols, theta.copy()) \
                if DEBUG_CHECK_OBJECTIVE else None
            if DEBUG_CHECK_OBJECTIVE:
                _bcd_gram._prev_obj = None
            # a few sweeps settle newly screened groups, then Newton does
            # the heavy lifting and the pinned sweep criterion has the
            # final word; alternate until it is met or the budget runs out
            sw, converged = _bcd_gram(ws.G, ws.q, std.n, w, theta_a,
                                      ws.bounds, cfg.tol, min(5, budget),
                                      debug_state)
            sweeps += sw
            rounds = 0
            while not converged:
                budget = cfg.max_sweeps - sweeps
                if budget <= 0:
                    raise ConvergenceError(
                        f"no convergence within {cfg.max_sweeps} sweeps",
                        lam=lam, coefs=theta.copy())
                rounds += 1
                if rounds < 40:
                    # batch-activate screened groups whose score violates,
                    # so Newton sees the right manifold at once (stale
                    # gradients only cost warm-start quality)
                    v = ws.G @ theta_a - ws.q
                    for a, b in ws.bounds:
                        if theta_a[a:b].any():
                            continue
                        nv = math.sqrt(float(v[a:b] @ v[a:b]))
                        if nv > w * (1.0 + _ZERO_SLACK):
                            theta_a[a:b] = ((1.0 - w / nv) / std.n) * -v[a:b]
                    # Newton over the support; the sweeps afterward own
                    # the convergence contract
                    scale = max(1.0, float(np.abs(theta_a).max(initial=0.0)))
                    _manifold_newton(ws.G, ws.q, w, theta_a, ws.bounds,
                                     gtol=0.05 * cfg.tol * std.n * scale)
                    cap = min(10, budget)
                else:
                    cap = budget  # Newton stalled; grind it out honestly
                if DEBUG_CHECK_OBJECTIVE:
                    _bcd_gram._prev_obj = None
                sw, converged = _bcd_gram(ws.G, ws.q, std.n, w, theta_a,
                                          ws.bounds, cfg.tol, cap,
                                          debug_state)
                sweeps += sw
            theta[ws.cols] = theta_a
            r[:] = y_c - ws.A @ theta_a
        else:
            r[:] = y_c
        scores = std.group_score_norms(r)
        violated = [g for g in range(std.n_groups)
                    if g not in ws.members
                    and scores[g] > w * (1.0 + _VIOLATION_SLACK)]
        if not violated:
            return sweeps, scores
        ws.add(violated)


def lambda_max(design, y) -> float:
    """Smallest penalty at which every group coefficient is zero.

    Raises for an all-zero design; returns 0.0 for a constant response.
    """
    design = _as_design(design)
    y = np.asarray(y, dtype=np.float64)
    std = _Standardized(design.Z)
    if y.shape != (std.n,):
        raise ValidationError(f"y has shape {y.shape}, expected ({std.n},)")
    if design.Z.shape[1] and std.n_cols == 0:
        raise ValidationError("design is degenerate: every group is constant")
    if std.n_cols == 0:
        raise ValidationError("design has no groups")
    y_c = y - y.mean()
    return float(std.group_score_norms(y_c).max()) / SQRT2


def _lambda_grid(lmax: float, cfg: SolverConfig) -> np.ndarray:
    if cfg.path_length == 1:
        return np.array([lmax])
    return np.geomspace(lmax, lmax * cfg.path_min_ratio, cfg.path_length)


def solve_path(design, y, cfg: SolverConfig = SolverConfig(),
               lambdas=None) -> list[GroupSolution]:
    """Solve the whole penalty path, warm-starting each point from the last.

    Args:
        design: Object with paired columns ``Z`` (and optionally ``t``).
        y: Response vector.
        cfg: Solver controls.
        lambdas: Optional explicit descending grid; by default a log-spaced
            grid from ``lambda_max`` down to ``lambda_max * path_min_ratio``.

    Returns:
        One ``GroupSolution`` per grid point, in grid order.
    """
    design = _as_design(design)
    y = np.asarray(y, dtype=np.float64)
    std = _Standardized(design.Z)
    if y.shape != (std.n,):
        raise ValidationError(f"y has shape {y.shape}, expected ({std.n},)")
    ybar = float(y.mean())
    y_c = y - ybar
    if lambdas is None:
        lmax = float(std.group_score_norms(y_c).max()) / SQRT2 if std.n_cols \
            else 0.0
        if lmax <= 0.0:
            # response orthogonal to every column: zero solves any penalty
            zero = np.zeros(std.n_cols)
            return [GroupSolution(
                lam=0.0, intercept=ybar, coefs=np.zeros((std.n_groups, 2)),
                objective=0.5 * float(y_c @ y_c), sweeps=0, std_coef=zero)]
        lambdas = _lambda_grid(lmax, cfg)
    else:
        lambdas = np.asarray(lambdas, dtype=np.float64)
    theta = np.zeros(std.n_cols)
    r = y_c.copy()
    ws = _WorkingSet(std, y_c)
    out = []
    score_prev, lam_prev = None, None
    for lam in lambdas:
        sweeps, scores = _solve_one(std, y_c, float(lam), theta, r, cfg,
                                    score_prev, lam_prev, ws)
        raw = std.back_transform(theta)
        intercept = ybar - float(std.means @ raw.ravel())
        obj = 0.5 * float(r @ r) + float(lam) * SQRT2 * float(
            std.group_norms(theta).sum())
        out.append(GroupSolution(
            lam=float(lam), intercept=intercept, coefs=raw, objective=obj,
            sweeps=sweeps, std_coef=theta.copy()))
        score_prev, lam_prev = scores, float(lam)
    return out


def predict_solution(design, sol: GroupSolution) -> np.ndarray:
    """Raw-scale predictions ``intercept + Z @ coefs``."""
    design = _as_design(design)
    return sol.intercept + design.Z @ sol.coefs.ravel()


def stratified_folds(t, k: int, seed) -> np.ndarray:
    """Assign rows to k folds, balanced within each treatment arm.

    A seeded global permutation fixes a row order; rows are then dealt
    round-robin to folds within their own arm.  The assignment depends on
    the arm partition only as a set partition, so relabeling the arms leaves
    every row's fold unchanged.
    """
    t = np.asarray(t)
    n = t.shape[0]
    if k > n:
        raise ConfigError(f"cv_folds={k} exceeds {n} rows")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    order = rng.permutation(n)
    fold = np.empty(n, dtype=np.int64)
    counters = {}
    for i in order:
        arm = int(t[i])
        c = counters.get(arm, 0)
        fold[i] = c % k
        counters[arm] = c + 1
    for arm, c in counters.items():
        if c < k:
            raise FoldConstructionError(
                f"arm {arm} has {c} rows, fewer than {k} folds")
    return fold


def select_lambda(design, y, cfg: SolverConfig = SolverConfig()) -> LambdaSelection:
    """Pick the penalty by cross-validated squared prediction error.

    The grid comes from the full data and is shared by every fold; fold
    models are solved on the training rows only and scored on the held-out
    rows, pooling squared errors.  Exact ties in the curve resolve to the
    larger penalty.
    """
    design = _as_design(design)
    if design.t is None:
        raise ValidationError("design carries no treatment labels for stratification")
    y = np.asarray(y, dtype=np.float64)
    n = y.shape[0]
    if cfg.cv_folds > n:
        raise ConfigError(f"cv_folds={cfg.cv_folds} exceeds {n} rows")
    if n < 2 * cfg.cv_folds:
        raise ConfigError(
            f"need at least {2 * cfg.cv_folds} rows for {cfg.cv_folds} folds")
    lmax = lambda_max(design, y)
    if lmax <= 0.0:
        curve = np.array([float(np.mean((y - y.mean()) ** 2))])
        return LambdaSelection(lam=0.0, index=0, lambdas=np.array([0.0]),
                               cv_curve=curve)
    grid = _lambda_grid(lmax, cfg)
    errs = np.zeros(grid.size)
    for rep in range(cfg.cv_repeats):
        fold = stratified_folds(design.t, cfg.cv_folds, (cfg.seed, rep))
        for f in range(cfg.cv_folds):
            test = fold == f
            train = ~test
            sub = PairedDesign(Z=design.Z[train], t=np.asarray(design.t)[train])
            sols = solve_path(sub, y[train], cfg, lambdas=grid)
            Zt = design.Z[test]
            yt = y[test]
            for i, sol in enumerate(sols):
                resid = yt - (sol.intercept + Zt @ sol.coefs.ravel())
                errs[i] += float(resid @ resid)
    curve = errs / (n * cfg.cv_repeats)
    idx = int(np.argmin(curve))  # grid descends, so first min = largest lambda
    return LambdaSelection(lam=float(grid[idx]), index=idx, lambdas=grid,
                           cv_curve=curve)


def kkt_margins(design, y, sol: GroupSolution) -> tuple[float, float]:
    """Certificate quantities for one solution.

    Returns:
        ``(active, inactive)`` where ``active`` is the max over active groups
        of ``||X_g^T r - w * theta_g / ||theta_g|| || / (1 + ||X_g^T r||)``
        and ``inactive`` the max over zero groups of ``||X_g^T r|| - w``;
        both are 0.0 when the relevant set is empty.
    """
    design = _as_design(design)
    y = np.asarray(y, dtype=np.float64)
    std = _Standardized(design.Z)
    theta = sol.std_coef
    y_c = y - y.mean()
    r = y_c - std.X @ theta
    s = std.X.T @ r
    w = sol.lam * SQRT2
    active_m, inactive_m = 0.0, 0.0
    for g, sl in enumerate(std.slices):
        if sl.start == sl.stop:
            continue
        sg = s[sl]
        tg = theta[sl]
        nrm = float(np.linalg.norm(tg))
        if nrm > 0.0:
            viol = float(np.linalg.norm(sg - w * tg / nrm))
            active_m = max(active_m, viol / (1.0 + float(np.linalg.norm(sg))))
        else:
            inactive_m = max(inactive_m, float(np.linalg.norm(sg)) - w)
    return active_m, inactive_m
