"""The fitted treatment-effect model: pipeline, prediction, reporting, I/O.

``fit`` chains the stages: transformed outcomes -> boosted trees -> rule
compilation -> winsorized linear terms -> grouped design -> cross-validated
group lasso.  The fitted object keeps only terms whose coefficient pair is
nonzero, each with a treated-arm coefficient (alpha) and a control-arm
coefficient (beta):

    F(x, t) = b0 + t * sum_k alpha_k b_k(x) + (1 - t) * sum_k beta_k b_k(x)
    tau(x)  = sum_k (alpha_k - beta_k) * b_k(x)

Models serialize to a versioned JSON file whose reals carry 17 significant
digits, so save -> load -> save reproduces the file byte for byte.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, fields
from dataclasses import replace as dataclasses_replace

import numpy as np

from .basis import (LinearTerm, Rule, build_grouped_design, fit_linear_terms,
                    linear_values, rule_activations, support)
from .boosting import GbtConfig, extract_rules, fit_boosted
from .data import Dataset, format_real
from .errors import (ConfigError, FormatVersionError, ParseError, ShapeError,
                     ValidationError)
from .grouplasso import (SolverConfig, select_lambda, solve_path,
                         stratified_folds)
from .transform import PropensitySource, transformed_outcome

__all__ = [
    "FitConfig", "RuleEntry", "LinearEntry", "CausalRuleFitModel",
    "fit", "predict_outcome", "predict_hte",
    "ImportanceRow", "ImportanceReport", "importance",
    "save_model", "load_model", "default_subsample",
    "TuneCell", "TuneResult", "tune_grid",
]

FORMAT_VERSION = 1


def default_subsample(n: int) -> float:
    """Default rows per tree: ``min(n / 2, 100 + 6 * sqrt(n))``."""
    return min(n / 2.0, 100.0 + 6.0 * math.sqrt(n))


@dataclass(frozen=True)
class FitConfig:
    """All knobs of the fitting pipeline in one place.

    ``subsample`` follows the boosting convention (fraction when <= 1, row
    count when > 1); None resolves to ``default_subsample`` at fit time.
    """

    trees: int = 333
    mean_depth: float = 2.0
    shrinkage: float = 0.01
    subsample: float | None = None
    min_leaf: int = 10
    winsor_q: float = 0.025
    path_length: int = 100
    path_min_ratio: float = 1e-3
    tol: float = 1e-7
    max_sweeps: int = 100_000
    cv_folds: int = 10
    cv_repeats: int = 1
    seed: int = 0

    def __post_init__(self):
        # delegate range checks to the stage configs so the rules live once
        self.solver_config()
        if self.subsample is not None and self.subsample <= 0.0:
            raise ConfigError(f"subsample must be positive, got {self.subsample}")
        GbtConfig(n_trees=self.trees, mean_leaves=self.mean_depth,
                  shrinkage=self.shrinkage, subsample=self.subsample or 0.5,
                  min_leaf=self.min_leaf, seed=self.seed)
        if not 0.0 <= self.winsor_q < 0.5:
            raise ConfigError(
                f"winsor_q must lie in [0, 0.5), got {self.winsor_q}")

    def gbt_config(self, n: int, seed: int) -> GbtConfig:
        sub = self.subsample if self.subsample is not None else default_subsample(n)
        return GbtConfig(n_trees=self.trees, mean_leaves=self.mean_depth,
                         shrinkage=self.shrinkage, subsample=sub,
                         min_leaf=self.min_leaf, seed=seed)

    def solver_config(self, seed: int = 0) -> SolverConfig:
        return SolverConfig(path_length=self.path_length,
                            path_min_ratio=self.path_min_ratio,
                            tol=self.tol, max_sweeps=self.max_sweeps,
                            cv_folds=self.cv_folds, cv_repeats=self.cv_repeats,
                            seed=seed)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class RuleEntry:
    rule: Rule
    alpha: float
    beta: float
    support: float


@dataclass(frozen=True)
class LinearEntry:
    term: LinearTerm
    alpha: float
    beta: float
    mean: float  # training mean of the normalized column
    std: float   # training (population) std of the normalized column


@dataclass(frozen=True)
class CausalRuleFitModel:
    """Fitted model: intercept, active terms, and fit metadata."""

    intercept: float
    rule_entries: tuple[RuleEntry, ...]
    linear_entries: tuple[LinearEntry, ...]
    feature_names: tuple[str, ...]
    n: int
    p: int
    seed: int
    lam: float
    config: FitConfig
    cv_error: float


def _seed_pair(seed: int) -> tuple[int, int]:
    """Derive independent integer seeds for the boosting and CV stages."""
    kids = np.random.SeedSequence(seed).spawn(2)
    return tuple(int(k.generate_state(1, np.uint64)[0]) for k in kids)


def _intercept_only(ds: Dataset, cfg: FitConfig) -> CausalRuleFitModel:
    ybar = float(ds.y.mean())
    return CausalRuleFitModel(
        intercept=ybar, rule_entries=(), linear_entries=(),
        feature_names=ds.feature_names, n=ds.n, p=ds.p, seed=cfg.seed,
        lam=0.0, config=cfg, cv_error=float(np.mean((ds.y - ybar) ** 2)))


def _build_basis(ds: Dataset, ps: PropensitySource, cfg: FitConfig,
                 gbt_seed: int):
    """Rule-generation stage: returns (kept rules, supports, linear terms).

    The outcome is centered before the inverse-propensity transform so rule
    generation is invariant under outcome shifts (the per-row weight
    t/pi - (1-t)/(1-pi) has mean zero given x, so the target of the rule
    search keeps its conditional mean).  Rules with support 0 or 1 on the
    training data are dropped.
    """
    centered = ds.replace_y(ds.y - ds.y.mean())
    ytilde = transformed_outcome(centered, ps)
    ens = fit_boosted(ds, ytilde, cfg.gbt_config(ds.n, gbt_seed))
    kept, supports = [], []
    for rule in extract_rules(ens):
        s = support(rule, ds)
        if 0.0 < s < 1.0:
            kept.append(rule)
            supports.append(s)
    terms = fit_linear_terms(ds, cfg.winsor_q)
    return kept, supports, terms


def fit(ds: Dataset, ps: PropensitySource,
        cfg: FitConfig = FitConfig()) -> CausalRuleFitModel:
    """Fit the full pipeline.

    Args:
        ds: Training data with both arms present.
        ps: Propensity source (constant or the stored column).
        cfg: Pipeline configuration.

    Returns:
        The fitted model at the cross-validated penalty.
    """
    n0, n1 = ds.arm_sizes()
    if n0 == 0 or n1 == 0:
        raise ValidationError(
            f"both arms must be present to fit (control={n0}, treated={n1})")
    gbt_seed, cv_seed = _seed_pair(cfg.seed)
    kept, supports, terms = _build_basis(ds, ps, cfg, gbt_seed)
    design = build_grouped_design(ds, kept, terms)
    if design.Z.shape[1] == 0 or not design.Z.any():
        return _intercept_only(ds, cfg)
    solver_cfg = cfg.solver_config(cv_seed)
    sel = select_lambda(design, ds.y, solver_cfg)
    if sel.lam <= 0.0:
        return _intercept_only(ds, cfg)
    path = solve_path(design, ds.y, solver_cfg, lambdas=sel.lambdas)
    sol = path[sel.index]

    rule_entries = []
    for g, rule in enumerate(design.rules):
        a, b = sol.coefs[g]
        if a != 0.0 or b != 0.0:
            rule_entries.append(RuleEntry(
                rule=rule, alpha=float(a), beta=float(b), support=supports[g]))
    linear_entries = []
    for i, term in enumerate(design.linear_terms):
        g = len(design.rules) + i
        a, b = sol.coefs[g]
        if a != 0.0 or b != 0.0:
            col = design.basis_column(g)
            linear_entries.append(LinearEntry(
                term=term, alpha=float(a), beta=float(b),
                mean=float(col.mean()), std=float(col.std())))
    return CausalRuleFitModel(
        intercept=sol.intercept, rule_entries=tuple(rule_entries),
        linear_entries=tuple(linear_entries), feature_names=ds.feature_names,
        n=ds.n, p=ds.p, seed=cfg.seed, lam=sol.lam, config=cfg,
        cv_error=float(sel.cv_curve[sel.index]))


def _as_matrix(model: CausalRuleFitModel, x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2:
        raise ShapeError(f"x must be 1-d or 2-d, got shape {x.shape}")
    if x.shape[1] != model.p:
        raise ShapeError(
            f"x has {x.shape[1]} features, model expects {model.p}")
    return x, single


def _arm_values(model: CausalRuleFitModel, X) -> tuple[np.ndarray, np.ndarray]:
    """Treated-arm and control-arm term sums (no intercept)."""
    n = X.shape[0]
    f1 = np.zeros(n)
    f0 = np.zeros(n)
    for e in model.rule_entries:
        b = rule_activations(e.rule, X)
        f1 += e.alpha * b
        f0 += e.beta * b
    for e in model.linear_entries:
        v = linear_values(e.term, X)
        f1 += e.alpha * v
        f0 += e.beta * v
    return f1, f0


def predict_outcome(model: CausalRuleFitModel, x, t):
    """Outcome prediction ``F(x, t)`` for a row or a matrix of rows."""
    X, single = _as_matrix(model, x)
    t = np.asarray(t)
    if not np.all(np.isin(t, (0, 1))):
        raise ValidationError(f"t must be 0 or 1, got {t!r}")
    t = t.astype(np.float64)
    f1, f0 = _arm_values(model, X)
    out = model.intercept + t * f1 + (1.0 - t) * f0
    return float(out[0]) if single and out.ndim else out


def predict_hte(model: CausalRuleFitModel, x):
    """Treatment-effect prediction, the coefficient-difference form."""
    X, single = _as_matrix(model, x)
    tau = np.zeros(X.shape[0])
    for e in model.rule_entries:
        tau += (e.alpha - e.beta) * rule_activations(e.rule, X)
    for e in model.linear_entries:
        tau += (e.alpha - e.beta) * linear_values(e.term, X)
    return float(tau[0]) if single else tau


@dataclass(frozen=True)
class ImportanceRow:
    kind: str  # "rule" or "linear"
    description: str
    coef_diff: float
    importance: float
    support: float


@dataclass(frozen=True)
class ImportanceReport:
    """Term importances for the effect surface, sorted descending."""

    rows: tuple[ImportanceRow, ...]

    def filtered(self, min_support: float = 0.1, above_mean: bool = True,
                 top: int | None = None) -> tuple[ImportanceRow, ...]:
        """Default display filter: above-mean importance, minimum support."""
        rows = self.rows
        if above_mean and rows:
            mean_imp = sum(r.importance for r in rows) / len(rows)
            rows = tuple(r for r in rows if r.importance > mean_imp)
        rows = tuple(r for r in rows if r.support > min_support)
        if top is not None:
            rows = rows[:top]
        return rows


def importance(model: CausalRuleFitModel) -> ImportanceReport:
    """Rank active terms by their contribution to effect heterogeneity.

    A rule scores ``|alpha - beta| * sqrt(s * (1 - s))`` with s its training
    support; a linear term scores ``|alpha - beta| * std`` with the training
    std of its normalized column.  Linear rows report support 1.0 since the
    term applies to every row.
    """
    rows = []
    for e in model.rule_entries:
        diff = e.alpha - e.beta
        rows.append(ImportanceRow(
            kind="rule",
            description=e.rule.describe(model.feature_names),
            coef_diff=diff,
            importance=abs(diff) * math.sqrt(e.support * (1.0 - e.support)),
            support=e.support))
    for e in model.linear_entries:
        diff = e.alpha - e.beta
        rows.append(ImportanceRow(
            kind="linear",
            description=model.feature_names[e.term.feature],
            coef_diff=diff,
            importance=abs(diff) * e.std,
            support=1.0))
    rows.sort(key=lambda r: -r.importance)  # stable: ties keep term order
    return ImportanceReport(rows=tuple(rows))


# ---------------------------------------------------------------------------
# serialization


def _json_real(v: float) -> str:
    if math.isinf(v):
        return '"+inf"' if v > 0 else '"-inf"'
    return format_real(v)


def _json_str(s: str) -> str:
    return json.dumps(s)


def _config_json(cfg: FitConfig) -> str:
    parts = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if v is None:
            enc = "null"
        elif isinstance(v, int):
            enc = str(v)
        else:
            enc = format_real(v)
        parts.append(f"{_json_str(f.name)}: {enc}")
    return "{" + ", ".join(parts) + "}"


def _model_json(model: CausalRuleFitModel) -> str:
    out = ['{"format_version": ', str(FORMAT_VERSION),
           ', "intercept": ', format_real(model.intercept), ', "rules": [']
    rule_parts = []
    for e in model.rule_entries:
        conds = ", ".join(
            '{"feature": %s, "lo": %s, "hi": %s}'
            % (_json_str(model.feature_names[j]), _json_real(lo), _json_real(hi))
            for j, lo, hi in e.rule.conditions)
        rule_parts.append(
            '{"conditions": [%s], "alpha": %s, "beta": %s, "support": %s}'
            % (conds, format_real(e.alpha), format_real(e.beta),
               format_real(e.support)))
    out.append(", ".join(rule_parts))
    out.append('], "linear": [')
    lin_parts = []
    for e in model.linear_entries:
        lin_parts.append(
            '{"feature": %s, "delta_lo": %s, "delta_hi": %s, "scale": %s, '
            '"alpha": %s, "beta": %s, "mean": %s, "std": %s}'
            % (_json_str(model.feature_names[e.term.feature]),
               _json_real(e.term.lo), _json_real(e.term.hi),
               format_real(e.term.scale), format_real(e.alpha),
               format_real(e.beta), format_real(e.mean), format_real(e.std)))
    out.append(", ".join(lin_parts))
    names = ", ".join(_json_str(c) for c in model.feature_names)
    out.append(
        '], "meta": {"seed": %d, "lambda": %s, "n": %d, "p": %d, '
        '"feature_names": [%s], "config": %s, "cv_error": %s}}'
        % (model.seed, format_real(model.lam), model.n, model.p, names,
           _config_json(model.config), format_real(model.cv_error)))
    return "".join(out)


def save_model(model: CausalRuleFitModel, path: str | os.PathLike) -> None:
    """Write the model as deterministic versioned JSON."""
    text = _model_json(model)
    json.loads(text)  # self-check: the writer must emit valid JSON
    with open(path, "w") as fh:
        fh.write(text)
        fh.write("\n")


def _bound(v) -> float:
    if isinstance(v, str):
        if v in ("-inf", "+inf"):
            return float(v)
        raise ParseError(f"bad interval bound {v!r}")
    return float(v)


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise ParseError(f"model file: missing {key!r} in {where}")
    return obj[key]


def load_model(path: str | os.PathLike) -> CausalRuleFitModel:
    """Read a model written by ``save_model``.

    Raises:
        ParseError: malformed JSON or missing fields.
        FormatVersionError: the file declares an unsupported version.
    """
    with open(path) as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: expected a JSON object")
    version = _require(doc, "format_version", "model")
    if version != FORMAT_VERSION:
        raise FormatVersionError(
            f"{path}: format_version {version!r} unsupported "
            f"(supported: {FORMAT_VERSION})")
    meta = _require(doc, "meta", "model")
    feature_names = tuple(_require(meta, "feature_names", "meta"))
    index = {name: j for j, name in enumerate(feature_names)}

    def feat_index(name):
        if name not in index:
            raise ParseError(f"{path}: unknown feature {name!r}")
        return index[name]

    rule_entries = []
    for obj in _require(doc, "rules", "model"):
        conds = tuple(
            (feat_index(_require(c, "feature", "condition")),
             _bound(_require(c, "lo", "condition")),
             _bound(_require(c, "hi", "condition")))
            for c in _require(obj, "conditions", "rule"))
        rule_entries.append(RuleEntry(
            rule=Rule(tuple(sorted(conds))),
            alpha=float(_require(obj, "alpha", "rule")),
            beta=float(_require(obj, "beta", "rule")),
            support=float(_require(obj, "support", "rule"))))
    linear_entries = []
    for obj in _require(doc, "linear", "model"):
        term = LinearTerm(
            feature=feat_index(_require(obj, "feature", "linear")),
            lo=float(_require(obj, "delta_lo", "linear")),
            hi=float(_require(obj, "delta_hi", "linear")),
            scale=float(_require(obj, "scale", "linear")))
        linear_entries.append(LinearEntry(
            term=term,
            alpha=float(_require(obj, "alpha", "linear")),
            beta=float(_require(obj, "beta", "linear")),
            mean=float(_require(obj, "mean", "linear")),
            std=float(_require(obj, "std", "linear"))))
    cfg_doc = dict(_require(meta, "config", "meta"))
    known = {f.name for f in fields(FitConfig)}
    unknown = set(cfg_doc) - known
    if unknown:
        raise ParseError(f"{path}: unknown config keys {sorted(unknown)}")
    config = FitConfig(**cfg_doc)
    return CausalRuleFitModel(
        intercept=float(_require(doc, "intercept", "model")),
        rule_entries=tuple(rule_entries),
        linear_entries=tuple(linear_entries),
        feature_names=feature_names,
        n=int(_require(meta, "n", "meta")),
        p=int(_require(meta, "p", "meta")),
        seed=int(_require(meta, "seed", "meta")),
        lam=float(_require(meta, "lambda", "meta")),
        config=config,
        cv_error=float(_require(meta, "cv_error", "meta")))


# ---------------------------------------------------------------------------
# grid tuning

# the published search grid for (trees, mean_depth, subsample, shrinkage)
DEFAULT_TUNE_GRID = {
    "trees": (200, 300, 400),
    "mean_depth": (2.0, 3.0, 4.0),
    "subsample": (0.25, 0.50, 0.75),
    "shrinkage": (0.01, 0.05, 0.10),
}


@dataclass(frozen=True)
class TuneCell:
    trees: int
    mean_depth: float
    subsample: float
    shrinkage: float
    cv_error: float


@dataclass(frozen=True)
class TuneResult:
    """Scored grid, best cell first choice on ties in grid order."""

    cells: tuple[TuneCell, ...]
    best: TuneCell

    def best_config(self, base: FitConfig) -> FitConfig:
        return dataclasses_replace(
            base, trees=self.best.trees, mean_depth=self.best.mean_depth,
            subsample=self.best.subsample, shrinkage=self.best.shrinkage)


def tune_grid(ds: Dataset, ps: PropensitySource, base: FitConfig,
              trees=None, mean_depths=None, subsamples=None, shrinkages=None,
              repeats: int = 30) -> TuneResult:
    """Score boosting settings by repeated cross-validation.

    For every grid cell the whole pipeline (rule generation included) is
    refit on each fold's training rows; the held-out rows are scored at
    every penalty on the path and squared errors pool across folds by path
    index.  A cell's score is the smallest pooled error along the path,
    averaged over ``repeats`` fold draws.  Folds are shared across cells so
    the comparison is paired.

    Args:
        ds: Training data.
        ps: Propensity source.
        base: Configuration supplying the non-tuned settings (folds, path,
            winsorization, seed).
        trees, mean_depths, subsamples, shrinkages: Grid axes; each defaults
            to the published grid.
        repeats: Fold redraws to average over.

    Returns:
        All scored cells plus the best one.
    """
    if repeats < 1:
        raise ConfigError(f"repeats must be >= 1, got {repeats}")
    n0, n1 = ds.arm_sizes()
    if n0 == 0 or n1 == 0:
        raise ValidationError(
            f"both arms must be present to tune (control={n0}, treated={n1})")
    axes = {
        "trees": tuple(trees) if trees is not None else DEFAULT_TUNE_GRID["trees"],
        "mean_depth": tuple(mean_depths) if mean_depths is not None
        else DEFAULT_TUNE_GRID["mean_depth"],
        "subsample": tuple(subsamples) if subsamples is not None
        else DEFAULT_TUNE_GRID["subsample"],
        "shrinkage": tuple(shrinkages) if shrinkages is not None
        else DEFAULT_TUNE_GRID["shrinkage"],
    }
    combos = [
        (int(m), float(depth), float(eta), float(v))
        for m in axes["trees"] for depth in axes["mean_depth"]
        for eta in axes["subsample"] for v in axes["shrinkage"]]
    k = base.cv_folds
    if k > ds.n:
        raise ConfigError(f"cv_folds={k} exceeds {ds.n} rows")
    folds = [stratified_folds(ds.t, k, (base.seed, rep))
             for rep in range(repeats)]
    solver_cfg = base.solver_config()
    scores = np.zeros(len(combos))
    for ci, (m, depth, eta, v) in enumerate(combos):
        cfg = dataclasses_replace(base, trees=m, mean_depth=depth,
                                  subsample=eta, shrinkage=v)
        rep_scores = []
        for rep, fold in enumerate(folds):
            errs = np.zeros(base.path_length)
            for f in range(k):
                test = fold == f
                train_ds = ds.subset(np.nonzero(~test)[0])
                test_ds = ds.subset(np.nonzero(test)[0])
                gbt_seed = _tune_seed(base.seed, ci, rep, f)
                kept, _, terms = _build_basis(train_ds, ps, cfg, gbt_seed)
                design = build_grouped_design(train_ds, kept, terms)
                test_design = build_grouped_design(test_ds, kept, terms)
                if design.Z.shape[1] == 0 or not design.Z.any():
                    const = float(train_ds.y.mean())
                    errs += float(((test_ds.y - const) ** 2).sum())
                    continue
                sols = solve_path(design, train_ds.y, solver_cfg)
                preds = [s.intercept + test_design.Z @ s.coefs.ravel()
                         for s in sols]
                for i in range(base.path_length):
                    # a fold whose response is constant yields one degenerate
                    # path point; reuse it for every index
                    pred = preds[min(i, len(preds) - 1)]
                    errs[i] += float(((test_ds.y - pred) ** 2).sum())
            rep_scores.append(errs.min() / ds.n)
        scores[ci] = float(np.mean(rep_scores))
    cells = tuple(
        TuneCell(trees=m, mean_depth=depth, subsample=eta, shrinkage=v,
                 cv_error=float(s))
        for (m, depth, eta, v), s in zip(combos, scores))
    best = cells[int(np.argmin(scores))]  # first min -> earliest grid cell
    return TuneResult(cells=cells, best=best)


def _tune_seed(base: int, combo: int, rep: int, fold: int) -> int:
    seq = np.random.SeedSequence([base, combo, rep, fold])
    return int(seq.generate_state(1, np.uint64)[0])
