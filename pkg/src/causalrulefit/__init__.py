"""Interpretable heterogeneous treatment effect estimation.

The pipeline transforms outcomes by inverse propensity weighting, grows a
gradient-boosted ensemble of shallow trees on the transformed outcomes,
compiles the trees into interval rules, and refits arm-specific coefficients
for every rule and winsorized linear term with a cross-validated group lasso.
The fitted model is a short additive formula whose treated/control
coefficient differences are the treatment effect surface.
"""

from .basis import (GroupedDesign, LinearTerm, Rule, build_grouped_design,
                    evaluate_rule, fit_linear_terms, linear_values,
                    rule_activations, support)
from .boosting import (BoostedEnsemble, GbtConfig, draw_terminal_count,
                       extract_rules, fit_boosted, subsample_size)
from .data import ColumnSpec, Dataset, load_csv, write_csv
from .errors import (CausalRuleFitError, ColumnError, ConfigError,
                     ConvergenceError, FoldConstructionError,
                     FormatVersionError, ParseError, PropensityRangeError,
                     ShapeError, ValidationError)
from .grouplasso import (GroupSolution, LambdaSelection, PairedDesign,
                         SolverConfig, group_soft_threshold, kkt_margins,
                         lambda_max, select_lambda, solve_path,
                         stratified_folds)
from .model import (CausalRuleFitModel, FitConfig, ImportanceReport,
                    ImportanceRow, LinearEntry, RuleEntry, TuneCell,
                    TuneResult, default_subsample, fit, importance,
                    load_model, predict_hte, predict_outcome, save_model,
                    tune_grid)
from .simulation import (BenchmarkResult, ReplicationResult, ScenarioSpec,
                         SimulatedData, assign_treatment,
                         constant_zero_estimator,
                         difference_in_means_estimator, gen_covariates,
                         gen_scenario, mse, mu, oracle_estimator,
                         proposed_estimator, run_benchmark, tau)
from .transform import PropensitySource, resolve_propensity, transformed_outcome
from .trees import TreeNode, fit_tree, leaf_count, tree_predict

__version__ = "0.1.0"
