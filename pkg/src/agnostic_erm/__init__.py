"""Agnostic ERM learning curves: concept classes, combinatorial certificates,
labeled distributions, adversarial constructions, Monte Carlo curves and bounds."""

from .bounds import (BoundParams, LocalizedQuantities, finite_class_bound, hoeffding,
                     localized_quantities, mcdiarmid_deviation, pairwise_deviation_scaling,
                     slud_lower, uniform_bernstein)
from .combinatorics import (Budget, EluderSequence, StarSet, VCEluderSequence, VCResult,
                            extract_eluder_from_vanishing_distance, find_eluder, find_star_set,
                            find_vc_eluder, is_shattered, vc_dimension, verify_eluder, verify_star,
                            verify_vc_eluder)
from .concept_class import (ALL_ONES, ALL_ZEROS, ClassKind, ConceptClass, Dataset, Hypothesis,
                            LabeledExample, class_from_spec, distinct_behaviors, make_builtin,
                            resolve_hypothesis, version_space)
from .curves import (LearningCurve, RateVerdict, Regime, checkpoint_compare, classify_rate,
                     estimate_checkpoints, estimate_curve, geometric_grid)
from .design import DesignMode, SequenceDesign, sequence_design
from .distributions import (AdversarialConstruction, LabeledDistribution, bayes_classifier,
                            build_eluder_adversarial, build_vc_eluder_adversarial, condition1_gap,
                            epsilon_ball, example5_distribution, excess_inf, is_centered, sample,
                            sigma_sq_eps, tabulated, true_error)
from .erm import ErmOutcome, TiePolicy, brute_force_expected_excess, empirical_error, erm_select
from .errors import AgnosticErmError
from .rates import RateFunction

__version__ = "0.1.0"
