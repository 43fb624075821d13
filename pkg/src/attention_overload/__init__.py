"""Preference and attention elicitation from stochastic choice data when
alternatives compete for attention."""

from .core import (
    AOMError,
    Alphabet,
    ChoiceRule,
    Domain,
    Menu,
    Preference,
    all_preferences,
    canonical_menu,
    enumerate_nested_pairs,
    upper_contour,
)
from .models import (
    AttentionRule,
    Dataset,
    attention_frequency,
    check_attention_overload,
    independent_consideration,
    induced_choice_rule,
    logit_attention,
    random_competition_filter,
    sample_dataset,
)
from .characterize import (
    NOT_AOM,
    Constraint,
    ConstraintSystem,
    Kind,
    ac_satisfied,
    attention_bounds_population,
    binary_regularity_revelations,
    construct_pessimistic_representation,
    enumerate_constraints,
    evaluate_constraint,
    is_aom,
    regularity_disjunctions,
    revealed_preference_pac,
)
from .inference import (
    BoundTarget,
    attention_bound_lower,
    attention_bound_upper,
    confidence_set,
    constraint_stats,
    critical_value,
    estimate_choice_rule,
    estimate_correlation,
    joint_attention_bounds,
    test_preference,
    two_step_selection,
)
from .extensions import (
    DefaultChoiceRule,
    check_choice_overload,
    eta_revealed_preference,
    joint_characterization_check,
    normalize_default,
)
from .estimators import AttentionFrequencyBounds, PreferenceTest
from .io import load_dataset, write_dataset
from .simulation import LogitDesign

__all__ = [
    "AOMError",
    "Alphabet",
    "ChoiceRule",
    "Domain",
    "Menu",
    "Preference",
    "all_preferences",
    "canonical_menu",
    "enumerate_nested_pairs",
    "upper_contour",
    "AttentionRule",
    "Dataset",
    "attention_frequency",
    "check_attention_overload",
    "independent_consideration",
    "induced_choice_rule",
    "logit_attention",
    "random_competition_filter",
    "sample_dataset",
    "NOT_AOM",
    "Constraint",
    "ConstraintSystem",
    "Kind",
    "ac_satisfied",
    "attention_bounds_population",
    "binary_regularity_revelations",
    "construct_pessimistic_representation",
    "enumerate_constraints",
    "evaluate_constraint",
    "is_aom",
    "regularity_disjunctions",
    "revealed_preference_pac",
    "BoundTarget",
    "attention_bound_lower",
    "attention_bound_upper",
    "confidence_set",
    "constraint_stats",
    "critical_value",
    "estimate_choice_rule",
    "estimate_correlation",
    "joint_attention_bounds",
    "test_preference",
    "two_step_selection",
    "DefaultChoiceRule",
    "check_choice_overload",
    "eta_revealed_preference",
    "joint_characterization_check",
    "normalize_default",
    "AttentionFrequencyBounds",
    "PreferenceTest",
    "load_dataset",
    "write_dataset",
    "LogitDesign",
]

__version__ = "0.1.0"
