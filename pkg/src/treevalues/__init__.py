"""Exact Shapley and Banzhaf attributions for binary tree ensembles.

Four interchangeable explainers over the coverage-weighted path set function
(two Shapley, two Banzhaf; a quadratic-in-depth baseline and a faster
bottom-up variant each), a brute-force subset-enumeration oracle in float64
or exact rational arithmetic, synthetic instances with known answers, and
comparison metrics.
"""

from .analysis import (
    AttributionTable,
    HypercubeFunction,
    average_modified_cayley,
    error_metrics,
    flip_impacts,
    global_impact,
    hypercube_impacts,
    hypercube_impacts_multi,
    is_monotone,
    modified_cayley,
)
from .banzhaf import (
    add_feature_b,
    del_feature_b,
    explain_banzhaf_basic,
    explain_banzhaf_fast,
)
from .model import (
    METHODS,
    Attribution,
    DimensionMismatchError,
    ModelFormatError,
    PathContext,
    Tree,
    TreeEnsemble,
    TreeNode,
    build_tree,
    dump_dataset,
    dump_model,
    load_dataset,
    load_model,
    load_model_file,
    predict,
)
from .pathdep import (
    ORACLE_FEATURE_CAP,
    OracleCapError,
    eval_g,
    eval_g_all,
    expected_value,
    oracle_values,
    relevant_features,
    subset_weights,
    to_rational,
)
from .shapley import (
    FeatureStack,
    OpCounter,
    add_feature,
    del_feature,
    explain_basic,
    explain_fast,
)
from .synth import (
    ErrorCurvePoint,
    SyntheticSpec,
    error_curve,
    gen_synthetic,
    random_ensemble,
    random_point,
)

__version__ = "0.1.0"

__all__ = [
    "METHODS",
    "ORACLE_FEATURE_CAP",
    "Attribution",
    "AttributionTable",
    "DimensionMismatchError",
    "ErrorCurvePoint",
    "FeatureStack",
    "HypercubeFunction",
    "ModelFormatError",
    "OpCounter",
    "OracleCapError",
    "PathContext",
    "SyntheticSpec",
    "Tree",
    "TreeEnsemble",
    "TreeNode",
    "add_feature",
    "add_feature_b",
    "average_modified_cayley",
    "build_tree",
    "del_feature",
    "del_feature_b",
    "dump_dataset",
    "dump_model",
    "error_curve",
    "error_metrics",
    "eval_g",
    "eval_g_all",
    "expected_value",
    "explain_banzhaf_basic",
    "explain_banzhaf_fast",
    "explain_basic",
    "explain_fast",
    "flip_impacts",
    "gen_synthetic",
    "global_impact",
    "hypercube_impacts",
    "hypercube_impacts_multi",
    "is_monotone",
    "load_dataset",
    "load_model",
    "load_model_file",
    "modified_cayley",
    "oracle_values",
    "predict",
    "random_ensemble",
    "random_point",
    "relevant_features",
    "subset_weights",
    "to_rational",
]
