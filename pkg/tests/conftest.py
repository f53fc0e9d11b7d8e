import json

import pytest

from treevalues import load_model

TWO_FEATURE_DOC = {
    "format_version": 1,
    "num_features": 2,
    "aggregation": "average",
    "trees": [{"nodes": [
        {"kind": "split", "feature": 0, "threshold": 5.0, "left": 1, "right": 2,
         "coverage": 4.0},
        {"kind": "leaf", "value": 0.0, "coverage": 2.0},
        {"kind": "split", "feature": 1, "threshold": 3.0, "left": 3, "right": 4,
         "coverage": 2.0},
        {"kind": "leaf", "value": 10.0, "coverage": 1.0},
        {"kind": "leaf", "value": 30.0, "coverage": 1.0},
    ]}],
}

# minimal model whose Banzhaf values do not sum to predict - expected_value
# (gap is exactly 1/13 at x = (0, 3, 1))
BANZHAF_GAP_DOC = {
    "format_version": 1,
    "num_features": 3,
    "aggregation": "average",
    "trees": [{"nodes": [
        {"kind": "split", "feature": 0, "threshold": 2.0, "left": 1, "right": 2,
         "coverage": 13.0},
        {"kind": "leaf", "value": 5.0, "coverage": 2.0},
        {"kind": "split", "feature": 2, "threshold": 2.0, "left": 3, "right": 4,
         "coverage": 11.0},
        {"kind": "leaf", "value": -1.0, "coverage": 3.0},
        {"kind": "split", "feature": 1, "threshold": 2.0, "left": 5, "right": 6,
         "coverage": 8.0},
        {"kind": "leaf", "value": 4.0, "coverage": 4.0},
        {"kind": "leaf", "value": 3.0, "coverage": 4.0},
    ]}],
}
BANZHAF_GAP_POINT = [0.0, 3.0, 1.0]


def model_from_doc(doc):
    return load_model(json.dumps(doc))


@pytest.fixture
def two_feature_model():
    """Root splits f0 at 5 (left: leaf 0, cov 2); right splits f1 at 3
    (leaves 10 and 30, cov 1 each).  At x=(7,4): g({})=10, g({0})=20,
    g({1})=15, g({0,1})=30, so phi = (12.5, 7.5) and Banzhaf coincides."""
    return model_from_doc(TWO_FEATURE_DOC)


@pytest.fixture
def banzhaf_gap_model():
    return model_from_doc(BANZHAF_GAP_DOC)
