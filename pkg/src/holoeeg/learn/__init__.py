"""Cross-validation, classifiers, fusion and metrics."""

from .cv import CVFolds, class_weights, stratified_kfold
from .forest import ForestModel, rf_fit, rf_predict
from .fusion import PosteriorMatrix, late_fusion
from .harness import cross_validate, grid_search
from .knn import knn_fit_predict
from .metrics import metrics

__all__ = [
    "CVFolds",
    "ForestModel",
    "PosteriorMatrix",
    "class_weights",
    "cross_validate",
    "grid_search",
    "knn_fit_predict",
    "late_fusion",
    "metrics",
    "rf_fit",
    "rf_predict",
    "stratified_kfold",
]
