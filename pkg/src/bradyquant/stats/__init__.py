"""Statistical validation models and evaluation metrics."""

from .metrics import EvalReport, binary_auc, confusion_and_accuracy, roc_points
from .mixed import MixedModel, fit_mixed
from .plam import (
    BootstrapResult,
    PartiallyLinearOrdinalRegression,
    PlamConfig,
    PlamModel,
    bootstrap_inference,
    deviance_explained,
    fit_plam,
)
