from .evaluator import (
    EvaluationError,
    evaluate_directories,
    evaluate_directory,
    evaluate_model,
    evaluate_predictions,
    predict_samples,
    save_predictions,
)
from .features import dump_features
from .metrics import (
    DatasetScorer,
    MetricInputError,
    MetricReport,
    PRCurve,
    ave_metric,
    e_measure,
    mae,
    max_f,
    s_measure,
    weighted_f,
)
