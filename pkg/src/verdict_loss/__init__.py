"""Task-specific objectives and evaluation for three-way fact-verification verdicts."""

from .losses import (
    EPS,
    InvalidInputError,
    LossKind,
    LossResult,
    LossSpec,
    VerdictLabel,
    aux_loss,
    batch_loss,
    complement_indicator,
    log_softmax,
    loss_gradient,
    softmax,
    total_loss,
)
from .metrics import (
    ConfusionMatrix,
    EvalReport,
    EvidenceItem,
    McNemarResult,
    PredictionRecord,
    confusion_matrix,
    evaluate,
    fever_score,
    format_percent,
    label_accuracy,
    mcnemar,
    mcnemar_from_counts,
)
from .weighting import FEVER_TRAIN_COUNTS, class_balanced_weights, inverse_frequency_limit, training_weights
from .data import DataFormatError, Dataset, SyntheticConfig, generate_synthetic, load_jsonl, save_dataset, save_predictions
from .trainer import LinearModel, TrainConfig, TrainReport, forward, load_checkpoint, save_checkpoint, select_best_of_n, train

__version__ = "0.1.0"
