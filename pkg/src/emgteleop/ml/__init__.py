"""Gesture classification: dataset assembly, CNN training, evaluation, screening."""

from emgteleop.ml.data import (
    CueSchedule,
    DatasetError,
    GestureDataset,
    DatasetSplit,
    LEFT_GESTURES,
    RIGHT_GESTURES,
    Trial,
    build_dataset,
    mean_heatmaps,
    split_dataset,
    subset,
)
from emgteleop.ml.model import (
    GestureNet,
    ModelFormatError,
    load_model,
    predict,
    predict_batch,
    save_model,
)
from emgteleop.ml.train import EvalResult, TrainingError, TrainingReport, evaluate, train
from emgteleop.ml.screen import (
    SCREENING_GESTURES,
    ScreeningError,
    ScreeningResult,
    screen_gestures,
    similarity_matrix,
)
