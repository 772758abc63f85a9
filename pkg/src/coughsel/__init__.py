"""Cough detection: PLS-selected MFCC features feeding a linear SVM."""

__version__ = "0.1.0"

from .audio import AudioClip, DatasetManifest, fit_duration, load_manifest, load_wav, to_mono_resample
from .metrics import ConfusionMatrix, MetricsRow, compute_metrics, confusion, render_report
from .mfcc import MfccConfig, MfccFlattener, compute_mfcc, hz_to_mel, mel_to_hz
from .pca import VariancePCA, fit_pca
from .pipeline import (
    PipelineModel, TrainConfig, evaluate_pipeline, load_model, predict_clip, save_model, sweep,
    train_pipeline,
)
from .pls import PLS1Regression, fit_pls1
from .selectors import RandomFrogSelector, SelectionResult, UVESelector, VIPSelector, take_top_k
from .svm import LinearSVM, fit_svm

__all__ = [
    "AudioClip", "DatasetManifest", "fit_duration", "load_manifest", "load_wav",
    "to_mono_resample", "ConfusionMatrix", "MetricsRow", "compute_metrics", "confusion",
    "render_report", "MfccConfig", "MfccFlattener", "compute_mfcc", "hz_to_mel", "mel_to_hz",
    "VariancePCA", "fit_pca", "PipelineModel", "TrainConfig", "evaluate_pipeline",
    "load_model", "predict_clip", "save_model", "sweep", "train_pipeline", "PLS1Regression", "fit_pls1", "RandomFrogSelector",
    "SelectionResult", "UVESelector", "VIPSelector", "take_top_k", "LinearSVM", "fit_svm",
]
