"""Sparse Kriging emulation of nonlinear dynamical systems in state-space form."""

from .active_learning import ActiveLearningConfig, SelectionTrace, run_component
from .benchmarks import (
    DynamicalSystem,
    Trajectory,
    bouc_wen,
    duffing,
    generate_training_pool,
    quarter_car,
    reference_integrate,
    two_story,
)
from .emulator import (
    EnsemblePrediction,
    StateSpaceSurrogate,
    emulate,
    ensemble,
    load_surrogate,
    save_surrogate,
)
from .excitation import (
    RandomHarmonic,
    SpectralWhiteNoise,
    magnification_schedule,
    sample_harmonic,
    sample_spectral,
)
from .experiments import (
    ExperimentConfig,
    MetricsReport,
    compare_narx,
    relative_error,
    repeat_experiment,
    run_experiment,
    train_surrogate,
)
from .kriging import KrigingModel, Standardizer, TrainingPool, fit, matern52
from .narx import NarxConfig, NarxModel, build_regressors, fit_lars, free_run
from .pattern_search import SearchConfig, SearchResult, hooke_jeeves, multi_start

__version__ = "0.1.0"
