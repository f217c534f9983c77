"""Frame delivery ratio prediction: EMA baseline and the ELC pipeline."""

from ._core import (
    ElcModel,
    FdrIoError,
    FdrParseError,
    GilbertElliottParams,
    OutcomeTrace,
    TraceFormat,
    TraceOrigin,
    TrainConfig,
    compute_targets,
    ema_run,
    evaluate,
    evaluate_ema,
    fit_alpha_star,
    fit_elc,
    gen_from_profile,
    gen_gilbert_elliott,
    load_model,
    load_trace,
    predict_series,
    save_model,
    save_trace,
    slice,
)

__all__ = [
    "ElcModel",
    "FdrIoError",
    "FdrParseError",
    "GilbertElliottParams",
    "OutcomeTrace",
    "TraceFormat",
    "TraceOrigin",
    "TrainConfig",
    "compute_targets",
    "ema_run",
    "evaluate",
    "evaluate_ema",
    "fit_alpha_star",
    "fit_elc",
    "gen_from_profile",
    "gen_gilbert_elliott",
    "load_model",
    "load_trace",
    "predict_series",
    "save_model",
    "save_trace",
    "slice",
]

__version__ = "0.1.0"
