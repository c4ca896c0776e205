"""Moment-ratio spectrum sensing under noise-variance uncertainty."""

__version__ = "0.1.0"

from .detectors import (
    DegenerateInputError,
    Detector,
    DetectorOutcome,
    energy_detect,
    energy_statistic,
    energy_threshold,
    moment_detect,
    moment_statistic,
    moment_threshold,
)
from .montecarlo import CurvePoint, SweepAxis, TrialConfig, run_cell, sweep
from .stats_core import (
    MomentSet,
    SignalModel,
    closed_form_variance,
    delta_method_variance,
    q_function,
    q_inverse,
    theoretical_pd,
    theoretical_ratio,
    threshold_for_pf,
)
from .waveform import ChannelKind, Hypothesis, PulseShape, SyncMode, UncertaintyModel
