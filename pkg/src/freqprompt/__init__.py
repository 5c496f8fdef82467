"""Frequency-domain prompting for underwater segmentation, at desk scale.

Haar wavelet priors, frequency-aware point selection, a frequency-gated
adapter, a spatial plus channel state-space block with a manual backward
pass, boundary-weighted losses and the usual segmentation metrics.
"""
from .errors import (ConfigError, CoordinateError, DecodeError, DimensionError, NumericError,
                     ParameterError, StateError)
from .wavelet import SubBands, dhwt, frequency_map, high_freq_map, idhwt, soft_threshold
from .fps import PromptSet, select_prompts
from .metrics import MetricReport, metric_suite
from .config import PipelineConfig
from .pipeline import run_pipeline

__version__ = "0.1.0"
