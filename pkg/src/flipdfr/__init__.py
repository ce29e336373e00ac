"""Closed-form DFR estimation and Monte Carlo validation for two-iteration
parallel bit-flipping decoding of (v,w)-regular LDPC/MDPC codes."""

__version__ = "0.1.0"

from .backend import Backend, Pmf, get_backend, parse_precision
from .chain import ChainContext
from .codes import (
    CodeParams,
    ErrorVector,
    ParameterError,
    ParityCheckMatrix,
    Syndrome,
    generate_qc_pcm,
    generate_regular_pcm,
    sample_error,
    syndrome,
)
from .decoder import DecodeTrace, ThresholdSchedule, decode
from .iter1 import Iter1Profile, build_profile, dfr1
from .iter2 import DfrReport, two_iteration_dfr
from .mc import ExperimentPlan, SweepPoint, run_experiment

__all__ = [
    "Backend",
    "Pmf",
    "get_backend",
    "parse_precision",
    "ChainContext",
    "CodeParams",
    "ErrorVector",
    "ParameterError",
    "ParityCheckMatrix",
    "Syndrome",
    "generate_qc_pcm",
    "generate_regular_pcm",
    "sample_error",
    "syndrome",
    "DecodeTrace",
    "ThresholdSchedule",
    "decode",
    "Iter1Profile",
    "build_profile",
    "dfr1",
    "DfrReport",
    "two_iteration_dfr",
    "ExperimentPlan",
    "SweepPoint",
    "run_experiment",
    "__version__",
]
