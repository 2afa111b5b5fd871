"""Streaming sparse GP regression with HiPPO inducing variables."""

from ._streamgp import (
    InputError,
    Kernel,
    NumericalError,
    generate_synthetic,
    hippo_coefficients,
    nlpd,
    oracle_check,
    rmse,
    run_experiment,
)

__all__ = [
    "InputError",
    "Kernel",
    "NumericalError",
    "generate_synthetic",
    "hippo_coefficients",
    "nlpd",
    "oracle_check",
    "rmse",
    "run_experiment",
]
