"""Quantile regression for ARMA-AGARCH location-scale time series."""

__version__ = "0.1.0"

from .errors import QRLSError, UserError  # noqa: E402
from .estimation import FitResult, NMOptions, Objective, check_loss, qmle_fit, qr_fit  # noqa: E402
from .inference import confidence_intervals, sandwich_cov, theoretical_asd  # noqa: E402
from .innovations import InnovationSpec  # noqa: E402
from .model import GenerativeParams, ModelOrders, QuantileParams, simulation_design, validate  # noqa: E402
from .quantile_filter import filter_quantiles, filter_with_gradient  # noqa: E402
from .simulate import SimConfig, simulate_path  # noqa: E402

__all__ = [
    "FitResult",
    "GenerativeParams",
    "InnovationSpec",
    "ModelOrders",
    "NMOptions",
    "Objective",
    "QRLSError",
    "QuantileParams",
    "SimConfig",
    "UserError",
    "__version__",
    "check_loss",
    "confidence_intervals",
    "filter_quantiles",
    "filter_with_gradient",
    "qmle_fit",
    "qr_fit",
    "sandwich_cov",
    "simulate_path",
    "simulation_design",
    "theoretical_asd",
    "validate",
]
