"""Joint digital beamforming, fronthaul quantization and constant-modulus RF
beamforming for downlink cloud radio access networks."""

from .baselines import fully_digital, random_rf
from .channel import draw_channel, rf_stream
from .estimators import FullyDigitalBeamformer, HybridBeamformer, RandomRFBeamformer
from .exceptions import (DomainError, HybridCranError, InfeasibleStartError, InvalidParameterError,
                         NumericalError)
from .model import DigitalDesign, RfDesign, SystemConfig, weighted_sum_rate
from .optimizer import OptimizerOptions, SolveReport, joint_optimize
from .subsolver import SolveOptions

__all__ = [
    "DigitalDesign", "DomainError", "FullyDigitalBeamformer", "HybridBeamformer", "HybridCranError",
    "InfeasibleStartError", "InvalidParameterError", "NumericalError", "OptimizerOptions",
    "RandomRFBeamformer", "RfDesign", "SolveOptions", "SolveReport", "SystemConfig", "draw_channel",
    "fully_digital", "joint_optimize", "random_rf", "rf_stream", "weighted_sum_rate",
]
__version__ = "0.1.0"
