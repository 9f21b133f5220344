"""Noncoherent space-time block codes built from qudit stabilizer codes."""

from .codebook import Codebook, generate_packing
from .config import CodeConfig, ConfigError
from .estimator import QSTBCDetector
from .stab import StabilizerCode, build_code

__version__ = "0.1.0"

__all__ = [
    "CodeConfig",
    "ConfigError",
    "Codebook",
    "generate_packing",
    "StabilizerCode",
    "build_code",
    "QSTBCDetector",
]
