"""Online submodular maximization by rounding online concave relaxations."""

from .matroid import BaseDecomposition, Matroid
from .oco import EUCLIDEAN, MirrorMap, OcoPolicyState
from .raoco import Trace, run_raoco
from .wtp import ProductFormFunction, ThresholdPotential, WtpFunction

__all__ = [
    "BaseDecomposition",
    "EUCLIDEAN",
    "Matroid",
    "MirrorMap",
    "OcoPolicyState",
    "ProductFormFunction",
    "ThresholdPotential",
    "Trace",
    "WtpFunction",
    "run_raoco",
]

__version__ = "0.1.0"
