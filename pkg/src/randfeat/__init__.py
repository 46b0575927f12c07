"""randfeat: random-feature constructions of two-layer networks.

Samples neuron parameters from explicit spectral measures, assembles
networks along four construction paths (plain decaying, periodic,
mollified no-decay, stratified), and verifies the resulting convergence
rates and intermediate bounds empirically.
"""

from .activation import ActivationModel, build_registry
from .domain import DomainBox, box, symmetric_box
from .network import TwoLayerNetwork, evaluate
from .target import (
    SpectralTarget,
    atomic_target,
    cosine_target,
    gaussian_target,
    mixture_target,
)

__all__ = [
    "ActivationModel",
    "DomainBox",
    "SpectralTarget",
    "TwoLayerNetwork",
    "atomic_target",
    "box",
    "build_registry",
    "cosine_target",
    "evaluate",
    "gaussian_target",
    "mixture_target",
    "symmetric_box",
]

__version__ = "0.1.0"
