"""Classical dynamics and quantum noise of a test mass read out by a Fabry-Perot cavity."""

from .fabry_perot import REFERENCE_DESIGN, CavityDesign
from .loop_model import FrequencyGrid, LoopKernels
from .measurement_map import KernelSet, build_kernels

__version__ = "0.1.0"

__all__ = [
    "REFERENCE_DESIGN",
    "CavityDesign",
    "FrequencyGrid",
    "KernelSet",
    "LoopKernels",
    "build_kernels",
]
