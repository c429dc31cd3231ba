"""vortexlab: 2D point-vortex dynamics and vortex-blob Euler simulations."""

__version__ = "0.1.0"

from .cloud import PERTURBATION_LABEL, ParticleCloud, VortexParticle
from .kernel import BlobSpec, KernelMode, TreecodeParams

__all__ = [
    "__version__",
    "PERTURBATION_LABEL",
    "ParticleCloud",
    "VortexParticle",
    "BlobSpec",
    "KernelMode",
    "TreecodeParams",
]
