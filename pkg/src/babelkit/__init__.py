"""Style-consistency testing and guided-diffusion repair for machine
translation output."""

from .configs import DetectionConfig, DiffusionConfig, RepairConfig, TrainingConfig

__version__ = "0.1.0"

__all__ = [
    "DetectionConfig",
    "DiffusionConfig",
    "RepairConfig",
    "TrainingConfig",
    "__version__",
]
