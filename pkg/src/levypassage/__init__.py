"""First-passage times of Levy processes below zero: simulation and asymptotic checks."""

__version__ = "0.1.0"

from .levy_models import REGISTRY, ModelKind, ModelSpec, get_model  # noqa: E402
from .stable_core import StableParams  # noqa: E402

__all__ = ["REGISTRY", "ModelKind", "ModelSpec", "StableParams", "get_model", "__version__"]
