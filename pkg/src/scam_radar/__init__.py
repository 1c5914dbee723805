"""Scam token detection and impact measurement for constant-product DEX markets."""

__version__ = "0.1.0"

from .errors import ScamRadarError  # noqa: E402
from .kernels import BACKEND  # noqa: E402

__all__ = ["BACKEND", "ScamRadarError", "__version__"]
