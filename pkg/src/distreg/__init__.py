"""Distribution regression with wavelet, latent-chart and manifold estimators."""

from .data import Dataset
from .errors import ConfigurationError, DomainError, EmptySampleError

__all__ = ["Dataset", "ConfigurationError", "DomainError", "EmptySampleError"]
__version__ = "0.1.0"
