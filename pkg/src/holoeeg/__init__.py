"""EEG emotion recognition with EMD, Hilbert-Huang and holo-Hilbert spectra."""

from .errors import ValidationError
from .signal import Signal

__version__ = "0.1.0"
__all__ = ["Signal", "ValidationError", "__version__"]
