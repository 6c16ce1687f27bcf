"""Touch-swipe biometric authentication pipeline."""

from . import baseline, dataio, errors, net, touchcore, verify

__version__ = "0.1.0"

__all__ = ["baseline", "dataio", "errors", "net", "touchcore", "verify",
           "__version__"]
