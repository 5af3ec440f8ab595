"""Learning unsafe-state regions from sparse binary labels via conformal
prediction, with a guarded quadcopter MPC stack, a runtime warning monitor,
experiment harness, and a labeling service."""

__version__ = "0.1.0"

from ._kernels import backend_name

__all__ = ["backend_name", "__version__"]
