"""Numerical study of a nonlocal reaction-diffusion model of spreading
probability densities: KPZ-type 2/3 spreading and the indicator limit
profile on the line, diffusive (Gaussian) behavior in d >= 3, and a
non-Gaussian self-similar steady state in d = 2."""

from .core import (Constants, Field1D, RadialField, RadialGrid, UniformGrid1D,
                   constants, integrate, resample)
from .convolve import (DeltaKernel, MollifierKernel, apply_R, convolve,
                       gaussian_kernel, kernel_from_config, make_R, tophat_kernel)
from .errors import (ConfigError, ConvergenceFailureError, DomainOverflowError,
                     NumericalFailureError, PolyfrontError)

__version__ = "0.1.0"

__all__ = [
    "Constants", "Field1D", "RadialField", "RadialGrid", "UniformGrid1D",
    "constants", "integrate", "resample",
    "DeltaKernel", "MollifierKernel", "apply_R", "convolve",
    "gaussian_kernel", "kernel_from_config", "make_R", "tophat_kernel",
    "ConfigError", "ConvergenceFailureError", "DomainOverflowError",
    "NumericalFailureError", "PolyfrontError",
    "__version__",
]
