"""capflash: behavioral model of a 6-bit capacitive-interpolation flash ADC.

The package splits into the signal-path model (topology, analog_chain,
backend), the measurement harness (characterize), ensemble statistics
(montecarlo) and a CLI front end (cli). Heavy per-sample conversion runs
through a compiled kernel when available, with a NumPy fallback selected
at import time (see capflash.kernels).
"""

__version__ = "0.1.0"

from .topology import AdcTopology, InvalidTopology, build_topology
from .mismatch import DeviceInstance, MismatchModel, draw_instance
from .backend import CodeSample, LatchModel

__all__ = [
    "__version__",
    "AdcTopology",
    "InvalidTopology",
    "build_topology",
    "MismatchModel",
    "DeviceInstance",
    "draw_instance",
    "LatchModel",
    "CodeSample",
]
