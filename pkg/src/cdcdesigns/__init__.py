"""Coded distributed computing schemes built from combinatorial designs.

Submodules:

* :mod:`~cdcdesigns.designs`: t-designs and GDDs, constructions, verification, duals
* :mod:`~cdcdesigns.schemes`: file placement / function assignment from dual designs
* :mod:`~cdcdesigns.shuffle`: coded delivery and one-shot XOR decoding
* :mod:`~cdcdesigns.metrics`: loads, gains, baselines and parameter sweeps
"""

from .designs import *  # noqa: F401,F403
from .metrics import *  # noqa: F401,F403
from .schemes import *  # noqa: F401,F403
from .shuffle import *  # noqa: F401,F403
from . import designs, metrics, schemes, shuffle

__all__ = designs.__all__ + schemes.__all__ + shuffle.__all__ + metrics.__all__
__version__ = "0.1.0"
