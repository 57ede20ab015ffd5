"""Resonator networks for factoring Hadamard-product composites of bipolar vectors."""

from ._resonator import *  # noqa: F401,F403
from ._resonator import __version__  # noqa: F401
