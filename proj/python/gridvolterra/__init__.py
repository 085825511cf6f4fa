"""Topology and second-order interaction identification for radial grids."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
