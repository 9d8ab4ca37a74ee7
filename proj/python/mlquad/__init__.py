"""Multilevel quadrature for parametric diffusion on non-nested P1 meshes."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
