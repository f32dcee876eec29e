"""Weak transport, Hopf-Lax semigroups and convex Poincare constants for discrete measures."""

__version__ = "0.1.0"

from .exceptions import InputError, ResourceError, UnsupportedInputError  # noqa: F401
from .measures import DiscreteMeasure  # noqa: F401
