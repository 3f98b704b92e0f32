"""Self-dual Yang-Mills toolkit: reducible connections, twistor transforms,
Birkhoff splitting, symmetry flows, finite-type chains and orbit classifiers."""

__version__ = "0.1.0"

from .algebra import GaussianRational, QI, ID2, TAU1, TAU2, TAU3, EPS  # noqa: F401
from .polyfield import PolyField, MatrixPolyField, Laurent, U, UBAR, V, VBAR  # noqa: F401
