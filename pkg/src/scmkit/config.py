"""Numeric tolerance for the linear-Gaussian path.

Finite-domain computations are exact (rationals) and never consult this.
"""

import os

DEFAULT_TOLERANCE = 1e-9

#: Condition-number threshold above which Gaussian conditioning regularizes
#: the observed block instead of inverting it directly.
REGULARIZATION_CONDITION = 1e12


def tolerance(tol=None):
    """Resolve the zero-test tolerance: explicit argument, then the
    SCMKIT_TOLERANCE environment variable, then the library default."""
    if tol is not None:
        return float(tol)
    env = os.environ.get("SCMKIT_TOLERANCE")
    if env:
        return float(env)
    return DEFAULT_TOLERANCE
