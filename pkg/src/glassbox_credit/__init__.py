"""Interpretable credit scoring toolkit.

Train a gradient-boosted reference model, rank features by Shapley
attributions, and fit glass-box models (additive shape models, penalized
logistic trees) on the reduced feature set — deterministically, with JSON
artifacts throughout.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    ConvergenceError,
    DataError,
    GlassboxError,
    ModelFormatError,
)
