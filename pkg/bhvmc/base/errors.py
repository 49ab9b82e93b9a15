# -------------------------------------------------------------------------
# Copyright (c) the bhvmc authors. All rights reserved.
# Licensed under the Apache License, Version 2.0. See
# License.txt in the project root for license
# information.
# ---------------

"""
Exceptions raised by bhvmc. Each one also derives from the builtin it
refines, so callers catching ValueError and friends keep working.
"""


class BhvmcError(Exception):
    """Root of all bhvmc errors."""


class LatticeError(BhvmcError, ValueError):
    """Invalid lattice size or geometry request."""


class SiteIndexError(BhvmcError, IndexError):
    """Site index outside the lattice."""


class ConfigurationError(BhvmcError, ValueError):
    """Invalid occupation vector or forbidden move."""


class DimensionError(BhvmcError, MemoryError):
    """A basis or matrix exceeds its configured guard."""


class AmplitudeError(BhvmcError, ArithmeticError):
    """A log-amplitude or a log-amplitude difference is not finite."""


class SolverError(BhvmcError, ArithmeticError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class FitError(BhvmcError, RuntimeError):
    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class EstimatorError(BhvmcError, ArithmeticError):
    """An estimator got inputs it cannot turn into a finite value."""


class TrainingDivergedError(BhvmcError, RuntimeError):
    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class ConfigError(BhvmcError, ValueError):
    """Experiment configuration failed validation."""
