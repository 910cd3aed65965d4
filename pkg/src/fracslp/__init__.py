"""Forward and inverse solvers for fractional Sturm-Liouville problems.

``-D^alpha u + q u = lambda u`` on (0, 1) with a Caputo derivative of order
``1 < alpha < 2`` and Dirichlet conditions.  Submodules:

* :mod:`fracslp.mlf` evaluates Mittag-Leffler functions and zero asymptotics,
* :mod:`fracslp.fivp` solves fractional initial value problems,
* :mod:`fracslp.spectrum` computes eigenvalues by shooting,
* :mod:`fracslp.inverse` reconstructs q from eigenvalues,
* :mod:`fracslp.cli` is the command-line front end.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .errors import (
    DivergenceError,
    FracSLPError,
    IncompleteSpectrum,
    NewtonDiverged,
    RankDeficientJacobian,
    SecantError,
)
from .fivp import GridFunction, IVPSpec, Mesh, slp_shoot, solve, solve_richardson
from .inverse import build_frozen_jacobian, frozen_newton, reconstruction_error
from .mlf import MLParams, eig_asymptotic, ml_eval, zero_asymptote
from .potentials import Potential, q1, q2
from .spectrum import Eigenpair, Spectrum, decay_remainders, enumerate_spectrum, secant_solve

__all__ = [
    "DivergenceError",
    "Eigenpair",
    "FracSLPError",
    "GridFunction",
    "IVPSpec",
    "IncompleteSpectrum",
    "MLParams",
    "Mesh",
    "NewtonDiverged",
    "Potential",
    "RankDeficientJacobian",
    "SecantError",
    "Spectrum",
    "build_frozen_jacobian",
    "decay_remainders",
    "eig_asymptotic",
    "enumerate_spectrum",
    "frozen_newton",
    "ml_eval",
    "q1",
    "q2",
    "reconstruction_error",
    "secant_solve",
    "slp_shoot",
    "solve",
    "solve_richardson",
    "zero_asymptote",
]
