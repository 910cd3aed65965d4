"""Exception types raised by the solvers.

Every failure that the command-line front end maps to an exit code derives
from :class:`FracSLPError`.
"""

from __future__ import annotations


class FracSLPError(RuntimeError):
    """Base class for numerical failures in this package."""


class SeriesCapExceeded(FracSLPError):
    """The Mittag-Leffler power series did not settle within the term cap."""


class AsymptoticDomainError(FracSLPError, ValueError):
    """The asymptotic expansion was requested inside the dispatch radius."""


class NonFiniteValue(FracSLPError, ArithmeticError):
    """A special-function evaluation overflowed or produced NaN."""


class DivergenceError(FracSLPError):
    """The predictor-corrector march produced a non-finite value."""

    def __init__(self, node: int, message: str | None = None):
        self.node = node
        super().__init__(message or f"divergence at node {node}")


class SecantError(FracSLPError):
    """Eigenvalue iteration failed; ``reason`` is 'stagnation' or 'maxiter'."""

    def __init__(self, reason: str, last: complex, residual: float, iterations: int):
        self.reason = reason
        self.last = last
        self.residual = residual
        self.iterations = iterations
        super().__init__(
            f"{reason}: last iterate {last:.10g} (|u(1)|={residual:.3e}, {iterations} iterations)"
        )


class IncompleteSpectrum(FracSLPError):
    """Fewer distinct eigenvalues than requested were found."""

    def __init__(self, missing: list[int], spectrum=None):
        self.missing = list(missing)
        self.spectrum = spectrum
        super().__init__(f"incomplete-spectrum: ranks {self.missing} not found")


class RankDeficientJacobian(FracSLPError):
    """The stacked frozen Jacobian has numerical rank below the basis size."""

    def __init__(self, rank: int, size: int):
        self.rank = rank
        self.size = size
        super().__init__(f"jacobian-rank-deficient: rank {rank} < {size}")


class NewtonDiverged(FracSLPError):
    """The frozen Newton residual grew on consecutive iterations."""

    def __init__(self, report=None, q_coeffs=None):
        self.report = report
        self.q_coeffs = q_coeffs
        super().__init__("diverged: residual grew on 3 consecutive iterations")
