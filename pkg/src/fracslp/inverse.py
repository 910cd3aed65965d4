"""Potential reconstruction from one finite complex spectrum.

The unknown potential is expanded as ``q = sum_{k=1}^M q_k sin(k pi x)`` and
the coefficients are fitted so that the shooting residuals
``F_n = u(q, lambda_n)(1)`` vanish at the measured eigenvalues.  The
iteration is a frozen Newton method: the Jacobian is evaluated once, at q = 0
and the q = 0 eigenvalues, where its entries have a closed form in terms of
Mittag-Leffler functions.  Real and imaginary parts are stacked so every
update is real.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.integrate import simpson

from .errors import NewtonDiverged, RankDeficientJacobian
from .fivp import Mesh, shoot_batch
from .mlf import ml_eval_array
from .potentials import Potential
from .spectrum import enumerate_spectrum

log = logging.getLogger(__name__)

QUAD_POINTS = 512
NEWTON_RTOL = 1e-8
NEWTON_MAXITER = 25


def sine_basis(M: int, x: np.ndarray) -> np.ndarray:
    """Columns ``sin(k pi x)``, k = 1..M."""
    return np.sin(np.pi * np.multiply.outer(np.asarray(x, dtype=float), np.arange(1, M + 1)))


def stack(z: np.ndarray) -> np.ndarray:
    """Real parts on top of imaginary parts (rows for matrices)."""
    z = np.asarray(z)
    return np.concatenate([z.real, z.imag], axis=0)


@dataclass(frozen=True)
class ForwardResidual:
    values: np.ndarray

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    @property
    def stacked(self) -> np.ndarray:
        return stack(self.values)


@dataclass(frozen=True, eq=False)
class FrozenJacobian:
    alpha: float
    eigenvalues: np.ndarray  # q = 0 eigenvalues the entries are evaluated at
    matrix: np.ndarray  # complex N x M

    @property
    def stacked(self) -> np.ndarray:
        return stack(self.matrix)

    @property
    def condition_number(self) -> float:
        s = np.linalg.svd(self.stacked, compute_uv=False)
        return float(s[0] / s[-1])


@dataclass
class NewtonReport:
    iterates: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    errors: list | None = None
    updates: list = field(default_factory=list)
    converged: bool = False
    rank: int | None = None

    @property
    def iterations(self) -> int:
        return len(self.updates)


def forward_residual(spectrum_data, q_coeffs, alpha: float, mesh: Mesh) -> ForwardResidual:
    """``F_n = u(q^M, lambda_n)(1)`` for every datum lambda_n."""
    lam = np.asarray(spectrum_data, dtype=complex)
    coeffs = np.asarray(q_coeffs, dtype=float)
    if coeffs.size > lam.size:
        raise ValueError("need at least as many eigenvalues as coefficients")
    xf = np.arange(2 * mesh.K + 1) / (2 * mesh.K)
    qf = sine_basis(coeffs.size, xf) @ coeffs if coeffs.size else np.zeros_like(xf)
    U = shoot_batch(qf, lam, alpha, mesh.K)
    return ForwardResidual(U[-1].copy())


def green_entries(lambda0: complex, basis, alpha: float, quad_points: int = QUAD_POINTS) -> np.ndarray:
    """Sensitivity of u(0, lambda0)(1) to potential perturbations, by quadrature.

    Evaluates ``int_0^1 (1-t)^(a-1) E_{a,a}(-l (1-t)^a) t E_{a,2}(-l t^a) w(t) dt``
    with composite Simpson on ``quad_points`` intervals for every column of
    ``basis`` (an int M for the sine basis, or a callable returning an
    ``(n, M)`` or ``(n,)`` array).
    """
    if quad_points < 64:
        raise ValueError("quad_points must be at least 64")
    Q = quad_points + (quad_points % 2)
    t = np.arange(Q + 1) / Q
    z = -complex(lambda0) * t**alpha
    e2 = ml_eval_array(alpha, 2.0, z)
    ea = ml_eval_array(alpha, alpha, z)
    kernel = (t ** (alpha - 1) * ea)[::-1]  # (1-t)^(a-1) E_{a,a}(-l (1-t)^a) on the same nodes
    if isinstance(basis, (int, np.integer)):
        W = sine_basis(int(basis), t)
    else:
        W = np.asarray(basis(t), dtype=float)
        if W.ndim == 1:
            W = W[:, None]
        W = W * np.ones((Q + 1, 1))
    integrand = (kernel * t * e2)[:, None] * W
    return simpson(integrand, x=t, axis=0)


def jacobian_entry_green(lambda0: complex, w, alpha: float, quad_points: int = QUAD_POINTS) -> complex:
    """One frozen-Jacobian entry; ``w`` is a sine index k >= 1 or a callable."""
    if isinstance(w, (int, np.integer)):
        k = int(w)
        if k < 1:
            raise ValueError("basis index starts at 1")
        return complex(green_entries(lambda0, lambda t: np.sin(k * np.pi * t), alpha, quad_points)[0])
    return complex(green_entries(lambda0, w, alpha, quad_points)[0])


def build_frozen_jacobian(
    alpha: float, N: int, M: int, mesh: Mesh, quad_points: int = QUAD_POINTS, eigenvalues=None
) -> FrozenJacobian:
    """q = 0 Jacobian for the N smallest eigenvalues and M sine modes."""
    if M > N:
        raise ValueError("M must not exceed N")
    if eigenvalues is None:
        eigenvalues = enumerate_spectrum(Potential.zero(), alpha, N, mesh).eigenvalues
    lam0 = np.asarray(eigenvalues, dtype=complex)[:N]
    rows = [green_entries(l, M, alpha, quad_points) for l in lam0]
    return FrozenJacobian(alpha, lam0, np.array(rows))


class _StackedSolver:
    """Least squares with the stacked Jacobian through a pivoted QR."""

    def __init__(self, J: np.ndarray, rank_rtol: float | None = None):
        self.Q, self.R, self.perm = scipy.linalg.qr(J, mode="economic", pivoting=True)
        d = np.abs(np.diag(self.R))
        rtol = rank_rtol if rank_rtol is not None else max(J.shape) * np.finfo(float).eps
        self.rank = int(np.sum(d > rtol * d[0])) if d.size and d[0] > 0 else 0
        self.size = J.shape[1]

    def solve(self, r: np.ndarray) -> np.ndarray:
        y = scipy.linalg.solve_triangular(self.R, self.Q.T @ r)
        x = np.empty_like(y)
        x[self.perm] = y
        return x


def frozen_newton(
    spectrum_data,
    alpha: float,
    M: int,
    mesh: Mesh,
    q0_coeffs=None,
    maxiter: int = NEWTON_MAXITER,
    rtol: float = NEWTON_RTOL,
    jacobian: FrozenJacobian | None = None,
    q_true: Potential | None = None,
):
    """Frozen Newton iteration ``q <- q - J^+ r(q)`` on the stacked real system.

    ``spectrum_data`` is consumed in ascending modulus and paired by rank with
    the q = 0 eigenvalues of the Jacobian.  Returns ``(coefficients, report)``.
    """
    lam = np.asarray(spectrum_data, dtype=complex)
    lam = lam[np.argsort(np.abs(lam), kind="stable")]
    N = lam.size
    if M > N:
        raise ValueError("M must not exceed the number of eigenvalues")
    q = np.zeros(M) if q0_coeffs is None else np.asarray(q0_coeffs, dtype=float).copy()
    if q.size != M:
        raise ValueError("initial guess must have M coefficients")
    if jacobian is None:
        jacobian = build_frozen_jacobian(alpha, N, M, mesh)
    solver = _StackedSolver(jacobian.stacked)
    report = NewtonReport(errors=[] if q_true is not None else None, rank=solver.rank)
    if solver.rank < M:
        raise RankDeficientJacobian(solver.rank, M)

    growth = 0
    for it in range(maxiter + 1):
        F = forward_residual(lam, q, alpha, mesh)
        report.iterates.append(q.copy())
        report.residuals.append(F.norm)
        if q_true is not None:
            report.errors.append(reconstruction_error(q_true, q))
        log.info("newton %d: |F| = %.3e", it, F.norm)
        if it > 0 and report.residuals[-1] > report.residuals[-2]:
            growth += 1
            if growth >= 3:
                raise NewtonDiverged(report, q)
        else:
            growth = 0
        if it == maxiter:
            break
        delta = solver.solve(F.stacked)
        report.updates.append(delta)
        q_new = q - delta
        if np.linalg.norm(delta) <= rtol * (1 + np.linalg.norm(q)):
            q = q_new
            report.converged = True
            F = forward_residual(lam, q, alpha, mesh)
            report.iterates.append(q.copy())
            report.residuals.append(F.norm)
            if q_true is not None:
                report.errors.append(reconstruction_error(q_true, q))
            break
        q = q_new
    return q, report


# -- error measure -------------------------------------------------------------


def _breakpoints(q: Potential) -> np.ndarray:
    pts = {0.0, 1.0}
    for p in q.pieces:
        pts.update((p.lo, p.hi))
    return np.array(sorted(pts))


def _gauss_segments(breaks: np.ndarray, nodes_per_segment: int):
    g, w = np.polynomial.legendre.leggauss(nodes_per_segment)
    xs, ws = [], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        xs.append(0.5 * (b - a) * g + 0.5 * (a + b))
        ws.append(0.5 * (b - a) * w)
    return np.concatenate(xs), np.concatenate(ws)


def reconstruction_error(q_true: Potential, q_coeffs) -> float:
    """L2(0, 1) distance between ``q_true`` and the sine expansion ``q_coeffs``.

    Gauss-Legendre on subintervals split at the breakpoints of ``q_true``
    (1000+ nodes in total), so jumps do not spoil the quadrature.
    """
    coeffs = np.asarray(q_coeffs, dtype=float)
    breaks = _breakpoints(q_true)
    # refine so that every segment is at most 0.1 long
    fine = np.unique(np.concatenate([breaks, np.linspace(0, 1, 11)]))
    x, w = _gauss_segments(fine, 100)
    diff = q_true(x) - (sine_basis(coeffs.size, x) @ coeffs if coeffs.size else 0.0)
    return float(np.sqrt(np.sum(w * diff**2)))


def sine_projection(q: Potential, M: int) -> np.ndarray:
    """Best L2 approximation of q by the first M sine modes."""
    breaks = np.unique(np.concatenate([_breakpoints(q), np.linspace(0, 1, 11)]))
    x, w = _gauss_segments(breaks, 100)
    return 2.0 * (sine_basis(M, x).T @ (w * q(x)))
