"""Fractional initial value problems on [0, 1].

Solves ``D^alpha u = f(x, u)``, ``u(0) = u0``, ``u'(0) = u0'`` for Caputo order
``1 < alpha < 2`` through the equivalent Volterra equation

    u(x) = u0 + u0' x + 1/Gamma(alpha) int_0^x (x - t)^(alpha - 1) f(t, u(t)) dt

with the fractional Adams predictor-corrector: a product rectangle rule
predicts, a product trapezoid rule corrects, and the corrector is evaluated a
second time on its own output.  Richardson extrapolation ``(4 u_{h/2} - u_h)/3``
is available on top.

The march accepts batched states: ``u0``/``u0_prime`` may be arrays, in which
case every node carries an array of that shape and ``rhs`` must broadcast.
The eigenvalue and inverse solvers rely on this to shoot many ``lambda`` at
once.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.special import gamma

from .errors import DivergenceError
from .potentials import Potential


@dataclass(frozen=True)
class Mesh:
    """Uniform mesh ``x_k = k / K`` of [0, 1]."""

    K: int

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 2:
            raise ValueError("mesh needs an integer K >= 2")

    @classmethod
    def from_step(cls, h: float) -> Mesh:
        K = round(1.0 / h)
        if abs(K * h - 1.0) > 1e-9:
            raise ValueError(f"step {h} does not divide [0, 1]")
        return cls(K)

    @property
    def h(self) -> float:
        return 1.0 / self.K

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.K + 1) / self.K

    def refined(self) -> Mesh:
        return Mesh(2 * self.K)


@dataclass(frozen=True, eq=False)
class GridFunction:
    mesh: Mesh
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=complex)
        if values.shape != (self.mesh.K + 1,):
            raise ValueError("grid function needs K + 1 values")
        if not np.all(np.isfinite(values)):
            raise ValueError("grid function values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def x(self) -> np.ndarray:
        return self.mesh.nodes

    @property
    def endpoint(self) -> complex:
        return complex(self.values[-1])


@dataclass(frozen=True)
class IVPSpec:
    """``D^alpha u = rhs(x, u)`` with ``u(0) = u0`` and ``u'(0) = u0_prime``.

    ``rhs`` is called with the node coordinate and the state at that node.
    """

    alpha: float
    u0: complex
    u0_prime: complex
    rhs: Callable[[float, np.ndarray], np.ndarray]

    def __post_init__(self):
        if not 1.0 < self.alpha < 2.0:
            raise ValueError("alpha must lie strictly inside (1, 2)")


def weights_b(alpha: float, k: int) -> np.ndarray:
    """Predictor weights ``b_{j,k+1} = (k+1-j)^alpha - (k-j)^alpha``, j = 0..k."""
    if k < 0:
        raise ValueError("k must be non-negative")
    m = np.arange(k, -1, -1, dtype=float)  # m = k - j
    return (m + 1) ** alpha - m**alpha


def weights_a(alpha: float, k: int) -> np.ndarray:
    """Corrector weights ``a_{j,k+1}``, j = 0..k+1."""
    if k < 0:
        raise ValueError("k must be non-negative")
    a = np.empty(k + 2)
    a[0] = float(k) ** (alpha + 1) - (k - alpha) * (k + 1.0) ** alpha
    m = np.arange(k - 1, -1, -1, dtype=float)  # m = k - j for j = 1..k
    a[1 : k + 1] = (m + 2) ** (alpha + 1) + m ** (alpha + 1) - 2 * (m + 1) ** (alpha + 1)
    a[k + 1] = 1.0
    return a


@lru_cache(maxsize=32)
def _weight_tables(alpha: float, K: int):
    # b_{j,k+1} = B[k-j]; a_{j,k+1} = A[k-j] for 1 <= j <= k; a_{0,k+1} = A0[k]
    m = np.arange(K + 1, dtype=float)
    B = (m + 1) ** alpha - m**alpha
    A = (m + 2) ** (alpha + 1) + m ** (alpha + 1) - 2 * (m + 1) ** (alpha + 1)
    A0 = m ** (alpha + 1) - (m - alpha) * (m + 1) ** alpha
    for arr in (B, A, A0):
        arr.setflags(write=False)
    return B, A, A0


def march(
    alpha: float,
    K: int,
    u0,
    u0_prime,
    rhs: Callable[[int, np.ndarray], np.ndarray],
    corrector_sweeps: int = 1,
) -> np.ndarray:
    """Run the predictor-corrector on ``K`` uniform steps.

    ``rhs(k, u)`` receives the node index on this mesh.  Returns an array of
    shape ``(K + 1,) + batch_shape``.  ``corrector_sweeps`` counts the
    re-evaluations of the corrector after the first one.
    """
    u0 = np.asarray(u0, dtype=complex)
    u1 = np.asarray(u0_prime, dtype=complex)
    shape = np.broadcast_shapes(u0.shape, u1.shape)
    U = np.empty((K + 1,) + shape, dtype=complex)
    F = np.empty_like(U)
    B, A, A0 = _weight_tables(float(alpha), int(K))
    hp = (1.0 / K) ** alpha / gamma(alpha + 1)
    hc = (1.0 / K) ** alpha / gamma(alpha + 2)

    U[0] = u0
    F[0] = rhs(0, U[0])
    with np.errstate(all="ignore"):
        for k in range(K):
            base = u0 + u1 * ((k + 1) / K)
            pred = base + hp * np.tensordot(B[k::-1], F[: k + 1], axes=1)
            hist = A0[k] * F[0]
            if k > 0:
                hist = hist + np.tensordot(A[k - 1 :: -1], F[1 : k + 1], axes=1)
            cbase = base + hc * hist
            val = cbase + hc * rhs(k + 1, pred)
            for _ in range(corrector_sweeps):
                val = cbase + hc * rhs(k + 1, val)
            U[k + 1] = val
            F[k + 1] = rhs(k + 1, val)

    finite = np.isfinite(U).reshape(K + 1, -1).all(axis=1)
    if not finite.all():
        raise DivergenceError(int(np.argmin(finite)))
    return U


def richardson(coarse: np.ndarray, fine: np.ndarray) -> np.ndarray:
    """Combine solutions on h and h/2, restricted to the coarse nodes."""
    return (4.0 * fine[::2] - coarse) / 3.0


def _spec_rhs(spec: IVPSpec, K: int):
    x = np.arange(K + 1) / K
    return lambda k, u: spec.rhs(x[k], u)


def solve(spec: IVPSpec, mesh: Mesh, corrector_sweeps: int = 1) -> GridFunction:
    values = march(spec.alpha, mesh.K, spec.u0, spec.u0_prime, _spec_rhs(spec, mesh.K), corrector_sweeps)
    return GridFunction(mesh, values)


def solve_richardson(spec: IVPSpec, mesh: Mesh, corrector_sweeps: int = 1) -> GridFunction:
    coarse = solve(spec, mesh, corrector_sweeps).values
    fine = solve(spec, mesh.refined(), corrector_sweeps).values
    return GridFunction(mesh, richardson(coarse, fine))


# -- Sturm-Liouville shooting ----------------------------------------------


def shoot_batch(
    qvals: np.ndarray, lambdas, alpha: float, K: int, extrapolate: bool = True
) -> np.ndarray:
    """Solve ``D^alpha u = (q - lambda) u``, ``u(0) = 0``, ``u'(0) = 1`` for many lambda.

    ``qvals`` holds q at the nodes of the *finest* mesh used, i.e. ``2K + 1``
    values when ``extrapolate`` is set and ``K + 1`` otherwise.  Returns the
    solutions on the coarse nodes, shape ``(K + 1, len(lambdas))``.
    """
    lam = np.atleast_1d(np.asarray(lambdas, dtype=complex))

    def run(Kr, q):
        c = q[:, None] - lam[None, :]
        return march(alpha, Kr, np.zeros_like(lam), np.ones_like(lam), lambda k, u: c[k] * u)

    if not extrapolate:
        return run(K, np.asarray(qvals, dtype=float))
    qf = np.asarray(qvals, dtype=float)
    return richardson(run(K, qf[::2]), run(2 * K, qf))


def sensitivity_batch(
    qvals: np.ndarray, lambdas, wvals: np.ndarray, alpha: float, K: int, extrapolate: bool = True
):
    """March the shooting solution u together with its sensitivities.

    Solves ``D^alpha v_k = (q - lambda) v_k + w_k u`` with zero initial data
    for every basis function ``w_k``.  ``wvals`` has shape ``(nodes, M)`` on
    the same node set as ``qvals``.  Returns ``(u, v)`` on the coarse nodes
    with shapes ``(K + 1, L)`` and ``(K + 1, L, M)``.
    """
    lam = np.atleast_1d(np.asarray(lambdas, dtype=complex))
    wvals = np.asarray(wvals, dtype=float)
    L, M = lam.size, wvals.shape[1]

    def run(Kr, q, w):
        c = q[:, None] - lam[None, :]

        def rhs(k, state):
            u = state[:, 0]
            out = c[k][:, None] * state
            out[:, 1:] += u[:, None] * w[k][None, :]
            return out

        u0 = np.zeros((L, M + 1), dtype=complex)
        u1 = np.zeros((L, M + 1), dtype=complex)
        u1[:, 0] = 1.0
        return march(alpha, Kr, u0, u1, rhs)

    qf = np.asarray(qvals, dtype=float)
    if extrapolate:
        S = richardson(run(K, qf[::2], wvals[::2]), run(2 * K, qf, wvals))
    else:
        S = run(K, qf, wvals)
    return S[:, :, 0], S[:, :, 1:]


def potential_nodes(q: Potential, mesh: Mesh, extrapolate: bool = True) -> np.ndarray:
    """q sampled on the finest node set the shooting routines need."""
    K = 2 * mesh.K if extrapolate else mesh.K
    return q(np.arange(K + 1) / K)


def slp_shoot(
    q: Potential, lam: complex, alpha: float, mesh: Mesh, extrapolate: bool = True
) -> GridFunction:
    """Solution of ``-D^alpha u + q u = lambda u``, ``u(0) = 0``, ``u'(0) = 1``.

    The endpoint value is the shooting residual ``u(q, lambda)(1)``.
    """
    _check_alpha(alpha)
    U = shoot_batch(potential_nodes(q, mesh, extrapolate), [lam], alpha, mesh.K, extrapolate)
    return GridFunction(mesh, U[:, 0])


def sensitivity_shoot(
    q: Potential,
    lam: complex,
    w: Callable[[np.ndarray], np.ndarray],
    alpha: float,
    mesh: Mesh,
    u: GridFunction | None = None,
    extrapolate: bool = True,
) -> GridFunction:
    """Derivative of the shooting solution along the potential direction ``w``.

    Solves ``D^alpha v = (q - lambda) v + w u`` with ``v(0) = v'(0) = 0``; the
    endpoint is one Jacobian entry.  When ``u`` is supplied it is used as the
    forcing at the nodes of ``mesh`` (plain predictor-corrector only).  When it
    is omitted, u and v are marched together, which is what Richardson
    extrapolation needs.
    """
    _check_alpha(alpha)
    if u is not None:
        if u.mesh != mesh:
            raise ValueError("u must live on the same mesh")
        qn = q(mesh.nodes)
        wn = np.asarray(w(mesh.nodes), dtype=float) * np.ones(mesh.K + 1)
        force = wn * u.values
        c = qn - lam
        V = march(alpha, mesh.K, 0.0, 0.0, lambda k, v: c[k] * v + force[k])
        return GridFunction(mesh, V)
    Kf = 2 * mesh.K if extrapolate else mesh.K
    xf = np.arange(Kf + 1) / Kf
    wn = (np.asarray(w(xf), dtype=float) * np.ones(Kf + 1))[:, None]
    _, V = sensitivity_batch(q(xf), [lam], wn, alpha, mesh.K, extrapolate)
    return GridFunction(mesh, V[:, 0, 0])


def _check_alpha(alpha: float):
    if not 1.0 < alpha < 2.0:
        raise ValueError("alpha must lie strictly inside (1, 2)")
