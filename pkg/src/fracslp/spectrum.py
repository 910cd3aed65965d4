"""Dirichlet eigenvalues of ``-D^alpha + q`` on (0, 1) by shooting.

An eigenvalue is a root of ``lambda -> u(q, lambda)(1)`` where u solves the
initial value problem with ``u(0) = 0``, ``u'(0) = 1``.  Roots are found with
the secant method; seeds come from zeros of ``E_{alpha,2}(-lambda)`` (the
exact q = 0 eigenvalues) shifted by the mean of q.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import bisect

from .errors import IncompleteSpectrum, SecantError
from .fivp import GridFunction, Mesh, potential_nodes, shoot_batch
from .mlf import MLParams, ml_eval, ml_eval_array, zero_asymptote
from .potentials import Potential

log = logging.getLogger(__name__)

SECANT_TOL = 1e-12
SEED_IMAG = 0.5
DEDUP_RTOL = 1e-6
EXTRA_SEEDS = 4
# real zeros of E_{alpha,2}(-lambda) first appear near alpha = 1.59911525
REAL_ZERO_ALPHA = 1.599


@dataclass(frozen=True, eq=False)
class Eigenpair:
    """One eigenvalue with its eigenfunction (normalised by u'(0) = 1).

    ``index`` is the rank by |lambda| inside a :class:`Spectrum`, 0 when the
    pair was computed on its own.
    """

    index: int
    lam: complex
    eigenfunction: GridFunction
    residual: float
    iterations: int


@dataclass(frozen=True, eq=False)
class Spectrum:
    alpha: float
    potential: Potential
    mesh: Mesh
    pairs: tuple[Eigenpair, ...]
    missing: tuple[int, ...] = field(default=())

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([p.lam for p in self.pairs])

    def __len__(self):
        return len(self.pairs)


# -- secant iteration ------------------------------------------------------


def _secant_batch(qf, alpha, lam0, lam1, K, tol, maxiter):
    """Secant iterations for many seeds in lockstep.

    Returns final lambdas, residuals, iteration counts, status codes
    ('ok', 'stagnation', 'maxiter') and the last shooting solutions.
    """
    lam0 = np.asarray(lam0, dtype=complex).copy()
    lam1 = np.asarray(lam1, dtype=complex).copy()
    n = lam0.size
    U1 = shoot_batch(qf, lam1, alpha, K)
    f0 = shoot_batch(qf, lam0, alpha, K)[-1]
    f1 = U1[-1].copy()
    iters = np.zeros(n, dtype=int)
    status = np.array(["maxiter"] * n, dtype=object)
    active = np.ones(n, dtype=bool)
    for _ in range(maxiter):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        df = f1[idx] - f0[idx]
        done_exact = f1[idx] == 0
        stalled = (df == 0) & ~done_exact
        status[idx[done_exact]] = "ok"
        status[idx[stalled]] = "stagnation"
        active[idx[done_exact | stalled]] = False
        idx = idx[~(done_exact | stalled)]
        if idx.size == 0:
            break
        step = -f1[idx] * (lam1[idx] - lam0[idx]) / (f1[idx] - f0[idx])
        lam0[idx], f0[idx] = lam1[idx], f1[idx]
        lam1[idx] = lam1[idx] + step
        Unew = shoot_batch(qf, lam1[idx], alpha, K)
        U1[:, idx] = Unew
        f1[idx] = Unew[-1]
        iters[idx] += 1
        conv = np.abs(step) < tol * np.maximum(1.0, np.abs(lam1[idx]))
        status[idx[conv]] = "ok"
        active[idx[conv]] = False
    return lam1, np.abs(f1), iters, status, U1


def secant_solve(
    q: Potential,
    alpha: float,
    lambda0: complex,
    lambda1: complex,
    mesh: Mesh,
    tol: float = SECANT_TOL,
    maxiter: int = 60,
) -> Eigenpair:
    """Secant iteration on the shooting residual from two starting values.

    Stops when ``|delta lambda| < tol * max(1, |lambda|)``.  Raises
    :class:`SecantError` ('stagnation' or 'maxiter') carrying the last iterate.
    """
    if lambda0 == lambda1:
        raise ValueError("secant needs two distinct starting values")
    if tol <= 0:
        raise ValueError("tol must be positive")
    qf = potential_nodes(q, mesh)
    lam, res, it, status, U = _secant_batch(qf, alpha, [lambda0], [lambda1], mesh.K, tol, maxiter)
    if status[0] != "ok":
        raise SecantError(status[0], complex(lam[0]), float(res[0]), int(it[0]))
    return Eigenpair(0, complex(lam[0]), GridFunction(mesh, U[:, 0]), float(res[0]), int(it[0]))


# -- seeds from the Mittag-Leffler function --------------------------------


def _polish_ml_zero(alpha: float, lam: complex, tol: float = 1e-13, maxiter: int = 60):
    """Secant on lambda -> E_{alpha,2}(-lambda); None if it does not settle."""
    p = MLParams(alpha, 2.0)

    def f(l):
        return ml_eval(p, -l)

    l0, l1 = lam, lam * (1 + 1e-4) + 1e-4j * (lam.imag != 0)
    f0, f1 = f(l0), f(l1)
    for _ in range(maxiter):
        if f1 == f0:
            break
        d = -f1 * (l1 - l0) / (f1 - f0)
        l0, f0 = l1, f1
        l1 = l1 + d
        f1 = f(l1)
        if abs(d) < tol * max(1.0, abs(l1)):
            return l1
    return None


def real_zero_scan(alpha: float, search_radius: float, grid: int) -> list[float]:
    """Real eigenvalues of -D^alpha in (0, search_radius].

    Samples ``E_{alpha,2}(-lambda)`` on a uniform grid, and refines every
    sign change by bisection to 1e-9.
    """
    if not 1.0 < alpha < 2.0:
        raise ValueError("alpha must lie strictly inside (1, 2)")
    lam = search_radius * np.arange(1, grid + 1) / grid
    vals = ml_eval_array(alpha, 2.0, -lam).real
    p = MLParams(alpha, 2.0)

    def f(x):
        return ml_eval(p, -x).real

    roots = []
    for j in range(grid - 1):
        if vals[j] == 0.0:
            roots.append(float(lam[j]))
        elif vals[j] * vals[j + 1] < 0:
            roots.append(float(bisect(f, lam[j], lam[j + 1], xtol=1e-9)))
    return roots


def _dedup(values, rtol=DEDUP_RTOL):
    kept: list[complex] = []
    for v in values:
        if all(abs(v - k) >= rtol * max(1.0, abs(v)) for k in kept):
            kept.append(v)
    return kept


def _upper(lam: complex) -> complex:
    return lam.conjugate() if lam.imag < 0 else lam


def _sort_key(lam: complex):
    return (round(abs(lam), 9), lam.imag)


def free_eigenvalue_seeds(alpha: float, count: int) -> list[complex]:
    """The ``count`` smallest zeros of ``E_{alpha,2}(-lambda)`` in Im >= 0, as located via mlf.

    Asymptotic zero estimates are polished by secant iteration on the
    Mittag-Leffler function; for alpha near 2 the real zeros are added from a
    sign-change scan of the real axis.
    """
    cands = []
    for n in range(1, count + 1):
        guess = _upper(-zero_asymptote(alpha, n).z)
        z = _polish_ml_zero(alpha, guess)
        if z is not None:
            cands.append(_upper(complex(z)))
    if alpha >= REAL_ZERO_ALPHA:
        radius = 1.1 * max([abs(c) for c in cands] + [1.0])
        grid = int(min(max(200 * radius, 4000), 60000))
        for r in real_zero_scan(alpha, radius, grid):
            cands.append(complex(r, 0.0))
    # snap near-real polished zeros onto the axis
    cands = [complex(c.real, 0.0) if abs(c.imag) < 1e-9 * max(1.0, abs(c)) else c for c in cands]
    cands = _dedup(sorted(cands, key=_sort_key))
    return cands[:count]


# -- enumeration -----------------------------------------------------------


def _is_constant(q: Potential) -> bool:
    if q.kind == "zero":
        return True
    if q.kind == "piecewise":
        return len(q.pieces) == 1 and q.pieces[0].lo == 0.0 and q.pieces[0].hi == 1.0 and len(
            q.pieces[0].coeffs
        ) <= 1
    return q.is_zero


def enumerate_spectrum(
    q: Potential,
    alpha: float,
    N: int,
    mesh: Mesh,
    tol: float = SECANT_TOL,
    maxiter: int = 60,
    seed_imag: float = SEED_IMAG,
    strict: bool = True,
) -> Spectrum:
    """The N smallest (by modulus) eigenvalues of ``-D^alpha + q``, Im >= 0.

    Seeds are the q = 0 eigenvalues shifted by the mean of q; for a
    non-constant potential a small imaginary part ``seed_imag`` is added.
    ``N + 4`` seeds are refined and the N smallest distinct results kept.
    Raises :class:`IncompleteSpectrum` when fewer are found (unless
    ``strict`` is false, in which case the gaps are recorded in ``missing``).
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    if not 1.0 < alpha < 2.0:
        raise ValueError("alpha must lie strictly inside (1, 2)")
    base = free_eigenvalue_seeds(alpha, N + EXTRA_SEEDS)
    shift = q.mean
    constant = _is_constant(q)
    seeds = np.array([b + shift + (0 if constant else 1j * seed_imag) for b in base])
    if constant:
        second = seeds * (1 + 1e-7)
    else:
        second = seeds * (1 + 1e-3) + 0.1j
    qf = potential_nodes(q, mesh)
    lam, res, iters, status, U = _secant_batch(qf, alpha, seeds, second, mesh.K, tol, maxiter)

    found = []
    for j in range(lam.size):
        if status[j] != "ok":
            log.debug("seed %s failed: %s", seeds[j], status[j])
            continue
        l, u = complex(lam[j]), U[:, j]
        if l.imag < 0:
            l, u = l.conjugate(), u.conj()
        if abs(l.imag) < 1e-10 * max(1.0, abs(l)):
            # real eigenvalue: the secant left roundoff in the imaginary part
            l = complex(l.real, 0.0)
        found.append((l, u, float(res[j]), int(iters[j])))
    found.sort(key=lambda t: _sort_key(t[0]))
    distinct = []
    for item in found:
        if all(abs(item[0] - d[0]) >= DEDUP_RTOL * max(1.0, abs(item[0])) for d in distinct):
            distinct.append(item)
    pairs = tuple(
        Eigenpair(i + 1, l, GridFunction(mesh, u), r, it) for i, (l, u, r, it) in enumerate(distinct[:N])
    )
    missing = tuple(range(len(pairs) + 1, N + 1))
    spec = Spectrum(alpha, q, mesh, pairs, missing)
    if missing and strict:
        raise IncompleteSpectrum(list(missing), spec)
    return spec


def decay_remainders(q: Potential, alpha: float, N: int, mesh: Mesh, **kwargs) -> np.ndarray:
    """``c_n = lambda_n(q) - lambda_n(0) - int q``, matched by rank."""
    lq = enumerate_spectrum(q, alpha, N, mesh, **kwargs).eigenvalues
    l0 = enumerate_spectrum(Potential.zero(), alpha, N, mesh, **kwargs).eigenvalues
    return lq - l0 - q.mean


def asymptotic_indices(eigenvalues) -> np.ndarray:
    """Zero index n of the asymptotic law matching each eigenvalue, 0 for real ones.

    The law counts complex zeros only.  When alpha is close to 2 the lowest
    complex pairs have collapsed onto the real axis, two real eigenvalues per
    pair, so the first complex eigenvalue above ``2r`` real ones carries index
    ``r + 1``.
    """
    lam = np.asarray(eigenvalues, dtype=complex)
    real = lam.imag == 0
    offset = int(np.sum(real)) // 2
    out = np.zeros(lam.size, dtype=int)
    out[~real] = offset + np.arange(1, int(np.sum(~real)) + 1)
    return out
