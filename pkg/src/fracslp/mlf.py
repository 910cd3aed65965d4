"""Two-parameter Mittag-Leffler function and asymptotics of its zeros.

``E_{a,b}(z) = sum_k z^k / Gamma(b + a k)`` is evaluated by its power series
inside the dispatch radius and by the exponential asymptotic expansion
outside.  The series runs in double precision when that is safe and switches
to multiple precision (gmpy2) when the terms cancel, which is the normal
situation along the rays where the zeros live.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import gmpy2
import numpy as np
from scipy.special import gammaln, rgamma

from .errors import AsymptoticDomainError, NonFiniteValue, SeriesCapExceeded

SERIES_CAP = 2000
_EPS = np.finfo(float).eps
# target relative accuracy of the double-precision series before falling back
_SERIES_RTOL = 1e-12


@dataclass(frozen=True)
class MLParams:
    alpha: float
    beta: float

    def __post_init__(self):
        if not 0.0 < self.alpha <= 2.0:
            raise ValueError("alpha must lie in (0, 2]")
        if not self.beta > 0.0:
            raise ValueError("beta must be positive")


@dataclass(frozen=True)
class ZeroAsymptote:
    n: int
    zeta: complex
    z: complex


def dispatch_radius(alpha: float) -> float:
    """|z| beyond which the asymptotic expansion is used.

    With at most ten algebraic terms the expansion is accurate to roughly
    ``exp(-|z|^(1/alpha))``; ``25**alpha`` keeps that near 1e-11.
    """
    return max(15.0, 25.0**alpha)


def sector_half_angle(alpha: float) -> float:
    """Split angle between the two branches of the one-term expansion."""
    return 0.5 * (0.5 * alpha * math.pi + min(math.pi, alpha * math.pi))


# -- series -----------------------------------------------------------------


def _rgamma_safe(x):
    x = np.asarray(x, dtype=float)
    near_pole = (x <= 0) & (np.abs(x - np.round(x)) < 1e-12)
    return np.where(near_pole, 0.0, rgamma(x))


def _log_terms(alpha: float, beta: float, absz: float, kmax: int) -> np.ndarray:
    k = np.arange(kmax)
    with np.errstate(divide="ignore"):
        return k * math.log(absz) - gammaln(beta + alpha * k) if absz > 0 else np.where(
            k == 0, -gammaln(beta), -np.inf
        )


def _term_count(alpha: float, beta: float, absz: float, rel: float) -> tuple[int, float]:
    """Number of terms until they fall ``rel`` below the largest, and log of the largest."""
    if absz == 0.0:
        return 1, float(-gammaln(beta))
    kmax = 64
    while True:
        lt = _log_terms(alpha, beta, absz, kmax)
        peak = int(np.argmax(lt))
        tail = np.nonzero(lt[peak:] < lt[peak] + math.log(rel))[0]
        if tail.size:
            return peak + int(tail[0]) + 1, float(lt[peak])
        if kmax >= SERIES_CAP:
            raise SeriesCapExceeded(f"series needs more than {SERIES_CAP} terms at |z|={absz:g}")
        kmax = min(2 * kmax, SERIES_CAP)


def _precision(bits: int):
    ctx = gmpy2.get_context().copy()
    ctx.precision = ctx.real_prec = ctx.imag_prec = bits
    return ctx


class _Coefficients:
    """Lazily grown 1/Gamma(beta + alpha k) at a fixed binary precision."""

    def __init__(self, alpha: float, beta: float, bits: int):
        self.alpha, self.beta, self.bits = alpha, beta, bits
        self.values: list = []

    def upto(self, n: int) -> list:
        if len(self.values) < n:
            with _precision(self.bits):
                a, b = gmpy2.mpfr(self.alpha), gmpy2.mpfr(self.beta)
                for k in range(len(self.values), n):
                    self.values.append(1 / gmpy2.gamma(b + a * k))
        return self.values


@lru_cache(maxsize=64)
def _coefficients(alpha: float, beta: float, bits: int) -> _Coefficients:
    return _Coefficients(alpha, beta, bits)


def _series_mp(alpha: float, beta: float, z: complex, tol: float, bits: int, peak: int):
    coeffs = _coefficients(alpha, beta, bits)
    with _precision(bits):
        zz = gmpy2.mpc(z)
        s = gmpy2.mpc(0)
        p = gmpy2.mpc(1)
        floor = gmpy2.mpfr("1e-300")
        tolm = gmpy2.mpfr(tol)
        chunk = 64
        k = 0
        while k < SERIES_CAP:
            cs = coeffs.upto(min(k + chunk, SERIES_CAP))
            for c in cs[k:]:
                term = p * c
                s += term
                if k > peak and abs(term) <= tolm * max(abs(s), floor):
                    return complex(s), k + 1
                p *= zz
                k += 1
        raise SeriesCapExceeded(f"series did not settle within {SERIES_CAP} terms at z={z}")


def ml_series(params: MLParams, z: complex, tol: float = 2.0**-60) -> complex:
    """Partial sum of the defining power series.

    Summation stops once a term (past the largest one) drops below
    ``tol * max(|partial sum|, 1e-300)``.  Cancellation between terms is
    detected from a double-precision pass; when it would cost more than a few
    digits the sum is redone in multiple precision with enough guard bits.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    a, b = float(params.alpha), float(params.beta)
    z = complex(z)
    absz = abs(z)
    n, log_peak = _term_count(a, b, absz, 1e-18)
    k = np.arange(n)
    lt = _log_terms(a, b, absz, n)
    if absz == 0:
        phase = (k == 0).astype(float)
    elif z.imag == 0.0:
        phase = np.sign(z.real) ** k
    else:
        phase = np.exp(1j * k * cmath.phase(z))
    terms = np.exp(lt) * phase
    s = complex(np.sum(terms))
    peak_term = math.exp(log_peak)
    loss = peak_term / max(abs(s), 1e-300)
    if n * _EPS * loss <= _SERIES_RTOL and math.isfinite(s.real) and math.isfinite(s.imag):
        return s
    peak = int(np.argmax(lt))
    guard = 64 + int(math.ceil(math.log2(max(loss, 1.0))))
    for _ in range(4):
        bits = min(64 * math.ceil(guard / 64) + 64, 4096)
        val, _count = _series_mp(a, b, z, tol, bits, peak)
        new_loss = peak_term / max(abs(val), 1e-300)
        if math.log2(max(new_loss, 1.0)) + 64 <= bits or bits >= 4096:
            return val
        guard = 64 + int(math.ceil(math.log2(new_loss)))
    return val


# -- asymptotics ------------------------------------------------------------


def _algebraic_tail(alpha: float, beta: float, z, n_terms: int | None):
    """sum_k z^-k / Gamma(beta - alpha k); ``n_terms=None`` truncates optimally (k <= 10)."""
    z = np.asarray(z, dtype=complex)
    out = np.zeros_like(z)
    zinv = 1.0 / z
    power = np.ones_like(z)
    ks = range(1, (n_terms or 10) + 1)
    if n_terms is not None:
        for k in ks:
            power = power * zinv
            out = out + _rgamma_safe(beta - alpha * k) * power
        return out
    # optimal truncation: stop adding a term once the terms start growing
    best = np.full(z.shape, np.inf)
    active = np.ones(z.shape, dtype=bool)
    for k in ks:
        power = power * zinv
        c = float(_rgamma_safe(beta - alpha * k))
        if c == 0.0:
            continue
        term = c * power
        mag = np.abs(term)
        active &= mag <= best
        out = np.where(active, out + term, out)
        best = np.where(active, mag, best)
    return out


def _exponential_part(alpha: float, beta: float, z, branches: str):
    z = np.asarray(z, dtype=complex)
    theta = np.angle(z)
    r = np.abs(z) ** (1.0 / alpha)
    if branches == "principal":
        zeta = r * np.exp(1j * theta / alpha)
        inside = np.abs(theta) <= sector_half_angle(alpha)
        val = zeta ** (1.0 - beta) * np.exp(zeta) / alpha
        return np.where(inside, val, 0.0)
    # every branch zeta_m = z^(1/alpha) e^(2 pi i m / alpha) on the dominant side of its Stokes line
    out = np.zeros_like(z)
    mmax = int(math.ceil(alpha / 2.0)) + 1
    for m in range(-mmax, mmax + 1):
        ang = theta + 2 * math.pi * m
        # half-open so a branch sitting exactly on the boundary is counted once
        inside = (ang > -alpha * math.pi) & (ang <= alpha * math.pi)
        if not inside.any():
            continue
        zeta = r * np.exp(1j * ang / alpha)
        with np.errstate(over="ignore", invalid="ignore"):
            val = np.exp((1.0 - beta) * np.log(zeta) + zeta) / alpha
        out = out + np.where(inside, val, 0.0)
    return out


def ml_asymptotic(
    params: MLParams, z: complex, n_terms: int = 5, branches: str = "principal"
) -> complex:
    """Exponential asymptotic expansion for large |z|.

    ``branches="principal"`` is the classical two-sector formula: the
    exponential term ``z^((1-b)/a) exp(z^(1/a)) / a`` is kept for
    ``|arg z| <= mu`` and dropped outside.  ``branches="all"`` keeps every
    exponential branch that has not crossed its Stokes line, which removes the
    error from exponentially small but not negligible terms near the negative
    real axis at moderate |z|.
    """
    a, b = float(params.alpha), float(params.beta)
    z = complex(z)
    if abs(z) < dispatch_radius(a):
        raise AsymptoticDomainError(
            f"asymptotic-domain violation: |z|={abs(z):g} < {dispatch_radius(a):g}"
        )
    if not 1 <= n_terms <= 10:
        raise ValueError("n_terms must lie in 1..10")
    with np.errstate(over="ignore", invalid="ignore"):
        val = complex(_exponential_part(a, b, z, branches) - _algebraic_tail(a, b, z, n_terms))
    _check_finite(val, z)
    return val


def _check_finite(val, z):
    if not np.all(np.isfinite(val)):
        raise NonFiniteValue(f"Mittag-Leffler value not finite near z={z}")


def ml_eval(params: MLParams, z: complex) -> complex:
    """E_{alpha,beta}(z) by series inside the dispatch radius, asymptotics outside."""
    a, b = float(params.alpha), float(params.beta)
    z = complex(z)
    val = None
    if abs(z) <= dispatch_radius(a):
        try:
            val = ml_series(params, z)
        except SeriesCapExceeded:
            # small alpha: the series is too long but the expansion is already sharp
            val = None
    if val is None:
        with np.errstate(over="ignore", invalid="ignore"):
            val = complex(_exponential_part(a, b, z, "all") - _algebraic_tail(a, b, z, None))
    _check_finite(val, z)
    return val


def ml_branch(alpha: float, z: complex) -> str:
    return "series" if abs(complex(z)) <= dispatch_radius(alpha) else "asymptotic"


def ml_eval_array(alpha: float, beta: float, z) -> np.ndarray:
    """Vectorised :func:`ml_eval`.

    Points whose double-precision series is trustworthy are summed together;
    the rest go through the scalar multiple-precision path.
    """
    params = MLParams(alpha, beta)
    z = np.asarray(z, dtype=complex)
    flat = z.ravel()
    out = np.empty_like(flat)
    absz = np.abs(flat)
    R0 = dispatch_radius(alpha)
    inner = absz <= R0
    if (~inner).any():
        zo = flat[~inner]
        with np.errstate(over="ignore", invalid="ignore"):
            out[~inner] = _exponential_part(alpha, beta, zo, "all") - _algebraic_tail(alpha, beta, zo, None)
    idx = np.nonzero(inner)[0]
    if idx.size:
        try:
            n, _ = _term_count(alpha, beta, float(absz[idx].max()), 1e-18)
        except SeriesCapExceeded:
            for j in idx:
                out[j] = ml_eval(params, flat[j])
            _check_finite(out, "array")
            return out.reshape(z.shape)
        k = np.arange(n)
        c = np.exp(-gammaln(beta + alpha * k))
        zi = flat[idx]
        # Horner in double; the peak term bounds the rounding error
        s = np.zeros_like(zi)
        for ck in c[::-1]:
            s = s * zi + ck
        with np.errstate(divide="ignore"):
            lt = np.log(np.where(absz[idx] > 0, absz[idx], 1.0))[:, None] * k[None, :] - gammaln(
                beta + alpha * k
            )[None, :]
        lt[absz[idx] == 0, 1:] = -np.inf
        peak = np.exp(lt.max(axis=1))
        bad = (n * _EPS * peak > _SERIES_RTOL * np.abs(s)) | ~np.isfinite(s)
        out[idx] = s
        for j in idx[bad]:
            out[j] = ml_series(params, flat[j])
    _check_finite(out, "array")
    return out.reshape(z.shape)


# -- zeros and eigenvalue asymptotics --------------------------------------


def zero_asymptote(alpha: float, n: int) -> ZeroAsymptote:
    """Leading-order location of the n-th zero of E_{alpha,2}.

    ``zeta = z^(1/alpha)`` follows the displayed asymptotic law with the
    remainder dropped; ``z = zeta^alpha`` on the principal branch.  The
    constant ``ln(alpha / Gamma(2 - alpha))`` diverges as alpha -> 2, so the
    estimate degrades without bound there; no regularisation is attempted.
    """
    if n == 0:
        raise ValueError("n must be non-zero")
    sgn = 1 if n > 0 else -1
    L = math.log(alpha) - math.lgamma(2.0 - alpha) if alpha < 2 else -math.inf
    zeta = complex(
        -(alpha - 1) * math.log(2 * math.pi * abs(n)) + L,
        2 * math.pi * n - (alpha - 1) * sgn * math.pi / 2,
    )
    z = cmath.exp(alpha * cmath.log(zeta))
    if n < 0:
        # keep the conjugate symmetry exact under rounding
        pos = zero_asymptote(alpha, -n)
        return ZeroAsymptote(n, pos.zeta.conjugate(), pos.z.conjugate())
    return ZeroAsymptote(n, zeta, z)


def eig_asymptotic(alpha: float, n: int, phase_rule: str = "atan") -> tuple[float, float]:
    """Predicted magnitude and phase of the n-th eigenvalue of -D^alpha.

    The magnitude is ``|zeta_n|^alpha`` with ``zeta_n`` from
    :func:`zero_asymptote`.  ``phase_rule="atan"`` gives the classical
    closed form ``pi - alpha*atan(Im zeta / -Re zeta)``, which converges to the
    right limit but slowly; ``phase_rule="branch"`` gives ``pi - alpha*arg(zeta)``,
    the phase of the same leading-order estimate taken on the principal branch,
    which is markedly closer for moderate n.
    """
    if n < 1:
        raise ValueError("n must be positive")
    L = math.log(alpha) - math.lgamma(2.0 - alpha)
    im = 2 * math.pi * n + (1 - alpha) * math.pi / 2
    re = (1 - alpha) * math.log(2 * math.pi * n) + L
    magnitude = (im**2 + re**2) ** (alpha / 2)
    if phase_rule == "atan":
        phase = math.pi - alpha * math.atan(im / ((alpha - 1) * math.log(2 * math.pi * n) - L))
    elif phase_rule == "branch":
        phase = math.pi - alpha * math.atan2(im, re)
    else:
        raise ValueError(f"unknown phase rule {phase_rule!r}")
    return magnitude, phase


def eig_asymptotic_tail(alpha: float, n: int) -> tuple[float, float]:
    """Simplified limits (2 pi n)^alpha and (2 - alpha) pi / 2."""
    return (2 * math.pi * n) ** alpha, (2 - alpha) * math.pi / 2
