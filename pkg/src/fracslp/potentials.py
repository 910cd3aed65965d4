"""Potential coefficients q(x) on [0, 1].

Four representations are supported: the zero potential, a finite sine
expansion ``sum_k q_k sin(k pi x)``, piecewise polynomials on closed
subintervals (zero elsewhere), and an arbitrary vectorised callable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import simpson


@dataclass(frozen=True)
class Piece:
    lo: float
    hi: float
    coeffs: tuple[float, ...]  # ascending powers of x

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.polynomial.polynomial.polyval(x, self.coeffs)

    def integral(self) -> float:
        antider = np.polynomial.polynomial.polyint(self.coeffs)
        pv = np.polynomial.polynomial.polyval
        return float(pv(self.hi, antider) - pv(self.lo, antider))


@dataclass(frozen=True, eq=False)
class Potential:
    """A real potential on [0, 1].

    Build instances with the class-method constructors rather than directly.
    Evaluation is vectorised: ``q(x)`` accepts scalars or arrays.
    """

    kind: str
    coefficients: tuple[float, ...] = ()
    pieces: tuple[Piece, ...] = ()
    func: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)
    name: str = ""

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls) -> Potential:
        return cls("zero", name="zero")

    @classmethod
    def sine(cls, coeffs: Sequence[float], name: str = "") -> Potential:
        c = tuple(float(v) for v in coeffs)
        if not all(np.isfinite(c)):
            raise ValueError("sine coefficients must be finite")
        return cls("sine", coefficients=c, name=name or "sine")

    @classmethod
    def piecewise(cls, pieces: Sequence[Piece | tuple], name: str = "") -> Potential:
        ps = []
        for p in pieces:
            if not isinstance(p, Piece):
                lo, hi, coeffs = p
                p = Piece(float(lo), float(hi), tuple(float(c) for c in coeffs))
            ps.append(p)
        ps.sort(key=lambda p: p.lo)
        for p in ps:
            if not (0.0 <= p.lo < p.hi <= 1.0):
                raise ValueError(f"piece [{p.lo}, {p.hi}] must satisfy 0 <= lo < hi <= 1")
        for left, right in zip(ps, ps[1:]):
            if right.lo < left.hi:
                raise ValueError("pieces overlap")
        return cls("piecewise", pieces=tuple(ps), name=name or "piecewise")

    @classmethod
    def constant(cls, c: float) -> Potential:
        return cls.piecewise([(0.0, 1.0, (float(c),))], name=f"const:{float(c):g}")

    @classmethod
    def from_function(cls, func: Callable[[np.ndarray], np.ndarray], name: str = "") -> Potential:
        return cls("function", func=func, name=name or "function")

    @classmethod
    def from_json(cls, path: str | Path) -> Potential:
        """Load ``[{"lo": .., "hi": .., "coeffs": [c0, c1, ..]}, ...]``."""
        data = json.loads(Path(path).read_text())
        pieces = []
        for entry in data:
            coeffs = entry.get("coeffs", entry.get("poly"))
            if coeffs is None:
                raise ValueError("piece entries need 'coeffs'")
            pieces.append((entry["lo"], entry["hi"], coeffs))
        return cls.piecewise(pieces, name=f"piecewise:{Path(path).name}")

    # -- evaluation ---------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        if self.kind == "zero":
            return True
        if self.kind == "sine":
            return not any(self.coefficients)
        if self.kind == "piecewise":
            return all(not any(p.coeffs) for p in self.pieces)
        return False

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(x)
        if self.kind == "sine":
            k = np.arange(1, len(self.coefficients) + 1)
            basis = np.sin(np.pi * np.multiply.outer(x, k))
            return basis @ np.asarray(self.coefficients) if len(k) else np.zeros_like(x)
        if self.kind == "piecewise":
            out = np.zeros_like(x)
            done = np.zeros(x.shape, dtype=bool)
            # closed intervals; the first piece containing x wins
            for p in self.pieces:
                mask = (~done) & (x >= p.lo) & (x <= p.hi)
                out = np.where(mask, p(x), out)
                done |= mask
            return out
        return np.asarray(self.func(x), dtype=float) * np.ones_like(x)

    @cached_property
    def mean(self) -> float:
        """Integral of q over [0, 1]."""
        if self.kind == "zero":
            return 0.0
        if self.kind == "sine":
            k = np.arange(1, len(self.coefficients) + 1)
            return float(np.sum(np.asarray(self.coefficients) * (1 - (-1.0) ** k) / (k * np.pi)))
        if self.kind == "piecewise":
            return float(sum(p.integral() for p in self.pieces))
        x = np.linspace(0.0, 1.0, 20001)
        return float(simpson(self(x), x=x))

    def describe(self) -> str:
        if self.kind == "sine":
            return "sine:" + ",".join(f"{c:.9g}" for c in self.coefficients)
        return self.name


def q1() -> Potential:
    """Smooth test potential 20 x^3 (exp(-(x - 1/2)^2) - exp(-1/4))."""
    return Potential.from_function(
        lambda x: 20.0 * x**3 * (np.exp(-((x - 0.5) ** 2)) - np.exp(-0.25)), name="q1"
    )


def q2() -> Potential:
    """Discontinuous piecewise-linear test potential."""
    return Potential.piecewise(
        [(0.0, 0.2, (0.0, -2.0)), (0.2, 0.4, (-0.8, 2.0)), (0.6, 0.8, (1.0,))], name="q2"
    )


def parse_potential(spec: str, coeffs: Sequence[float] | None = None) -> Potential:
    """Resolve a selector such as ``zero``, ``q1``, ``const:3``, ``sine:1,0.5``
    or ``piecewise:path.json``."""
    spec = spec.strip()
    if spec == "zero":
        return Potential.zero()
    if spec == "q1":
        return q1()
    if spec == "q2":
        return q2()
    if spec.startswith("const:"):
        return Potential.constant(float(spec.split(":", 1)[1]))
    if spec == "sine" or spec.startswith("sine:"):
        body = spec.split(":", 1)[1] if ":" in spec else ""
        values = [float(v) for v in body.split(",") if v.strip()] if body else list(coeffs or [])
        if not values:
            raise ValueError("sine potential needs coefficients")
        return Potential.sine(values)
    if spec.startswith("piecewise:"):
        return Potential.from_json(spec.split(":", 1)[1])
    raise ValueError(f"unknown potential selector {spec!r}")
