from __future__ import annotations

import json

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracslp.potentials import Piece, Potential, parse_potential, q1, q2


def test_q2_values_and_mean():
    q = q2()
    x = np.array([0.0, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9])
    assert q(x) == pytest.approx([0.0, -0.2, -0.4, -0.2, 0.0, 1.0, 0.0])
    assert q.mean == pytest.approx(0.12, abs=1e-12)


def test_q1_mean_against_quadrature():
    mp.mp.dps = 30
    ref = mp.quad(lambda x: 20 * x**3 * (mp.exp(-((x - 0.5) ** 2)) - mp.exp(-0.25)), [0, 1])
    assert q1().mean == pytest.approx(float(ref), abs=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=1, max_size=8))
def test_sine_mean_exact(coeffs):
    q = Potential.sine(coeffs)
    mp.mp.dps = 20
    ref = sum(c * mp.quad(lambda x, k=k: mp.sin(k * mp.pi * x), [0, 1]) for k, c in enumerate(coeffs, 1))
    assert abs(q.mean - float(ref)) <= 1e-12 * max(1.0, sum(abs(c) for c in coeffs))


def test_constant_and_zero():
    c = Potential.constant(-2.5)
    assert c.mean == -2.5
    assert np.all(c(np.linspace(0, 1, 5)) == -2.5)
    assert Potential.zero().is_zero and Potential.sine([0, 0]).is_zero
    assert not c.is_zero


def test_piecewise_validation():
    with pytest.raises(ValueError):
        Potential.piecewise([(0.5, 0.2, [1.0])])
    with pytest.raises(ValueError):
        Potential.piecewise([(0.0, 0.5, [1.0]), (0.4, 0.8, [2.0])])
    with pytest.raises(ValueError):
        Potential.sine([1.0, float("nan")])


def test_piece_integral():
    assert Piece(0.2, 0.4, (-0.8, 2.0)).integral() == pytest.approx(-0.04)


def test_parse_selectors(tmp_path):
    assert parse_potential("zero").is_zero
    assert parse_potential("q1").name == "q1"
    assert parse_potential("const:3").mean == 3.0
    assert parse_potential("sine:1,0.5").coefficients == (1.0, 0.5)
    assert parse_potential("sine", [2.0]).coefficients == (2.0,)
    path = tmp_path / "p.json"
    path.write_text(json.dumps([{"lo": 0.0, "hi": 0.5, "coeffs": [1.0, 2.0]}]))
    q = parse_potential(f"piecewise:{path}")
    assert q.mean == pytest.approx(0.5 + 0.25)
    with pytest.raises(ValueError):
        parse_potential("bogus")
    with pytest.raises(ValueError):
        parse_potential("sine")
