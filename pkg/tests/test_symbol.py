from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hsloc.smooth import TestFunction
from hsloc.sobolev import Grid, GridFunction
from hsloc.symbol import (
    AuditGrid,
    SymbolPoly,
    apply_operator,
    characteristic_coeffs,
    characteristic_roots,
    ellipticity,
    eval_symbol,
    hypoellipticity,
    transpose_coeffs,
)
from hsloc.symbol import _horner

from conftest import complex_values, symbols

FOUR_PI2 = 4 * np.pi**2


def test_eval_laplacian_at_one(laplacian):
    assert eval_symbol(laplacian, 1.0) == pytest.approx(-39.47841760435743, rel=1e-14)


def test_eval_laplacian_at_zero(laplacian):
    assert eval_symbol(laplacian, 0.0) == 0


def test_eval_constant_symbol():
    assert eval_symbol(SymbolPoly([1.0]), 3.7 - 2j) == 1


def test_eval_accepts_arrays(laplacian):
    xi = np.array([-2.0, 0.5, 3.0])
    np.testing.assert_allclose(eval_symbol(laplacian, xi), -FOUR_PI2 * xi**2)


def test_transpose_examples(laplacian):
    assert transpose_coeffs(laplacian) == laplacian
    c = SymbolPoly([2.5 - 1j])
    assert transpose_coeffs(c) == c
    ddx = SymbolPoly([0, 2j * np.pi])
    assert transpose_coeffs(ddx) == SymbolPoly([0, -2j * np.pi])


def test_ddx_symbol_is_plain_derivative():
    ddx = SymbolPoly([0, 2j * np.pi])
    np.testing.assert_allclose(ddx.derivative_coeffs(), [0, 1])
    np.testing.assert_allclose(ddx.derivative_coeffs(transpose=True), [0, -1])


def test_transpose_of_ddx_by_integration_by_parts():
    # <psi', phi> = -<psi, phi'> for compactly supported psi, phi
    ddx = SymbolPoly([0, 2j * np.pi])
    grid = Grid(-4.0, 4.0, 2048)
    psi = TestFunction(0.3, 1.5, freq=2.0)
    phi = TestFunction(-0.2, 1.2, freq=1.0, phase=0.4)
    u = GridFunction.from_callable(grid, psi)
    v = GridFunction.from_callable(grid, phi)
    lhs = (apply_operator(ddx, u) * v).integral()
    rhs = (u * apply_operator(ddx, v, transpose=True)).integral()
    direct = (GridFunction.from_callable(grid, lambda x: psi.derivative(x, 1)) * v).integral()
    assert abs(lhs - rhs) < 1e-10
    assert abs(lhs - direct) < 1e-10


def test_laplacian_ellipticity(laplacian):
    rep = ellipticity(laplacian)
    assert rep.elliptic
    assert rep.threshold == 1.0
    # |a(xi)| = 4 pi^2 xi^2, so c = 4 pi^2 is admissible and ours is half of it
    assert rep.lower_constant == pytest.approx(FOUR_PI2 / 2)
    xi = np.linspace(1, 100, 50)
    assert np.all(np.abs(eval_symbol(laplacian, xi)) >= FOUR_PI2 * xi**2 * (1 - 1e-14))


def test_degenerate_leading_coefficient_rejected():
    with pytest.raises(ValueError, match="leading coefficient"):
        SymbolPoly([1, 0, 0], order=2)


def test_ellipticity_rejects_order_zero():
    with pytest.raises(ValueError, match="m >= 1"):
        ellipticity(SymbolPoly([3.0]))


def test_monic_xi2_plus_one():
    sym = SymbolPoly([1, 0, 1])
    rep = ellipticity(sym)
    assert rep.elliptic
    assert rep.lower_constant == 0.5
    assert rep.threshold == 2.0
    xi = np.concatenate([np.linspace(2, 20, 200), -np.linspace(2, 20, 200)])
    assert np.all(np.abs(eval_symbol(sym, xi)) >= 0.5 * xi**2)


def test_laplacian_hypoelliptic_delta_one(laplacian):
    rep = hypoellipticity(laplacian)
    assert rep.hypoelliptic
    assert abs(rep.delta - 1.0) < 0.05


def test_ddx_root_distance_is_abs_xi():
    rep = hypoellipticity(SymbolPoly([0, 2j * np.pi]))
    assert rep.hypoelliptic
    np.testing.assert_allclose(rep.distances, np.abs(rep.frequencies), atol=1e-12)
    assert abs(rep.delta - 1.0) < 0.05


def test_hypoellipticity_short_tail():
    sym = SymbolPoly([-1e6, 0, 1])  # zeros at +-1000
    with pytest.raises(ValueError, match="tail too short"):
        hypoellipticity(sym, AuditGrid(1.0, 500.0, 100))


def test_laplacian_roots_lambda_zero(laplacian):
    r = characteristic_roots(laplacian, 0)
    assert r.multiplicities == [2]
    assert abs(r.values[0]) < 1e-12


def test_laplacian_roots_lambda_minus_one(laplacian):
    r = characteristic_roots(laplacian, -1)
    assert r.multiplicities == [1, 1]
    np.testing.assert_allclose(r.values, [1j, -1j], atol=1e-14)


def test_laplacian_roots_lambda_one(laplacian):
    r = characteristic_roots(laplacian, 1)
    np.testing.assert_allclose(r.values, [1, -1], atol=1e-14)


def test_roots_reject_order_zero():
    with pytest.raises(ValueError):
        characteristic_roots(SymbolPoly([1.0]), 1.0)


def test_confluent_basis_for_double_root(laplacian):
    basis = characteristic_roots(laplacian, 0).basis()
    assert [r for _, r in basis] == [0, 1]
    assert all(abs(beta) < 1e-12 for beta, _ in basis)


def _plateau_grid():
    return Grid(-8.0, 8.0, 4096)


def test_laplacian_of_cut_off_sine(laplacian):
    from hsloc.smooth import Cutoff

    grid = _plateau_grid()
    cut = Cutoff((-3.0, 3.0), (-6.0, 6.0))
    u = GridFunction.from_callable(grid, lambda x: cut(x) * np.sin(x))
    out = apply_operator(laplacian, u)
    plateau = np.abs(grid.x) <= 3.0
    assert np.max(np.abs(out.samples[plateau] + np.sin(grid.x[plateau]))) < 1e-6


def test_operator_without_constant_term_kills_plateau():
    from hsloc.smooth import Cutoff

    sym = SymbolPoly([0, 1.0 + 2j, 3.0, -0.5j])
    grid = _plateau_grid()
    u = GridFunction.from_callable(grid, Cutoff((-3.0, 3.0), (-6.0, 6.0)))
    out = apply_operator(sym, u)
    assert np.max(np.abs(out.samples[np.abs(grid.x) <= 3.0])) < 1e-6


def test_laplacian_of_gaussian(laplacian):
    grid = _plateau_grid()
    u = GridFunction.from_callable(grid, lambda x: np.exp(-np.pi * x**2))
    expect = (FOUR_PI2 * grid.x**2 - 2 * np.pi) * np.exp(-np.pi * grid.x**2)
    assert np.max(np.abs(apply_operator(laplacian, u).samples - expect)) < 1e-6


def test_apply_operator_warns_on_edges(laplacian):
    from hsloc.symbol import PeriodizationWarning

    grid = Grid(-1.0, 1.0, 64)
    with pytest.warns(PeriodizationWarning):
        apply_operator(laplacian, GridFunction.from_callable(grid, np.cos))


def test_symbol_json_roundtrip():
    sym = SymbolPoly([1 - 2j, 0.5, 3j])
    assert SymbolPoly.from_json(sym.to_json()) == sym
    assert sym.to_json() == "[[1.0, -2.0], [0.5, 0.0], [0.0, 3.0]]"


@settings(max_examples=60, deadline=None)
@given(symbols())
def test_every_positive_order_symbol_is_elliptic_and_hypoelliptic(sym):
    assert ellipticity(sym).elliptic
    radius = float(np.max(np.abs(np.roots(sym.array[::-1]))))
    audit = AuditGrid(1.0, max(1e4, 100.0 * radius), 400)
    assert hypoellipticity(sym, audit).hypoelliptic


@settings(max_examples=80, deadline=None)
@given(symbols(), complex_values(10.0), st.booleans())
def test_root_multiplicities_and_residuals(sym, lam, transpose):
    r = characteristic_roots(sym, lam, transpose=transpose)
    assert sum(r.multiplicities) == sym.order
    p = characteristic_coeffs(sym, lam, transpose)
    for beta in r.values:
        assert abs(_horner(p, beta)) < 1e-8 * (1 + abs(lam))
    tol = 1e-7 * (1 + abs(lam))
    vals = r.values
    for i in range(len(vals)):
        for j in range(i + 1, len(vals)):
            assert abs(vals[i] - vals[j]) > tol


@settings(max_examples=40, deadline=None)
@given(symbols(max_order=3, bound=2.0), complex_values(3.0), st.integers(0, 2**32 - 1))
def test_apply_operator_is_linear(sym, alpha, seed):
    rng = np.random.default_rng(seed)
    grid = Grid(-6.0, 6.0, 1024)
    u = GridFunction.from_callable(grid, TestFunction(rng.uniform(-1, 1), 2.0, freq=rng.uniform(0, 2)))
    v = GridFunction.from_callable(grid, TestFunction(rng.uniform(-1, 1), 2.5, amplitude=1j))
    lhs = apply_operator(sym, alpha * u + v)
    rhs = alpha * apply_operator(sym, u) + apply_operator(sym, v)
    scale = 1 + np.max(np.abs(rhs.samples))
    assert np.max(np.abs(lhs.samples - rhs.samples)) < 1e-10 * scale


@given(symbols())
def test_transpose_is_an_involution(sym):
    assert transpose_coeffs(transpose_coeffs(sym)) == sym


def test_laplacian_matches_second_difference(laplacian):
    errs = []
    for n in (256, 512, 1024):
        grid = Grid(-6.0, 6.0, n)
        u = GridFunction.from_callable(grid, lambda x: np.exp(-x**2) * np.cos(2 * x))
        spectral = apply_operator(laplacian, u).samples
        s = u.samples
        fd = (np.roll(s, -1) - 2 * s + np.roll(s, 1)) / grid.dx**2
        errs.append(np.max(np.abs(spectral - fd)))
    # O(dx^2): halving dx quarters the gap
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.05)
