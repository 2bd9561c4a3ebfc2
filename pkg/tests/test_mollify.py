from __future__ import annotations

import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from hsloc.mollify import (
    Analytic,
    DeltaTerm,
    DistributionalDerivative,
    FiniteDifference,
    ResolutionError,
    derivative_expansion,
    distributional_derivative,
    make_mollifier,
    mollified_truncation,
    null_extend,
    pair_distribution,
    verify_boundary_decay,
    verify_closure_convergence,
)
from hsloc.smooth import TestFunction, random_test_functions
from hsloc.sobolev import Grid, GridFunction, make_exhaustion
from hsloc.symbol import SymbolPoly, apply_operator

I = (0.0, np.pi)
ZERO = lambda x: 0.0 * x
ONE = Analytic(lambda x: 1.0 + 0.0 * x, ZERO, ZERO)
LINEAR = Analytic(lambda x: x, lambda x: 1.0 + 0.0 * x, ZERO)
SINE = Analytic(np.sin, np.cos, lambda x: -np.sin(x), lambda x: -np.cos(x))

# 1 / int_{-1}^{1} exp(-1/(1 - t^2)) dt by adaptive quadrature
BUMP_CONSTANT = 2.2522836210435817


@pytest.fixture(scope="module")
def grid():
    return Grid.for_interval(I, 8192)


@pytest.fixture(scope="module")
def closure(grid):
    return make_exhaustion(I, 70, closure=True, grid=grid)


def _gauss(fn, a, b, n=400):
    t, w = np.polynomial.legendre.leggauss(n)
    y = 0.5 * (a + b) + 0.5 * (b - a) * t
    return 0.5 * (b - a) * np.sum(w * fn(y))


def test_null_extension_of_one(grid):
    ue = null_extend(ONE, grid, I).extended.samples
    x = grid.x
    inside = (x > 0) & (x < np.pi)
    assert np.all(ue[inside] == 1) and np.all(ue[~inside] == 0)
    assert ue[np.argmin(np.abs(x + 0.5))] == 0


def test_null_extension_boundary_samples_are_zero():
    g = Grid(-1.0, 1.0, 64)  # x = 0 is a sample
    ue = null_extend(ONE, g, (0.0, 0.5)).extended.samples
    assert ue[np.argmin(np.abs(g.x))] == 0


def test_null_extension_preserves_l2(grid):
    norm = null_extend(SINE, grid, I).extended.l2_norm()
    assert norm == pytest.approx(np.sqrt(np.pi / 2), abs=1e-8)


def test_mollifier_constant_and_mass(grid):
    v, _ = quad(lambda t: np.exp(-1 / (1 - t * t)), -1, 1, epsabs=1e-14, epsrel=1e-14)
    assert 1 / v == pytest.approx(BUMP_CONSTANT, rel=1e-12)
    for j in (2, 8, 64):
        m = make_mollifier(j, grid)
        assert m.mass == pytest.approx(1.0, abs=1e-12)
        assert m.scale == pytest.approx(BUMP_CONSTANT, rel=1e-5)
        assert m.continuum_constant == pytest.approx(BUMP_CONSTANT, rel=1e-12)


def test_mollifier_support_and_symmetry(grid):
    m = make_mollifier(16, grid)
    d = np.arange(-600, 601) * grid.dx
    v = m(d)
    assert np.all(v[np.abs(d) >= 1 / 16] == 0)
    assert np.all(v >= 0)
    np.testing.assert_array_equal(v, v[::-1])


def test_mollifier_continuum_mass(grid):
    m = make_mollifier(4, grid)
    mass = _gauss(lambda y: m(y), -0.25, 0.25, 200)
    assert mass == pytest.approx(1.0, abs=1e-8)


def test_mollifier_resolution_error():
    with pytest.raises(ResolutionError):
        make_mollifier(64, Grid.for_interval(I, 4096))


def test_truncation_support_inside_interval(grid, closure):
    x = grid.x
    for j in (2, 5, 20, 64):
        uj = mollified_truncation(SINE, closure, j).samples
        near = (x <= 1 / (2 * j)) | (x >= np.pi - 1 / (2 * j))
        assert np.all(uj[near] == 0)
        a, b = closure.interval(j)
        assert np.all(uj[(x <= a - 1 / j) | (x >= b + 1 / j)] == 0)


@pytest.mark.parametrize("method", ["fft", "quadrature"])
def test_truncation_of_one_is_one_on_plateau(grid, closure, method):
    j = 6
    uj = mollified_truncation(ONE, closure, j, method=method).samples
    a, b = closure.interval(j)
    x = grid.x
    plateau = (x > a + 1 / j) & (x < b - 1 / j)
    assert np.max(np.abs(uj[plateau] - 1)) < 1e-12


def test_truncation_of_zero(closure):
    zero = Analytic(ZERO)
    assert not np.any(mollified_truncation(zero, closure, 4).samples)


def test_truncation_requires_closure_exhaustion(grid):
    with pytest.raises(ValueError, match="closure"):
        mollified_truncation(SINE, make_exhaustion(I, 4, grid=grid), 2)


def test_derivative_of_one(closure):
    d = distributional_derivative(ONE, closure, 5, 1)
    a, b = closure.interval(5)
    assert not np.any(d.regular.samples)
    assert d.terms == (DeltaTerm(a, 0, 1 + 0j), DeltaTerm(b, 0, -1 + 0j))


def test_derivative_of_x(grid, closure):
    d = distributional_derivative(LINEAR, closure, 5, 1)
    a, b = closure.interval(5)
    x = grid.x
    np.testing.assert_array_equal(d.regular.samples, ((x > a) & (x < b)).astype(float))
    assert d.terms == (DeltaTerm(a, 0, a + 0j), DeltaTerm(b, 0, -b + 0j))


def test_second_derivative_terms(closure):
    d = distributional_derivative(SINE, closure, 3, 2)
    a, b = closure.interval(3)
    got = {(t.point, t.order): t.weight for t in d.terms}
    assert got[(a, 1)] == pytest.approx(np.sin(a)) and got[(b, 1)] == pytest.approx(-np.sin(b))
    assert got[(a, 0)] == pytest.approx(np.cos(a)) and got[(b, 0)] == pytest.approx(-np.cos(b))
    assert all(t.order <= 1 for t in d.terms)


def test_derivative_rejects_order_zero(closure):
    with pytest.raises(ValueError):
        distributional_derivative(SINE, closure, 3, 0)


def test_single_delta_prime_pairs_to_minus_derivative(grid):
    psi = TestFunction(1.5, 0.8, freq=1.3)
    d = DistributionalDerivative(1, (1.0, 2.0), GridFunction.zeros(grid), (DeltaTerm(1.4, 1, 1.0),),
                                 regular_fn=lambda x: 0.0 * x)
    assert pair_distribution(d, psi) == pytest.approx(-psi.derivative(np.array([1.4]), 1)[0], abs=1e-14)


def test_weak_derivative_of_sine(closure):
    j = 4
    d = distributional_derivative(SINE, closure, j, 1)
    a, b = closure.interval(j)
    psi = TestFunction(a, 0.4, freq=2.0)  # straddles a_j
    rhs = -_gauss(lambda y: np.sin(y) * psi.derivative(y, 1), a, min(b, a + 0.4))
    assert abs(pair_distribution(d, psi) - rhs) < 1e-6


def test_delta_terms_vanish_away_from_endpoints(closure):
    d = distributional_derivative(SINE, closure, 4, 2)
    a, b = closure.interval(4)
    psi = TestFunction((a + b) / 2, 0.2)
    singular_only = DistributionalDerivative(2, d.interval, d.regular, d.terms, regular_fn=lambda x: 0.0 * x)
    assert pair_distribution(singular_only, psi) == 0


def test_finite_difference_endpoint_values(closure):
    fd = distributional_derivative(np.sin, closure, 5, 2)
    exact = distributional_derivative(SINE, closure, 5, 2)
    for t_fd, t in zip(fd.terms, exact.terms):
        assert t_fd.point == t.point and t_fd.order == t.order
        assert abs(t_fd.weight - t.weight) < 1e-9


def test_finite_difference_orders():
    f = FiniteDifference(np.exp, h=1e-2)
    for r in (1, 2, 3):
        for side in (-1, 0, 1):
            assert abs(f.derivative(np.array([0.3]), r, side=side)[0] - np.exp(0.3)) < 1e-5


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(["one", "x", "sin"]), st.integers(1, 2), st.integers(2, 30), st.integers(0, 2**32 - 1))
def test_weak_derivative_identity(which, k, j, seed):
    u = {"one": ONE, "x": LINEAR, "sin": SINE}[which]
    grid = Grid.for_interval(I, 1024)
    exh = make_exhaustion(I, 40, closure=True, grid=grid)
    d = distributional_derivative(u, exh, j, k)
    a, b = d.interval
    for psi in random_test_functions(np.random.default_rng(seed), I, 3):
        lo, hi = max(a, psi.support[0]), min(b, psi.support[1])
        rhs = (-1) ** k * _gauss(lambda y: u(y) * psi.derivative(y, k), lo, hi) if lo < hi else 0.0
        assert abs(pair_distribution(d, psi) - rhs) < 1e-5


@pytest.mark.parametrize("k", [1, 2])
def test_two_routes_to_derivative(grid, closure, k):
    sym = SymbolPoly.from_derivative_coeffs([0] * k + [1])
    for j in (4, 10):
        uj = mollified_truncation(SINE, closure, j, method="quadrature")
        spectral = apply_operator(sym, uj).samples
        expansion = derivative_expansion(SINE, closure, j, k).samples
        assert np.max(np.abs(spectral - expansion)) < 1e-5


def test_fft_and_quadrature_agree_away_from_jumps(grid, closure):
    j = 8
    a, b = closure.interval(j)
    x = grid.x
    far = (np.abs(x - a) > 1 / j) & (np.abs(x - b) > 1 / j)
    fft = mollified_truncation(SINE, closure, j).samples
    q = mollified_truncation(SINE, closure, j, method="quadrature").samples
    assert np.max(np.abs(fft[far] - q[far])) < 1e-10


@pytest.mark.parametrize("s", [0, 1])
def test_closure_convergence_sine(grid, s):
    r = verify_closure_convergence(SINE, I, s, 1, range(2, 65), grid=grid)
    assert r.passed and r.crossover <= 64
    assert r.monotone_after_crossover
    assert r.to_records()[0].keys() == {"j", "seminorm_value"}


def test_closure_convergence_zero(grid):
    r = verify_closure_convergence(Analytic(ZERO), I, 0, 1, range(2, 10), grid=grid)
    assert all(v == 0 for _, v in r.records)


def test_closure_convergence_outside_l2(grid):
    # 1/(x(pi - x)) is not square integrable on I but is locally
    f = Analytic(lambda x: 1 / (x * (np.pi - x)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        r = verify_closure_convergence(f, I, 0, 1, range(2, 65), tol=1e-2, grid=grid)
    assert r.passed
    assert r.records[-1][1] < 1e-2


def test_closure_rejects_fractional_s(grid):
    with pytest.raises(ValueError):
        verify_closure_convergence(SINE, I, 0.5, 1, range(2, 5), grid=grid)


def test_boundary_decay_sine(grid):
    rep = verify_boundary_decay(SINE, I, 2, 0, 0, range(2, 40), fixed_index=1, grid=grid)
    assert rep.passed
    j0 = rep.geometric_crossover
    assert all(va == 0.0 and vb == 0.0 for j, va, vb in rep.records if j >= j0)
    assert all(np.isfinite(va) for j, va, vb in rep.records if j < j0)
    assert rep.observed_crossover <= j0


def test_boundary_decay_vanishing_trace(grid):
    # nonzero u with u(a_j) = u(b_j) = 0 at every closure endpoint a_j = 2/j, b_j = pi - 2/j
    u = Analytic(lambda x: np.sin(np.pi / (x / 2)) * np.sin(np.pi / ((np.pi - x) / 2)))
    rep = verify_boundary_decay(u, I, 2, 0, 1, range(2, 12), grid=grid)
    assert max(max(va, vb) for _, va, vb in rep.records) < 1e-12
