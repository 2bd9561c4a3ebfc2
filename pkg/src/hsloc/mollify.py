"""Null extension, truncation and mollification on an exhaustion.

For ``u`` on ``I`` and the closure exhaustion ``I_j = (a_j, b_j)`` this
module builds ``g_j = chi_{I_j} u_e`` and ``u_j = phi_j * g_j``, the
distributional derivatives of ``g_j`` (regular part plus Dirac terms at
``a_j``, ``b_j``), and reports that check the two convergence statements:
``u_j -> u`` and the mollified boundary terms ``-> 0`` in H^s_loc(I).

Dirac terms are kept symbolic.  They only ever act on test functions or
get mollified analytically, never gridded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .smooth import BUMP_MASS, standard_bump
from .sobolev import Exhaustion, Grid, GridFunction, make_exhaustion, seminorm

MIN_SUPPORT_SAMPLES = 32
GAUSS_NODES = 128


class ResolutionError(ValueError):
    pass


class Analytic:
    """A function on ``I`` given by callables for ``u, u', u'', ...``."""

    def __init__(self, *derivatives: Callable):
        if not derivatives:
            raise ValueError("need at least the function itself")
        self._d = derivatives

    @property
    def max_order(self) -> int:
        return len(self._d) - 1

    def derivative(self, x, r: int = 0):
        if r > self.max_order:
            raise ValueError(f"derivative of order {r} not supplied (have up to {self.max_order})")
        x = np.asarray(x, dtype=float)
        return np.asarray(self._d[r](x), dtype=complex) * np.ones_like(x)

    def __call__(self, x):
        return self.derivative(x, 0)


def _fd_weights(offsets: np.ndarray, r: int) -> np.ndarray:
    """Weights ``w`` with ``sum_i w_i f(x + o_i h) ~ h^r f^(r)(x)``."""
    n = offsets.size
    V = np.array([[o**p / math.factorial(p) for o in offsets] for p in range(n)])
    rhs = np.zeros(n)
    rhs[r] = 1.0
    return np.linalg.solve(V, rhs)


class FiniteDifference:
    """Derivatives of a plain callable by 4th-order finite differences.

    ``side=+1`` uses forward stencils, ``-1`` backward, ``0`` centered.
    """

    def __init__(self, f: Callable, h: float = 1e-3, side: int = 0):
        self.f = f
        self.h = h
        self.side = side

    def derivative(self, x, r: int = 0, side: int | None = None):
        x = np.asarray(x, dtype=float)
        if r == 0:
            return np.asarray(self.f(x), dtype=complex) * np.ones_like(x)
        side = self.side if side is None else side
        n = r + 4
        if side == 0:
            half = (n + 1) // 2
            offsets = np.arange(-half, half + 1, dtype=float)
        else:
            offsets = side * np.arange(n, dtype=float)
        w = _fd_weights(offsets, r)
        acc = np.zeros(x.shape, dtype=complex)
        for wi, o in zip(w, offsets):
            acc = acc + wi * np.asarray(self.f(x + o * self.h), dtype=complex)
        return acc / self.h**r

    def __call__(self, x):
        return self.derivative(x, 0)


def _as_function(u):
    if hasattr(u, "derivative"):
        return u
    if callable(u):
        return FiniteDifference(u)
    raise TypeError(f"cannot use {type(u).__name__} as a function on I")


def _endpoint_derivative(u, p: float, r: int, side: int) -> complex:
    """``u^(r)(p)``, one-sided toward the interior when only a callable is known."""
    if isinstance(u, FiniteDifference):
        return complex(u.derivative(np.array([p]), r, side=side)[0])
    return complex(np.asarray(u.derivative(np.array([p]), r))[0])


@dataclass(frozen=True, eq=False)
class NullExtension:
    interval: tuple[float, float]
    extended: GridFunction
    source: Callable | None = field(default=None, repr=False)


def _interior_mask(grid: Grid, interval) -> np.ndarray:
    b, c = interval
    x = grid.x
    return (x > b) & (x < c)


def null_extend(u, grid: Grid, interval) -> NullExtension:
    """Samples of ``u`` strictly inside ``interval``, zero elsewhere (endpoints included)."""
    mask = _interior_mask(grid, interval)
    vals = np.zeros(grid.n, dtype=complex)
    f = _as_function(u)
    vals[mask] = f(grid.x[mask])
    return NullExtension(tuple(interval), GridFunction(grid, vals), u)


@dataclass(frozen=True, eq=False)
class Mollifier:
    """``phi_j(x) = j c B(j x)`` with ``B(t) = exp(-1/(1 - t^2))``.

    ``c`` is fixed so the grid quadrature of ``phi_j`` is exactly 1; it
    approaches the continuum constant ``1 / int B ~ 2.2522836`` as the
    support gets resolved.
    """

    j: int
    grid: Grid
    scale: float
    mass: float

    continuum_constant = 1.0 / BUMP_MASS

    @property
    def radius(self) -> float:
        return 1.0 / self.j

    def derivatives(self, x, order: int = 0) -> np.ndarray:
        d = standard_bump(self.j * np.asarray(x, dtype=float), order)
        for r in range(order + 1):
            d[r] *= self.scale * self.j ** (r + 1)
        return d

    def __call__(self, x):
        return self.derivatives(x, 0)[0]

    def kernel(self, order: int = 0) -> np.ndarray:
        """``phi_j^(order)`` at displacements ``n dx`` in FFT (wrap-around) order."""
        n = self.grid.n
        k = np.arange(n)
        disp = np.where(k < n // 2, k, k - n) * self.grid.dx
        return self.derivatives(disp, order)[order]

    def as_grid_function(self) -> GridFunction:
        return GridFunction(self.grid, self(self.grid.x))


def make_mollifier(j: int, grid: Grid) -> Mollifier:
    if j < 1:
        raise ValueError("mollifier index must be >= 1")
    samples = 2.0 / (j * grid.dx)
    if samples < MIN_SUPPORT_SAMPLES:
        raise ResolutionError(
            f"phi_{j} support (-1/{j}, 1/{j}) spans {samples:.1f} samples; "
            f"need at least {MIN_SUPPORT_SAMPLES} (refine the grid)"
        )
    n = grid.n
    k = np.arange(n)
    disp = np.where(k < n // 2, k, k - n) * grid.dx
    raw = j * standard_bump(j * disp)[0]
    scale = 1.0 / (grid.dx * raw.sum())
    mass = float(grid.dx * np.sum(scale * raw))
    return Mollifier(j=j, grid=grid, scale=scale, mass=mass)


def _require_closure(exh: Exhaustion):
    if not exh.closure:
        raise ValueError("the closure construction needs an exhaustion built with closure=True")


def _clear_outside(vals: np.ndarray, grid: Grid, lo: float, hi: float) -> np.ndarray:
    x = grid.x
    out = vals.copy()
    out[(x <= lo) | (x >= hi)] = 0.0
    return out


def fft_convolve(f: GridFunction, kernel: np.ndarray) -> np.ndarray:
    return np.fft.ifft(np.fft.fft(f.samples) * np.fft.fft(kernel)) * f.grid.dx


def _quadrature_convolve(f, interval, moll: Mollifier, order: int = 0, nodes: int = GAUSS_NODES):
    """``(phi_j^(order) * (chi_interval f))(x_n)`` by Gauss-Legendre per sample."""
    grid = moll.grid
    a, b = interval
    x = grid.x
    r = moll.radius
    out = np.zeros(grid.n, dtype=complex)
    live = (x > a - r) & (x < b + r)
    xs = x[live]
    lo = np.maximum(a, xs - r)
    hi = np.minimum(b, xs + r)
    t, w = np.polynomial.legendre.leggauss(nodes)
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    y = mid[:, None] + half[:, None] * t[None, :]
    kern = moll.derivatives((xs[:, None] - y).ravel(), order)[order].reshape(y.shape)
    fy = np.asarray(f(y.ravel()), dtype=complex).reshape(y.shape)
    out[live] = half * np.sum(w[None, :] * kern * fy, axis=1)
    return out


def mollified_truncation(u, exh: Exhaustion, j: int, method: str = "fft") -> GridFunction:
    """``u_j = phi_j * (chi_{I_j} u_e)`` on the exhaustion's grid.

    ``method="fft"`` multiplies transforms of the sampled truncation; the
    sampled indicator costs O(dx) accuracy within ``1/j`` of ``a_j, b_j``
    and nothing elsewhere.  ``method="quadrature"`` integrates the
    convolution per sample and is accurate everywhere.
    """
    _require_closure(exh)
    grid = exh.grid
    moll = make_mollifier(j, grid)
    a, b = exh.interval(j)
    f = _as_function(u)
    if method == "fft":
        g = null_extend(f, grid, (a, b)).extended
        vals = fft_convolve(g, moll.kernel())
    elif method == "quadrature":
        vals = _quadrature_convolve(f, (a, b), moll)
    else:
        raise ValueError(f"unknown method {method!r}")
    return GridFunction(grid, _clear_outside(vals, grid, a - moll.radius, b + moll.radius))


@dataclass(frozen=True)
class DeltaTerm:
    """``weight * delta_point^(order)``."""

    point: float
    order: int
    weight: complex


@dataclass(frozen=True, eq=False)
class DistributionalDerivative:
    """``g_j^(k) = chi_{I_j} u^(k) + sum of Dirac terms at a_j, b_j``."""

    order: int
    interval: tuple[float, float]
    regular: GridFunction
    terms: tuple[DeltaTerm, ...]
    regular_fn: Callable | None = field(default=None, repr=False)

    def to_dict(self):
        return {
            "order": self.order,
            "interval": list(self.interval),
            "terms": [
                {"point": t.point, "order": t.order, "weight": [t.weight.real, t.weight.imag]}
                for t in self.terms
            ],
        }


def distributional_derivative(u, exh: Exhaustion, j: int, k: int) -> DistributionalDerivative:
    """``g_j^(k) = chi u^(k) + sum_{l<k} (u^(l)(a_j) delta_{a_j}^(k-1-l) - u^(l)(b_j) delta_{b_j}^(k-1-l))``."""
    if k < 1:
        raise ValueError("distributional_derivative needs k >= 1; k = 0 is g_j itself")
    f = _as_function(u)
    a, b = exh.interval(j)
    terms = []
    for l in range(k):
        terms.append(DeltaTerm(a, k - 1 - l, _endpoint_derivative(f, a, l, +1)))
        terms.append(DeltaTerm(b, k - 1 - l, -_endpoint_derivative(f, b, l, -1)))
    grid = exh.grid
    mask = _interior_mask(grid, (a, b))
    reg = np.zeros(grid.n, dtype=complex)
    reg[mask] = f.derivative(grid.x[mask], k)
    return DistributionalDerivative(
        order=k,
        interval=(a, b),
        regular=GridFunction(grid, reg),
        terms=tuple(terms),
        regular_fn=lambda x, _f=f, _k=k: _f.derivative(x, _k),
    )


def _gauss_integral(fn, a: float, b: float, panels: int = 16, nodes: int = 32) -> complex:
    t, w = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(a, b, panels + 1)
    total = 0.0 + 0.0j
    for lo, hi in zip(edges[:-1], edges[1:]):
        half = 0.5 * (hi - lo)
        y = 0.5 * (hi + lo) + half * t
        total += half * np.sum(w * np.asarray(fn(y), dtype=complex))
    return complex(total)


def pair_distribution(d: DistributionalDerivative, psi) -> complex:
    """``<d, psi>`` with ``<delta_p^(r), psi> = (-1)^r psi^(r)(p)``.

    ``psi`` needs ``derivative(x, r)``.  The regular part is integrated over
    ``I_j`` by composite Gauss-Legendre when its formula is known, otherwise
    by the grid rule.
    """
    a, b = d.interval
    if hasattr(psi, "support"):
        # keep panel edges on the support boundary, where psi is not analytic
        a, b = max(a, psi.support[0]), min(b, psi.support[1])
    if d.regular_fn is not None:
        reg = _gauss_integral(lambda y: d.regular_fn(y) * psi.derivative(y, 0), a, b) if a < b else 0.0
    else:
        reg = d.regular.grid.dx * complex(np.sum(d.regular.samples * psi.derivative(d.regular.x, 0)))
    singular = sum(
        t.weight * (-1) ** t.order * complex(np.asarray(psi.derivative(np.array([t.point]), t.order))[0])
        for t in d.terms
    )
    return complex(reg + singular)


def derivative_expansion(u, exh: Exhaustion, j: int, k: int) -> GridFunction:
    """``phi_j * (chi u^(k)) + sum_l (u^(l)(a_j) phi_j^(k-1-l)(. - a_j) - u^(l)(b_j) phi_j^(k-1-l)(. - b_j))``.

    This is ``u_j^(k)`` assembled from the distributional derivative of
    ``g_j``; the convolution is integrated per sample.
    """
    _require_closure(exh)
    f = _as_function(u)
    grid = exh.grid
    moll = make_mollifier(j, grid)
    d = distributional_derivative(f, exh, j, k)
    vals = _quadrature_convolve(lambda y: f.derivative(y, k), d.interval, moll)
    for t in d.terms:
        vals = vals + t.weight * moll.derivatives(grid.x - t.point, t.order)[t.order]
    return GridFunction(grid, vals)


@dataclass(frozen=True)
class ConvergenceReport:
    records: tuple[tuple[int, float], ...]
    tolerance: float
    crossover: int | None
    seminorm_index: int
    s: float

    @property
    def passed(self) -> bool:
        return self.crossover is not None

    @property
    def monotone_after_crossover(self) -> bool:
        if self.crossover is None:
            return False
        tail = [v for j, v in self.records if j >= self.crossover]
        return all(b <= a for a, b in zip(tail, tail[1:]))

    def to_records(self) -> list[dict]:
        return [{"j": j, "seminorm_value": v} for j, v in self.records]


def _tail_crossover(records, ok) -> int | None:
    """First index after which ``ok`` holds for every remaining record."""
    cross = None
    for j, v in reversed(records):
        if not ok(v):
            break
        cross = j
    return cross


def _closure_setup(interval, j_range, grid, seminorm_index):
    grid = grid or Grid.for_interval(interval, n=8192)
    js = sorted(set(int(j) for j in j_range))
    closure = make_exhaustion(interval, count=1, closure=True, grid=grid)
    if js and js[0] < closure.first:
        raise ValueError(f"closure exhaustion on {interval} starts at j = {closure.first}")
    closure = make_exhaustion(interval, count=max(js[-1] - closure.first + 1, 1) if js else 1, closure=True, grid=grid)
    semi = make_exhaustion(interval, count=seminorm_index + 1, grid=grid)
    return grid, js, closure, semi


def verify_closure_convergence(
    u,
    interval,
    s: int,
    k: int,
    j_range: Iterable[int],
    tol: float = 1e-3,
    grid: Grid | None = None,
    method: str = "fft",
) -> ConvergenceReport:
    """``p_k^(s)(u - u_j)`` over ``j_range`` with ``u_j`` the mollified truncation."""
    if int(s) != s or s < 0:
        raise ValueError("the closure construction is for integer s >= 0")
    grid, js, closure, semi = _closure_setup(interval, j_range, grid, k)
    f = _as_function(u)
    ue = null_extend(f, grid, interval).extended
    records = []
    for j in js:
        uj = mollified_truncation(f, closure, j, method=method)
        records.append((j, seminorm(ue - uj, semi, k, s)))
    return ConvergenceReport(tuple(records), tol, _tail_crossover(records, lambda v: v < tol), k, float(s))


@dataclass(frozen=True)
class BoundaryDecayReport:
    records: tuple[tuple[int, float, float], ...]
    geometric_crossover: int | None
    observed_crossover: int | None
    derivative_order: int
    l: int

    @property
    def passed(self) -> bool:
        if self.geometric_crossover is None:
            return False
        return all(va == 0.0 and vb == 0.0 for j, va, vb in self.records if j >= self.geometric_crossover)

    def to_records(self) -> list[dict]:
        return [{"j": j, "seminorm_value_a": va, "seminorm_value_b": vb} for j, va, vb in self.records]


def verify_boundary_decay(
    u,
    interval,
    k: int,
    l: int,
    s: int,
    j_range: Iterable[int],
    fixed_index: int = 1,
    grid: Grid | None = None,
) -> BoundaryDecayReport:
    """Seminorms of ``u^(l)(a_j) phi_j^(k-1-l)(. - a_j)`` and the ``b_j`` analogue.

    Values are exactly zero once ``B_{1/j}(a_j)`` and ``B_{1/j}(b_j)`` leave
    the support of the fixed cutoff; the first such ``j`` is the geometric
    crossover.
    """
    if not 0 <= l <= k - 1:
        raise ValueError("need 0 <= l <= k - 1")
    grid, js, closure, semi = _closure_setup(interval, j_range, grid, fixed_index)
    f = _as_function(u)
    cut = semi.cutoff_function(fixed_index)
    lo, hi = cut.outer
    r = k - 1 - l
    records = []
    geometric = None
    for j in js:
        moll = make_mollifier(j, grid)
        a, b = closure.interval(j)
        wa = _endpoint_derivative(f, a, l, +1)
        wb = _endpoint_derivative(f, b, l, -1)
        seq_a = GridFunction(grid, wa * moll.derivatives(grid.x - a, r)[r])
        seq_b = GridFunction(grid, wb * moll.derivatives(grid.x - b, r)[r])
        records.append((j, seminorm(seq_a, semi, fixed_index, s), seminorm(seq_b, semi, fixed_index, s)))
        clear = a + moll.radius <= lo and b - moll.radius >= hi
        if clear and geometric is None:
            geometric = j
        elif not clear:
            geometric = None
    observed = _tail_crossover([(j, max(va, vb)) for j, va, vb in records], lambda v: v == 0.0)
    return BoundaryDecayReport(tuple(records), geometric, observed, k, l)


__all__ = [
    "Analytic",
    "FiniteDifference",
    "NullExtension",
    "null_extend",
    "Mollifier",
    "make_mollifier",
    "ResolutionError",
    "mollified_truncation",
    "DeltaTerm",
    "DistributionalDerivative",
    "distributional_derivative",
    "pair_distribution",
    "derivative_expansion",
    "ConvergenceReport",
    "verify_closure_convergence",
    "BoundaryDecayReport",
    "verify_boundary_decay",
]
