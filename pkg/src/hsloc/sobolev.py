"""Grid realization of H^s(R) norms and the seminorms of H^s_loc(I).

Functions live on a uniform grid over a window that strictly contains the
interval of interest.  Transforms use the convention
``u_hat(xi) = int exp(-2 pi i x xi) u(x) dx`` approximated by the DFT scaled
by the grid step, with the phase of the window origin restored.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .smooth import Cutoff
from .symbol import PeriodizationWarning

DEFAULT_N = 4096
DEFAULT_PADDING = 0.25
EDGE_RTOL = 1e-10


class RoughnessWarning(UserWarning):
    """The transform does not decay; H^s quadrature will not converge in N."""


@dataclass(frozen=True)
class Grid:
    lo: float
    hi: float
    n: int = DEFAULT_N

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"empty window ({self.lo}, {self.hi})")
        if self.n < 16 or self.n & (self.n - 1):
            raise ValueError(f"sample count must be a power of two >= 16, got {self.n}")

    @classmethod
    def for_interval(cls, interval, n: int = DEFAULT_N, padding: float = DEFAULT_PADDING) -> "Grid":
        """Window extending ``interval`` by ``padding * length`` on each side."""
        b, c = _check_interval(interval)
        pad = padding * (c - b)
        return cls(b - pad, c + pad, n)

    @property
    def dx(self) -> float:
        return (self.hi - self.lo) / self.n

    @property
    def dxi(self) -> float:
        return 1.0 / (self.n * self.dx)

    @property
    def x(self) -> np.ndarray:
        return self.lo + self.dx * np.arange(self.n)

    @property
    def frequencies(self) -> np.ndarray:
        return np.fft.fftfreq(self.n, self.dx)

    def contains(self, interval) -> bool:
        b, c = interval
        return self.lo < b and c < self.hi

    def to_dict(self):
        return {"window": [self.lo, self.hi], "N": self.n}


def _check_interval(interval) -> tuple[float, float]:
    b, c = (float(v) for v in interval)
    if not (math.isfinite(b) and math.isfinite(c)):
        raise ValueError(f"interval {interval} is unbounded")
    if not b < c:
        raise ValueError(f"interval {interval} is empty")
    return b, c


@dataclass(frozen=True, eq=False)
class GridFunction:
    grid: Grid
    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        if s.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} samples, got shape {s.shape}")
        object.__setattr__(self, "samples", s)

    @classmethod
    def from_callable(cls, grid: Grid, f: Callable) -> "GridFunction":
        return cls(grid, np.asarray(f(grid.x), dtype=complex) * np.ones(grid.n))

    @classmethod
    def zeros(cls, grid: Grid) -> "GridFunction":
        return cls(grid, np.zeros(grid.n, dtype=complex))

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def _other(self, other):
        if isinstance(other, GridFunction):
            if other.grid != self.grid:
                raise ValueError("grid functions live on different grids")
            return other.samples
        return other

    def __add__(self, other):
        return GridFunction(self.grid, self.samples + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GridFunction(self.grid, self.samples - self._other(other))

    def __mul__(self, other):
        return GridFunction(self.grid, self.samples * self._other(other))

    __rmul__ = __mul__

    def __neg__(self):
        return GridFunction(self.grid, -self.samples)

    def l2_norm(self) -> float:
        return float(np.sqrt(self.grid.dx * np.sum(np.abs(self.samples) ** 2)))

    def integral(self) -> complex:
        return complex(self.grid.dx * np.sum(self.samples))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "re", "im"])
        for xv, v in zip(self.x, self.samples):
            w.writerow([f"{xv:.12g}", f"{v.real:.12g}", f"{v.imag:.12g}"])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(
            {
                "grid": self.grid.to_dict(),
                "re": self.samples.real.tolist(),
                "im": self.samples.imag.tolist(),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "GridFunction":
        d = json.loads(text)
        lo, hi = d["grid"]["window"]
        grid = Grid(lo, hi, d["grid"]["N"])
        return cls(grid, np.asarray(d["re"]) + 1j * np.asarray(d["im"]))


def check_edges(u: GridFunction, rtol: float = EDGE_RTOL) -> bool:
    """Warn if ``u`` does not decay at the window edges; return True when clean."""
    s = np.abs(u.samples)
    peak = s.max()
    if peak == 0:
        return True
    k = max(2, u.grid.n // 100)
    edge = max(s[:k].max(), s[-k:].max())
    if edge > rtol * peak:
        warnings.warn(
            f"window-edge magnitude {edge:.3g} exceeds {rtol:g} x peak {peak:.3g}; "
            "the discrete transform will periodize",
            PeriodizationWarning,
            stacklevel=3,
        )
        return False
    return True


@dataclass(frozen=True, eq=False)
class FourierSamples:
    """``u_hat`` on the dual grid, in ``numpy.fft`` ordering."""

    grid: Grid
    values: np.ndarray

    @property
    def frequencies(self) -> np.ndarray:
        return self.grid.frequencies

    def reflected(self) -> np.ndarray:
        """``u_hat(-xi_n)`` in the same ordering."""
        xi = self.grid.frequencies
        dft = self.values * np.exp(2j * np.pi * self.grid.lo * xi) / self.grid.dx
        rev = np.roll(dft[::-1], 1)
        return self.grid.dx * np.exp(-2j * np.pi * self.grid.lo * (-xi)) * rev


def fourier(u: GridFunction) -> FourierSamples:
    check_edges(u)
    xi = u.grid.frequencies
    vals = u.grid.dx * np.exp(-2j * np.pi * u.grid.lo * xi) * np.fft.fft(u.samples)
    return FourierSamples(u.grid, vals)


def _sobolev_weight(xi, s: float):
    return (1.0 + xi * xi) ** s


def _roughness_check(spec: FourierSamples, s: float):
    power = np.abs(spec.values) ** 2 * _sobolev_weight(spec.frequencies, s)
    total = power.sum()
    if total == 0:
        return
    xi = np.abs(spec.frequencies)
    top = power[xi > 0.75 * xi.max()].sum()
    if top > 1e-6 * total:
        warnings.warn(
            f"{top / total:.2e} of the H^{s:g} energy sits in the top quarter of the "
            "spectrum; the input looks non-smooth and the norm will grow with N",
            RoughnessWarning,
            stacklevel=3,
        )


def hs_norm(u: GridFunction, s: float) -> float:
    """``(sum_n (1 + xi_n^2)^s |u_hat(xi_n)|^2 dxi)^(1/2)``."""
    spec = fourier(u)
    if s >= 1:
        _roughness_check(spec, s)
    w = _sobolev_weight(spec.frequencies, s)
    return float(np.sqrt(np.sum(w * np.abs(spec.values) ** 2) * u.grid.dxi))


def bump(inner, outer, grid: Grid) -> GridFunction:
    """Smooth cutoff: 1 on ``inner``, 0 outside ``outer``, values in [0, 1]."""
    return GridFunction(grid, Cutoff(tuple(inner), tuple(outer))(grid.x))


@dataclass(frozen=True)
class Exhaustion:
    """Nested intervals ``I_j = (a_j, b_j)`` exhausting ``I = (b, c)``.

    Margins ``l(I) / (j + 2)`` by default; with ``closure`` set, margins are
    ``2 / j`` so that ``d(I_j, R \\ I) >= 2 / j``, and indexing starts at the
    first ``j`` with ``2/j < l(I)/2``.  The cutoff ``phi_j`` equals 1 on
    ``[a_j, b_j]`` and is supported inside ``I_{j+1}``.
    """

    base: tuple[float, float]
    grid: Grid
    first: int
    count: int
    closure: bool = False

    @property
    def length(self) -> float:
        return self.base[1] - self.base[0]

    @property
    def indices(self) -> range:
        return range(self.first, self.first + self.count)

    def margin(self, j: int) -> float:
        if j < self.first:
            raise IndexError(f"exhaustion index {j} precedes the first index {self.first}")
        return 2.0 / j if self.closure else self.length / (j + 2)

    def interval(self, j: int) -> tuple[float, float]:
        d = self.margin(j)
        a, b = self.base[0] + d, self.base[1] - d
        if self.closure:
            # keep the distance bound exact in floating point
            while a - self.base[0] < d:
                a = math.nextafter(a, math.inf)
            while self.base[1] - b < d:
                b = math.nextafter(b, -math.inf)
        return a, b

    def cutoff_function(self, j: int) -> Cutoff:
        a, b = self.interval(j)
        a1, b1 = self.interval(j + 1)
        return Cutoff((a, b), (a1 + (a - a1) / 4, b1 - (b1 - b) / 4))

    def cutoff(self, j: int) -> GridFunction:
        return GridFunction(self.grid, self.cutoff_function(j)(self.grid.x))

    @property
    def cutoffs(self) -> list[GridFunction]:
        return [self.cutoff(j) for j in self.indices]


def make_exhaustion(interval, count: int, closure: bool = False, grid: Grid | None = None) -> Exhaustion:
    b, c = _check_interval(interval)
    if count < 1:
        raise ValueError("count must be >= 1")
    grid = grid or Grid.for_interval((b, c))
    if not grid.contains((b, c)):
        raise ValueError(f"grid window ({grid.lo}, {grid.hi}) must strictly contain {interval}")
    first = math.floor(4.0 / (c - b)) + 1 if closure else 1
    return Exhaustion((b, c), grid, first, count, closure)


def seminorm(u: GridFunction, exh: Exhaustion, j: int, s: float) -> float:
    """``p_j^(s)(u) = || phi_j u ||_{H^s(R)}``."""
    if u.grid != exh.grid:
        raise ValueError("function and exhaustion live on different grids")
    return hs_norm(exh.cutoff(j) * u, s)


def pairing(g: GridFunction, u: GridFunction, s: float = 0.0) -> complex:
    """Bilinear ``<g, u> = sum_n g_hat(-xi_n) u_hat(xi_n) dxi``.

    ``s`` only labels the duality H^{-s} x H^s; the weights cancel.
    """
    if g.grid != u.grid:
        raise ValueError("pairing needs both functions on the same grid")
    gh = fourier(g)
    uh = fourier(u)
    return complex(np.sum(gh.reflected() * uh.values) * u.grid.dxi)


def norm_records(u: GridFunction, exh: Exhaustion, js: Iterable[int], ss: Iterable[float]) -> list[dict]:
    return [{"j": int(j), "s": float(s), "value": seminorm(u, exh, j, s)} for j in js for s in ss]
