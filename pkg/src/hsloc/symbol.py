"""Polynomial symbols of constant-coefficient differential operators.

A symbol ``a(xi) = sum_k a_k xi^k`` determines the operator
``a(D) = sum_k (2 pi i)^{-k} a_k d^k/dx^k``.  Under the transform
``u_hat(xi) = int exp(-2 pi i x xi) u(x) dx`` the operator acts on the
frequency side as multiplication by ``a(xi)``.  Coefficients are stored
lowest degree first.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

TWO_PI_I = 2j * np.pi
ROOT_CLUSTER_RTOL = 1e-7


@dataclass(frozen=True)
class SymbolPoly:
    """Complex coefficient vector ``(a_0, ..., a_m)``.

    The leading coefficient must be nonzero unless the symbol is a constant.
    Use :meth:`trimmed` to drop trailing zeros instead of rejecting them.
    """

    coeffs: tuple[complex, ...]

    def __init__(self, coeffs: Sequence[complex], order: int | None = None):
        c = tuple(complex(v) for v in coeffs)
        if not c:
            raise ValueError("a symbol needs at least one coefficient")
        if order is not None and order != len(c) - 1:
            raise ValueError(f"declared order {order} but {len(c)} coefficients given")
        if len(c) > 1 and c[-1] == 0:
            raise ValueError(
                f"leading coefficient a_{len(c) - 1} is zero; the order is not normalized"
            )
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def trimmed(cls, coeffs: Sequence[complex]) -> "SymbolPoly":
        c = list(coeffs)
        while len(c) > 1 and complex(c[-1]) == 0:
            c.pop()
        return cls(c)

    @classmethod
    def laplacian(cls) -> "SymbolPoly":
        """``a(xi) = -4 pi^2 xi^2``, i.e. ``a(D) = d^2/dx^2``."""
        return cls([0.0, 0.0, -4.0 * np.pi**2])

    @classmethod
    def from_derivative_coeffs(cls, d: Sequence[complex]) -> "SymbolPoly":
        """Symbol of ``sum_k d_k u^(k)`` (plain x-space coefficients)."""
        return cls([complex(dk) * TWO_PI_I**k for k, dk in enumerate(d)])

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @property
    def array(self) -> np.ndarray:
        return np.array(self.coeffs, dtype=complex)

    def derivative_coeffs(self, transpose: bool = False) -> np.ndarray:
        """x-space coefficients ``c_k`` with ``a(D) = sum_k c_k d^k/dx^k``."""
        base = -TWO_PI_I if transpose else TWO_PI_I
        return np.array([a * base ** (-k) for k, a in enumerate(self.coeffs)])

    def __call__(self, z):
        return eval_symbol(self, z)

    def is_laplacian(self, rtol: float = 1e-12) -> bool:
        if self.order != 2:
            return False
        ref = np.array([0.0, 0.0, -4.0 * np.pi**2])
        return bool(np.allclose(self.array, ref, rtol=rtol, atol=rtol * abs(ref[2])))

    def to_json(self) -> str:
        return json.dumps([[c.real, c.imag] for c in self.coeffs])

    @classmethod
    def from_json(cls, text: str) -> "SymbolPoly":
        return cls([complex(re, im) for re, im in json.loads(text)])


def eval_symbol(sym: SymbolPoly, z):
    """Horner evaluation of ``sum_k a_k z^k``; accepts scalars or arrays."""
    z = np.asarray(z)
    acc = np.zeros_like(z, dtype=complex) + sym.coeffs[-1]
    for a in reversed(sym.coeffs[:-1]):
        acc = acc * z + a
    return acc if acc.ndim else complex(acc)


def _poly_derivative(coeffs: np.ndarray, times: int) -> np.ndarray:
    c = np.asarray(coeffs, dtype=complex)
    for _ in range(times):
        if c.size <= 1:
            return np.zeros(1, dtype=complex)
        c = c[1:] * np.arange(1, c.size)
    return c


def _horner(coeffs, z):
    z = np.asarray(z, dtype=complex)
    acc = np.zeros_like(z) + coeffs[-1]
    for a in coeffs[-2::-1]:
        acc = acc * z + a
    return acc


def transpose_coeffs(sym: SymbolPoly) -> SymbolPoly:
    """Symbol of the formal transpose: ``a_k -> (-1)^k a_k``, i.e. ``a'(xi) = a(-xi)``."""
    return SymbolPoly([a * (-1) ** k for k, a in enumerate(sym.coeffs)])


def _require_positive_order(sym: SymbolPoly, what: str):
    if sym.order < 1:
        raise ValueError(f"{what} needs a symbol of order m >= 1, got m = 0")


@dataclass(frozen=True)
class EllipticityReport:
    elliptic: bool
    lower_constant: float
    threshold: float
    audit_min_ratio: float

    def to_dict(self):
        return {
            "elliptic": self.elliptic,
            "c": self.lower_constant,
            "C": self.threshold,
            "audit_min_ratio": self.audit_min_ratio,
        }


def audit_ellipticity(sym: SymbolPoly, c: float, C: float, n: int = 400) -> float:
    """Minimum of ``|a(xi)| / (c |xi|^m)`` over ``C <= |xi| <= 10 C`` (both signs)."""
    xi = np.geomspace(C, 10.0 * C, n)
    xi = np.concatenate([xi, -xi])
    return float(np.min(np.abs(eval_symbol(sym, xi)) / (c * np.abs(xi) ** sym.order)))


def ellipticity(sym: SymbolPoly) -> EllipticityReport:
    """Explicit constants for ``|a(xi)| >= c |xi|^m`` when ``|xi| >= C``.

    In one variable with constant coefficients the condition reduces to
    ``a_m != 0``; the triangle inequality gives ``c = |a_m|/2`` and
    ``C = max(1, 2 sum_{k<m} |a_k| / |a_m|)``.
    """
    _require_positive_order(sym, "ellipticity")
    lead = abs(sym.coeffs[-1])
    c = lead / 2.0
    C = max(1.0, 2.0 * sum(abs(a) for a in sym.coeffs[:-1]) / lead)
    ratio = audit_ellipticity(sym, c, C)
    # the triangle bound can be attained exactly; allow for rounding
    return EllipticityReport(elliptic=ratio >= 1.0 - 1e-12, lower_constant=c, threshold=C, audit_min_ratio=ratio)


@dataclass(frozen=True)
class AuditGrid:
    """Log-spaced positive frequencies ``[xi_min, xi_max]``; mirrored to negatives."""

    xi_min: float = 1.0
    xi_max: float = 1e4
    count: int = 400

    def frequencies(self) -> np.ndarray:
        return np.geomspace(self.xi_min, self.xi_max, self.count)


@dataclass(frozen=True)
class HypoellipticityReport:
    hypoelliptic: bool
    delta: float
    constant: float
    zeros: tuple[complex, ...]
    frequencies: np.ndarray = field(repr=False)
    distances: np.ndarray = field(repr=False)
    derivative_ratios: dict = field(repr=False, default_factory=dict)

    def to_dict(self):
        return {
            "hypoelliptic": self.hypoelliptic,
            "delta": self.delta,
            "C": self.constant,
            "zeros": [[z.real, z.imag] for z in self.zeros],
        }


def _symbol_zeros(sym: SymbolPoly) -> np.ndarray:
    a = sym.array
    if sym.order == 0:
        return np.zeros(0, dtype=complex)
    return _companion_roots(a)


def _companion_roots(coeffs: np.ndarray) -> np.ndarray:
    """Roots of ``sum_k coeffs[k] z^k`` as eigenvalues of the companion matrix."""
    c = np.asarray(coeffs, dtype=complex)
    m = c.size - 1
    monic = c[:-1] / c[-1]
    comp = np.zeros((m, m), dtype=complex)
    if m > 1:
        comp[1:, :-1] = np.eye(m - 1)
    comp[:, -1] = -monic
    return np.linalg.eigvals(comp)


def hypoellipticity(sym: SymbolPoly, audit: AuditGrid | None = None) -> HypoellipticityReport:
    """Tail audit of the distance ``d_P(xi) = min_j |xi - zeta_j|`` to the zeros of ``a``.

    ``delta`` is the least-squares slope of ``log d_P`` against ``log |xi|``
    over the last decade of the audit grid, capped at 1.  The derivative
    bounds ``|a^(alpha)(xi)| <= C |xi|^(-delta alpha) |a(xi)|`` are checked
    on the same tail for every ``alpha = 1..m``; the reported ``C`` is the
    largest observed ratio.
    """
    _require_positive_order(sym, "hypoellipticity")
    audit = audit or AuditGrid()
    zeros = _symbol_zeros(sym)
    radius = float(np.max(np.abs(zeros))) if zeros.size else 0.0
    xi = audit.frequencies()
    tail = xi[(xi >= audit.xi_max / 10.0) & (xi > 2.0 * radius)]
    if tail.size < 8:
        raise ValueError(
            f"tail too short: audit grid max {audit.xi_max:g} does not clear "
            f"the zero set (largest modulus {radius:g}) by a decade"
        )
    both = np.concatenate([-xi[::-1], xi])
    dist = np.min(np.abs(both[:, None] - zeros[None, :]), axis=1)

    tail_all = np.concatenate([-tail[::-1], tail])
    dtail = np.min(np.abs(tail_all[:, None] - zeros[None, :]), axis=1)
    slope = np.polyfit(np.log(np.abs(tail_all)), np.log(dtail), 1)[0]
    delta = float(min(slope, 1.0))

    a_tail = np.abs(eval_symbol(sym, tail_all))
    ratios = {}
    bounded = True
    half = tail.size // 2
    for alpha in range(1, sym.order + 1):
        der = np.abs(_horner(_poly_derivative(sym.array, alpha), tail_all))
        r = der * np.abs(tail_all) ** (delta * alpha) / a_tail
        ratios[alpha] = r
        # bounded means: no growth from the first half of the tail to the second
        pos = r[tail.size:]
        neg = r[: tail.size][::-1]
        for part in (pos, neg):
            if np.max(part[half:]) > 2.0 * np.max(part[:half]) + 1e-12:
                bounded = False
    constant = float(max(np.max(r) for r in ratios.values()))
    outer = xi > 2.0 * radius
    pos_side = dist[xi.size:][outer]
    neg_side = dist[: xi.size][::-1][outer]
    monotone = all(
        bool(np.all(np.diff(side) >= -1e-12 * (1.0 + radius))) for side in (pos_side, neg_side)
    )
    return HypoellipticityReport(
        hypoelliptic=bool(delta > 0 and bounded and monotone),
        delta=delta,
        constant=constant,
        zeros=tuple(complex(z) for z in zeros),
        frequencies=both,
        distances=dist,
        derivative_ratios=ratios,
    )


@dataclass(frozen=True)
class CharacteristicRoots:
    """Distinct roots with multiplicities of the characteristic polynomial."""

    roots: tuple[tuple[complex, int], ...]
    degree: int
    lam: complex = 0.0
    transpose: bool = False

    @property
    def values(self) -> np.ndarray:
        return np.array([r for r, _ in self.roots], dtype=complex)

    @property
    def multiplicities(self) -> list[int]:
        return [k for _, k in self.roots]

    def basis(self) -> list[tuple[complex, int]]:
        """Solution basis ``x^r e^{beta x}`` as ``(beta, r)`` pairs, m of them."""
        return [(beta, r) for beta, mult in self.roots for r in range(mult)]


def characteristic_coeffs(sym: SymbolPoly, lam: complex, transpose: bool = False) -> np.ndarray:
    """Coefficients (lowest first) of ``p(mu) = lam - sum_k c_k mu^k``."""
    c = -sym.derivative_coeffs(transpose)
    c[0] += lam
    return c


def characteristic_roots(
    sym: SymbolPoly, lam: complex, transpose: bool = False, rtol: float = ROOT_CLUSTER_RTOL
) -> CharacteristicRoots:
    """Exponents ``mu`` with ``(lam - a(D)) e^{mu x} = 0``.

    With ``transpose=True`` the roots belong to ``lam - a(D)'`` instead.
    Companion-matrix eigenvalues are polished by Newton steps and grouped
    into clusters of radius ``rtol * (1 + |lam|)``; a cluster of size k is
    reported once with multiplicity k.
    """
    _require_positive_order(sym, "characteristic_roots")
    p = characteristic_coeffs(sym, lam, transpose)
    raw = _companion_roots(p)
    tol = rtol * (1.0 + abs(lam))
    clusters = _cluster(raw, tol)
    dp = _poly_derivative(p, 1)
    roots = []
    for members in clusters:
        beta = complex(np.mean(members))
        if len(members) == 1:
            beta = _newton_polish(p, dp, beta)
        roots.append((beta, len(members)))
    roots.sort(key=lambda rm: (-round(rm[0].real, 12), -round(rm[0].imag, 12)))
    return CharacteristicRoots(roots=tuple(roots), degree=sym.order, lam=complex(lam), transpose=transpose)


def _cluster(values: np.ndarray, tol: float) -> list[list[complex]]:
    remaining = list(values)
    clusters = []
    while remaining:
        seed = remaining.pop(0)
        group = [seed]
        changed = True
        while changed:
            changed = False
            for v in list(remaining):
                if min(abs(v - g) for g in group) <= tol:
                    group.append(v)
                    remaining.remove(v)
                    changed = True
        clusters.append(group)
    return clusters


def _newton_polish(p, dp, z, steps: int = 3):
    for _ in range(steps):
        d = complex(_horner(dp, z))
        if d == 0:
            break
        step = complex(_horner(p, z)) / d
        if not np.isfinite(step):
            break
        z_new = z - step
        if abs(_horner(p, z_new)) > abs(_horner(p, z)):
            break
        z = z_new
    return z


class PeriodizationWarning(UserWarning):
    """Samples near the window edge are not negligible; the DFT will wrap."""


def apply_operator(sym: SymbolPoly, u, transpose: bool = False):
    """``a(D) u`` by multiplying the discrete transform by ``a(xi)``.

    Spectrally accurate for smooth ``u`` that decays inside the window.
    """
    from .sobolev import GridFunction, check_edges

    check_edges(u)
    xi = u.grid.frequencies
    s = transpose_coeffs(sym) if transpose else sym
    mult = eval_symbol(s, xi)
    out = np.fft.ifft(np.fft.fft(u.samples) * mult)
    return GridFunction(u.grid, out)


__all__ = [
    "SymbolPoly",
    "eval_symbol",
    "transpose_coeffs",
    "ellipticity",
    "EllipticityReport",
    "hypoellipticity",
    "HypoellipticityReport",
    "AuditGrid",
    "CharacteristicRoots",
    "characteristic_roots",
    "characteristic_coeffs",
    "apply_operator",
    "PeriodizationWarning",
]
