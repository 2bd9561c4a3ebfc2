"""C-infinity building blocks with exact derivatives.

Everything here is evaluated through truncated Taylor arithmetic, so the
k-th derivative of a cutoff or bump is exact up to rounding and is
identically zero wherever the function is locally constant.  Several
certificates downstream rely on that: a seminorm of a product whose
factors have disjoint supports comes out as a literal ``0.0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# exp(-x) underflows to 0 in double precision for x > ~745
_EXP_CUTOFF = 700.0


def _mul(a, b):
    """Truncated product of two Taylor coefficient stacks, shape (K+1, n)."""
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape), dtype=np.result_type(a, b))
    K = out.shape[0] - 1
    for k in range(K + 1):
        for i in range(k + 1):
            out[k] = out[k] + a[i] * b[k - i]
    return out


def _recip(a):
    out = np.zeros_like(a)
    out[0] = 1.0 / a[0]
    for k in range(1, a.shape[0]):
        acc = np.zeros_like(a[0])
        for i in range(1, k + 1):
            acc = acc + a[i] * out[k - i]
        out[k] = -acc * out[0]
    return out


def _exp(a):
    out = np.zeros_like(a)
    out[0] = np.exp(a[0])
    for k in range(1, a.shape[0]):
        acc = np.zeros_like(a[0])
        for i in range(1, k + 1):
            acc = acc + i * a[i] * out[k - i]
        out[k] = acc / k
    return out


def _to_derivatives(coeffs):
    fact = np.array([math.factorial(k) for k in range(coeffs.shape[0])], dtype=float)
    return coeffs * fact.reshape((-1,) + (1,) * (coeffs.ndim - 1))


def smoothstep(t, order: int = 0):
    """Derivatives ``S^(0..order)(t)`` of the C-infinity step.

    ``S(t) = s(t) / (s(t) + s(1 - t))`` with ``s(t) = exp(-1/t)`` for t > 0
    and 0 otherwise.  ``S`` is 0 for t <= 0, 1 for t >= 1.

    Returns an array of shape ``(order + 1, len(t))``.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.zeros((order + 1, t.size))
    out[0, t >= 1.0] = 1.0
    inside = (t > 0.0) & (t < 1.0)
    if not inside.any():
        return out
    t0 = t[inside]
    # S = logistic(h), h = 1/(1-t) - 1/t
    h = np.zeros((order + 1, t0.size))
    for k in range(order + 1):
        h[k] = (1.0 - t0) ** (-(k + 1)) - (-1.0) ** k * t0 ** (-(k + 1))
    pos = h[0] >= 0
    coeffs = np.zeros_like(h)
    flat_hi = h[0] > _EXP_CUTOFF
    flat_lo = h[0] < -_EXP_CUTOFF
    with np.errstate(over="ignore", invalid="ignore"):
        # h >= 0: S = 1 / (1 + exp(-h))
        one_plus = _exp(-h)
        one_plus[0] += 1.0
        s_pos = _recip(one_plus)
        # h < 0: S = 1 - 1 / (1 + exp(h))
        one_plus = _exp(h)
        one_plus[0] += 1.0
        s_neg = -_recip(one_plus)
        s_neg[0] += 1.0
    coeffs = np.where(pos[None, :], s_pos, s_neg)
    coeffs[:, flat_hi] = 0.0
    coeffs[0, flat_hi] = 1.0
    coeffs[:, flat_lo] = 0.0
    out[:, inside] = _to_derivatives(coeffs)
    return out


def standard_bump(t, order: int = 0):
    """Derivatives of ``B(t) = exp(-1/(1 - t^2))`` on |t| < 1, zero elsewhere.

    Unnormalized; ``1 / integral(B) ~ 2.2522836``.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.zeros((order + 1, t.size))
    inside = np.abs(t) < 1.0
    if not inside.any():
        return out
    t0 = t[inside]
    q = np.zeros((order + 1, t0.size))
    q[0] = 1.0 - t0 * t0
    if order >= 1:
        q[1] = -2.0 * t0
    if order >= 2:
        q[2] = -1.0
    with np.errstate(over="ignore", invalid="ignore"):
        coeffs = _exp(-_recip(q))
    dead = 1.0 / q[0] > _EXP_CUTOFF
    coeffs[:, dead] = 0.0
    out[:, inside] = _to_derivatives(coeffs)
    return out


BUMP_MASS = 0.4439938161680794  # integral of B over (-1, 1)


@dataclass(frozen=True)
class Cutoff:
    """Smooth cutoff equal to 1 on ``inner`` and 0 outside ``outer``."""

    inner: tuple[float, float]
    outer: tuple[float, float]

    def __post_init__(self):
        (ilo, ihi), (olo, ohi) = self.inner, self.outer
        if not (olo < ilo <= ihi < ohi):
            raise ValueError(
                f"inner interval {self.inner} must lie strictly inside outer {self.outer}"
            )

    @property
    def margins(self) -> tuple[float, float]:
        return self.inner[0] - self.outer[0], self.outer[1] - self.inner[1]

    def derivatives(self, x, order: int = 0):
        """Rows 0..order hold the derivatives of the cutoff at ``x``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        left, right = self.margins
        rise = smoothstep((x - self.outer[0]) / left, order)
        fall = smoothstep((self.outer[1] - x) / right, order)
        for q in range(order + 1):
            rise[q] *= left ** (-q)
            fall[q] *= (-1.0 / right) ** q
        out = np.zeros_like(rise)
        for q in range(order + 1):
            for i in range(q + 1):
                out[q] += math.comb(q, i) * rise[i] * fall[q - i]
        return out

    def __call__(self, x):
        return self.derivatives(x, 0)[0]


@dataclass(frozen=True)
class TestFunction:
    """``amplitude * B((x - center)/radius) * cos(freq*(x - center) + phase)``.

    Smooth, compactly supported in ``(center - radius, center + radius)``,
    with exact derivatives of any order.
    """

    center: float
    radius: float
    amplitude: complex = 1.0
    freq: float = 0.0
    phase: float = 0.0

    __test__ = False  # not a pytest class

    @property
    def support(self) -> tuple[float, float]:
        return self.center - self.radius, self.center + self.radius

    def derivatives(self, x, order: int = 0):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        b = standard_bump((x - self.center) / self.radius, order)
        for q in range(order + 1):
            b[q] *= self.radius ** (-q)
        arg = self.freq * (x - self.center) + self.phase
        c = np.empty_like(b)
        for q in range(order + 1):
            c[q] = self.freq**q * np.cos(arg + q * np.pi / 2)
        out = np.zeros(b.shape, dtype=complex)
        for q in range(order + 1):
            for i in range(q + 1):
                out[q] += math.comb(q, i) * b[i] * c[q - i]
        return self.amplitude * out

    def derivative(self, x, order: int):
        return self.derivatives(x, order)[order]

    def __call__(self, x):
        return self.derivatives(x, 0)[0]


def random_test_functions(rng: np.random.Generator, interval, count: int):
    """Draw ``count`` test functions supported strictly inside ``interval``."""
    lo, hi = interval
    length = hi - lo
    out = []
    for _ in range(count):
        radius = rng.uniform(0.1, 0.3) * length
        center = rng.uniform(lo + radius + 0.02 * length, hi - radius - 0.02 * length)
        amp = complex(rng.normal(), rng.normal())
        out.append(
            TestFunction(
                center=center,
                radius=radius,
                amplitude=amp,
                freq=rng.uniform(0.0, 4.0),
                phase=rng.uniform(0.0, 2 * np.pi),
            )
        )
    return out
