"""Spectral classification of ``a(D)`` on an interval for several domains.

A value ``lam`` is tested by building the boundary system for the
exponential solutions of ``(lam - a(D)) u = 0`` and reading off its
kernel.  Universal statements (``sigma_c = C`` and friends) are not taken
on faith.  Each classification is backed by a computed certificate, and
a certificate that disagrees with the expected outcome raises
:class:`ConsistencyAlarm` instead of being silently overridden.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .smooth import TestFunction
from .sobolev import Grid, GridFunction, _check_interval, hs_norm, make_exhaustion
from .symbol import (
    SymbolPoly,
    apply_operator,
    characteristic_coeffs,
    characteristic_roots,
    ellipticity,
    hypoellipticity,
    transpose_coeffs,
    _horner,
)

RANK_RTOL = 1e-8
DEFAULT_BOX = 12.0
DEFAULT_GRID_SIDE = 16


class ConsistencyAlarm(RuntimeError):
    """A computed certificate contradicts the expected spectral statement."""


class HypothesisError(ValueError):
    """The operator does not satisfy the assumptions of the classification."""


class DomainVariant(enum.Enum):
    MINIMAL_SUPPORT = "minimal_support"  # H^{s+m}_0(I)
    DIRICHLET_GRAPH = "dirichlet_graph"  # H^1_0(I) ∩ H^2(I), Laplacian only
    CLOSURE_LOCAL = "closure_local"  # H^{s+m}_loc(I)
    ADJOINT_COMPACT = "adjoint_compact"  # H^{-s+m}_c(I), domain of a(D)*

    @classmethod
    def parse(cls, name) -> "DomainVariant":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("-", "_")
        for v in cls:
            if key in (v.value, v.name.lower()):
                return v
        raise ValueError(f"unknown domain variant {name!r}; expected one of {[v.value for v in cls]}")


COLUMN_LABELS = {
    DomainVariant.MINIMAL_SUPPORT: "A",
    DomainVariant.DIRICHLET_GRAPH: "A_L2",
    DomainVariant.CLOSURE_LOCAL: "closure(A)",
    DomainVariant.ADJOINT_COMPACT: "A*",
}
LAPLACIAN_LABELS = {
    DomainVariant.MINIMAL_SUPPORT: "Δ",
    DomainVariant.DIRICHLET_GRAPH: "Δ_{L²}",
    DomainVariant.CLOSURE_LOCAL: "closure(Δ)",
    DomainVariant.ADJOINT_COMPACT: "Δ*",
}


@dataclass(frozen=True)
class BoundaryConditionSet:
    """Rows ``u^(l)(p) = 0``; ``p`` is ``"b"`` (left end) or ``"c"`` (right end)."""

    conditions: tuple[tuple[str, int], ...]
    compact_support: bool = False

    def __post_init__(self):
        if len(set(self.conditions)) != len(self.conditions):
            raise ValueError("duplicate boundary conditions")
        for p, l in self.conditions:
            if p not in ("b", "c") or l < 0:
                raise ValueError(f"bad boundary condition {(p, l)}")

    def __len__(self):
        return len(self.conditions)

    def max_order(self) -> int:
        return max((l for _, l in self.conditions), default=-1)


def boundary_conditions(variant, m: int) -> BoundaryConditionSet:
    variant = DomainVariant.parse(variant)
    if variant is DomainVariant.MINIMAL_SUPPORT:
        return BoundaryConditionSet(tuple((p, l) for p in ("b", "c") for l in range(m)))
    if variant is DomainVariant.DIRICHLET_GRAPH:
        if m != 2:
            raise HypothesisError(f"the Dirichlet graph domain needs an order-2 operator, got m = {m}")
        return BoundaryConditionSet((("b", 0), ("c", 0)))
    if variant is DomainVariant.CLOSURE_LOCAL:
        return BoundaryConditionSet(())
    return BoundaryConditionSet((), compact_support=True)


def _basis_entry(beta: complex, r: int, p: float, l: int) -> complex:
    """``d^l/dx^l [x^r e^{beta x}]`` at ``x = p``, without the factor ``e^{beta p}``."""
    acc = 0.0 + 0.0j
    for q in range(min(l, r) + 1):
        acc += math.comb(l, q) * math.perm(r, q) * p ** (r - q) * beta ** (l - q)
    return acc


def _basis_block(basis, points, orders) -> tuple[np.ndarray, np.ndarray]:
    """Rows (point, order), columns ``x^r e^{beta x}``, each column shifted by its largest exponent.

    Returns the scaled matrix and the per-column shifts ``max_p Re(beta p)``.
    Scaling a column by a positive number leaves the rank unchanged and
    keeps ``e^{beta p}`` from overflowing.
    """
    pts = np.asarray(points, dtype=float)
    shifts = np.array([max((beta * p).real for p in pts) for beta, _ in basis]) if basis else np.zeros(0)
    M = np.zeros((len(pts) * len(orders) if orders else 0, len(basis)), dtype=complex)
    row = 0
    for p in pts:
        for l in orders:
            for col, (beta, r) in enumerate(basis):
                M[row, col] = _basis_entry(beta, r, p, l) * np.exp(beta * p - shifts[col])
            row += 1
    return M, shifts


@dataclass(frozen=True, eq=False)
class BoundaryMatrix:
    matrix: np.ndarray
    lam: complex
    interval: tuple[float, float]
    conditions: BoundaryConditionSet
    basis: tuple[tuple[complex, int], ...]
    column_shifts: np.ndarray
    order: int

    @property
    def shape(self):
        return self.matrix.shape

    def unscaled(self) -> np.ndarray:
        return self.matrix * np.exp(self.column_shifts)[None, :]


def boundary_matrix(sym: SymbolPoly, lam, interval, bcs: BoundaryConditionSet, transpose: bool = False) -> BoundaryMatrix:
    """Entry ``(p, l), (beta, r)`` is ``d^l/dx^l [x^r e^{beta x}]`` at ``p``, column-scaled."""
    b, c = _check_interval(interval)
    roots = characteristic_roots(sym, lam, transpose=transpose)
    basis = roots.basis()
    where = {"b": b, "c": c}
    shifts = np.array([max((beta * b).real, (beta * c).real) for beta, _ in basis])
    M = np.zeros((len(bcs), len(basis)), dtype=complex)
    for i, (p, l) in enumerate(bcs.conditions):
        x = where[p]
        for col, (beta, r) in enumerate(basis):
            M[i, col] = _basis_entry(beta, r, x, l) * np.exp(beta * x - shifts[col])
    return BoundaryMatrix(M, complex(lam), (b, c), bcs, tuple(basis), shifts, sym.order)


def _normalized_rows(M: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(M, axis=1)
    norms[norms == 0] = 1.0
    return M / norms[:, None]


def numerical_rank(M: np.ndarray, tol: float = RANK_RTOL) -> int:
    if M.size == 0:
        return 0
    sv = np.linalg.svd(_normalized_rows(M), compute_uv=False)
    if sv[0] == 0:
        return 0
    return int(np.sum(sv > tol * sv[0]))


def kernel_dimension(M: BoundaryMatrix, tol: float = RANK_RTOL) -> int:
    """``m - rank``; rank counts singular values above ``tol * sigma_max``."""
    return M.order - numerical_rank(M.matrix, tol)


def scaled_determinant(M: BoundaryMatrix) -> complex:
    """Determinant after column shifts and row normalization (square systems only)."""
    A = M.matrix
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"determinant needs a square boundary system, got {A.shape}")
    return complex(np.linalg.det(_normalized_rows(A)))


def dirichlet_eigenvalues(interval, n_max: int) -> list[float]:
    b, c = _check_interval(interval)
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    l = c - b
    return [-((math.pi * n / l) ** 2) for n in range(1, n_max + 1)]


def dirichlet_index(lam, interval, rtol: float = 1e-9) -> int | None:
    """``n`` with ``lam = -pi^2 n^2 / l^2``, or None."""
    b, c = _check_interval(interval)
    lam = complex(lam)
    if abs(lam.imag) > rtol * (1 + abs(lam)) or lam.real >= 0:
        return None
    n = (c - b) * math.sqrt(-lam.real) / math.pi
    k = round(n)
    if k >= 1 and abs(lam.real + (math.pi * k / (c - b)) ** 2) <= rtol * (1 + abs(lam)):
        return k
    return None


class SpectrumClass(enum.Enum):
    RESOLVENT = "resolvent"
    POINT = "point"
    RESIDUAL = "residual"
    CONTINUOUS = "continuous"


class Provenance(enum.Enum):
    THEOREM = "theorem-derived"
    KERNEL = "kernel-computed"
    ASSERTED = "table-asserted"


@dataclass(frozen=True)
class Classification:
    lam: complex
    variant: DomainVariant
    spectrum: SpectrumClass
    provenance: Provenance
    kernel_dim: int | None = None
    note: str = ""

    def to_dict(self):
        return {
            "lambda": [self.lam.real, self.lam.imag],
            "variant": self.variant.value,
            "class": self.spectrum.value,
            "provenance": self.provenance.value,
            "kernel_dim": self.kernel_dim,
            "note": self.note,
        }


def require_elliptic_transpose(sym: SymbolPoly):
    """The classification assumes ``a(D)'`` elliptic of order ``m >= 1``."""
    if sym.order < 1:
        raise HypothesisError("classification needs an operator of order m >= 1")
    rep = ellipticity(transpose_coeffs(sym))
    if not rep.elliptic:
        raise HypothesisError("the transpose symbol is not elliptic")
    return rep


def adjoint_kernel_rank(sym: SymbolPoly, lam, interval, points_per_order: int = 3) -> tuple[int, int]:
    """Rank of the interior sample matrix of ``sum C_j x^r e^{beta_j x}`` for ``lam - a(D)'``.

    Rows are ``d^l/dx^l`` for ``l < m`` at ``3m`` interior points.  Full
    column rank means no nonzero combination vanishes on an open set, so
    none is compactly supported in ``I``.
    """
    b, c = _check_interval(interval)
    m = sym.order
    roots = characteristic_roots(sym, lam, transpose=True)
    basis = roots.basis()
    n = points_per_order * m
    pts = b + (c - b) * (np.arange(1, n + 1) / (n + 1))
    M, _ = _basis_block(basis, pts, list(range(m)))
    return numerical_rank(M), len(basis)


def classify(sym: SymbolPoly, lam, variant, interval, s: float = 0.0) -> Classification:
    variant = DomainVariant.parse(variant)
    require_elliptic_transpose(sym)
    lam = complex(lam)
    m = sym.order
    if variant is DomainVariant.CLOSURE_LOCAL:
        # no boundary rows: every exponential solution lies in the domain
        return Classification(lam, variant, SpectrumClass.POINT, Provenance.THEOREM, m,
                              f"{m} exponential solutions, no constraints")
    if variant is DomainVariant.ADJOINT_COMPACT:
        rank, cols = adjoint_kernel_rank(sym, lam, interval)
        if rank < cols:
            raise ConsistencyAlarm(
                f"lam = {lam}: interior sample matrix of the adjoint exponential kernel has rank "
                f"{rank} < {cols}; a compactly supported eigenfunction would exist"
            )
        return Classification(lam, variant, SpectrumClass.RESIDUAL, Provenance.THEOREM, 0,
                              "no compactly supported kernel; range annihilated by e^{xi0 x}")
    bcs = boundary_conditions(variant, m)
    if variant is DomainVariant.DIRICHLET_GRAPH and not sym.is_laplacian():
        raise HypothesisError("the Dirichlet graph domain is implemented for the Laplacian only")
    kdim = kernel_dimension(boundary_matrix(sym, lam, interval, bcs))
    if variant is DomainVariant.MINIMAL_SUPPORT:
        if kdim > 0:
            raise ConsistencyAlarm(
                f"lam = {lam}: {kdim}-dimensional kernel with all traces u..u^({m - 1}) zero; "
                "the minimal domain should have empty point spectrum"
            )
        return Classification(lam, variant, SpectrumClass.CONTINUOUS, Provenance.KERNEL, 0,
                              "injective; inverse unbounded in the local topology")
    if kdim > 0:
        return Classification(lam, variant, SpectrumClass.POINT, Provenance.KERNEL, kdim,
                              "Dirichlet eigenfunction")
    return Classification(lam, variant, SpectrumClass.CONTINUOUS, Provenance.KERNEL, 0,
                          "injective; residual part empty by assertion")


@dataclass(frozen=True)
class SetDescriptor:
    """``empty``, ``all``, ``explicit`` (Dirichlet family), ``complement`` of it, ``sampled`` or ``unknown``."""

    kind: str
    interval: tuple[float, float] | None = None
    values: tuple[complex, ...] = ()
    provenance: str = ""

    def render(self, laplacian_labels: bool = True) -> str:
        if self.kind == "empty":
            return "∅"
        if self.kind == "all":
            return "ℂ"
        if self.kind == "unknown":
            return "?"
        if self.kind == "sampled":
            return "{" + ", ".join(_fmt_complex(v) for v in self.values) + "}"
        family = _family_label(self.interval)
        return family if self.kind == "explicit" else f"ℂ∖{family}"

    def to_dict(self):
        d = {"kind": self.kind, "label": self.render()}
        if self.kind == "sampled":
            d["values"] = [[v.real, v.imag] for v in self.values]
        if self.interval is not None and self.kind in ("explicit", "complement"):
            d["interval"] = list(self.interval)
        if self.provenance:
            d["provenance"] = self.provenance
        return d

    def contains(self, lam) -> bool | None:
        if self.kind == "empty":
            return False
        if self.kind == "all":
            return True
        if self.kind == "explicit":
            return dirichlet_index(lam, self.interval) is not None
        if self.kind == "complement":
            return dirichlet_index(lam, self.interval) is None
        if self.kind == "sampled":
            return any(abs(complex(lam) - v) <= 1e-12 * (1 + abs(v)) for v in self.values)
        return None


def _family_label(interval) -> str:
    b, c = interval
    l = c - b
    if abs(l - math.pi) < 1e-12:
        return "{-n^2 : n ∈ ℕ}"
    return f"{{-π²n²/{l:.12g}² : n ∈ ℕ}}"


def _fmt_complex(z: complex) -> str:
    z = complex(z)
    if z.imag == 0:
        return f"{z.real:.12g}"
    return f"{z.real:.12g}{z.imag:+.12g}i"


ROWS = ("sigma_p", "sigma_r", "sigma_c")
_ROW_OF = {SpectrumClass.POINT: "sigma_p", SpectrumClass.RESIDUAL: "sigma_r", SpectrumClass.CONTINUOUS: "sigma_c"}


@dataclass(frozen=True, eq=False)
class SpectrumTable:
    interval: tuple[float, float]
    s: float
    samples: tuple[complex, ...]
    columns: dict  # DomainVariant -> {row: SetDescriptor}
    classes: dict  # DomainVariant -> tuple[Classification, ...]
    laplacian: bool = False

    @property
    def variants(self) -> list[DomainVariant]:
        return list(self.columns)

    def label(self, v: DomainVariant) -> str:
        return (LAPLACIAN_LABELS if self.laplacian else COLUMN_LABELS)[v]

    def class_of(self, v: DomainVariant, i: int) -> SpectrumClass:
        return self.classes[v][i].spectrum

    def with_class(self, v: DomainVariant, lam, new: SpectrumClass) -> "SpectrumTable":
        """Copy with the classification of one sampled ``lam`` replaced (for audits)."""
        i = self.index_of(lam)
        cl = list(self.classes[v])
        old = cl[i]
        cl[i] = Classification(old.lam, v, new, old.provenance, old.kernel_dim, "overridden")
        classes = dict(self.classes)
        classes[v] = tuple(cl)
        columns = dict(self.columns)
        columns[v] = _aggregate(v, tuple(cl), self.interval, bool(self.samples))
        return SpectrumTable(self.interval, self.s, self.samples, columns, classes, self.laplacian)

    def index_of(self, lam) -> int:
        lam = complex(lam)
        for i, z in enumerate(self.samples):
            if abs(z - lam) <= 1e-12 * (1 + abs(lam)):
                return i
        raise KeyError(f"{lam} is not a sampled value")

    def to_dict(self):
        return {
            "interval": list(self.interval),
            "s": self.s,
            "sample_count": len(self.samples),
            "columns": {
                v.value: {"label": self.label(v), **{r: self.columns[v][r].to_dict() for r in ROWS}}
                for v in self.columns
            },
        }

    def to_json(self) -> str:
        return json.dumps(_round_floats(self.to_dict()), indent=2, ensure_ascii=False)

    def render(self) -> str:
        heads = [self.label(v) for v in self.columns]
        cells = [[self.columns[v][r].render() for v in self.columns] for r in ROWS]
        names = {"sigma_p": "σ_p", "sigma_r": "σ_r", "sigma_c": "σ_c"}
        widths = [max(len(h), *(len(row[i]) for row in cells)) for i, h in enumerate(heads)]
        first = max(len(n) for n in names.values())
        lines = [" " * first + " | " + " | ".join(h.ljust(w) for h, w in zip(heads, widths))]
        lines.append("-" * first + "-+-" + "-+-".join("-" * w for w in widths))
        for r, row in zip(ROWS, cells):
            lines.append(names[r].ljust(first) + " | " + " | ".join(c.ljust(w) for c, w in zip(row, widths)))
        return "\n".join(lines)


def _round_floats(obj, digits: int = 12):
    if isinstance(obj, float):
        return float(f"{obj:.{digits}g}")
    if isinstance(obj, dict):
        return {k: _round_floats(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v, digits) for v in obj]
    return obj


def _aggregate(variant: DomainVariant, classes: Sequence[Classification], interval, have_samples: bool) -> dict:
    """Turn per-sample classes into set descriptors for the three rows."""
    if not have_samples:
        if variant is DomainVariant.DIRICHLET_GRAPH:
            return {
                "sigma_p": SetDescriptor("explicit", interval, provenance=Provenance.KERNEL.value),
                "sigma_r": SetDescriptor("empty", provenance=Provenance.ASSERTED.value),
                "sigma_c": SetDescriptor("complement", interval, provenance=Provenance.KERNEL.value),
            }
        return {r: SetDescriptor("unknown") for r in ROWS}
    if any(c.spectrum is SpectrumClass.RESOLVENT for c in classes):
        raise ConsistencyAlarm(f"{variant.value}: a sampled value landed in the resolvent set")
    by_row = {r: [c.lam for c in classes if _ROW_OF[c.spectrum] == r] for r in ROWS}
    prov = {r: sorted({c.provenance.value for c in classes if _ROW_OF[c.spectrum] == r}) for r in ROWS}
    out = {}
    for r in ROWS:
        if len(by_row[r]) == len(classes):
            out[r] = SetDescriptor("all", provenance=",".join(prov[r]))
        elif not by_row[r]:
            out[r] = SetDescriptor("empty")
        else:
            out[r] = SetDescriptor("sampled", values=tuple(by_row[r]), provenance=",".join(prov[r]))
    if variant is DomainVariant.DIRICHLET_GRAPH:
        points = by_row["sigma_p"]
        family_ok = all(dirichlet_index(z, interval) is not None for z in points) and all(
            dirichlet_index(c.lam, interval) is None for c in classes if c.spectrum is SpectrumClass.CONTINUOUS
        )
        if family_ok and not by_row["sigma_r"]:
            out["sigma_p"] = SetDescriptor("explicit", interval, provenance=Provenance.KERNEL.value)
            out["sigma_c"] = SetDescriptor("complement", interval, provenance=Provenance.KERNEL.value)
        if not by_row["sigma_r"]:
            out["sigma_r"] = SetDescriptor("empty", provenance=Provenance.ASSERTED.value)
    return out


def default_samples(interval, box: float = DEFAULT_BOX, side: int = DEFAULT_GRID_SIDE,
                    eigenvalues: bool = True) -> list[complex]:
    """``side x side`` grid over ``[-box, box]^2`` plus the Dirichlet eigenvalues inside the box's disc."""
    axis = np.linspace(-box, box, side)
    pts = [complex(x, y) for y in axis for x in axis]
    if eigenvalues:
        b, c = _check_interval(interval)
        n_max = int(math.floor((c - b) * math.sqrt(box * math.sqrt(2.0)) / math.pi))
        pts += [complex(v) for v in dirichlet_eigenvalues(interval, n_max)]
    return pts


def spectrum_table(
    sym: SymbolPoly,
    interval,
    s: float = 0.0,
    samples: Iterable[complex] | None = None,
    variants: Sequence | None = None,
) -> SpectrumTable:
    interval = _check_interval(interval)
    lap = sym.is_laplacian()
    if variants is None:
        variants = [DomainVariant.MINIMAL_SUPPORT]
        if lap:
            variants.append(DomainVariant.DIRICHLET_GRAPH)
        variants.append(DomainVariant.CLOSURE_LOCAL)
    variants = [DomainVariant.parse(v) for v in variants]
    samples = tuple(complex(z) for z in (default_samples(interval) if samples is None else samples))
    classes = {v: tuple(classify(sym, z, v, interval, s) for z in samples) for v in variants}
    columns = {v: _aggregate(v, classes[v], interval, bool(samples)) for v in variants}
    return SpectrumTable(interval, float(s), samples, columns, classes, lap)


@dataclass(frozen=True)
class AdjointDomain:
    lower: float
    upper: float
    delta: float
    exact: bool

    def render(self) -> str:
        if self.exact:
            return f"D[a(D)*] = H^{{{self.lower:g}}}_c(I)"
        return f"H^{{{self.lower:g}}}_c(I) ⊂ D[a(D)*] ⊂ H^{{{self.upper:g}}}_c(I)"

    def to_dict(self):
        return {"lower": self.lower, "upper": self.upper, "delta": self.delta, "exact": self.exact,
                "label": self.render()}


def adjoint_domain(sym: SymbolPoly, s: float) -> AdjointDomain:
    """Sobolev sandwich ``H^{-s+m}_c ⊂ D ⊂ H^{-s+δm}_c``, collapsing when ``a(D)'`` is elliptic."""
    t = transpose_coeffs(sym)
    if sym.order < 1:
        raise HypothesisError("adjoint domain needs an operator of order m >= 1")
    hyp = hypoellipticity(t)
    if not hyp.hypoelliptic:
        raise HypothesisError("the transpose symbol is not hypoelliptic")
    m = sym.order
    elliptic = ellipticity(t).elliptic
    delta = 1.0 if elliptic else hyp.delta
    return AdjointDomain(-s + m, -s + delta * m, delta, elliptic)


def adjoint_apply(sym: SymbolPoly, g: GridFunction, interval=None, rtol: float = 1e-12) -> GridFunction:
    """``a(D)* g = sum_k (-2 pi i)^{-k} a_k g^(k)``, with a support audit when ``interval`` is given."""
    if interval is not None:
        b, c = _check_interval(interval)
        x = g.x
        outside = (x <= b) | (x >= c)
        peak = np.abs(g.samples).max(initial=0.0)
        if peak > 0 and np.abs(g.samples[outside]).max(initial=0.0) > rtol * peak:
            raise ValueError(f"g is not compactly supported in {interval}")
    return apply_operator(sym, g, transpose=True)


def principal_root(sym: SymbolPoly, lam, transpose: bool = False) -> complex:
    """The first root ``xi_0`` of ``lam - a(D)`` in the (real desc, imag desc) order."""
    return characteristic_roots(sym, lam, transpose=transpose).roots[0][0]


@dataclass(frozen=True)
class WitnessReport:
    lam: complex
    xi0: complex
    root_residual: float
    k: int
    s: float
    records: tuple[tuple[int, float, float], ...]  # (j, operator side, solution side)
    floor: float
    crossover: int

    @property
    def verdict(self) -> bool:
        tail = [r for r in self.records if r[0] >= self.crossover]
        return bool(tail) and all(op == 0.0 and sol >= self.floor for _, op, sol in tail)

    def to_csv(self) -> str:
        lines = ["j,op_side,sol_side"]
        lines += [f"{j},{op:.12g},{sol:.12g}" for j, op, sol in self.records]
        return "\n".join(lines) + "\n"

    def to_dict(self):
        return {
            "lambda": [self.lam.real, self.lam.imag],
            "xi0": [self.xi0.real, self.xi0.imag],
            "root_residual": self.root_residual,
            "k": self.k,
            "s": self.s,
            "floor": self.floor,
            "crossover": self.crossover,
            "verdict": self.verdict,
            "records": [{"j": j, "op_side": op, "sol_side": sol} for j, op, sol in self.records],
        }


def continuous_witness(
    sym: SymbolPoly,
    lam,
    interval,
    s: float = 0.0,
    k: int = 1,
    j_range: Iterable[int] | None = None,
    grid: Grid | None = None,
    floor_ratio: float = 0.5,
) -> WitnessReport:
    """Seminorms of ``u_j = psi_j e^{xi0 x}`` and of ``(lam - a(D)) u_j``.

    ``psi_j`` is the exhaustion cutoff, 1 on ``[a_j, b_j]``.  The operator
    side is assembled by Leibniz from exact cutoff derivatives.  The term
    carrying no derivative of ``psi_j`` is ``p_lam(xi0) psi_j e^{xi0 x}``,
    which vanishes because ``xi0`` is a root; its size is reported as
    ``root_residual``.  What remains is supported where ``psi_j`` is not
    locally constant, which leaves the support of ``phi_k`` for ``j > k``.
    """
    if sym.order < 1:
        raise HypothesisError("a witness needs an operator of order m >= 1")
    lam = complex(lam)
    interval = _check_interval(interval)
    js = sorted(set(range(1, 9) if j_range is None else (int(j) for j in j_range)))
    grid = grid or Grid.for_interval(interval)
    exh = make_exhaustion(interval, count=max(js[-1], k) + 1, grid=grid)
    xi0 = principal_root(sym, lam)
    p = characteristic_coeffs(sym, lam)
    root_residual = float(abs(_horner(p, xi0)))
    c = sym.derivative_coeffs()
    m = sym.order
    # weights w_q = sum_k c_k C(k, q) xi0^(k - q), the coefficient of psi^(q)
    w = [sum(c[kk] * math.comb(kk, q) * xi0 ** (kk - q) for kk in range(q, m + 1)) for q in range(m + 1)]
    x = grid.x
    expo = np.exp(xi0 * x)
    phi_k = exh.cutoff(k)
    solution_ref = hs_norm(phi_k * GridFunction(grid, expo), 0.0)
    records = []
    for j in js:
        psi = exh.cutoff_function(j).derivatives(x, m)
        op = -expo * sum(w[q] * psi[q] for q in range(1, m + 1))
        u = GridFunction(grid, psi[0] * expo)
        records.append((j, hs_norm(phi_k * GridFunction(grid, op), s), hs_norm(phi_k * u, s)))
    return WitnessReport(lam, xi0, root_residual, k, float(s), tuple(records),
                         floor_ratio * solution_ref, k + 1)


@dataclass(frozen=True)
class ResidualWitnessReport:
    lam: complex
    xi0: complex
    residuals: tuple[float, ...]
    tolerance: float

    @property
    def passed(self) -> bool:
        return all(r < self.tolerance for r in self.residuals)

    def to_dict(self):
        return {
            "lambda": [self.lam.real, self.lam.imag],
            "xi0": [self.xi0.real, self.xi0.imag],
            "residuals": list(self.residuals),
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def _gauss_on(fn, a: float, b: float, panels: int = 32, nodes: int = 32) -> complex:
    t, w = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(a, b, panels + 1)
    h = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    y = (mid[:, None] + h[:, None] * t[None, :]).ravel()
    vals = np.asarray(fn(y), dtype=complex).reshape(panels, nodes)
    return complex(np.sum(h[:, None] * w[None, :] * vals))


def residual_witness_adjoint(sym: SymbolPoly, lam, interval, gs: Sequence, tol: float = 1e-7) -> ResidualWitnessReport:
    """``|<e^{xi0 x}, (lam - a(D)*) g>|`` for each test function ``g``.

    Analytic test functions are integrated by Gauss-Legendre over their
    support; grid functions go through :func:`adjoint_apply` and a
    rectangle-rule pairing on the grid.
    """
    lam = complex(lam)
    interval = _check_interval(interval)
    xi0 = principal_root(sym, lam)
    d = sym.derivative_coeffs(transpose=True)
    m = sym.order
    out = []
    for g in gs:
        if isinstance(g, GridFunction):
            ag = adjoint_apply(sym, g, interval)
            integrand = np.exp(xi0 * g.x) * (lam * g.samples - ag.samples)
            out.append(float(abs(g.grid.dx * integrand.sum())))
            continue
        if not isinstance(g, TestFunction):
            raise TypeError("test functions must be TestFunction or GridFunction")
        lo, hi = g.support
        if lo <= interval[0] or hi >= interval[1]:
            raise ValueError(f"test function support {g.support} is not inside {interval}")

        def integrand(y, g=g):
            der = g.derivatives(y, m)
            return np.exp(xi0 * y) * (lam * der[0] - sum(d[q] * der[q] for q in range(m + 1)))

        out.append(float(abs(_gauss_on(integrand, lo, hi))))
    return ResidualWitnessReport(lam, xi0, tuple(out), tol)


@dataclass(frozen=True)
class InclusionReport:
    violations: tuple[tuple[str, complex], ...]
    checked: int

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self):
        return {
            "passed": self.passed,
            "checked": self.checked,
            "violations": [{"check": c, "lambda": [z.real, z.imag]} for c, z in self.violations],
        }


def inclusion_consistency(
    primal: SpectrumTable,
    adjoint: SpectrumTable,
    operator: DomainVariant = DomainVariant.MINIMAL_SUPPORT,
    closure: DomainVariant = DomainVariant.CLOSURE_LOCAL,
    adjoint_variant: DomainVariant = DomainVariant.ADJOINT_COMPACT,
) -> InclusionReport:
    """Per-sample inclusions between ``A`` and ``A*`` and ``sigma(A) = sigma(closure A)``.

    (i)   A in P∪R  implies  A* in P∪R
    (ii)  A* in P   implies  A in P∪R
    (iii) A* in R   implies  A in P∪C
    and neither ``A`` nor its closure, nor any other column, has a resolvent sample.
    """
    if len(primal.samples) != len(adjoint.samples) or any(
        abs(a - b) > 1e-12 * (1 + abs(a)) for a, b in zip(primal.samples, adjoint.samples)
    ):
        raise ValueError("tables were built over different samples")
    P, R, C, Z = SpectrumClass.POINT, SpectrumClass.RESIDUAL, SpectrumClass.CONTINUOUS, SpectrumClass.RESOLVENT
    bad = []
    for i, lam in enumerate(primal.samples):
        a = primal.class_of(operator, i)
        ab = primal.class_of(closure, i)
        st = adjoint.class_of(adjoint_variant, i)
        if a in (P, R) and st not in (P, R):
            bad.append(("i", lam))
        if st is P and a not in (P, R):
            bad.append(("ii", lam))
        if st is R and a not in (P, C):
            bad.append(("iii", lam))
        if (a is Z) != (ab is Z):
            bad.append(("closure", lam))
        for table in (primal, adjoint):
            for v in table.variants:
                if table.class_of(v, i) is Z:
                    bad.append((f"resolvent:{v.value}", lam))
    return InclusionReport(tuple(bad), len(primal.samples))


__all__ = [
    "ConsistencyAlarm",
    "HypothesisError",
    "DomainVariant",
    "BoundaryConditionSet",
    "boundary_conditions",
    "BoundaryMatrix",
    "boundary_matrix",
    "kernel_dimension",
    "scaled_determinant",
    "dirichlet_eigenvalues",
    "SpectrumClass",
    "Provenance",
    "Classification",
    "classify",
    "SetDescriptor",
    "SpectrumTable",
    "spectrum_table",
    "default_samples",
    "AdjointDomain",
    "adjoint_domain",
    "adjoint_apply",
    "WitnessReport",
    "continuous_witness",
    "ResidualWitnessReport",
    "residual_witness_adjoint",
    "InclusionReport",
    "inclusion_consistency",
]
