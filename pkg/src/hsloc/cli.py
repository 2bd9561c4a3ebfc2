"""Command-line driver: one JSON job document, one command.

    hsloc table --config job.json [--out DIR] [--format json|csv|pretty]

Exit status is 0 when every check passes, 2 when a computed certificate
contradicts the expected statement (or a verification fails), 1 on any
error.
"""

from __future__ import annotations

import argparse
import ast
import json
import math
import operator
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import mollify, sobolev, spectra, symbol
from .mollify import Analytic
from .smooth import random_test_functions
from .sobolev import Grid, GridFunction
from .spectra import ConsistencyAlarm, DomainVariant
from .symbol import AuditGrid, SymbolPoly

COMMANDS = ("classify", "table", "eigen", "closure-verify", "witness", "norm", "hypo")
EXIT_OK, EXIT_ERROR, EXIT_ALARM = 0, 1, 2


class ConfigError(ValueError):
    def __init__(self, path: str, msg: str):
        super().__init__(f"{path}: {msg}")
        self.path = path


# -- tiny expression grammar -------------------------------------------------

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNARY = {ast.USub: operator.neg, ast.UAdd: operator.pos}
_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "sqrt": np.sqrt, "log": np.log, "abs": np.abs}
_CONSTS = {"pi": math.pi, "e": math.e, "i": 1j}


def evaluate(expr: str, env: dict | None = None, path: str = "expr"):
    """Evaluate ``expr`` (``^`` means power) over numbers, ``pi``, ``e``, ``i`` and names in ``env``."""
    env = {**_CONSTS, **(env or {})}
    try:
        tree = ast.parse(str(expr).replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ConfigError(path, f"cannot parse expression {expr!r}") from exc

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float, complex)):
            return node.value
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
            return _UNARY[type(node.op)](ev(node.operand))
        if isinstance(node, ast.Name) and node.id in env:
            return env[node.id]
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
                and node.func.id in _FUNCS and len(node.args) == 1 and not node.keywords):
            return _FUNCS[node.func.id](ev(node.args[0]))
        raise ConfigError(path, f"unsupported element {ast.dump(node)[:40]} in {expr!r}")

    return ev(tree)


def _number(v, path: str) -> complex:
    if isinstance(v, bool):
        raise ConfigError(path, "expected a number")
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, str):
        return complex(evaluate(v, path=path))
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(_real(v[0], f"{path}[0]"), _real(v[1], f"{path}[1]"))
    raise ConfigError(path, f"expected a number, expression or [re, im] pair, got {v!r}")


def _real(v, path: str) -> float:
    z = _number(v, path) if not isinstance(v, (list, tuple)) else None
    if z is None or z.imag != 0:
        raise ConfigError(path, f"expected a real number, got {v!r}")
    return z.real


def _int(v, path: str, lo: int | None = None) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(path, f"expected an integer, got {v!r}")
    if lo is not None and v < lo:
        raise ConfigError(path, f"must be >= {lo}")
    return v


# -- named functions on I --------------------------------------------------------

def _named_functions():
    zero = lambda x: 0.0 * x
    return {
        "zero": Analytic(zero, zero, zero, zero),
        "one": Analytic(lambda x: 1.0 + 0.0 * x, zero, zero, zero),
        "x": Analytic(lambda x: x, lambda x: 1.0 + 0.0 * x, zero, zero),
        "sin": Analytic(np.sin, np.cos, lambda x: -np.sin(x), lambda x: -np.cos(x)),
        "cos": Analytic(np.cos, lambda x: -np.sin(x), lambda x: -np.cos(x), np.sin),
        "gaussian": Analytic(
            lambda x: np.exp(-np.pi * x**2),
            lambda x: -2 * np.pi * x * np.exp(-np.pi * x**2),
            lambda x: (4 * np.pi**2 * x**2 - 2 * np.pi) * np.exp(-np.pi * x**2),
        ),
    }


def function_from(spec, path: str):
    if not isinstance(spec, str):
        raise ConfigError(path, "expected a function name or an expression in x")
    named = _named_functions()
    if spec in named:
        return named[spec]
    evaluate(spec, {"x": 0.5}, path)  # reject bad expressions up front
    return mollify.FiniteDifference(lambda x, _s=spec: np.asarray(evaluate(_s, {"x": x}, path), dtype=complex))


# -- config ---------------------------------------------------------------------

@dataclass(frozen=True)
class JobConfig:
    symbol: SymbolPoly
    interval: tuple[float, float]
    s: float = 0.0
    variants: tuple[DomainVariant, ...] = ()
    lambdas: tuple[complex, ...] | None = None  # None: default grid plus eigenvalues
    n: int = sobolev.DEFAULT_N
    padding: float = sobolev.DEFAULT_PADDING
    depth: int = 8
    k: int = 1
    tolerances: dict = field(default_factory=dict)
    eigen_n_max: int = 5
    function: Any = None
    function_name: str = "sin"
    s_values: tuple[float, ...] = (0.0,)
    j_max: int = 64
    derivative_order: int = 2
    test_count: int = 5
    seed: int = 0

    @property
    def grid(self) -> Grid:
        return Grid.for_interval(self.interval, self.n, self.padding)

    def tol(self, name: str) -> float:
        return self.tolerances[name]


DEFAULT_TOLERANCES = {"rank": 1e-8, "det_zero": 1e-9, "det_gap": 1e-3, "closure": 1e-3, "residual": 1e-7}

_KNOWN_KEYS = {
    "coeffs", "interval", "s", "variants", "lambdas", "grid", "exhaustion", "tolerances",
    "eigen", "function", "s_values", "closure", "witness", "seed",
}


def parse_config(doc) -> JobConfig:
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise ConfigError("$", f"not valid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ConfigError("$", "the config document must be a JSON object")
    unknown = sorted(set(doc) - _KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"$.{unknown[0]}", "unknown field")

    if "coeffs" not in doc:
        raise ConfigError("$.coeffs", "required")
    raw = doc["coeffs"]
    if not isinstance(raw, list) or not raw:
        raise ConfigError("$.coeffs", "expected a non-empty list of coefficients")
    coeffs = [_number(v, f"$.coeffs[{i}]") for i, v in enumerate(raw)]
    try:
        sym = SymbolPoly(coeffs)
    except ValueError as exc:
        raise ConfigError("$.coeffs", str(exc)) from exc

    if "interval" not in doc:
        raise ConfigError("$.interval", "required")
    iv = doc["interval"]
    if not isinstance(iv, list) or len(iv) != 2:
        raise ConfigError("$.interval", "expected [b, c]")
    interval = (_real(iv[0], "$.interval[0]"), _real(iv[1], "$.interval[1]"))
    if not (math.isfinite(interval[0]) and math.isfinite(interval[1]) and interval[0] < interval[1]):
        raise ConfigError("$.interval", f"need a bounded non-empty interval, got {interval}")

    s = _real(doc.get("s", 0.0), "$.s")

    variants = []
    for i, v in enumerate(doc.get("variants", [])):
        try:
            variants.append(DomainVariant.parse(v))
        except ValueError as exc:
            raise ConfigError(f"$.variants[{i}]", str(exc)) from exc
        if variants[-1] is DomainVariant.DIRICHLET_GRAPH and (sym.order != 2 or not sym.is_laplacian()):
            raise ConfigError(
                f"$.variants[{i}]",
                f"dirichlet_graph requires the Laplacian (m = 2), got m = {sym.order}",
            )

    lambdas = doc.get("lambdas")
    if lambdas is not None:
        if not isinstance(lambdas, list):
            raise ConfigError("$.lambdas", "expected a list of values")
        lambdas = tuple(_number(v, f"$.lambdas[{i}]") for i, v in enumerate(lambdas))

    g = doc.get("grid", {})
    n = _int(g.get("N", sobolev.DEFAULT_N), "$.grid.N", 16)
    if n & (n - 1):
        raise ConfigError("$.grid.N", "must be a power of two")
    padding = _real(g.get("padding", sobolev.DEFAULT_PADDING), "$.grid.padding")
    if padding <= 0:
        raise ConfigError("$.grid.padding", "must be positive")

    ex = doc.get("exhaustion", {})
    depth = _int(ex.get("depth", 8), "$.exhaustion.depth", 1)
    k = _int(ex.get("k", 1), "$.exhaustion.k", 1)

    tols = dict(DEFAULT_TOLERANCES)
    for key, v in doc.get("tolerances", {}).items():
        if key not in tols:
            raise ConfigError(f"$.tolerances.{key}", "unknown tolerance")
        tols[key] = _real(v, f"$.tolerances.{key}")
        if tols[key] <= 0:
            raise ConfigError(f"$.tolerances.{key}", "must be positive")

    n_max = _int(doc.get("eigen", {}).get("n_max", 5), "$.eigen.n_max", 0)

    fname = doc.get("function", "sin")
    func = function_from(fname, "$.function")

    s_values = doc.get("s_values", [s])
    if not isinstance(s_values, list):
        raise ConfigError("$.s_values", "expected a list")
    s_values = tuple(_real(v, f"$.s_values[{i}]") for i, v in enumerate(s_values))

    cl = doc.get("closure", {})
    j_max = _int(cl.get("j_max", 64), "$.closure.j_max", 1)
    order = _int(cl.get("order", 2), "$.closure.order", 1)

    w = doc.get("witness", {})
    test_count = _int(w.get("test_count", 5), "$.witness.test_count", 0)
    seed = _int(doc.get("seed", 0), "$.seed", 0)

    return JobConfig(
        symbol=sym, interval=interval, s=s, variants=tuple(variants), lambdas=lambdas,
        n=n, padding=padding, depth=depth, k=k, tolerances=tols, eigen_n_max=n_max,
        function=func, function_name=fname, s_values=s_values, j_max=j_max,
        derivative_order=order, test_count=test_count, seed=seed,
    )


# -- output ---------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, float):
        return float(f"{v:.12g}")
    if isinstance(v, complex):
        return [float(f"{v.real:.12g}"), float(f"{v.imag:.12g}")]
    if isinstance(v, dict):
        return {k: _fmt(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_fmt(x) for x in v]
    if isinstance(v, np.generic):
        return _fmt(v.item())
    return v


def dump_json(obj) -> str:
    return json.dumps(_fmt(obj), indent=2, ensure_ascii=False) + "\n"


def _csv(header, rows) -> str:
    def cell(x):
        if isinstance(x, float):
            return f"{x:.12g}"
        if isinstance(x, complex):
            return spectra._fmt_complex(x)
        return str(x)

    return "\n".join([",".join(header)] + [",".join(cell(x) for x in r) for r in rows]) + "\n"


@dataclass
class Outcome:
    payload: dict
    csv: str
    pretty: str
    passed: bool = True


# -- commands --------------------------------------------------------------------

def _samples(cfg: JobConfig):
    return list(cfg.lambdas) if cfg.lambdas is not None else spectra.default_samples(cfg.interval)


def cmd_classify(cfg: JobConfig) -> Outcome:
    variants = cfg.variants or (DomainVariant.MINIMAL_SUPPORT, DomainVariant.CLOSURE_LOCAL,
                                DomainVariant.ADJOINT_COMPACT)
    results = [spectra.classify(cfg.symbol, lam, v, cfg.interval, cfg.s) for lam in _samples(cfg) for v in variants]
    rows = [(c.lam, c.variant.value, c.spectrum.value, c.provenance.value, c.kernel_dim) for c in results]
    pretty = "\n".join(f"{spectra._fmt_complex(l):>24}  {v:<16} {k:<11} [{p}]" for l, v, k, p, _ in rows)
    return Outcome({"results": [c.to_dict() for c in results]},
                   _csv(["lambda", "variant", "class", "provenance", "kernel_dim"], rows), pretty)


def cmd_table(cfg: JobConfig) -> Outcome:
    samples = _samples(cfg)
    table = spectra.spectrum_table(cfg.symbol, cfg.interval, cfg.s, samples, cfg.variants or None)
    adjoint = spectra.spectrum_table(cfg.symbol, cfg.interval, cfg.s, samples, [DomainVariant.ADJOINT_COMPACT])
    check = None
    if DomainVariant.MINIMAL_SUPPORT in table.columns and DomainVariant.CLOSURE_LOCAL in table.columns:
        check = spectra.inclusion_consistency(table, adjoint)
    payload = table.to_dict()
    payload["adjoint"] = adjoint.to_dict()["columns"]
    if check is not None:
        payload["inclusion"] = check.to_dict()
    rows = [(table.label(v), r, table.columns[v][r].render()) for v in table.columns for r in spectra.ROWS]
    pretty = table.render()
    if check is not None:
        pretty += f"\ninclusion checks over {check.checked} samples: {'pass' if check.passed else 'FAIL'}"
    return Outcome(payload, _csv(["column", "row", "set"], rows), pretty,
                   passed=check is None or check.passed)


def cmd_eigen(cfg: JobConfig) -> Outcome:
    if not cfg.symbol.is_laplacian():
        raise spectra.HypothesisError("eigen: Dirichlet eigenvalues are for the Laplacian only")
    bcs = spectra.boundary_conditions(DomainVariant.DIRICHLET_GRAPH, 2)
    ev = spectra.dirichlet_eigenvalues(cfg.interval, cfg.eigen_n_max)

    def det(lam):
        return abs(spectra.scaled_determinant(spectra.boundary_matrix(cfg.symbol, lam, cfg.interval, bcs)))

    at = [det(v) for v in ev]
    mids = [0.5 * (a + b) for a, b in zip(ev, ev[1:])]
    between = [det(v) for v in mids]
    ok = all(d < cfg.tol("det_zero") for d in at) and all(d > cfg.tol("det_gap") for d in between)
    payload = {
        "interval": list(cfg.interval),
        "eigenvalues": [{"n": n + 1, "lambda": v, "abs_det": d} for n, (v, d) in enumerate(zip(ev, at))],
        "midpoints": [{"lambda": v, "abs_det": d} for v, d in zip(mids, between)],
        "passed": ok,
    }
    rows = [(n + 1, v, d) for n, (v, d) in enumerate(zip(ev, at))]
    pretty = "\n".join(f"n={n:<3} lambda={v: .12g}  |det|={d:.3e}" for n, v, d in rows)
    return Outcome(payload, _csv(["n", "lambda", "abs_det"], rows), pretty, ok)


def cmd_closure_verify(cfg: JobConfig) -> Outcome:
    grid = Grid.for_interval(cfg.interval, cfg.n, cfg.padding)
    while 2.0 / (cfg.j_max * grid.dx) < mollify.MIN_SUPPORT_SAMPLES:
        # refine until phi_{j_max} is resolved
        grid = Grid(grid.lo, grid.hi, 2 * grid.n)
    first = math.floor(4.0 / (cfg.interval[1] - cfg.interval[0])) + 1
    js = range(first, cfg.j_max + 1)
    reports, rows, ok = [], [], True
    for s in cfg.s_values:
        r = mollify.verify_closure_convergence(cfg.function, cfg.interval, s, cfg.k, js,
                                               tol=cfg.tol("closure"), grid=grid)
        ok &= r.passed
        reports.append({"kind": "convergence", "s": s, "k": cfg.k, "crossover": r.crossover,
                        "passed": r.passed, "records": r.to_records()})
        rows += [("convergence", s, j, v) for j, v in r.records]
    order = cfg.derivative_order
    for l in range(order):
        b = mollify.verify_boundary_decay(cfg.function, cfg.interval, order, l, 0, js,
                                          fixed_index=cfg.k, grid=grid)
        ok &= b.passed
        reports.append({"kind": "boundary_decay", "order": order, "l": l,
                        "geometric_crossover": b.geometric_crossover,
                        "observed_crossover": b.observed_crossover,
                        "passed": b.passed, "records": b.to_records()})
        rows += [(f"decay_l{l}", 0.0, j, max(va, vb)) for j, va, vb in b.records]
    pretty = "\n".join(
        f"{r['kind']:<15} " + (f"s={r['s']:g} crossover={r['crossover']}" if r["kind"] == "convergence"
                               else f"l={r['l']} crossover={r['geometric_crossover']}")
        + f"  {'pass' if r['passed'] else 'FAIL'}"
        for r in reports
    )
    return Outcome({"function": cfg.function_name, "reports": reports},
                   _csv(["series", "s", "j", "seminorm_value"], rows), pretty, bool(ok))


def cmd_witness(cfg: JobConfig) -> Outcome:
    lams = list(cfg.lambdas) if cfg.lambdas is not None else [1, -1, 2 + 1j]
    grid = cfg.grid
    rng = np.random.default_rng(cfg.seed)
    gs = random_test_functions(rng, cfg.interval, cfg.test_count)
    out, rows, ok = [], [], True
    for lam in lams:
        w = spectra.continuous_witness(cfg.symbol, lam, cfg.interval, cfg.s, cfg.k,
                                       range(1, cfg.depth + 1), grid)
        r = spectra.residual_witness_adjoint(cfg.symbol, lam, cfg.interval, gs, cfg.tol("residual"))
        ok &= w.verdict and r.passed
        out.append({"continuous": w.to_dict(), "residual": r.to_dict()})
        rows += [(complex(lam), j, op, sol) for j, op, sol in w.records]
    pretty = "\n".join(
        f"lambda={spectra._fmt_complex(complex(o['continuous']['lambda'][0], o['continuous']['lambda'][1]))}"
        f"  continuous={'pass' if o['continuous']['verdict'] else 'FAIL'}"
        f"  residual={'pass' if o['residual']['passed'] else 'FAIL'}"
        for o in out
    )
    return Outcome({"witnesses": out}, _csv(["lambda", "j", "op_side", "sol_side"], rows), pretty, bool(ok))


def cmd_norm(cfg: JobConfig) -> Outcome:
    grid = cfg.grid
    u = GridFunction.from_callable(grid, cfg.function)
    norms = [{"s": s, "value": sobolev.hs_norm(u, s)} for s in cfg.s_values]
    exh = sobolev.make_exhaustion(cfg.interval, cfg.depth, grid=grid)
    ue = mollify.null_extend(cfg.function, grid, cfg.interval).extended
    semis = sobolev.norm_records(ue, exh, exh.indices, cfg.s_values)
    rows = [("hs_norm", "", d["s"], d["value"]) for d in norms] + [
        ("seminorm", d["j"], d["s"], d["value"]) for d in semis
    ]
    pretty = "\n".join(f"{k:<9} j={j!s:<3} s={s:<5g} {v:.12g}" for k, j, s, v in rows)
    return Outcome({"hs_norm": norms, "seminorms": semis}, _csv(["kind", "j", "s", "value"], rows), pretty)


def cmd_hypo(cfg: JobConfig) -> Outcome:
    out = {}
    for name, sym in (("symbol", cfg.symbol), ("transpose", symbol.transpose_coeffs(cfg.symbol))):
        out[name] = {
            "ellipticity": symbol.ellipticity(sym).to_dict(),
            "hypoellipticity": symbol.hypoellipticity(sym, AuditGrid()).to_dict(),
        }
    dom = spectra.adjoint_domain(cfg.symbol, cfg.s)
    out["adjoint_domain"] = dom.to_dict()
    ok = all(v["ellipticity"]["elliptic"] and v["hypoellipticity"]["hypoelliptic"]
             for k, v in out.items() if k != "adjoint_domain")
    rows = [(name, out[name]["ellipticity"]["elliptic"], out[name]["hypoellipticity"]["hypoelliptic"],
             out[name]["hypoellipticity"]["delta"]) for name in ("symbol", "transpose")]
    pretty = "\n".join(f"{n:<10} elliptic={e} hypoelliptic={h} delta={d:.6g}" for n, e, h, d in rows)
    pretty += "\n" + dom.render()
    return Outcome(out, _csv(["which", "elliptic", "hypoelliptic", "delta"], rows), pretty, ok)


HANDLERS = {
    "classify": cmd_classify,
    "table": cmd_table,
    "eigen": cmd_eigen,
    "closure-verify": cmd_closure_verify,
    "witness": cmd_witness,
    "norm": cmd_norm,
    "hypo": cmd_hypo,
}


def run(command: str, cfg: JobConfig) -> Outcome:
    if command not in HANDLERS:
        raise ValueError(f"unknown command {command!r}")
    return HANDLERS[command](cfg)


def render(outcome: Outcome, fmt: str) -> str:
    if fmt == "json":
        return dump_json(outcome.payload)
    if fmt == "csv":
        return outcome.csv
    return outcome.pretty + "\n"


def _error_code(exc: BaseException) -> str:
    if isinstance(exc, ConfigError):
        return "config"
    mod = type(exc).__module__.rsplit(".", 1)[-1]
    if mod in ("symbol", "sobolev", "mollify", "spectra", "smooth"):
        return mod
    tb = exc.__traceback__
    while tb is not None and tb.tb_next is not None:
        tb = tb.tb_next
    if tb is not None:
        name = Path(tb.tb_frame.f_code.co_filename).stem
        if name in ("symbol", "sobolev", "mollify", "spectra", "smooth", "cli"):
            return name
    return "hsloc"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hsloc", description=__doc__.split("\n")[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="path to the JSON job document ('-' for stdin)")
    p.add_argument("--out", help="directory to write <command>.<ext> into (default: stdout)")
    p.add_argument("--format", choices=("json", "csv", "pretty"), default="json")
    p.add_argument("-v", "--verbose", action="store_true", help="print tracebacks on error")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = sys.stdin.read() if args.config == "-" else Path(args.config).read_text()
        cfg = parse_config(text)
        outcome = run(args.command, cfg)
    except ConsistencyAlarm as exc:
        print(f"alarm[{_error_code(exc)}]: {exc}", file=sys.stderr)
        return EXIT_ALARM
    except Exception as exc:  # surfaced with the module that raised it
        if args.verbose:
            raise
        print(f"error[{_error_code(exc)}]: {exc}", file=sys.stderr)
        return EXIT_ERROR
    text = render(outcome, args.format)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        ext = {"json": "json", "csv": "csv", "pretty": "txt"}[args.format]
        (out / f"{args.command}.{ext}").write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK if outcome.passed else EXIT_ALARM


if __name__ == "__main__":
    sys.exit(main())
