"""Command-line front end.

Exit codes: 0 success, 1 invalid input or usage, 2 an internal identity failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import gradient as grad
from .gasket_graph import build_graph, graph_json, values_from_csv
from .harmonic_algebra import (
    ConsistencyError,
    beta,
    build_family,
    eigencheck,
    family_json,
    product_bound_check,
)
from .laplace_solver import DirichletProblem, laplacian_residual, rhs_preset, solve_dirichlet
from .measure import MeasureError, parse_weights
from .montecarlo import block_probability, disjoint_trial_bound, failure_fraction
from .words import Word, WordError, parse_word_spec

DEFAULTS = {
    "n": 3,
    "m": 6,
    "word": "per:012",
    "weights": "standard",
    "levels": None,
    "samples": 10_000,
    "seed": None,
    "format": "json",
    "rhs": "f:const:1",
    "boundary": None,
}
TYPES = {"n": int, "m": int, "samples": int, "seed": int}


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def clean(obj):
    """JSON-ready copy: 15 significant digits, NaN/inf as null, numpy unwrapped."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return float(format(x, ".15g")) if math.isfinite(x) else None
    if isinstance(obj, Word):
        return str(obj)
    return obj


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".15g")
    return str(x)


def to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(rows[0]))
    for row in rows:
        writer.writerow([_fmt(v) for v in row.values()])
    return buf.getvalue()


def read_config(path: str) -> dict:
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or key not in DEFAULTS:
            raise UsageError(f"{path}:{lineno}: expected key=value with key in {sorted(DEFAULTS)}")
        out[key] = TYPES.get(key, str)(value.strip())
    return out


def resolve(args: argparse.Namespace) -> argparse.Namespace:
    config = read_config(args.config) if args.config else {}
    for key, default in DEFAULTS.items():
        if getattr(args, key, None) is None:
            setattr(args, key, config.get(key, default))
    return args


def _level_list(text: str | None, default: list[int]) -> list[int]:
    if text is None:
        return default
    return [int(x) for x in str(text).split(",") if x.strip()]


def _one_level(text: str | None, default: int) -> int:
    levels = _level_list(text, [default])
    if len(levels) != 1:
        raise ValueError("--levels takes a single integer for this subcommand")
    return levels[0]


def _boundary(args) -> np.ndarray:
    if args.boundary is None:
        return np.zeros(args.n)
    vals = np.array([float(x) for x in str(args.boundary).split(",")])
    if vals.shape != (args.n,):
        raise ValueError(f"--boundary needs {args.n} comma-separated values")
    return vals


def _word(args, n_needed: int):
    spec = parse_weights(args.weights, args.n)
    w = parse_word_spec(args.word, args.n, spec)
    return w.prefix(n_needed) if not isinstance(w, Word) else w


def _require_seed(args):
    if args.seed is None:
        raise UsageError("--seed is required for stochastic subcommands")


# ---------------------------------------------------------------------------
# handlers return (json document, csv rows or None)


def cmd_matrices(args):
    fam = build_family(args.n)
    rows = [
        {"matrix": f"A_{i}", "row": r, **{f"c{c}": str(x) for c, x in enumerate(row)}}
        for i, A in enumerate(fam.full)
        for r, row in enumerate(A)
    ]
    return family_json(fam), rows


def cmd_eigencheck(args):
    rep = eigencheck(build_family(args.n))
    doc = {
        "N": rep.N,
        "full_spectrum": rep.full_spectrum,
        "inverse_spectrum": rep.inverse_spectrum,
        "max_deviation": rep.max_deviation,
        "self_adjoint_deviation": rep.self_adjoint_deviation,
        "ok": rep.ok,
    }
    return doc, [doc | {"full_spectrum": None, "inverse_spectrum": None}]


def cmd_beta(args):
    rep = beta(build_family(args.n))
    doc = {
        "N": rep.N,
        "beta_norm": rep.beta_norm,
        "beta_rho": rep.beta_rho,
        "threshold_norm": 1.0 / abs(math.log(rep.beta_norm)),
        "exhaustive": rep.exhaustive,
        "blocks_checked": len(rep.block_norms),
        "argmax_norm": [str(w) for w in rep.argmax_norm[:10]],
        "argmax_rho": [str(w) for w in rep.argmax_rho[:10]],
    }
    return doc, [{k: v for k, v in doc.items() if not k.startswith("argmax")}]


def cmd_bound(args):
    fam = build_family(args.n)
    n = _one_level(args.levels, 12)
    rep = product_bound_check(fam, _word(args, n), n, raise_on_failure=False)
    if not rep.ok:
        raise ConsistencyError(f"product bound violated, max ratio {rep.max_ratio}")
    rows = [
        {"n": k + 1, "norm": rep.norms[k], "bound": rep.bounds[k], "count": int(rep.counts[k])}
        for k in range(n)
    ]
    return {"word": str(rep.word), "max_ratio": rep.max_ratio, "ok": rep.ok, "levels": rows}, rows


def cmd_graph(args):
    g = build_graph(args.n, args.m)
    rows = [
        {"vertex_id": i, "boundary": bool(g.boundary[i]),
         **{f"x{k}": g.coords[i, k] for k in range(g.N - 1)}}
        for i in range(g.num_vertices)
    ]
    return graph_json(g), rows


def _solution(args):
    g = build_graph(args.n, args.m)
    spec = parse_weights(args.weights, args.n)
    rhs_text = str(args.rhs)
    if rhs_text.startswith("f:"):
        rhs = rhs_preset(rhs_text, g)
    else:
        rhs = values_from_csv(Path(rhs_text).read_text(), g.num_vertices)
    problem = DirichletProblem(g, spec, rhs, _boundary(args))
    return g, spec, problem, solve_dirichlet(problem)


def cmd_solve(args):
    g, spec, problem, u = _solution(args)
    residual = laplacian_residual(u, problem)
    rows = [{"vertex_id": i, "value": float(x)} for i, x in enumerate(u)]
    doc = {"N": g.N, "m": g.m, "measure": spec.name, "residual": residual, "values": u}
    return doc, rows


def cmd_gradient(args):
    g, spec, problem, u = _solution(args)
    fam = build_family(args.n)
    n_max = _one_level(args.levels, g.m)
    trace = grad.gradient_trace(fam, g, u, _word(args, n_max), spec, n_max)
    rows = []
    for k, n in enumerate(trace.levels):
        rows.append({
            "n": int(n),
            **{f"g{i}": trace.gradients[k, i] for i in range(fam.N - 1)},
            "energy_norm": trace.norms[k],
            "increment": trace.increments[k] if k < len(trace.increments) else None,
            "partial_sum": trace.partial_sums[k],
        })
    doc = {
        "word": str(trace.word),
        "estimate": trace.estimate,
        "error_proxy": trace.error_proxy,
        "levels": rows,
    }
    return doc, rows


def cmd_criterion(args):
    fam = build_family(args.n)
    which = args.which
    if which == "thm1":
        n_max = _one_level(args.levels, 20)
        spec = parse_weights(args.weights, args.n)
        rep = grad.criterion_thm1(_word(args, n_max), spec, fam, n_max)
        rows = [{"n": k + 1, "term": t, "partial_sum": s} for k, (t, s) in enumerate(zip(rep.terms, rep.partial_sums))]
        return {"word": str(rep.word), "fitted_ratio": rep.fitted_ratio, "verdict": rep.verdict, "levels": rows}, rows
    if which == "cor51":
        spec = parse_weights(args.weights, args.n)
        rep = grad.criterion_cor51(spec, fam)
        rows = [{"block": str(b), "value": v} for b, v in zip(rep.blocks, rep.values)]
        return {"measure": spec.name, "max_value": rep.max_value, "verdict": rep.verdict, "blocks": rows}, rows
    if which == "thm2":
        n_max = _one_level(args.levels, 1000)
        rep = grad.criterion_thm2(_word(args, n_max), fam, n_max)
        rows = [{"n": int(n), "count": int(c), "ratio": r} for n, c, r in zip(rep.levels, rep.counts, rep.ratios)]
        doc = {
            "threshold": rep.threshold,
            "threshold_rho": rep.threshold_rho,
            "liminf_estimate": rep.liminf_estimate,
            "verdict": rep.verdict,
            "levels": rows,
        }
        return doc, rows
    # sg3-measure
    if args.n != 3:
        raise ValueError("sg3-measure is defined for --n 3 only")
    weights = args.weights if args.weights != "standard" else "uniform"
    spec = parse_weights(weights, 3)
    if spec.block_len != 2:
        raise MeasureError("sg3-measure needs nine level-2 weights")
    rep = grad.check_sg3_measure(spec, fam)
    doc = {
        "weights": rep.weights,
        "diagonal_limit": rep.diagonal_limit,
        "off_diagonal_limit": rep.off_diagonal_limit,
        "verdict": rep.verdict,
        "uniform_bound_max": rep.uniform_bound.max_value,
        "uniform_bound_verdict": rep.uniform_bound.verdict,
    }
    return doc, [{k: v for k, v in doc.items() if k != "weights"}]


def cmd_montecarlo(args):
    which = args.which
    if which == "blocks":
        _require_seed(args)
        rep = block_probability(args.n, args.samples, args.seed)
        doc = {
            "N": rep.N,
            "samples": rep.samples,
            "estimate": rep.estimate,
            "ci_low": rep.ci_low,
            "ci_high": rep.ci_high,
            "window_probability": rep.window_value,
            "lower_probability": rep.lower_value,
        }
        return doc, [doc]
    lengths = _level_list(args.levels, [50, 100, 200, 400])
    if which == "chernoff":
        rows = []
        for n in lengths:
            b = disjoint_trial_bound(args.n, n)
            rows.append({"n": n, "k": b.k, "l": b.l, "kp": b.kp, "chernoff_bound": b.bound})
        return {"N": args.n, "rows": rows}, rows
    _require_seed(args)
    table = failure_fraction(args.n, lengths, args.samples, args.seed)
    rows = [
        {"n": r.n, "fraction": r.fraction, "ci_low": r.ci_low, "ci_high": r.ci_high,
         "chernoff_bound": r.chernoff_bound}
        for r in table
    ]
    return {"N": args.n, "samples": args.samples, "rows": rows}, rows


def build_parser() -> Parser:
    common = Parser(add_help=False)
    common.add_argument("--n", type=int, help="alphabet size N of SG_N (3..10)")
    common.add_argument("--m", type=int, help="graph level")
    common.add_argument("--word", help="per:012 | w:0121 | rand:<seed>")
    common.add_argument("--weights", help="preset (standard, uniform, uneven) or JSON map")
    common.add_argument("--levels", help="level count, or comma-separated word lengths")
    common.add_argument("--samples", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--format", choices=["json", "csv"])
    common.add_argument("--rhs", help="f:const:<c>, f:coord:<k>, or a CSV path")
    common.add_argument("--boundary", help="comma-separated values at p_0..p_{N-1}")
    common.add_argument("--config", help="key=value file overriding defaults")

    parser = Parser(prog="gasketgrad", description="Harmonic gradients on Sierpinski gaskets SG_N.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=Parser)
    for name, func, help_text in [
        ("matrices", cmd_matrices, "harmonic extension matrices"),
        ("eigencheck", cmd_eigencheck, "verify extension-matrix spectra"),
        ("beta", cmd_beta, "block contraction constants"),
        ("bound", cmd_bound, "check the product-norm bound along a word"),
        ("graph", cmd_graph, "level-m vertex set, cells and edges"),
        ("solve", cmd_solve, "discrete Dirichlet problem"),
    ]:
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.set_defaults(func=func)
    p = sub.add_parser("gradient", parents=[common], help="gradient trace along a word")
    p.add_argument("which", choices=["trace"])
    p.set_defaults(func=cmd_gradient)
    p = sub.add_parser("criterion", parents=[common], help="gradient existence criteria")
    p.add_argument("which", choices=["thm1", "cor51", "thm2", "sg3-measure"])
    p.set_defaults(func=cmd_criterion)
    p = sub.add_parser("montecarlo", parents=[common], help="block statistics of random words")
    p.add_argument("which", choices=["blocks", "failures", "chernoff"])
    p.set_defaults(func=cmd_montecarlo)
    return parser


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = resolve(parser.parse_args(argv))
        doc, rows = args.func(args)
    except UsageError as exc:
        print(exc, file=stderr)
        return 1
    except ConsistencyError as exc:
        print(f"consistency failure: {exc}", file=stderr)
        return 2
    except (ValueError, KeyError, OSError, MeasureError, WordError) as exc:
        print(f"error: {exc}", file=stderr)
        return 1
    if args.format == "csv":
        if not rows:
            print("error: no tabular output for this subcommand", file=stderr)
            return 1
        stdout.write(to_csv(rows))
    else:
        stdout.write(json.dumps(clean(doc), indent=2) + "\n")
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
