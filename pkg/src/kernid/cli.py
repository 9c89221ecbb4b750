"""``kernid`` command line.

Exit codes: 0 success or condition holds, 2 usage or parse error, 3 negative
verdict, 4 dimension mismatch, 5 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np
import yaml

from .design import (
    DEFAULT_DEDUP_TOL,
    DEFAULT_DIV_TOL,
    Design,
    check_theorem1,
    check_theorem2,
    distance_set,
    find_lemma31_witness,
)
from .errors import DimensionMismatch, Infeasible, InvalidBounds, NotFound, NotPsd
from .gpfit import Dataset, fit_mle, sample_prior
from .kernels import MixedKernelSpec, PeriodicParams, RbfParams, Variant, build_gram
from .lemmas import run_all
from .witness import WitnessSearchConfig, find_witness, reproduce_paper_examples

log = logging.getLogger("kernid")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NEGATIVE = 3
EXIT_DIMENSION = 4
EXIT_VERIFY = 5


class InputError(Exception):
    """Malformed input file; maps to exit code 2."""


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------

def _load_document(path: str) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        doc = yaml.safe_load(text)  # YAML is a superset of JSON
    except yaml.YAMLError as exc:
        raise InputError(f"{path}: not valid YAML/JSON") from exc
    if not isinstance(doc, dict):
        raise InputError(f"{path}: expected a mapping at top level")
    return doc


def parse_design(doc: dict) -> Design:
    """Build a Design from a ``{dim, points, labels?}`` mapping."""
    if "points" not in doc:
        raise InputError("design file needs 'points'")
    raw = doc["points"]
    if not isinstance(raw, list) or not raw:
        raise InputError("'points' must be a non-empty list")
    rows = [r if isinstance(r, list) else [r] for r in raw]
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise InputError("ragged rows in 'points'")
    width = widths.pop()
    dim = doc.get("dim", width)
    if not isinstance(dim, int) or isinstance(dim, bool) or dim != width:
        raise InputError(f"'dim' is {dim!r} but points have {width} coordinate(s)")
    try:
        pts = np.array(rows, dtype=float)
        return Design(pts, labels=doc.get("labels"))
    except (TypeError, ValueError) as exc:
        raise InputError(f"invalid design: {exc}") from exc


def parse_params(doc: dict) -> MixedKernelSpec:
    """Build a MixedKernelSpec; two-RBF components are sorted with a warning."""
    try:
        variant = Variant(doc.get("variant"))
    except ValueError as exc:
        raise InputError("'variant' must be 'rbf_periodic' or 'two_rbf'") from exc
    names = ("sigma", "ell", "tau", "s", "p") if variant is Variant.RBF_PERIODIC else (
        "sigma1", "ell1", "sigma2", "ell2")
    missing = [n for n in names if n not in doc]
    if missing:
        raise InputError(f"missing parameter(s): {', '.join(missing)}")
    try:
        v = {n: float(doc[n]) for n in names}
        noise = float(doc.get("noise_var", 0.0))
        if variant is Variant.RBF_PERIODIC:
            return MixedKernelSpec(RbfParams(v["sigma"], v["ell"]),
                                   PeriodicParams(v["tau"], v["s"], v["p"]), noise)
        a = RbfParams(v["sigma1"], v["ell1"])
        b = RbfParams(v["sigma2"], v["ell2"])
        if a.ell > b.ell:
            log.warning("two_rbf components given with ell1 > ell2; swapped to canonical order")
            a, b = b, a
        return MixedKernelSpec(a, b, noise)
    except (TypeError, ValueError) as exc:
        raise InputError(f"invalid parameters: {exc}") from exc


def load_design(path: str) -> Design:
    return parse_design(_load_document(path))


def load_params(path: str) -> MixedKernelSpec:
    return parse_params(_load_document(path))


def format_csv(matrix: np.ndarray) -> str:
    """Headerless CSV; ``repr`` gives the shortest string that round-trips."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for row in np.atleast_2d(matrix):
        w.writerow([repr(float(x)) for x in row])
    return buf.getvalue()


def read_csv(text: str) -> np.ndarray:
    rows = [[float(x) for x in row] for row in csv.reader(io.StringIO(text)) if row]
    return np.array(rows, dtype=float)


def _json_safe(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, dict):
        return {k: _json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_safe(v) for v in x]
    if isinstance(x, np.ndarray):
        return _json_safe(x.tolist())
    if isinstance(x, np.floating):
        return _json_safe(float(x))
    return x


def _emit(args, payload: dict, text: str) -> None:
    if args.format == "json":
        print(json.dumps(_json_safe(payload), allow_nan=False))
    else:
        print(text)


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _search_config(args) -> WitnessSearchConfig:
    return WitnessSearchConfig(
        starts=args.starts, max_iters=args.max_iters, residual_tol=args.residual_tol,
        distinct_tol=args.distinct_tol, param_bounds=((-args.bound, args.bound),), rng_seed=args.seed)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_check(args) -> int:
    design = load_design(args.design)
    X = distance_set(design, args.tol_dedup)
    t2 = check_theorem2(X)
    payload = {"distances": list(X.values), "theorem2": t2.to_dict()}
    lines = [t2.summary()]
    verdict = t2
    if args.p is not None:
        if design.dim != 1:
            raise DimensionMismatch("the RBF+periodic check needs a 1-D design")
        t1 = check_theorem1(X, args.p, args.tol_div)
        payload["theorem1"] = t1.to_dict()
        lines.append(t1.summary())
        if t1.holds:
            w = find_lemma31_witness(X, args.p, args.tol_div)
            payload["witness"] = w.to_dict()
            lines.append(f"period-multiple quadruple: m = {w.m}, q = {w.q!r}, "
                         f"members {[float(v) for v in w.members]}")
        verdict = t1
    _emit(args, payload, "\n".join(lines))
    return EXIT_OK if verdict.certifies else EXIT_NEGATIVE


def cmd_gram(args) -> int:
    design = load_design(args.design)
    spec = load_params(args.params)
    gram = build_gram(spec, design, include_noise=args.noise)
    text = format_csv(gram)
    if args.out is None and args.format == "json":
        _emit(args, {"n": design.n, "gram": gram}, "")
    else:
        _write(args.out, text)
    return EXIT_OK


def cmd_witness(args) -> int:
    design = load_design(args.design)
    spec = load_params(args.params)
    report = find_witness(spec, design, _search_config(args))
    lines = [report.summary(), f"target : {spec.to_dict()}"]
    if report.params is not None:
        lines.append(f"{'witness' if report.found else 'best   '}: {report.params.to_dict()}")
    _emit(args, report.to_dict(), "\n".join(lines))
    return EXIT_OK if report.found else EXIT_NEGATIVE


def cmd_reproduce(args) -> int:
    results = reproduce_paper_examples()
    lines = [f"{'example':<28} {'deviation':>12} {'cross':>12} {'tol':>8}  result"]
    for r in results:
        lines.append(f"{r.example_id:<28} {r.max_abs_deviation:12.3e} {r.cross_deviation:12.3e} "
                     f"{r.tolerance:8.0e}  {'PASS' if r.passed else 'FAIL'}")
    _emit(args, {"results": [r.to_dict() for r in results]}, "\n".join(lines))
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


def cmd_verify_lemmas(args) -> int:
    results = run_all(samples=args.samples, seed=args.seed)
    lines = []
    for r in results:
        lines.append(f"{r.lemma_id.value:<6} cases {r.cases_run:>7}  violations {len(r.violations):>4}  "
                     f"{'PASS' if r.passed else 'FAIL'}")
    _emit(args, {"results": [r.to_dict() for r in results]}, "\n".join(lines))
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


def _load_responses(path: str, design: Design) -> list[Dataset]:
    try:
        y = read_csv(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read responses from {path}") from exc
    if y.ndim != 2 or y.size == 0:
        raise InputError("responses file is empty")
    if y.shape[1] != design.n and y.shape[0] == design.n and y.shape[1] == 1:
        y = y.T
    if y.shape[1] != design.n:
        raise DimensionMismatch(f"responses have {y.shape[1]} columns, design has {design.n} points")
    try:
        return [Dataset(design, row) for row in y]
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def cmd_fit(args) -> int:
    design = load_design(args.design)
    data = _load_responses(args.responses, design)
    if args.variant == Variant.RBF_PERIODIC.value and args.p is None:
        raise InputError("--p is required for the rbf_periodic family")
    if not args.fit_noise and args.noise_var is None:
        raise InputError("give --noise-var or --fit-noise")
    results = fit_mle(data, Variant(args.variant), args.p, _search_config(args),
                      noise_var=args.noise_var, fit_noise=args.fit_noise)
    payload = {"optima": [{"params": r.params.to_dict(), "neg_log_marginal": r.neg_log_marginal,
                           "iterations": r.iterations, "start_index": r.start_index,
                           "jitter": r.jitter} for r in results]}
    lines = [f"{len(results)} distinct converged optima"]
    for r in results[:args.top]:
        lines.append(f"nll {r.neg_log_marginal!r}  start {r.start_index}  {r.params.to_dict()}")
    _emit(args, payload, "\n".join(lines))
    return EXIT_OK if results else EXIT_NEGATIVE


def cmd_sample(args) -> int:
    design = load_design(args.design)
    spec = load_params(args.params)
    rows = [sample_prior(spec, design, args.seed + r).responses for r in range(args.replicates)]
    y = np.array(rows)
    if args.out is None and args.format == "json":
        _emit(args, {"responses": y}, "")
    else:
        _write(args.out, format_csv(y))
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return v


def _positive_float(text: str) -> float:
    v = float(text)
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"must be a positive number, got {text}")
    return v


def _add_globals(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--format", choices=("text", "json"), default=d("text"))
    p.add_argument("--seed", type=int, default=d(0))
    p.add_argument("--tol-div", type=_positive_float, default=d(DEFAULT_DIV_TOL),
                   help="tolerance for deciding x/p is an integer")
    p.add_argument("--tol-dedup", type=_positive_float, default=d(DEFAULT_DEDUP_TOL),
                   help="tolerance for merging pairwise distances")


def _add_search(p: argparse.ArgumentParser, starts: int) -> None:
    p.add_argument("--starts", type=_positive_int, default=starts)
    p.add_argument("--max-iters", type=_positive_int, default=2000)
    p.add_argument("--residual-tol", type=_positive_float, default=1e-8)
    p.add_argument("--distinct-tol", type=_positive_float, default=1e-3)
    p.add_argument("--bound", type=_positive_float, default=5.0,
                   help="half-width of the log-parameter search box")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kernid", description=__doc__.splitlines()[0])
    _add_globals(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        _add_globals(p, suppress=True)
        p.set_defaults(func=fn)
        return p

    p = add("check", cmd_check, "check the sufficient identifiability conditions for a design")
    p.add_argument("design")
    p.add_argument("--p", type=_positive_float, help="period; enables the RBF+periodic check")

    p = add("gram", cmd_gram, "write the mixed Gram matrix as CSV")
    p.add_argument("design")
    p.add_argument("params")
    p.add_argument("--noise", action="store_true", help="add noise_var to the diagonal")
    p.add_argument("--out", help="output path (default stdout)")

    p = add("witness", cmd_witness, "search for a distinct parameter set with the same Gram matrix")
    p.add_argument("design")
    p.add_argument("params")
    _add_search(p, 64)

    add("reproduce", cmd_reproduce, "rebuild the published example matrices")

    p = add("verify-lemmas", cmd_verify_lemmas, "run the randomized inequality checks")
    p.add_argument("--samples", type=_positive_int, default=10_000)

    p = add("fit", cmd_fit, "multi-start maximum likelihood fit")
    p.add_argument("design")
    p.add_argument("responses", help="CSV, one replicate per row")
    p.add_argument("--variant", choices=[v.value for v in Variant], required=True)
    p.add_argument("--p", type=_positive_float)
    p.add_argument("--noise-var", type=_positive_float)
    p.add_argument("--fit-noise", action="store_true")
    p.add_argument("--top", type=_positive_int, default=5)
    _add_search(p, 16)

    p = add("sample", cmd_sample, "draw responses from the mixed-kernel prior")
    p.add_argument("design")
    p.add_argument("params")
    p.add_argument("--replicates", type=_positive_int, default=1)
    p.add_argument("--out", help="output path (default stdout)")
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="kernid: %(levelname)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_USAGE
    try:
        return args.func(args)
    except DimensionMismatch as exc:
        print(f"kernid: dimension mismatch: {exc}", file=sys.stderr)
        return EXIT_DIMENSION
    except (InputError, InvalidBounds, NotPsd, NotFound, Infeasible, ValueError) as exc:
        print(f"kernid: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
