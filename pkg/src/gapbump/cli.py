"""Command-line front end.

Exit codes: 0 success, 1 a verification property failed, 2 usage or parse
error, 3 instance violates the gap condition, 10 a refutation candidate
survived the high-precision re-check.
"""

import argparse
import csv
import io
import json
import logging
import math
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .kernel import KernelTable, kernel_g_quadrature_oracle
from .quadform import check_lemma41, min_eigenvalue
from .search import SearchConfig, search_counterexample
from .trigsum import GapConditionError, GapSequence, norms_G
from .verify import SUITES, bernstein_scan, run_suite

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_INVALID = 3
EXIT_REFUTED = 10

OUTPUT_DIR_ENV = "GAPBUMP_OUTPUT_DIR"

logger = logging.getLogger("gapbump")


class InstanceError(ValueError):
    """An instance file that cannot be parsed; ``field`` names the culprit."""

    def __init__(self, message, field=None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field


def version_string():
    here = Path(__file__).resolve().parent
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=here, capture_output=True, text=True, timeout=5, check=True,
        )
        return f"{__version__}+{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        return __version__


def run_record(command, parameters, seed, seconds, results):
    return {
        "command": command,
        "parameters": parameters,
        "version": version_string(),
        "seed": seed,
        "timings": {"seconds": seconds},
        "results": results,
    }


def dump_json(obj, fp):
    # repr-based float output is the shortest string that round-trips exactly
    json.dump(obj, fp, indent=2, allow_nan=False)
    fp.write("\n")


# -- instance files -----------------------------------------------------------


def parse_instance(text):
    """Parse an instance JSON document into ``(GapSequence, coefficients)``.

    Raises :class:`InstanceError` for malformed content and
    :class:`GapConditionError` when the shifts are not gap-valid.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise InstanceError("top level must be an object")
    for key in ("M", "shifts", "coefficients"):
        if key not in doc:
            raise InstanceError("missing field", key)
    M = doc["M"]
    if isinstance(M, bool) or not isinstance(M, int) or M < 1:
        raise InstanceError("must be a positive integer", "M")
    shifts = doc["shifts"]
    if not isinstance(shifts, list) or not shifts:
        raise InstanceError("must be a non-empty list of numbers", "shifts")
    for i, s in enumerate(shifts):
        if isinstance(s, bool) or not isinstance(s, (int, float)) or not math.isfinite(s):
            raise InstanceError("must be a finite number", f"shifts[{i}]")
    coeffs = doc["coefficients"]
    if not isinstance(coeffs, list) or len(coeffs) != len(shifts):
        raise InstanceError(f"must be a list of {len(shifts)} [re, im] pairs", "coefficients")
    a = []
    for i, c in enumerate(coeffs):
        ok = (
            isinstance(c, list)
            and len(c) == 2
            and all(not isinstance(v, bool) and isinstance(v, (int, float)) and math.isfinite(v) for v in c)
        )
        if not ok:
            raise InstanceError("must be a pair [re, im] of finite numbers", f"coefficients[{i}]")
        a.append(complex(c[0], c[1]))
    return GapSequence(M, tuple(float(s) for s in shifts)), np.asarray(a, dtype=complex)


def instance_to_json(seq, a):
    return {
        "M": seq.M,
        "shifts": list(seq.shifts),
        "coefficients": [[float(c.real), float(c.imag)] for c in a],
    }


def check_instance(seq, a):
    """All reported quantities for one instance."""
    norm_sq, deriv_sq = norms_G(seq, a)
    M = seq.M
    out = {
        "M": M,
        "N": len(seq),
        "normSq": norm_sq,
        "derivNormSq": deriv_sq,
        "defect": M**2 * norm_sq - deriv_sq,
        "ratio": deriv_sq / (M**2 * norm_sq) if norm_sq > 0 else None,
    }
    if M >= 2:
        rep = check_lemma41(seq, a)
        out.update(
            Q=rep.Q,
            scaledQ=rep.scaled_Q,
            identityResidual=rep.identityResidual,
            minEigenvalue=rep.minEigenvalue,
        )
    else:
        out.update(Q=None, scaledQ=None, identityResidual=None, minEigenvalue=None)
    return out


# -- commands -----------------------------------------------------------------


def cmd_verify(args, out):
    t0 = time.perf_counter()
    report = run_suite(args.suite, args.trials, args.seed)
    seconds = time.perf_counter() - t0
    for c in report["checks"]:
        status = "PASS" if c["passed"] else "FAIL"
        print(f"{status}  {c['name']}: max residual {c['maxResidual']:.3e} (tol {c['tolerance']:.0e})", file=sys.stderr)
    params = {"suite": args.suite, "trials": args.trials, "seed": args.seed}
    dump_json(run_record("verify", params, args.seed, seconds, report), out)
    return EXIT_OK if report["passed"] else EXIT_FAIL


def kernel_grid(step):
    n = int(math.floor(math.pi / step * (1 + 1e-12)))
    grid = [min(k * step, math.pi) for k in range(n + 1)]
    return grid


def kernel_rows(M, step, nodes=64):
    table = KernelTable.best(M)
    rows = []
    for lam in kernel_grid(step):
        g = table(lam)
        q = kernel_g_quadrature_oracle(M, lam, nodes)
        rows.append({"lambda": lam, "g_closed": g, "g_quadrature": q, "abs_diff": abs(g - q)})
    return rows


def cmd_kernel(args, out):
    if args.m < 2:
        print("error: kernel needs --m >= 2", file=sys.stderr)
        return EXIT_USAGE
    if not (0 < args.step <= math.pi):
        print("error: --step must lie in (0, pi]", file=sys.stderr)
        return EXIT_USAGE
    rows = kernel_rows(args.m, args.step)
    if args.format == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["lambda", "g_closed", "g_quadrature", "abs_diff"])
        for r in rows:
            w.writerow([f"{r[k]:.17g}" for k in ("lambda", "g_closed", "g_quadrature", "abs_diff")])
    else:
        dump_json({"M": args.m, "step": args.step, "method": KernelTable.best(args.m).method, "rows": rows}, out)
    return EXIT_OK


def cmd_check(args, out):
    try:
        text = Path(args.instance).read_text()
    except OSError as exc:
        print(f"error: cannot read {args.instance}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        seq, a = parse_instance(text)
    except GapConditionError as exc:
        print(f"error: {exc} (pair {exc.pair[0]}, {exc.pair[1]})", file=sys.stderr)
        if args.json:
            dump_json({"error": "gap_condition", "pair": list(exc.pair), "message": str(exc)}, out)
        return EXIT_INVALID
    except (InstanceError, ValueError) as exc:
        print(f"error: {args.instance}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    t0 = time.perf_counter()
    result = check_instance(seq, a)
    seconds = time.perf_counter() - t0
    if args.json:
        params = {"instance": instance_to_json(seq, a)}
        dump_json(run_record("check", params, None, seconds, result), out)
    else:
        labels = [
            ("normSq", "|G|^2"),
            ("derivNormSq", "|G'|^2"),
            ("defect", "M^2|G|^2 - |G'|^2"),
            ("Q", "Q"),
            ("scaledQ", "M(M-1)Q"),
            ("identityResidual", "identity residual"),
            ("ratio", "|G'|^2 / (M^2|G|^2)"),
            ("minEigenvalue", "kernel Gram min eigenvalue"),
        ]
        print(f"M = {seq.M}, N = {len(seq)}", file=out)
        for key, label in labels:
            v = result[key]
            print(f"{label:>28}: {'n/a' if v is None else format(v, '.17g')}", file=out)
    return EXIT_OK


def default_search_path(args):
    base = Path(os.environ.get(OUTPUT_DIR_ENV, "."))
    return base / f"search_M{args.m}_N{args.n}_seed{args.seed}.json"


def cmd_search(args, out):
    try:
        config = SearchConfig(
            M=args.m, N=args.n, restarts=args.restarts, localIterations=args.iterations,
            seed=args.seed, stepScale=args.step_scale,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    t0 = time.perf_counter()
    report = search_counterexample(config, workers=args.workers)
    seconds = time.perf_counter() - t0
    params = {"m": args.m, "n": args.n, "restarts": args.restarts, "iterations": args.iterations,
              "seed": args.seed, "step_scale": args.step_scale}
    record = run_record("search", params, args.seed, seconds, report.to_dict())
    path = Path(args.out) if args.out else default_search_path(args)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fp:
        dump_json(record, fp)
    print(
        f"bestRatio {report.bestRatio:.17g}  bestMinEig "
        f"{'n/a' if report.bestMinEig is None else format(report.bestMinEig, '.17g')}  "
        f"refuted {report.refuted}  -> {path}",
        file=out,
    )
    return EXIT_REFUTED if report.refuted else EXIT_OK


def cmd_bernstein(args, out):
    if args.m < 1:
        print("error: --m must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    rng = np.random.default_rng(args.seed)
    t0 = time.perf_counter()
    scan = bernstein_scan(args.m, args.trials, rng)
    seconds = time.perf_counter() - t0
    params = {"m": args.m, "trials": args.trials, "seed": args.seed}
    dump_json(run_record("bernstein", params, args.seed, seconds, scan), out)
    return EXIT_OK if scan["violations"] == 0 else EXIT_FAIL


def build_parser():
    p = argparse.ArgumentParser(prog="gapbump", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run randomised property suites")
    v.add_argument("--suite", choices=SUITES + ("all",), default="all")
    v.add_argument("--trials", type=int, default=200)
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_verify)

    k = sub.add_parser("kernel", help="tabulate g_M on [0, pi]")
    k.add_argument("--m", type=int, required=True)
    k.add_argument("--step", type=float, default=0.1, help="grid step in radians")
    k.add_argument("--format", choices=("csv", "json"), default="csv")
    k.set_defaults(func=cmd_kernel)

    c = sub.add_parser("check", help="evaluate an instance file")
    c.add_argument("instance")
    c.add_argument("--json", action="store_true", help="emit a JSON run record")
    c.set_defaults(func=cmd_check)

    s = sub.add_parser("search", help="counterexample search")
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--n", type=int, default=6)
    s.add_argument("--restarts", type=int, default=20)
    s.add_argument("--iterations", type=int, default=40)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--step-scale", type=float, default=0.5)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out", help=f"report path (default: ${OUTPUT_DIR_ENV} or cwd)")
    s.set_defaults(func=cmd_search)

    b = sub.add_parser("bernstein", help="Parseval check of |T'| <= M |T| on random polynomials")
    b.add_argument("--m", type=int, required=True)
    b.add_argument("--trials", type=int, default=1000)
    b.add_argument("--seed", type=int, default=0)
    b.set_defaults(func=cmd_bernstein)
    return p


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    return args.func(args, out)


if __name__ == "__main__":
    sys.exit(main())
