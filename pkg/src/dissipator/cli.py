"""Command-line front end.

    dissipator check A.csv B.csv
    dissipator solve A.csv B.csv --method gl --m 2 --out report.json
    dissipator fov A.csv [--B B.csv --K K.csv] --out boundary.csv
    dissipator bench --family table1 --seeds 1 --out results/

Exit codes: 0 success, 1 usage or I/O error, 2 infeasible pair,
3 solver did not converge. Settings resolve as flags > DISSIPATOR_*
environment variables > --config JSON file > built-in defaults.
"""

import argparse
import concurrent.futures as cf
import csv
import enum
import hashlib
import json
import logging
import os
import sys
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from . import bench as bm
from . import constructors as cs
from . import fov as fv
from . import gradient_flow as gf
from .exceptions import DissipatorError, InvalidInput, NoFlatSegment, NotDissipatable
from .matrixio import read_matrix, write_matrix
from .model import ControlPair, Dissipativity, is_dissipatable, verify_dissipating

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_NOCONV = 0, 1, 2, 3
METHODS = ("gl", "gl+", "spectral", "skelton", "pencil", "block")
INLINE_LIMIT = 10_000
DEFAULTS = {"seed": 0, "tol": None, "max_iter": 100, "jobs": None, "angles": fv.DEFAULT_ANGLES}
ENV = {"seed": ("DISSIPATOR_SEED", int), "jobs": ("DISSIPATOR_JOBS", int),
       "tol": ("DISSIPATOR_TOL", float), "max_iter": ("DISSIPATOR_MAX_ITER", int)}

log = logging.getLogger("dissipator")


class UsageError(Exception):
    pass


def resolve(args, key):
    """flags > environment > config file > defaults."""
    val = getattr(args, key, None)
    if val is not None:
        return val
    if key in ENV:
        name, conv = ENV[key]
        if os.environ.get(name, "") != "":
            try:
                return conv(os.environ[name])
            except ValueError:
                raise UsageError(f"{name}={os.environ[name]!r} is not a valid {conv.__name__}")
    cfg = getattr(args, "_config", {}) or {}
    if key in cfg:
        return cfg[key]
    return DEFAULTS.get(key)


def _load_config(path):
    if not path:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, ValueError) as exc:
        raise InvalidInput(f"cannot read config {path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise InvalidInput(f"config {path} must hold a JSON object")
    return {k.replace("-", "_"): v for k, v in cfg.items()}


def _load_pair(a_path, b_path):
    return ControlPair(read_matrix(a_path), read_matrix(b_path))


def _floats(x):
    return [float(v) for v in np.ravel(x)]


def _emit(obj, out=None):
    text = json.dumps(obj, indent=1, sort_keys=True, allow_nan=True) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- reports ------------------------------------------------------------------

def input_digest(pair):
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(pair.A, dtype="<f8").tobytes())
    h.update(np.ascontiguousarray(pair.B, dtype="<f8").tobytes())
    return {"n": pair.n, "q": pair.q, "norm_A_fro": float(np.linalg.norm(pair.A)),
            "norm_B_fro": float(np.linalg.norm(pair.B)), "sha256": h.hexdigest()}


@dataclass
class RunReport:
    input: dict
    method: str
    parameters: dict
    K: object                  # nested lists, or a file path when large
    norm_fro: float
    norm_2: float
    classification: str
    eigenvalues: list          # rightmost eigenvalues of Sym(A - BK), descending
    status: str
    trace: dict
    wall_time: float
    seed: int
    version: str = __version__
    shifted: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)

    def load_K(self, base_dir="."):
        if isinstance(self.K, str):
            return read_matrix(os.path.join(base_dir, self.K))
        return np.array(self.K, dtype=float)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, enum.Enum):
        return obj.value
    return obj


def run_method(pair, method, m=None, seed=0, tol=None, max_iter=100):
    """Dispatch to one of the feedback methods; returns a FeedbackResult."""
    if method in ("gl", "gl+"):
        res, _ = gf.outer_solve(pair, m=m, variant="plus" if method == "gl+" else "plain",
                                max_outer=max_iter, tol=tol)
        return res
    if method == "spectral":
        return cs.spectral_feedback(pair, tol)
    if method == "skelton":
        params = cs.skelton_params(pair) if seed == 0 else cs.random_skelton_params(pair, seed)
        return cs.skelton_feedback(pair, params, tol=tol)
    if method == "pencil":
        return cs.pencil_minimize(pair, seed=seed, tol=tol)
    if method == "block":
        H2 = np.zeros((pair.q, pair.n)) if seed == 0 else cs.random_block_H2(pair, seed)
        return cs.block_parametrized_feedback(pair, H2, tol)
    raise InvalidInput(f"unknown method {method!r}")


def _trace_summary(res):
    tr = res.trace or []
    out = {"iterations": len(tr)}
    if tr:
        out["first"] = tr[0]
        out["last"] = tr[-1]
    return out


def solve_report(pair, method, m=None, seed=0, tol=None, max_iter=100, delta=None,
                 k_path=None):
    """Run a method and build the RunReport. With ``delta`` the method runs on
    the shifted pair (A + delta I, B) and both classifications are reported."""
    t0 = time.perf_counter()
    target = cs.shift_for_strictness(pair, delta) if delta else pair
    res = run_method(target, method, m=m, seed=seed, tol=tol, max_iter=max_iter)
    wall = time.perf_counter() - t0
    orig = verify_dissipating(pair, res.K, tol)
    shifted = {}
    if delta:
        shifted = {"delta": float(delta), "classification": res.classification.value,
                   "lambda_max": res.lambda_max}
    if pair.n * pair.q <= INLINE_LIMIT or k_path is None:
        K = res.K.tolist()
    else:
        write_matrix(k_path, res.K)
        K = os.path.basename(k_path)
    params = {"m": m, "delta": delta, "tol": tol, "max_iter": max_iter, **res.params}
    return RunReport(
        input=input_digest(pair), method=method, parameters=_jsonable(params), K=K,
        norm_fro=res.norm_fro, norm_2=res.norm_2, classification=orig.classification.value,
        eigenvalues=_floats(orig.eigenvalues[:max(1, min(pair.n, pair.q + 3))]),
        status=res.status, trace=_jsonable(_trace_summary(res)), wall_time=wall, seed=int(seed),
        shifted=shifted, diagnostics=_jsonable(res.diagnostics))


def report_exit_code(report):
    if report.status not in ("ok", "converged", "trivial"):
        return EXIT_NOCONV
    if report.classification == Dissipativity.NONE.value and not report.shifted:
        return EXIT_NOCONV
    return EXIT_OK


# -- subcommands ----------------------------------------------------------------

def cmd_check(args):
    pair = _load_pair(args.A, args.B)
    rep = is_dissipatable(pair, resolve(args, "tol"))
    _emit({"feasible": bool(rep.feasible), "margin": rep.margin, "tol": rep.tol,
           "restricted_spectrum": _floats(rep.restricted_spectrum), "input": input_digest(pair)},
          args.out)
    return EXIT_OK if rep.feasible else EXIT_INFEASIBLE


def cmd_solve(args):
    pair = _load_pair(args.A, args.B)
    k_path = None
    if args.out:
        k_path = os.path.splitext(args.out)[0] + ".K.csv"
    rep = solve_report(pair, args.method, m=args.m, seed=resolve(args, "seed"),
                       tol=resolve(args, "tol"), max_iter=resolve(args, "max_iter"),
                       delta=args.delta, k_path=k_path)
    _emit(rep.to_dict(), args.out)
    return report_exit_code(rep)


def cmd_fov(args):
    M = read_matrix(args.A)
    sigma = None
    if args.K is not None:
        if args.B is None:
            raise UsageError("--K needs --B")
        pair = ControlPair(M, read_matrix(args.B))
        K = read_matrix(args.K)
        M = pair.closed_loop(K)
        try:
            sigma = fv.flat_segment(pair, K, resolve(args, "tol"), check=False).sigma
        except NoFlatSegment as exc:
            log.info("no flat segment: %s", exc)
    b = fv.fov_boundary(M, resolve(args, "angles"))
    b.flat_segment = sigma
    out = args.out
    if out is None:
        sys.stdout.write(b.to_csv())
        return EXIT_OK
    if out.lower().endswith(".json"):
        b.to_json(out)
    else:
        b.to_csv(out)
        with open(os.path.splitext(out)[0] + ".json", "w") as fh:
            json.dump(b.sidecar(), fh, indent=1, sort_keys=True)
    return EXIT_OK


def _bench_row(job):
    spec, method, seed, tol, max_iter = job
    spec = bm.ProblemSpec.from_dict({**spec, "seed": seed})
    row = {"family": spec.family, "n": spec.n, "q": spec.q, "m": spec.m, "shift": spec.shift,
           "delta": spec.delta, "seed": seed, "method": method}
    t0 = time.perf_counter()
    try:
        pair = spec.build()
        row.update(n=pair.n, q=pair.q)
        res = run_method(pair, method, m=spec.m or None, seed=seed, tol=tol, max_iter=max_iter)
        row.update(norm_fro=res.norm_fro, norm_2=res.norm_2, rank=res.rank,
                   classification=res.classification.value, status=res.status,
                   f=res.diagnostics.get("f", ""),
                   uncontrollable=json.dumps(res.diagnostics.get("uncontrollable_eigenvalues",
                                                                 [])))
    except DissipatorError as exc:
        row.update(status=f"error: {type(exc).__name__}: {exc}")
    row["wall_time"] = time.perf_counter() - t0
    return row


BENCH_COLUMNS = ["family", "n", "q", "m", "shift", "delta", "seed", "method", "norm_fro",
                 "norm_2", "rank", "classification", "status", "f", "uncontrollable",
                 "wall_time"]


def bench_specs(family, params):
    if family in ("table1", "table2", "table3", "table4"):
        return family, [s.to_dict() for s in bm.preset(family)]
    if family not in bm.FAMILIES:
        raise UsageError(f"unknown family {family!r}")
    plist = params if isinstance(params, list) else [params or {}]
    return family, [bm.ProblemSpec.from_dict({"family": family, **p}).to_dict() for p in plist]


def default_methods(family):
    return {"table1": ["gl"], "table2": ["gl"], "table3": ["gl+"],
            "table4": ["gl", "gl+"]}.get(family, ["gl", "gl+"])


def cmd_bench(args):
    seeds = [int(s) for s in args.seeds.split(",") if s.strip()] if args.seeds is not None \
        else [resolve(args, "seed")]
    if not seeds:
        raise UsageError("empty seed list")
    try:
        params = json.loads(args.params) if args.params else None
    except ValueError as exc:
        raise UsageError(f"--params is not valid JSON: {exc}")
    name, specs = bench_specs(args.family, params)
    methods = args.methods.split(",") if args.methods else default_methods(args.family)
    for meth in methods:
        if meth not in METHODS:
            raise UsageError(f"unknown method {meth!r}")
    tol, max_iter = resolve(args, "tol"), resolve(args, "max_iter")
    jobs_list = [(spec, meth, seed, tol, max_iter)
                 for spec in specs for seed in seeds for meth in methods]
    workers = resolve(args, "jobs") or os.cpu_count() or 1
    if workers <= 1 or len(jobs_list) == 1:
        rows = [_bench_row(j) for j in jobs_list]
    else:
        with cf.ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_bench_row, jobs_list))
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, f"{name}.csv"), "w", newline="") as fh:
        w = csv.DictWriter(fh, BENCH_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (f"{v:.17g}" if isinstance(v, float) else v) for k, v in r.items()})
    manifest = {"table": name, "specs": specs, "seeds": seeds, "methods": methods,
                "tol": tol, "max_iter": max_iter, "version": __version__}
    with open(os.path.join(args.out, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
    failed = sum(1 for r in rows if str(r.get("status", "")).startswith("error"))
    log.info("bench %s: %d rows, %d errors", name, len(rows), failed)
    return EXIT_OK


# -- entry point -------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="dissipator",
                                description="Dissipating state feedback for x' = (A - BK) x.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--config", help="JSON file with default settings")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--tol", type=float, default=None)
        sp.add_argument("--out", default=None)

    sp = sub.add_parser("check", help="feasibility of (A, B)")
    sp.add_argument("A")
    sp.add_argument("B")
    common(sp)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("solve", help="compute a dissipating feedback")
    sp.add_argument("A")
    sp.add_argument("B")
    sp.add_argument("--method", choices=METHODS, default="gl")
    sp.add_argument("--m", type=int, default=None)
    sp.add_argument("--delta", type=float, default=None)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--max-iter", dest="max_iter", type=int, default=None)
    common(sp)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("fov", help="field-of-values boundary data")
    sp.add_argument("A")
    sp.add_argument("--B", default=None)
    sp.add_argument("--K", default=None)
    sp.add_argument("--angles", type=int, default=None)
    common(sp)
    sp.set_defaults(func=cmd_fov)

    sp = sub.add_parser("bench", help="run a benchmark table")
    sp.add_argument("--family", required=True,
                    help="table1..table4 or a generator family name")
    sp.add_argument("--params", default=None, help="JSON object or list of ProblemSpec fields")
    sp.add_argument("--methods", default=None, help="comma separated")
    sp.add_argument("--seeds", default=None, help="comma separated integers")
    sp.add_argument("--jobs", type=int, default=None)
    sp.add_argument("--max-iter", dest="max_iter", type=int, default=None)
    sp.add_argument("--tol", type=float, default=None)
    sp.add_argument("--out", required=True, help="output directory")
    sp.set_defaults(func=cmd_bench)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args._config = _load_config(args.config)
        return args.func(args)
    except UsageError as exc:
        print(f"dissipator: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NotDissipatable as exc:
        print(f"dissipator: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (InvalidInput, OSError) as exc:
        print(f"dissipator: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DissipatorError as exc:
        print(f"dissipator: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NOCONV


if __name__ == "__main__":
    sys.exit(main())
