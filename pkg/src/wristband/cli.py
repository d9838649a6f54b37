"""Command-line surface tying the library into reproducible runs.

Subcommands: gen, calibrate, optimize, score, parity, selftest.  Every
run that writes a report embeds its full argv and configuration, and
``wristband --replay report.json`` re-executes a recorded run into a
temporary directory and checks that the metrics match.

Exit codes: 0 success, 1 numeric/convergence failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import tempfile
import time

import numpy as np

from . import __version__
from .calibration import CalibrationTable, calibrate_null, standardized_wristband_loss
from .errors import WristbandError
from .evaluation import barycentric_reference, barycentric_z_score, hungarian_assign
from .generators import (
    PARITY_CONSTANTS,
    RngStream,
    gaussian_batch,
    parity_batch,
    rac_batch,
    x_batch,
)
from .io import build_report, read_batch, read_report, report_floats, write_batch, write_report
from .optimize import OptimizeConfig, optimize_point_cloud
from .pairwise import KernelConfig, pairwise_repulsion_loss, radial_image_kernel, radial_neumann_kernel
from .parity import finite_difference_check, parity_suite, timing_sweep
from .spectral import radial_cosine_coeffs, spectral_loss
from .specfun import chi2_cdf

GEN_KINDS = ("gaussian", "x", "rac", "mixture5", "two-mode", "student-t", "ring")

_KIND_ALIASES = {"two-mode": "two_mode", "student-t": "student_t"}
_LOSS_ALIASES = {
    "wristband-pairwise": "wristband_pairwise",
    "wristband-spectral": "wristband_spectral",
    "mmd": "mmd",
    "sliced-w2": "sliced_w2",
}


def _generate(kind: str, n: int, d: int, seed: int) -> np.ndarray:
    stream = RngStream(seed, f"gen/{kind}")
    internal = _KIND_ALIASES.get(kind, kind)
    if kind == "gaussian":
        return gaussian_batch(n, d, stream)
    if kind == "x":
        return x_batch(n, d, stream)
    if kind == "rac":
        return rac_batch(n, d, stream)
    return parity_batch(internal, n, d, stream)


def _parse_weights(text: str) -> tuple[float, float, float]:
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("weights must be w_rep,w_rad,w_mom")
    return tuple(parts)


def _parse_int_list(text: str) -> list[int]:
    return [int(p) for p in text.split(",")]


def _threads(args) -> int:
    return args.threads if args.threads else (os.cpu_count() or 1)


def _emit_report(args, subcommand: str, config: dict, seeds: dict, metrics: dict,
                 timing: dict) -> None:
    if getattr(args, "report", None):
        report = build_report(
            subcommand, args.argv_echo, config, seeds, metrics, timing, _threads(args)
        )
        write_report(args.report, report)
        print(f"report written to {args.report}")


def _cmd_gen(args) -> int:
    t0 = time.perf_counter()
    batch = _generate(args.kind, args.n, args.d, args.seed)
    write_batch(args.out, batch)
    elapsed = time.perf_counter() - t0
    norms = np.linalg.norm(batch, axis=1)
    metrics = {
        "n": args.n,
        "d": args.d,
        "kind": args.kind,
        "mean_norm": float(norms.mean()),
        "max_abs": float(np.max(np.abs(batch))),
    }
    if args.kind in ("mixture5", "two-mode", "student-t", "ring"):
        metrics["generator_constants"] = dict(PARITY_CONSTANTS)
    print(f"gen: wrote {args.n}x{args.d} {args.kind} batch to {args.out}")
    _emit_report(args, "gen", _config_echo(args), {"seed": args.seed}, metrics,
                 {"wall_time_s": elapsed})
    return 0


def _kernel_config(args) -> KernelConfig:
    return KernelConfig(
        beta=args.beta,
        alpha=args.alpha,
        eps=args.eps,
        reduction=args.reduction,
        weights=args.weights,
        modes=args.modes,
    )


def _cmd_calibrate(args) -> int:
    t0 = time.perf_counter()
    cfg = _kernel_config(args)
    table = calibrate_null(args.n, args.d, cfg, args.reps, args.seed, args.loss_path)
    with open(args.out, "w") as fh:
        fh.write(table.to_json())
    elapsed = time.perf_counter() - t0
    metrics = {
        "mu_rep": table.mu_rep,
        "mu_rad": table.mu_rad,
        "mu_mom": table.mu_mom,
        "sd_rep": table.sd_rep,
        "sd_rad": table.sd_rad,
        "sd_mom": table.sd_mom,
        "sd_numerator": table.sd_numerator,
        "loss_path": table.loss_path,
        "reduction": cfg.reduction,
    }
    print(
        f"calibrate: n={args.n} d={args.d} reps={args.reps} path={args.loss_path} "
        f"mu_rep={table.mu_rep:.6f} -> {args.out}"
    )
    _emit_report(args, "calibrate", _config_echo(args), {"seed": args.seed}, metrics,
                 {"wall_time_s": elapsed})
    return 0


def _cmd_optimize(args) -> int:
    t0 = time.perf_counter()
    if args.infile:
        initial = read_batch(args.infile)
    else:
        if args.kind is None or args.n is None or args.d is None:
            raise WristbandError("optimize needs either --in or --kind with --n and --d")
        initial = _generate(args.kind, args.n, args.d, args.seed)
    loss = _LOSS_ALIASES[args.loss]

    table = None
    if loss.startswith("wristband"):
        if not args.calib:
            raise WristbandError(f"loss {args.loss} requires --calib TABLE")
        with open(args.calib) as fh:
            table = CalibrationTable.from_json(fh.read())
        kernel_cfg = table.cfg
    else:
        kernel_cfg = KernelConfig()

    opt_cfg = OptimizeConfig(
        loss=loss,
        steps=args.steps,
        lr=args.lr,
        optimizer=args.optimizer,
        schedule=args.schedule,
        seed=args.seed,
        log_stride=args.log_stride,
        sliced_projections=args.projections,
        freeze_projections=args.freeze_projections,
    )
    final, trajectory = optimize_point_cloud(initial, opt_cfg, kernel_cfg, table)
    write_batch(args.out, final)
    elapsed = time.perf_counter() - t0
    metrics = {
        "initial_loss": trajectory[0][1],
        "final_loss": trajectory[-1][1],
        "steps": args.steps,
        "trajectory": [[s, v] for s, v in trajectory],
    }
    print(
        f"optimize: {args.loss} for {args.steps} steps, "
        f"loss {trajectory[0][1]:.4f} -> {trajectory[-1][1]:.4f}, wrote {args.out}"
    )
    _emit_report(args, "optimize", _config_echo(args), {"seed": args.seed}, metrics,
                 {"wall_time_s": elapsed})
    return 0


def _cmd_score(args) -> int:
    t0 = time.perf_counter()
    candidate = read_batch(args.infile)
    n, d = candidate.shape
    stream = RngStream(args.seed, "score")
    ref = barycentric_reference(n, d, args.ref_batches, stream.child("reference"))
    z = barycentric_z_score(candidate, ref, args.null_batches, stream.child("nulls"))
    elapsed = time.perf_counter() - t0
    metrics = {
        "z": z,
        "n": n,
        "d": d,
        "ref_batches": args.ref_batches,
        "null_batches": args.null_batches,
        "w2_convention": "distance",
        "reference_provenance": ref.provenance(),
    }
    print(f"score: barycentric-W2 z = {z:.4f} (n={n}, d={d})")
    _emit_report(args, "score", _config_echo(args), {"seed": args.seed}, metrics,
                 {"wall_time_s": elapsed})
    return 0


def _cmd_parity(args) -> int:
    t0 = time.perf_counter()
    cfg = KernelConfig(beta=args.beta, alpha=args.alpha)
    seeds = list(range(args.reps))
    rows = []
    for d in args.dims:
        for n in args.ns:
            suite = parity_suite(d, n, args.modes, seeds, cfg)
            rows.append({k: suite[k] for k in
                         ("d", "n", "modes", "mean_cosine", "min_cosine", "value_correlation")})
            print(
                f"parity: d={d} n={n} K={args.modes} mean_cos={suite['mean_cosine']:.4f} "
                f"min_cos={suite['min_cosine']:.4f} value_corr={suite['value_correlation']:.6f}"
            )
    timing_rows = timing_sweep(args.dims, args.ns, args.modes, args.timing_reps, cfg,
                               seed=args.seed)
    for row in timing_rows:
        print(
            f"timing: d={row['d']} n={row['n']} pairwise={row['pairwise_ms']:.2f}ms "
            f"spectral={row['spectral_ms']:.2f}ms speedup={row['speedup']:.2f}x"
        )
    elapsed = time.perf_counter() - t0
    _emit_report(
        args, "parity", _config_echo(args), {"seed": args.seed},
        {"parity": rows, "generator_constants": dict(PARITY_CONSTANTS)},
        {"wall_time_s": elapsed, "timing_rows": timing_rows},
    )
    return 0


def _selftest_checks():
    rng = np.random.default_rng(7)
    cfg = KernelConfig(beta=8.0, alpha=1.0)

    def chi2_monotone():
        values = [chi2_cdf(5, s) for s in np.linspace(0.0, 30.0, 200)]
        return all(b >= a for a, b in zip(values, values[1:]))

    def kernel_identity():
        u = rng.normal(size=(50, 4))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        v = rng.normal(size=(50, 4))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        from .pairwise import angular_kernel

        lhs = angular_kernel(u, v, cfg)
        c = 2.0 * cfg.beta * cfg.alpha**2
        rhs = math.e ** (-c) * np.exp(c * np.einsum("ij,ij->i", u, v))
        return np.allclose(lhs, rhs, rtol=1e-12, atol=0)

    def truncation_gap():
        t = np.linspace(0.0, 1.0, 50)
        tt, uu = np.meshgrid(t, t)
        gap = np.max(np.abs(radial_image_kernel(tt, uu, 8.0) - radial_neumann_kernel(tt, uu, 8.0, 10)))
        return gap <= 4e-4

    def cosine_series():
        a = radial_cosine_coeffs(8.0, 64)
        t = np.linspace(0.0, 1.0, 40)
        k = np.arange(64)
        basis = np.cos(np.pi * np.outer(t, k))
        series = (basis * a) @ basis.T
        ref = radial_neumann_kernel(t[:, None], t[None, :], 8.0, 10)
        return np.max(np.abs(series - ref)) <= 1e-8

    def gradients():
        x = rng.normal(size=(12, 4))
        rep = finite_difference_check(lambda b: pairwise_repulsion_loss(b, cfg), x)
        sp = finite_difference_check(lambda b: spectral_loss(b, cfg), x)
        return rep.rel_l2_error <= 1e-5 and sp.rel_l2_error <= 1e-5

    def batch_roundtrip():
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "roundtrip.wbpc")
            batch = rng.normal(size=(17, 3))
            write_batch(path, batch)
            back = read_batch(path)
            return np.array_equal(batch, back)

    def calibration_determinism():
        t1 = calibrate_null(32, 3, cfg, 8, seed=5)
        t2 = calibrate_null(32, 3, cfg, 8, seed=5)
        if t1.to_json() != t2.to_json():
            return False
        lw = standardized_wristband_loss(gaussian_batch(32, 3, RngStream(9, "selftest")), t1)
        return math.isfinite(lw.value)

    def hungarian_small():
        cost = rng.random((5, 5))
        best = hungarian_assign(cost).cost
        from itertools import permutations

        brute = min(sum(cost[i, p[i]] for i in range(5)) for p in permutations(range(5)))
        return abs(best - brute) < 1e-12

    return [
        ("chi2_cdf_monotone", chi2_monotone),
        ("angular_kernel_identity", kernel_identity),
        ("radial_truncation_gap", truncation_gap),
        ("radial_cosine_series", cosine_series),
        ("loss_gradients_fd", gradients),
        ("batch_file_roundtrip", batch_roundtrip),
        ("calibration_determinism", calibration_determinism),
        ("hungarian_vs_bruteforce", hungarian_small),
    ]


def _cmd_selftest(args) -> int:
    failures = 0
    for name, check in _selftest_checks():
        try:
            ok = check()
        except Exception as exc:  # a crash is a failure, not an abort
            ok = False
            print(f"selftest {name}: ERROR ({exc})")
        else:
            print(f"selftest {name}: {'PASS' if ok else 'FAIL'}")
        failures += 0 if ok else 1
    if failures:
        print(f"selftest: {failures} check(s) failed")
        return 1
    print("selftest: all checks passed")
    return 0


def _config_echo(args) -> dict:
    from .pairwise import DEFAULT_TILE

    skip = {"func", "argv_echo"}
    echo = {k: v for k, v in vars(args).items() if k not in skip}
    echo["pairwise_tile"] = DEFAULT_TILE
    return echo


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wristband",
        description="Wristband Gaussianization losses, calibration, and evaluation",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add_common(p):
        p.add_argument("--threads", type=int, default=0,
                       help="thread cap recorded in reports (0 = machine default)")
        p.add_argument("--report", default=None, help="write a JSON run report here")

    p = sub.add_parser("gen", help="generate a benchmark batch")
    p.add_argument("--kind", choices=GEN_KINDS, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    add_common(p)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("calibrate", help="Monte-Carlo null calibration table")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--beta", type=float, default=8.0)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--eps", type=float, default=1e-12)
    p.add_argument("--reduction", choices=("global", "per_point"), default="global")
    p.add_argument("--weights", type=_parse_weights, default=(1.0, 0.1, 1.0),
                   help="w_rep,w_rad,w_mom")
    p.add_argument("--modes", type=int, default=6)
    p.add_argument("--reps", type=int, default=4096)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--loss-path", dest="loss_path", choices=("pairwise", "spectral"),
                   default="pairwise")
    p.add_argument("--out", required=True)
    add_common(p)
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("optimize", help="direct point-cloud optimization")
    p.add_argument("--loss", choices=tuple(_LOSS_ALIASES), required=True)
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--calib", default=None, help="calibration table (wristband losses)")
    p.add_argument("--in", dest="infile", default=None, help="initial batch file")
    p.add_argument("--kind", choices=GEN_KINDS, default=None,
                   help="generate the initial batch instead of --in")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--optimizer", choices=("adam", "sgd"), default="adam")
    p.add_argument("--schedule", choices=("constant", "cosine"), default="constant")
    p.add_argument("--log-stride", dest="log_stride", type=int, default=10)
    p.add_argument("--projections", type=int, default=128)
    p.add_argument("--freeze-projections", dest="freeze_projections", action="store_true")
    p.add_argument("--out", required=True)
    add_common(p)
    p.set_defaults(func=_cmd_optimize)

    p = sub.add_parser("score", help="calibrated barycentric-W2 z-score")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--ref-batches", dest="ref_batches", type=int, default=64)
    p.add_argument("--null-batches", dest="null_batches", type=int, default=128)
    p.add_argument("--seed", type=int, default=0)
    add_common(p)
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("parity", help="spectral-vs-pairwise parity and timing")
    p.add_argument("--dims", type=_parse_int_list, default=[16, 64])
    p.add_argument("--ns", type=_parse_int_list, default=[1024])
    p.add_argument("--modes", type=int, default=3)
    p.add_argument("--reps", type=int, default=5, help="seeds per generator")
    p.add_argument("--timing-reps", dest="timing_reps", type=int, default=3)
    p.add_argument("--beta", type=float, default=8.0)
    # Default angular scale for parity runs: small enough that the
    # l <= 1 truncation retains the angular signal at K = 3.
    p.add_argument("--alpha", type=float, default=0.15)
    p.add_argument("--seed", type=int, default=0)
    add_common(p)
    p.set_defaults(func=_cmd_parity)

    p = sub.add_parser("selftest", help="run the built-in invariant checks")
    add_common(p)
    p.set_defaults(func=_cmd_selftest)

    return parser


def _replay(path: str) -> int:
    original = read_report(path)
    argv = list(original["argv"])
    with tempfile.TemporaryDirectory() as tmp:
        redirected = []
        report_path = os.path.join(tmp, "replay-report.json")
        saw_report = False
        i = 0
        while i < len(argv):
            tok = argv[i]
            if tok == "--out":
                redirected += ["--out", os.path.join(tmp, os.path.basename(argv[i + 1]))]
                i += 2
            elif tok == "--report":
                redirected += ["--report", report_path]
                saw_report = True
                i += 2
            else:
                redirected.append(tok)
                i += 1
        if not saw_report:
            redirected += ["--report", report_path]
        code = cli_dispatch(redirected)
        if code != 0:
            print(f"replay: rerun exited with {code}")
            return 1
        fresh = read_report(report_path)
        old_metrics = report_floats(original["metrics"])
        new_metrics = report_floats(fresh["metrics"])
        if _metrics_match(old_metrics, new_metrics):
            print("replay: metrics match")
            return 0
        print("replay: METRICS MISMATCH")
        return 1


def _metrics_match(a, b, rel=1e-9) -> bool:
    if isinstance(a, float) and isinstance(b, float):
        if math.isnan(a) and math.isnan(b):
            return True
        return abs(a - b) <= rel * max(1.0, abs(a), abs(b))
    if isinstance(a, dict) and isinstance(b, dict):
        return a.keys() == b.keys() and all(_metrics_match(a[k], b[k], rel) for k in a)
    if isinstance(a, list) and isinstance(b, list):
        return len(a) == len(b) and all(_metrics_match(x, y, rel) for x, y in zip(a, b))
    return a == b


def cli_dispatch(argv) -> int:
    """Run one CLI invocation; returns the process exit code."""
    argv = list(argv)
    if argv[:1] == ["--replay"]:
        if len(argv) != 2:
            print("usage: wristband --replay REPORT.json", file=sys.stderr)
            return 2
        try:
            return _replay(argv[1])
        except (WristbandError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else 0
    args.argv_echo = argv
    try:
        threads = getattr(args, "threads", 0)
        if threads and threads > 0:
            try:
                from threadpoolctl import threadpool_limits
            except ImportError:
                print(f"note: threadpoolctl unavailable; --threads {threads} recorded only")
                return args.func(args)
            with threadpool_limits(limits=threads):
                return args.func(args)
        return args.func(args)
    except (WristbandError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
