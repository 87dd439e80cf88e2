"""Command-line interface.

Subcommands: solve a problem file, certify a candidate result, run the
synthetic benchmark, map initialization basins.  Exit codes: 0 success
(solve: converged), 2 solve finished without converging, 1 bad input.
The default RNG seed can be set through the SCFPOSE_SEED environment
variable; an explicit --seed wins.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import quat, serialize
from .certificate import DEFAULT_PSD_TOL, certify
from .gauss_newton import GnConfig, gn_solve
from .gnc import GncConfig, gnc_solve
from .metrics import rotation_error
from .model import ShapeProblem, precompute
from .scf import ScfConfig, scf_solve
from .synthetic import SOLVER_NAMES, SynthConfig, run_benchmark

__all__ = ["main", "basin_map"]


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on usage errors; the contract here is 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _env_seed() -> int | None:
    raw = os.environ.get("SCFPOSE_SEED")
    if raw is None or raw == "":
        return None
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"SCFPOSE_SEED must be an integer, got {raw!r}") from None


def _build_parser() -> _Parser:
    parser = _Parser(prog="scfpose", description=__doc__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("solve", help="solve a problem JSON file")
    p.add_argument("problem", help="path to problem JSON")
    p.add_argument("-o", "--output", default="result.json", help="result JSON path")
    p.add_argument("--solver", choices=SOLVER_NAMES, default="scf", help="inner solver")
    p.add_argument("--tol", type=float, default=1e-9, help="termination tolerance")
    p.add_argument("--max-iters", type=int, default=100, help="iteration cap")
    p.add_argument("--multi-start", type=int, default=1, help="independent restarts (scf); best objective wins")
    p.add_argument("--seed", type=int, default=None, help="RNG seed (default: SCFPOSE_SEED)")
    p.add_argument("--gnc", action="store_true", help="wrap the solver in graduated non-convexity")
    p.add_argument("--cbar2", type=float, default=0.005, help="GNC inlier threshold (m^2)")
    p.add_argument("--psd-tol", type=float, default=DEFAULT_PSD_TOL, help="dual PSD tolerance")
    p.add_argument("--no-certify", action="store_true", help="skip the optimality certificate")
    p.add_argument("--trace", default=None, help="write per-iteration CSV (scf only)")
    p.add_argument(
        "--drop-keypoints",
        default=None,
        help="comma-separated keypoint indices to mask out before solving",
    )

    p = sub.add_parser("certify", help="re-certify the rotation stored in a result file")
    p.add_argument("problem", help="path to problem JSON")
    p.add_argument("result", help="path to result JSON holding the rotation")
    p.add_argument("-o", "--output", default=None, help="certificate JSON path")
    p.add_argument("--psd-tol", type=float, default=DEFAULT_PSD_TOL, help="dual PSD tolerance")

    p = sub.add_parser("bench", help="run the synthetic benchmark")
    p.add_argument("--trials", type=int, default=1000, help="problems per noise scale")
    p.add_argument("--sigma-m", default="0.25,2.5", help="comma-separated noise scales")
    p.add_argument("--n", type=int, default=10, help="keypoints per problem")
    p.add_argument("--k", type=int, default=4, help="library shapes")
    p.add_argument("--r", type=float, default=0.2, help="library spread (m)")
    p.add_argument("--lam", type=float, default=0.0, help="shape-prior weight")
    p.add_argument("--seed", type=int, default=None, help="RNG seed (default: SCFPOSE_SEED or 0)")
    p.add_argument("--solver", default="scf,gn,lm", help="comma-separated solver list")
    p.add_argument("--init", choices=("identity", "random"), default="identity",
                   help="shared per-trial initial guess")
    p.add_argument("--tol", type=float, default=1e-9, help="solver termination tolerance")
    p.add_argument("--max-iters", type=int, default=100, help="solver iteration cap")
    p.add_argument("--warmup", type=int, default=10, help="untimed warm-up solves")
    p.add_argument("--psd-tol", type=float, default=DEFAULT_PSD_TOL, help="dual PSD tolerance")
    p.add_argument("--out-dir", default="bench_out", help="directory for CSV/JSON/figures")
    p.add_argument("--no-plot", action="store_true", help="skip figure rendering")

    p = sub.add_parser("basin", help="map SCF convergence basins over random inits")
    p.add_argument("problem", help="path to problem JSON")
    p.add_argument("-o", "--output", default="basin.csv", help="basin CSV path")
    p.add_argument("--samples", type=int, default=500, help="number of random initializations")
    p.add_argument("--seed", type=int, default=None, help="RNG seed (default: SCFPOSE_SEED)")
    p.add_argument("--tol", type=float, default=1e-9, help="solver termination tolerance")
    p.add_argument("--max-iters", type=int, default=100, help="solver iteration cap")
    p.add_argument("--no-plot", action="store_true", help="skip figure rendering")

    return parser


def _load_problem_checked(path) -> ShapeProblem:
    try:
        return serialize.load_problem(path)
    except json.JSONDecodeError as e:
        raise ValueError(serialize.format_json_error(path, e)) from None
    except FileNotFoundError:
        raise ValueError(f"no such file: {path}") from None


def _mask_keypoints(problem: ShapeProblem, spec: str) -> ShapeProblem:
    try:
        drop = sorted({int(tok) for tok in spec.split(",") if tok.strip() != ""})
    except ValueError:
        raise ValueError(f"--drop-keypoints expects comma-separated integers, got {spec!r}")
    n = problem.n_keypoints
    bad = [i for i in drop if i < 0 or i >= n]
    if bad:
        raise ValueError(f"--drop-keypoints indices out of range for N={n}: {bad}")
    keep = [i for i in range(n) if i not in drop]
    return ShapeProblem(
        problem.keypoints[keep], problem.library[keep], problem.weights[keep], problem.lam
    )


def _cmd_solve(args) -> int:
    problem = _load_problem_checked(args.problem)
    if args.drop_keypoints:
        problem = _mask_keypoints(problem, args.drop_keypoints)
    seed = args.seed if args.seed is not None else _env_seed()
    if args.gnc and args.multi_start > 1:
        raise ValueError("--gnc and --multi-start are mutually exclusive")

    trace = None
    gnc_weights = None
    gnc_iters = None
    if args.gnc:
        cfg = GncConfig(
            cbar2=args.cbar2,
            inner=args.solver,
            inner_tol=args.tol,
            inner_max_iters=args.max_iters,
        )
        est, gnc_weights, gnc_iters = gnc_solve(problem, cfg)
        effective = problem.weights * np.maximum(gnc_weights, 1e-12)
        pre = precompute(
            ShapeProblem(problem.keypoints, problem.library, effective, problem.lam)
        )
    else:
        pre = precompute(problem)
        if args.solver == "scf":
            cfg = ScfConfig(
                tol=args.tol,
                max_iters=args.max_iters,
                multi_start=args.multi_start,
                seed=seed,
            )
            est, trace = scf_solve(pre, cfg)
        else:
            damping = 1e-3 if args.solver == "lm" else 0.0
            est = gn_solve(
                pre, None, GnConfig(max_iters=args.max_iters, lm_damping=damping)
            )

    cert = None
    if not args.no_certify:
        cert = certify(pre, est.R, args.psd_tol)
        est.certified = cert.certified

    if args.trace and trace is not None:
        serialize.write_trace_csv(args.trace, trace)

    result = serialize.estimate_to_dict(est, cert, gnc_weights, gnc_iters)
    serialize.write_result(args.output, result)
    print(
        f"{'converged' if est.converged else 'NOT converged'} in {est.iterations} iterations; "
        f"objective {est.objective:.6g}"
        + (f"; certified={cert.certified}" if cert is not None else "")
    )
    return 0 if est.converged else 2


def _cmd_certify(args) -> int:
    problem = _load_problem_checked(args.problem)
    pre = precompute(problem)
    try:
        R = serialize.load_result_rotation(args.result)
    except json.JSONDecodeError as e:
        raise ValueError(serialize.format_json_error(args.result, e)) from None
    except FileNotFoundError:
        raise ValueError(f"no such file: {args.result}") from None
    cert = certify(pre, R, args.psd_tol)
    payload = serialize.certificate_to_dict(cert)
    if args.output:
        serialize.write_result(args.output, payload)
    print(json.dumps(payload, indent=1))
    return 0


def _cmd_bench(args) -> int:
    try:
        sigmas = [float(tok) for tok in args.sigma_m.split(",") if tok.strip() != ""]
    except ValueError:
        raise ValueError(f"--sigma-m expects comma-separated numbers, got {args.sigma_m!r}")
    solvers = tuple(tok.strip() for tok in args.solver.split(",") if tok.strip())
    for s in solvers:
        if s not in SOLVER_NAMES:
            raise ValueError(f"unknown solver {s!r}; choose from {', '.join(SOLVER_NAMES)}")
    seed = args.seed if args.seed is not None else (_env_seed() or 0)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    all_rows = []
    summaries = {}
    for sigma in sigmas:
        cfg = SynthConfig(
            n_keypoints=args.n,
            n_shapes=args.k,
            r=args.r,
            sigma_m=sigma,
            lam=args.lam,
            seed=seed,
            trials=args.trials,
        )
        rows, summary = run_benchmark(
            cfg,
            solvers=solvers,
            init=args.init,
            psd_tol=args.psd_tol,
            tol=args.tol,
            max_iters=args.max_iters,
            warmup=args.warmup,
        )
        all_rows.extend(rows)
        for solver, entries in summary.items():
            summaries.setdefault(solver, []).extend(entries)

    serialize.write_bench_csv(out_dir / "results.csv", all_rows)
    serialize.write_summary_json(
        out_dir / "summary.json",
        {
            "config": {
                "trials": args.trials,
                "sigma_m": sigmas,
                "n_keypoints": args.n,
                "n_shapes": args.k,
                "r": args.r,
                "lambda": args.lam,
                "seed": seed,
                "init": args.init,
                "solvers": list(solvers),
            },
            "solvers": summaries,
        },
    )
    written = [str(out_dir / "results.csv"), str(out_dir / "summary.json")]
    if not args.no_plot:
        from .report import render_benchmark_figures

        written += render_benchmark_figures(all_rows, out_dir)
    print("\n".join(written))
    return 0


def basin_map(pre, n_samples: int, seed, tol: float = 1e-9, max_iters: int = 100):
    """Run the solver from random unit-quaternion inits and label the basins.

    Converged minima are clustered by rotation distance below 1 degree;
    rows carry the stereographic projection of each init, the basin
    label (-1 when the run hit the iteration cap), and the iteration
    count.
    """
    rng = np.random.default_rng(seed)
    reps: list[np.ndarray] = []
    rows = []
    for _ in range(n_samples):
        q0 = quat.random_unit_quaternion(rng)
        est, _ = scf_solve(pre, ScfConfig(tol=tol, max_iters=max_iters, init=q0))
        label = -1
        if est.converged:
            for j, rep in enumerate(reps):
                if rotation_error(est.R, rep) < 1.0:
                    label = j
                    break
            else:
                reps.append(est.R)
                label = len(reps) - 1
        proj = quat.stereo_project(q0)
        rows.append(
            {
                "proj_x": proj[0],
                "proj_y": proj[1],
                "proj_z": proj[2],
                "label": label,
                "iterations": est.iterations,
                "converged": est.converged,
                "objective": est.objective,
            }
        )
    return rows


def _cmd_basin(args) -> int:
    problem = _load_problem_checked(args.problem)
    pre = precompute(problem)
    if args.samples < 1:
        raise ValueError("--samples must be at least 1")
    seed = args.seed if args.seed is not None else _env_seed()
    rows = basin_map(pre, args.samples, seed, args.tol, args.max_iters)
    serialize.write_basin_csv(args.output, rows)
    n_basins = len({r["label"] for r in rows if r["label"] >= 0})
    n_conv = sum(1 for r in rows if r["converged"])
    print(f"{args.output}: {n_basins} basins, {n_conv}/{len(rows)} runs converged")
    if not args.no_plot:
        from .report import render_basin_figure

        fig_path = str(Path(args.output).with_suffix(".png"))
        render_basin_figure(rows, fig_path)
        print(fig_path)
    return 0


_COMMANDS = {
    "solve": _cmd_solve,
    "certify": _cmd_certify,
    "bench": _cmd_bench,
    "basin": _cmd_basin,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:  # argparse exits for usage errors and --help
        return int(e.code or 0)
    if args.command is None:
        parser.print_help()
        return 1
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError) as e:
        print(f"scfpose {args.command}: error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # adversarial inputs must never produce a traceback
        print(f"scfpose {args.command}: unexpected error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
