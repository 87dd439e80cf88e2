"""JSON / CSV serialization for problems, estimates, and benchmark output.

File conventions (documented in the README):
  * quaternions: JSON arrays [q1, q2, q3, q4], scalar first;
  * rotation matrices: 9-element row-major arrays;
  * problems: {"keypoints": [[x,y,z], ...], "library": [[3xK row-major]
    per keypoint], "weights": [...] (optional, default 1), "lambda": num}.
"""

from __future__ import annotations

import csv
import json

import numpy as np

from .certificate import Certificate
from .model import Estimate, ShapeProblem

__all__ = [
    "load_problem",
    "problem_to_dict",
    "write_problem",
    "estimate_to_dict",
    "write_result",
    "load_result_rotation",
    "certificate_to_dict",
    "write_trace_csv",
    "write_bench_csv",
    "write_basin_csv",
    "write_summary_json",
    "BENCH_CSV_FIELDS",
    "BASIN_CSV_FIELDS",
]

BENCH_CSV_FIELDS = [
    "solver",
    "trial",
    "sigma_m",
    "rotation_error_deg",
    "position_error_m",
    "shape_error",
    "runtime_s",
    "precompute_s",
    "iterations",
    "converged",
    "certified",
    "within_5deg5cm",
]

BASIN_CSV_FIELDS = ["proj_x", "proj_y", "proj_z", "label", "iterations", "converged", "objective"]


def load_problem(path) -> ShapeProblem:
    """Parse a problem JSON file; raises ValueError with context on bad input."""
    with open(path, "rb") as f:
        data = json.load(f)
    if not isinstance(data, dict):
        raise ValueError("problem file must contain a JSON object")
    try:
        keypoints = np.asarray(data["keypoints"], dtype=float)
        library = np.asarray(data["library"], dtype=float)
    except KeyError as e:
        raise ValueError(f"problem file is missing required key {e.args[0]!r}") from None
    except (TypeError, ValueError) as e:
        raise ValueError(f"problem file has non-numeric entries: {e}") from None
    weights = data.get("weights")
    if weights is not None:
        weights = np.asarray(weights, dtype=float)
    lam = float(data.get("lambda", 0.0))
    return ShapeProblem(keypoints, library, weights, lam)


def problem_to_dict(problem: ShapeProblem) -> dict:
    return {
        "keypoints": problem.keypoints.tolist(),
        "library": problem.library.tolist(),
        "weights": problem.weights.tolist(),
        "lambda": problem.lam,
    }


def write_problem(path, problem: ShapeProblem) -> None:
    with open(path, "w") as f:
        json.dump(problem_to_dict(problem), f, indent=1)


def certificate_to_dict(cert: Certificate) -> dict:
    return {
        "certified": bool(cert.certified),
        "min_eig_S": cert.min_eig_S,
        "multipliers": [float(v) for v in cert.multipliers],
        "stationarity_residual": cert.stationarity_residual,
        "verdict": cert.verdict,
    }


def estimate_to_dict(
    est: Estimate,
    certificate: Certificate | None = None,
    gnc_weights=None,
    gnc_iterations: int | None = None,
) -> dict:
    out = {
        "q": [float(v) for v in est.q],
        "R": [float(v) for v in est.R.ravel()],  # row-major
        "p": [float(v) for v in est.p],
        "c": [float(v) for v in est.c],
        "objective": est.objective,
        "mu": est.mu,
        "iterations": est.iterations,
        "converged": bool(est.converged),
        "status": est.status,
        "c_in_box": bool(est.c_in_box),
        "certified": None if est.certified is None else bool(est.certified),
    }
    if certificate is not None:
        out["certificate"] = certificate_to_dict(certificate)
    if gnc_weights is not None:
        out["gnc"] = {
            "weights": [float(v) for v in gnc_weights],
            "iterations": int(gnc_iterations or 0),
        }
    return out


def write_result(path, result: dict) -> None:
    with open(path, "w") as f:
        json.dump(result, f, indent=1)


def load_result_rotation(path) -> np.ndarray:
    """Read the rotation matrix back out of a result JSON file."""
    with open(path, "rb") as f:
        data = json.load(f)
    if not isinstance(data, dict) or "R" not in data:
        raise ValueError("result file has no rotation field 'R'")
    R = np.asarray(data["R"], dtype=float)
    if R.size != 9:
        raise ValueError("rotation field 'R' must hold 9 row-major entries")
    return R.reshape(3, 3)


def write_trace_csv(path, trace) -> None:
    """Dump solver iterates: iter, q1..q4, mu, objective."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["iter", "q1", "q2", "q3", "q4", "mu", "objective"])
        for i, (q, mu, obj) in enumerate(trace.iterates):
            writer.writerow([i, *[repr(float(v)) for v in q], repr(float(mu)), repr(float(obj))])


def write_bench_csv(path, rows) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=BENCH_CSV_FIELDS)
        writer.writeheader()
        for r in rows:
            writer.writerow({k: getattr(r, k) for k in BENCH_CSV_FIELDS})


def write_basin_csv(path, rows) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=BASIN_CSV_FIELDS)
        writer.writeheader()
        writer.writerows(rows)


def write_summary_json(path, summary: dict) -> None:
    with open(path, "w") as f:
        json.dump(summary, f, indent=1)


def format_json_error(path, err: json.JSONDecodeError) -> str:
    """Human-readable parse diagnostic with line, column, and byte offset."""
    return (
        f"{path}: invalid JSON at line {err.lineno}, column {err.colno} "
        f"(byte offset {err.pos}): {err.msg}"
    )
