"""Outlier-robust wrapper: graduated non-convexity over a truncated
least-squares cost.

The wrapper alternates (a) solving the weighted problem with the chosen
inner solver, (b) updating per-keypoint TLS weights from the full
reprojection residuals ||y_i - R B_i c - p||^2 against the inlier
threshold cbar2, and (c) annealing the graduation parameter mu, until
the weights are within binary_tol of {0, 1}.  Weights multiply the
problem's native precision weights; exact zeros are floored at 1e-12 so
the weighted subproblem stays constructible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gauss_newton import GnConfig, gn_solve
from .model import Estimate, ShapeProblem, precompute
from .scf import ScfConfig, scf_solve

__all__ = ["GncConfig", "NoInliersError", "gnc_solve", "reprojection_sq_residuals"]


class NoInliersError(RuntimeError):
    """Raised when graduation drives every keypoint weight to zero."""


@dataclass
class GncConfig:
    cbar2: float = 0.005        # inlier threshold on squared residuals, m^2
    mu_update: float = 1.4      # graduation factor, > 1
    max_iters: int = 100        # outer iterations
    inner: str = "scf"          # "scf" | "gn" | "lm"
    binary_tol: float = 1e-3    # weights within this of {0,1} end graduation
    inner_tol: float = 1e-9
    inner_max_iters: int = 100

    def __post_init__(self):
        if self.cbar2 <= 0:
            raise ValueError("cbar2 must be positive")
        if self.mu_update <= 1:
            raise ValueError("mu_update must exceed 1")
        if self.inner not in ("scf", "gn", "lm"):
            raise ValueError(f"unknown inner solver {self.inner!r}")


def reprojection_sq_residuals(problem: ShapeProblem, est: Estimate) -> np.ndarray:
    """Unweighted squared reprojection residuals of an estimate, (N,)."""
    pred = np.einsum("ab,nbk,k->na", est.R, problem.library, est.c) + est.p
    return ((problem.keypoints - pred) ** 2).sum(axis=1)


def _inner_solve(pre, cfg: GncConfig, warm: Estimate | None) -> Estimate:
    if cfg.inner == "scf":
        init = warm.q if warm is not None else "identity"
        est, _ = scf_solve(pre, ScfConfig(tol=cfg.inner_tol, max_iters=cfg.inner_max_iters, init=init))
        return est
    damping = 1e-3 if cfg.inner == "lm" else 0.0
    R0 = warm.R if warm is not None else None
    return gn_solve(pre, R0, GnConfig(max_iters=cfg.inner_max_iters,
                                      step_tol=max(cfg.inner_tol, 1e-12),
                                      lm_damping=damping))


def _tls_weights(r2: np.ndarray, mu: float, cbar2: float) -> np.ndarray:
    upper = (mu + 1.0) / mu * cbar2
    lower = mu / (mu + 1.0) * cbar2
    w = np.sqrt(cbar2 * mu * (mu + 1.0) / np.maximum(r2, 1e-300)) - mu
    w = np.clip(w, 0.0, 1.0)
    w[r2 >= upper] = 0.0
    w[r2 <= lower] = 1.0
    return w


def gnc_solve(problem: ShapeProblem, cfg: GncConfig | None = None, history: list | None = None):
    """Robust solve; returns (Estimate, tls_weights, inner_solver_calls).

    Raises NoInliersError when no consensus set survives graduation.
    When `history` is a list, one record per outer iteration is appended
    (weights used, estimate, residuals, mu) for diagnostics.
    """
    if cfg is None:
        cfg = GncConfig()

    n = problem.n_keypoints
    weights = np.ones(n)
    mu = None
    est = None
    weights_solved = None
    calls = 0

    for _ in range(cfg.max_iters):
        effective = problem.weights * np.maximum(weights, 1e-12)
        pre = precompute(ShapeProblem(problem.keypoints, problem.library, effective, problem.lam))
        est = _inner_solve(pre, cfg, est)
        calls += 1
        weights_solved = weights.copy()

        r2 = reprojection_sq_residuals(problem, est)
        if mu is None:
            r2_max = float(r2.max())
            if r2_max <= cfg.cbar2:
                break  # every point already inside the inlier band
            mu = max(cfg.cbar2 / (2.0 * r2_max - cfg.cbar2), 1e-6)

        new_weights = _tls_weights(r2, mu, cfg.cbar2)
        if history is not None:
            history.append(
                {"mu": mu, "weights_used": weights_solved, "weights_next": new_weights.copy(),
                 "estimate": est, "sq_residuals": r2}
            )
        if new_weights.max() < 1e-6:
            raise NoInliersError(
                "graduated non-convexity rejected every keypoint; "
                "no consensus set at the configured cbar2"
            )
        weights = new_weights
        # converged once the weights have hardened to {0,1} around an
        # actual consensus; early (small-mu) rounds leave every weight
        # soft-small, which must keep annealing rather than stop
        if (
            np.all(np.minimum(weights, 1.0 - weights) <= cfg.binary_tol)
            and weights.max() >= 1.0 - cfg.binary_tol
        ):
            break
        mu *= cfg.mu_update

    if weights_solved is None or not np.array_equal(weights, weights_solved):
        # one final solve on the converged inlier weighting
        effective = problem.weights * np.maximum(weights, 1e-12)
        pre = precompute(ShapeProblem(problem.keypoints, problem.library, effective, problem.lam))
        est = _inner_solve(pre, cfg, est)
        calls += 1

    return est, weights, calls
