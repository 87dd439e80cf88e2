"""Fixed-point solver for the rotation eigenproblem.

First-order optimality of the quartic quaternion objective reads

    (A(qq') + D) q = mu q,

an eigenvalue problem whose matrix depends on the eigenvector.  The
solver repeats: build the current 4x4 data matrix, replace q by its
minimum eigenvector, stop when consecutive iterates are (numerically)
parallel.  The minimum eigenvalue is non-positive (the matrix is
traceless), which makes the minimum eigenvector both the likely local
minimizer and the dominant one for power-iteration-like convergence.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import quat
from .model import (
    Estimate,
    Precomputed,
    a_matrix,
    objective_full,
    optimal_position,
    optimal_shape,
)

__all__ = ["ScfConfig", "ScfTrace", "min_eigenpair_4x4", "scf_solve", "recover"]


@dataclass
class ScfConfig:
    """tol is the termination bound on sin(angle) between iterates."""

    tol: float = 1e-9
    max_iters: int = 100
    init: np.ndarray | str = "identity"  # "identity", "random", or a quaternion
    multi_start: int = 1
    seed: int | None = None

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.multi_start < 1:
            raise ValueError("multi_start must be at least 1")


@dataclass
class ScfTrace:
    """Per-iteration record: (q_t, mu_t, objective at q_t)."""

    iterates: list = field(default_factory=list)
    status: str = "max-iters"

    @property
    def converged(self) -> bool:
        return self.status == "converged"


def _min_eig_core(M: np.ndarray, hint: np.ndarray):
    evals, evecs = np.linalg.eigh(M)
    v = evecs[:, 0]
    scale = max(1.0, abs(evals[0]), abs(evals[3]))
    if evals[1] - evals[0] <= 1e-12 * scale:
        # (near-)repeated minimum eigenvalue: project the hint onto the
        # eigenspace so the iteration stays continuous through ties
        cluster = evals <= evals[0] + 1e-12 * scale
        basis = evecs[:, cluster]
        proj = basis @ (basis.T @ hint)
        pn = np.linalg.norm(proj)
        if pn > 1e-8:
            v = proj / pn
    if v @ hint < 0:
        v = -v
    return float(evals[0]), v


def min_eigenpair_4x4(M: np.ndarray, hint: np.ndarray | None = None):
    """Minimum eigenvalue and eigenvector of a symmetric 4x4 matrix.

    The eigenvector sign is chosen to maximize the inner product with
    `hint` (first axis when absent); ties in the minimum eigenvalue are
    broken by hint alignment within the eigenspace.
    """
    M = np.asarray(M, dtype=float)
    norm = np.linalg.norm(M)
    if np.linalg.norm(M - M.T) > 1e-10 * max(norm, 1e-300):
        raise ValueError("matrix must be symmetric")
    if hint is None:
        hint = np.array([1.0, 0.0, 0.0, 0.0])
    return _min_eig_core(M, hint)


def _resolve_starts(cfg: ScfConfig) -> list[np.ndarray]:
    if isinstance(cfg.init, str):
        if cfg.init == "identity":
            first = quat.identity_quaternion()
        elif cfg.init == "random":
            first = None  # drawn from the rng below
        else:
            raise ValueError(f"unknown init mode {cfg.init!r}")
    else:
        first = quat.normalize(cfg.init)

    rng = np.random.default_rng(cfg.seed)
    starts = []
    if first is None:
        first = quat.random_unit_quaternion(rng)
    starts.append(first)
    for _ in range(cfg.multi_start - 1):
        starts.append(quat.random_unit_quaternion(rng))
    return starts


def _scf_once(pre: Precomputed, q0: np.ndarray, tol: float, max_iters: int):
    # inner loop evaluates A(qq') through the cached 4x4 quadratic forms
    # (s_k = -q' G_k q); identical to a_matrix() up to roundoff but
    # avoids rebuilding the rotation matrix every iteration
    q = quat.normalize(q0)
    G = pre.quad_forms
    D = pre.D
    trace = ScfTrace()
    mu = 0.0
    for _ in range(max_iters):
        s = -((G @ q) @ q)
        M = np.tensordot(pre.coupling @ s, G, axes=1) + D
        mu, v = _min_eig_core(M, q)
        Mq = M @ q
        obj = float(q @ Mq + q @ (D @ q)) + pre.const_term
        trace.iterates.append((q, mu, obj))
        if quat.sin_angle(q, v) < tol:
            # keep the pre-update iterate; v and q are parallel to tol anyway
            trace.status = "converged"
            break
        q = v
    if trace.status != "converged":
        # best iterate seen so far, by objective
        best = min(range(len(trace.iterates)), key=lambda i: trace.iterates[i][2])
        q, mu, _ = trace.iterates[best]
    return q, mu, trace


def recover(pre: Precomputed, q: np.ndarray) -> Estimate:
    """Assemble a full estimate (R, c, p, objective) from a quaternion."""
    q = quat.normalize(q)
    R = quat.quat_to_rotmat(q)
    c = optimal_shape(pre, R)
    p = optimal_position(pre, R, c)
    obj = objective_full(pre.problem, R, p, c)
    mu = float(q @ (a_matrix(pre, q) + pre.D) @ q)
    in_box = bool(np.all(c >= -1e-9) and np.all(c <= 1.0 + 1e-9))
    return Estimate(
        q=q,
        R=R,
        p=p,
        c=c,
        objective=obj,
        mu=mu,
        iterations=0,
        converged=True,
        status="recovered",
        c_in_box=in_box,
    )


def scf_solve(pre: Precomputed, cfg: ScfConfig | None = None):
    """Run the fixed-point iteration; returns (Estimate, ScfTrace).

    With multi_start > 1, extra runs start from seeded random unit
    quaternions and the lowest-objective result wins.  Hitting the
    iteration cap is reported through the converged flag, not an error.
    """
    if cfg is None:
        cfg = ScfConfig()

    best = None
    for q0 in _resolve_starts(cfg):
        q, mu, trace = _scf_once(pre, q0, cfg.tol, cfg.max_iters)
        est = recover(pre, q)
        est.mu = mu
        est.iterations = len(trace.iterates)
        est.converged = trace.converged
        est.status = trace.status
        if best is None or est.objective < best[0].objective:
            best = (est, trace)
    return best
