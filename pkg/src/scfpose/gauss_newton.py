"""Gauss-Newton / Levenberg-Marquardt baselines for the rotation problem.

The rotation-only objective is a least-squares problem in the residuals

    r_i(R) = ybar_i - R Bbar_i c*(R),      i = 1..N,
    r_c(R) = sqrt(lam) * c*(R),

whose squared norms sum to objective_rot.  Rotations are linearized by
a left axis-angle perturbation, R <- R(delta) R0 with R(delta) =
exp(hat(delta)).  Because the eliminated shape c*(R) depends on R, the
Jacobians carry a coupling term through dc* = C1 ds; they are the exact
first-order derivatives of the residuals and are verified against
central finite differences in the tests.

Symbol collision warning: the damped normal matrix and its damping are
named H_gn and lam_lm here; H and lam elsewhere in the package are the
shape normal matrix and the shape-prior weight.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    Estimate,
    Precomputed,
    a_matrix,
    objective_full,
    objective_rot,
    optimal_position,
    optimal_shape,
)
from .quat import rotmat_to_quat

__all__ = ["GnConfig", "hat", "rodrigues", "residuals", "jacobians", "gn_solve"]


@dataclass
class GnConfig:
    max_iters: int = 50
    step_tol: float = 1e-10          # terminate when ||delta|| drops below
    lm_damping: float = 0.0          # 0 => plain Gauss-Newton
    damp_up: float = 10.0
    damp_down: float = 0.1

    def __post_init__(self):
        if self.step_tol <= 0 or self.max_iters < 1:
            raise ValueError("step_tol must be positive and max_iters >= 1")
        if self.lm_damping < 0:
            raise ValueError("lm_damping must be non-negative")


def hat(v) -> np.ndarray:
    """Skew-symmetric matrix with hat(a) @ b = cross(a, b)."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def _hat_batch(vecs: np.ndarray) -> np.ndarray:
    out = np.zeros(vecs.shape[:-1] + (3, 3))
    x, y, z = vecs[..., 0], vecs[..., 1], vecs[..., 2]
    out[..., 0, 1] = -z
    out[..., 0, 2] = y
    out[..., 1, 0] = z
    out[..., 1, 2] = -x
    out[..., 2, 0] = -y
    out[..., 2, 1] = x
    return out


def rodrigues(omega) -> np.ndarray:
    """Axis-angle to rotation matrix; series branch below 1e-8 avoids 0/0."""
    omega = np.asarray(omega, dtype=float)
    theta = np.linalg.norm(omega)
    K = hat(omega)
    if theta < 1e-8:
        return np.eye(3) + K + 0.5 * (K @ K)
    return np.eye(3) + (np.sin(theta) / theta) * K + ((1 - np.cos(theta)) / theta**2) * (K @ K)


def residuals(pre: Precomputed, R):
    """Keypoint residuals (N, 3) and shape-prior residual (K,) at R."""
    c = optimal_shape(pre, R)
    r = pre.ybar_i - np.einsum("ab,nbk,k->na", R, pre.Bbar_i, c)
    r_c = np.sqrt(pre.problem.lam) * c
    return r, r_c


def _coupling_matrix(pre: Precomputed, R) -> np.ndarray:
    # d s / d delta = sum_j Bbar_j' R' hat(ybar_j), a K x 3 map
    rt_yhat = np.einsum("ba,nbc->nac", R, _hat_batch(pre.ybar_i))
    return np.einsum("nak,nac->kc", pre.Bbar_i, rt_yhat)


def jacobians(pre: Precomputed, R):
    """Exact residual Jacobians wrt a left axis-angle perturbation.

    Returns (J, J_c) with J of shape (N, 3, 3) and J_c of shape (K, 3),
    satisfying r(R(delta) R0) ~= r(R0) + J(R0) delta to first order.
    """
    c = optimal_shape(pre, R)
    coupling = pre.C1 @ _coupling_matrix(pre, R)  # dc*/d delta, (K, 3)
    rotated = np.einsum("ab,nbk,k->na", R, pre.Bbar_i, c)  # R Bbar_i c
    J = _hat_batch(rotated) - np.einsum("ab,nbk,kc->nac", R, pre.Bbar_i, coupling)
    J_c = np.sqrt(pre.problem.lam) * coupling
    return J, J_c


def gn_solve(pre: Precomputed, R0: np.ndarray | None = None, cfg: GnConfig | None = None) -> Estimate:
    """Local solve by Gauss-Newton (lm_damping == 0) or Levenberg-Marquardt.

    L-M accepts a step only when the objective does not increase,
    scaling the damping by damp_up on rejection and damp_down on
    acceptance.  A singular normal matrix at zero damping ends the run
    with a non-converged estimate rather than an error.
    """
    if cfg is None:
        cfg = GnConfig()
    if R0 is None:
        R0 = np.eye(3)
    R0 = np.asarray(R0, dtype=float)
    if np.max(np.abs(R0.T @ R0 - np.eye(3))) > 1e-6 or np.linalg.det(R0) < 0:
        raise ValueError("initial rotation must be in SO(3)")

    R = R0.copy()
    lam_lm = cfg.lm_damping
    use_lm = lam_lm > 0
    obj = objective_rot(pre, R)
    status = "max-iters"
    converged = False
    iters = 0

    for _ in range(cfg.max_iters):
        iters += 1
        r, r_c = residuals(pre, R)
        J, J_c = jacobians(pre, R)
        grad = np.einsum("nab,na->b", J, r) + J_c.T @ r_c
        H_gn = np.einsum("nab,nac->bc", J, J) + J_c.T @ J_c

        if not use_lm:
            try:
                delta = -np.linalg.solve(H_gn, grad)
            except np.linalg.LinAlgError:
                status = "singular-normal-matrix"
                break
            if np.linalg.norm(delta) < cfg.step_tol:
                status = "converged"
                converged = True
                break
            R = rodrigues(delta) @ R
            obj = objective_rot(pre, R)
        else:
            accepted = False
            for _ in range(60):
                delta = -np.linalg.solve(H_gn + lam_lm * np.eye(3), grad)
                if np.linalg.norm(delta) < cfg.step_tol:
                    status = "converged"
                    converged = True
                    break
                R_try = rodrigues(delta) @ R
                obj_try = objective_rot(pre, R_try)
                if obj_try <= obj:
                    R, obj = R_try, obj_try
                    lam_lm = max(lam_lm * cfg.damp_down, 1e-12)
                    accepted = True
                    break
                lam_lm *= cfg.damp_up
                if lam_lm > 1e15:
                    break
            if converged:
                break
            if not accepted:
                status = "no-decrease"
                break

    # assemble the estimate from the iterated R itself (recover() would
    # re-derive R from the quaternion and perturb the last few bits)
    q = rotmat_to_quat(R)
    c = optimal_shape(pre, R)
    p = optimal_position(pre, R, c)
    est = Estimate(
        q=q,
        R=R,
        p=p,
        c=c,
        objective=objective_full(pre.problem, R, p, c),
        mu=float(q @ (a_matrix(pre, q) + pre.D) @ q),
        iterations=iters,
        converged=converged,
        status=status,
        c_in_box=bool(np.all(c >= -1e-9) and np.all(c <= 1.0 + 1e-9)),
    )
    return est


def nepv_residual(pre: Precomputed, R) -> float:
    """Eigenproblem residual of a rotation, for cross-checking stationarity."""
    q = rotmat_to_quat(R)
    M = a_matrix(pre, q) + pre.D
    mu = q @ M @ q
    return float(np.linalg.norm(M @ q - mu * q))
