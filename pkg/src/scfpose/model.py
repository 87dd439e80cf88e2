"""Problem setup for category-level shape-and-pose estimation.

An object category is described by a linear active shape model: every
instance point is a combination ``x_i = B_i c`` of corresponding points
in K library shapes, with mixture coefficients summing to one.
Measured keypoints follow ``y_i = R B_i c + p + noise`` with isotropic
Gaussian noise of precision ``w_i``.

The MAP objective

    sum_i w_i ||y_i - R B_i c - p||^2 + lam * ||c||^2,   1'c = 1

is convex in ``(p, c)`` for fixed ``R``, so both are eliminated in
closed form.  This module holds the problem container, the cached
elimination matrices, and the resulting rotation-only / quaternion
objective evaluations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .quat import quat_to_rotmat

__all__ = [
    "IllConditionedProblem",
    "ShapeProblem",
    "Precomputed",
    "Estimate",
    "precompute",
    "optimal_position",
    "optimal_shape",
    "s_vector",
    "a_matrix",
    "objective_full",
    "objective_rot",
    "objective_rot_many",
    "objective_quartic",
]


class IllConditionedProblem(ValueError):
    """Raised when the shape normal matrix H is (numerically) singular."""


@dataclass
class ShapeProblem:
    """Keypoint measurements plus the category's shape library.

    keypoints: (N, 3) measured 3D keypoints, meters.
    library:   (N, 3, K); library[i][:, k] is point i of library shape k.
    weights:   (N,) positive measurement precisions (1/m^2); default 1.
    lam:       non-negative shape-prior precision.
    """

    keypoints: np.ndarray
    library: np.ndarray
    weights: np.ndarray | None = None
    lam: float = 0.0

    def __post_init__(self):
        self.keypoints = np.asarray(self.keypoints, dtype=float)
        self.library = np.asarray(self.library, dtype=float)
        if self.keypoints.ndim != 2 or self.keypoints.shape[1] != 3:
            raise ValueError(f"keypoints must be (N, 3), got {self.keypoints.shape}")
        n = self.keypoints.shape[0]
        if self.library.ndim != 3 or self.library.shape[:2] != (n, 3):
            raise ValueError(
                f"library must be (N, 3, K) with N={n}, got {self.library.shape}"
            )
        if self.library.shape[2] < 1:
            raise ValueError("library must contain at least one shape")
        if self.weights is None:
            self.weights = np.ones(n)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.shape != (n,):
            raise ValueError(f"weights must be ({n},), got {self.weights.shape}")
        if not np.all(self.weights > 0):
            raise ValueError("all keypoint weights must be positive")
        self.lam = float(self.lam)
        if self.lam < 0:
            raise ValueError("lam must be non-negative")
        if self.lam == 0.0:
            # Without the shape prior, invertibility of the normal matrix
            # needs at least K non-degenerate keypoints.
            if n < 3:
                raise ValueError(
                    "at least 3 keypoints are required when lam == 0; "
                    "set lam > 0 to regularize smaller problems"
                )
            if n < self.n_shapes:
                raise ValueError(
                    f"N={n} keypoints with K={self.n_shapes} shapes is "
                    "underdetermined at lam == 0; set lam > 0"
                )
            centered = self.keypoints - self.keypoints.mean(axis=0)
            scale = max(np.abs(centered).max(), 1.0)
            if np.linalg.matrix_rank(centered, tol=1e-9 * scale) < 2:
                raise ValueError(
                    "keypoints are colinear; the problem is degenerate at lam == 0"
                )

    @property
    def n_keypoints(self) -> int:
        return self.keypoints.shape[0]

    @property
    def n_shapes(self) -> int:
        return self.library.shape[2]


@dataclass
class Estimate:
    """A full shape-and-pose solution with solver diagnostics."""

    q: np.ndarray
    R: np.ndarray
    p: np.ndarray
    c: np.ndarray
    objective: float
    mu: float
    iterations: int
    converged: bool
    status: str
    c_in_box: bool
    certified: bool | None = None


@dataclass
class Precomputed:
    """Rotation-independent quantities cached once per problem.

    The centered, weight-scaled data are

        ybar_i = sqrt(w_i) * (y_i - ybar),
        Bbar_i = sqrt(w_i) * (B_i - Bbar),

    so that the translation-eliminated residual sum_i ||ybar_i -
    R Bbar_i c||^2 + lam ||c||^2 reproduces the weighted MAP objective
    at the optimal position, and Bhat2 absorbs the weights.
    """

    problem: ShapeProblem
    ybar: np.ndarray          # (3,) weighted keypoint mean
    Bbar: np.ndarray          # (3, K) weighted library mean
    ybar_i: np.ndarray        # (N, 3) centered, sqrt-weighted keypoints
    Bbar_i: np.ndarray        # (N, 3, K) centered, sqrt-weighted library
    Bhat2: np.ndarray         # (K, K) sum_i Bbar_i' Bbar_i
    H: np.ndarray             # (K, K) Bhat2 + lam I
    C1: np.ndarray            # (K, K) simplex-constrained pseudo-inverse part
    c2: np.ndarray            # (K,)  simplex offset, sums to one
    Cdelta: np.ndarray        # (K, K) I - C1 Bhat2 - lam C1
    D: np.ndarray             # (4, 4) quadratic form of the linear objective term
    const_term: float         # rotation-independent objective offset
    # internal caches -------------------------------------------------
    cross_corr: np.ndarray = field(repr=False, default=None)   # (K, 3, 3)
    quad_forms: np.ndarray = field(repr=False, default=None)   # (K, 4, 4)
    coupling: np.ndarray = field(repr=False, default=None)     # (K, K) (I + Cdelta) C1
    lin_coeff: np.ndarray = field(repr=False, default=None)    # (K,) -Cdelta c2


def _omega1_pure_batch(vecs: np.ndarray) -> np.ndarray:
    """Stack of left product matrices for homogenized 3-vectors."""
    m = vecs.shape[0]
    x, y, z = vecs[:, 0], vecs[:, 1], vecs[:, 2]
    out = np.zeros((m, 4, 4))
    out[:, 0, 1] = -x
    out[:, 0, 2] = -y
    out[:, 0, 3] = -z
    out[:, 1, 0] = x
    out[:, 1, 2] = -z
    out[:, 1, 3] = y
    out[:, 2, 0] = y
    out[:, 2, 1] = z
    out[:, 2, 3] = -x
    out[:, 3, 0] = z
    out[:, 3, 1] = -y
    out[:, 3, 2] = x
    return out


def _omega2_pure_batch(vecs: np.ndarray) -> np.ndarray:
    """Stack of right product matrices for homogenized 3-vectors."""
    m = vecs.shape[0]
    x, y, z = vecs[:, 0], vecs[:, 1], vecs[:, 2]
    out = np.zeros((m, 4, 4))
    out[:, 0, 1] = -x
    out[:, 0, 2] = -y
    out[:, 0, 3] = -z
    out[:, 1, 0] = x
    out[:, 1, 2] = z
    out[:, 1, 3] = -y
    out[:, 2, 0] = y
    out[:, 2, 1] = -z
    out[:, 2, 3] = x
    out[:, 3, 0] = z
    out[:, 3, 1] = y
    out[:, 3, 2] = -x
    return out


def precompute(problem: ShapeProblem) -> Precomputed:
    """Build all rotation-independent matrices for a problem.

    Raises IllConditionedProblem if the shape normal matrix H is not
    safely positive definite (condition number above 1e12).
    """
    y = problem.keypoints
    b = problem.library
    w = problem.weights
    lam = problem.lam
    n, _, k = b.shape

    wsum = w.sum()
    ybar = (w[:, None] * y).sum(axis=0) / wsum
    Bbar = (w[:, None, None] * b).sum(axis=0) / wsum
    sq = np.sqrt(w)
    ybar_i = sq[:, None] * (y - ybar)
    Bbar_i = sq[:, None, None] * (b - Bbar)

    Bhat2 = np.einsum("nak,nal->kl", Bbar_i, Bbar_i)
    H = Bhat2 + lam * np.eye(k)

    evals = np.linalg.eigvalsh(H)
    if evals[0] <= 0 or evals[-1] > 1e12 * evals[0]:
        raise IllConditionedProblem(
            "shape normal matrix H is singular or badly conditioned "
            f"(eigenvalue range [{evals[0]:.3e}, {evals[-1]:.3e}]); "
            "increase lambda to regularize the problem"
        )
    Hinv = np.linalg.inv(H)

    ones = np.ones(k)
    h1 = Hinv @ ones
    denom = ones @ h1
    C1 = Hinv - np.outer(h1, h1) / denom
    c2 = h1 / denom
    Cdelta = np.eye(k) - C1 @ Bhat2 - lam * C1
    coupling = (np.eye(k) + Cdelta) @ C1
    lin_coeff = -Cdelta @ c2

    # cross_corr[k] = sum_i ybar_i (column k of Bbar_i)'; gives the
    # rotation-linear form s_k = <cross_corr[k], R>.
    cross_corr = np.einsum("na,nbk->kab", ybar_i, Bbar_i)
    # quad_forms[k] = sum_i Omega1(ybar_i) Omega2(column k of Bbar_i);
    # both D and A(qq') are combinations of these 4x4 blocks.
    o1 = _omega1_pure_batch(ybar_i)
    o2 = _omega2_pure_batch(Bbar_i.transpose(0, 2, 1).reshape(n * k, 3)).reshape(n, k, 4, 4)
    quad_forms = np.einsum("nab,nkbc->kac", o1, o2)

    D = np.tensordot(Cdelta @ c2, quad_forms, axes=1)
    const_term = float((ybar_i**2).sum() + c2 @ Bhat2 @ c2 + lam * c2 @ c2)

    return Precomputed(
        problem=problem,
        ybar=ybar,
        Bbar=Bbar,
        ybar_i=ybar_i,
        Bbar_i=Bbar_i,
        Bhat2=Bhat2,
        H=H,
        C1=C1,
        c2=c2,
        Cdelta=Cdelta,
        D=D,
        const_term=const_term,
        cross_corr=cross_corr,
        quad_forms=quad_forms,
        coupling=coupling,
        lin_coeff=lin_coeff,
    )


def optimal_position(pre: Precomputed, R: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Closed-form optimal position for a given rotation and shape."""
    return pre.ybar - R @ (pre.Bbar @ c)


def s_vector(pre: Precomputed, R: np.ndarray) -> np.ndarray:
    """The rotation-linear statistic s = sum_i Bbar_i' R' ybar_i."""
    return np.einsum("kab,ab->k", pre.cross_corr, R)


def optimal_shape(pre: Precomputed, R: np.ndarray) -> np.ndarray:
    """Closed-form optimal shape vector for a given rotation; sums to one."""
    return pre.C1 @ s_vector(pre, R) + pre.c2


def a_matrix(pre: Precomputed, q: np.ndarray) -> np.ndarray:
    """The 4x4 eigenvector-dependent term of the quartic objective.

    Evaluated with s taken through the rotation matrix of q, so the
    result is identical for q and -q.
    """
    s = s_vector(pre, quat_to_rotmat(q))
    return np.tensordot(pre.coupling @ s, pre.quad_forms, axes=1)


def objective_full(problem: ShapeProblem, R, p, c) -> float:
    """Weighted MAP objective at an explicit (R, p, c) triple."""
    pred = np.einsum("ab,nbk,k->na", R, problem.library, c) + p
    resid = problem.keypoints - pred
    return float(problem.weights @ (resid**2).sum(axis=1) + problem.lam * c @ c)


def objective_rot(pre: Precomputed, R) -> float:
    """Rotation-only objective with position and shape eliminated."""
    c = optimal_shape(pre, R)
    resid = pre.ybar_i - np.einsum("ab,nbk,k->na", R, pre.Bbar_i, c)
    return float((resid**2).sum() + pre.problem.lam * c @ c)


def objective_rot_many(pre: Precomputed, Rs: np.ndarray) -> np.ndarray:
    """Vectorized rotation-only objective over a stack of rotations (M, 3, 3)."""
    s = np.einsum("kab,nab->nk", pre.cross_corr, Rs)
    quad = -pre.coupling  # (-2I + C1 Bhat2 + lam C1) C1
    return pre.const_term + 2.0 * s @ pre.lin_coeff + np.einsum("nk,kl,nl->n", s, quad, s)


def objective_quartic(pre: Precomputed, q) -> float:
    """Quartic quaternion objective; objective_rot minus const_term."""
    q = np.asarray(q, dtype=float)
    return float(q @ (2.0 * pre.D + a_matrix(pre, q)) @ q)
