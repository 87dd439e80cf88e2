"""Pose and shape error metrics."""

from __future__ import annotations

import numpy as np

__all__ = ["rotation_error", "position_error", "shape_error", "within_5deg5cm"]


def rotation_error(R_est, R_gt) -> float:
    """Geodesic rotation distance in degrees, arccos((tr(R1' R2) - 1) / 2)."""
    cos_ang = 0.5 * (np.trace(np.asarray(R_est).T @ np.asarray(R_gt)) - 1.0)
    return float(np.degrees(np.arccos(np.clip(cos_ang, -1.0, 1.0))))


def position_error(p_est, p_gt) -> float:
    """Euclidean distance in meters."""
    return float(np.linalg.norm(np.asarray(p_est) - np.asarray(p_gt)))


def shape_error(c_est, c_gt) -> float:
    """Euclidean distance between shape coefficient vectors."""
    return float(np.linalg.norm(np.asarray(c_est) - np.asarray(c_gt)))


def within_5deg5cm(rot_err_deg: float, pos_err_m: float) -> bool:
    """Standard 5-degree / 5-centimeter accuracy gate."""
    return rot_err_deg <= 5.0 and pos_err_m <= 0.05
