import numpy as np
import pytest

from scfpose import quat


def random_quats(rng, n):
    return [quat.random_unit_quaternion(rng) for _ in range(n)]


def test_omega1_identity_quaternion():
    assert np.array_equal(quat.omega1([1.0, 0, 0, 0]), np.eye(4))


def test_omega1_first_column_reproduces_argument():
    rng = np.random.default_rng(0)
    for _ in range(20):
        a = rng.standard_normal(4)
        assert np.allclose(quat.omega1(a) @ [1, 0, 0, 0], a)


def test_omega_swap_identity():
    # Omega1(a) b == Omega2(b) a for arbitrary 4-vectors
    rng = np.random.default_rng(1)
    for _ in range(100):
        a, b = rng.standard_normal(4), rng.standard_normal(4)
        assert np.abs(quat.omega1(a) @ b - quat.omega2(b) @ a).max() < 1e-14


def test_omega_orthogonal_for_unit_arguments():
    rng = np.random.default_rng(2)
    for q in random_quats(rng, 50):
        assert np.abs(quat.omega1(q).T @ quat.omega1(q) - np.eye(4)).max() < 1e-13
        assert np.abs(quat.omega2(q).T @ quat.omega2(q) - np.eye(4)).max() < 1e-13


def test_omega_product_symmetric_for_pure_vectors():
    rng = np.random.default_rng(3)
    for _ in range(50):
        x, y = rng.standard_normal(3), rng.standard_normal(3)
        M = quat.omega1(x) @ quat.omega2(y)
        assert np.abs(M - M.T).max() < 1e-14


def test_qprod_identity_element():
    rng = np.random.default_rng(4)
    for q in random_quats(rng, 10):
        assert np.allclose(quat.qprod(q, [1, 0, 0, 0]), q)


def test_qprod_inverse():
    rng = np.random.default_rng(5)
    for q in random_quats(rng, 10):
        assert np.abs(quat.qprod(q, quat.qconj(q)) - [1, 0, 0, 0]).max() < 1e-14


def test_qprod_associative():
    rng = np.random.default_rng(6)
    for _ in range(50):
        a, b, c = rng.standard_normal(4), rng.standard_normal(4), rng.standard_normal(4)
        left = quat.qprod(quat.qprod(a, b), c)
        right = quat.qprod(a, quat.qprod(b, c))
        assert np.abs(left - right).max() < 1e-13


def test_rotate_identity():
    y = np.array([0.3, -1.2, 2.0])
    assert np.allclose(quat.rotate([1, 0, 0, 0], y), y)


def test_rotate_half_turn_about_z():
    assert np.allclose(quat.rotate([0, 0, 0, 1], [1, 0, 0]), [-1, 0, 0], atol=1e-15)


def test_rotate_matches_matrix_oracle():
    rng = np.random.default_rng(7)
    for _ in range(100):
        q = quat.random_unit_quaternion(rng)
        y = rng.standard_normal(3)
        assert np.abs(quat.rotate(q, y) - quat.quat_to_rotmat(q) @ y).max() < 1e-12


def test_rotate_sandwich_scalar_part_vanishes():
    rng = np.random.default_rng(8)
    for _ in range(20):
        q = quat.random_unit_quaternion(rng)
        y = rng.standard_normal(3)
        full = quat.qprod(quat.qprod(q, y), quat.qconj(q))
        assert abs(full[0]) < 1e-12


def test_from_axis_angle_zero_angle():
    assert np.allclose(quat.from_axis_angle([0, 1, 0], 0.0), [1, 0, 0, 0])


def test_from_axis_angle_half_turn_x():
    assert np.abs(quat.from_axis_angle([1, 0, 0], np.pi) - [0, 1, 0, 0]).max() < 1e-15


def test_from_axis_angle_quarter_turn_z():
    s = np.sqrt(2) / 2
    assert np.abs(quat.from_axis_angle([0, 0, 1], np.pi / 2) - [s, 0, 0, s]).max() < 1e-15


def test_from_axis_angle_rejects_nonunit_axis():
    with pytest.raises(ValueError):
        quat.from_axis_angle([1, 1, 0], 0.5)


def test_quat_to_rotmat_identity():
    assert np.array_equal(quat.quat_to_rotmat([1, 0, 0, 0]), np.eye(3))


def test_quat_to_rotmat_sign_invariant():
    rng = np.random.default_rng(9)
    for q in random_quats(rng, 20):
        assert np.array_equal(quat.quat_to_rotmat(q), quat.quat_to_rotmat(-np.asarray(q)))


def test_rotmat_round_trip():
    rng = np.random.default_rng(10)
    for q in random_quats(rng, 1000):
        back = quat.rotmat_to_quat(quat.quat_to_rotmat(q))
        assert min(np.abs(back - q).max(), np.abs(back + q).max()) < 1e-10


def test_rotmat_to_quat_rejects_reflection():
    R = np.diag([1.0, 1.0, -1.0])
    with pytest.raises(ValueError):
        quat.rotmat_to_quat(R)


def test_rotmat_to_quat_rejects_non_orthonormal():
    with pytest.raises(ValueError):
        quat.rotmat_to_quat(np.eye(3) + 1e-3)


def test_bilinear_identity_rotation():
    e1 = np.array([1.0, 0, 0])
    assert abs(quat.bilinear(e1, [1, 0, 0, 0], e1) - 1.0) < 1e-15


def test_bilinear_half_turn():
    e1 = np.array([1.0, 0, 0])
    assert abs(quat.bilinear(e1, [0, 0, 0, 1], e1) + 1.0) < 1e-15


def test_bilinear_matches_rotation_matrix():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        q = quat.random_unit_quaternion(rng)
        x, y = rng.standard_normal(3), rng.standard_normal(3)
        assert abs(quat.bilinear(x, q, y) - x @ quat.quat_to_rotmat(q) @ y) < 1e-12


def test_stereo_project_identity_maps_to_origin():
    assert np.array_equal(quat.stereo_project([1, 0, 0, 0]), [0, 0, 0])
    assert np.array_equal(quat.stereo_project([-1, 0, 0, 0]), [0, 0, 0])


def test_stereo_project_positive_scalar_branch():
    assert np.allclose(quat.stereo_project([0.6, 0.8, 0, 0]), [-0.8, 0, 0])


def test_stereo_project_sign_invariant():
    rng = np.random.default_rng(12)
    for q in random_quats(rng, 50):
        assert np.array_equal(quat.stereo_project(q), quat.stereo_project(-q))


def test_stereo_project_inside_unit_ball():
    rng = np.random.default_rng(13)
    for q in random_quats(rng, 200):
        assert np.linalg.norm(quat.stereo_project(q)) <= 1.0 + 1e-15


def test_sin_angle_matches_naive_formula():
    rng = np.random.default_rng(14)
    for _ in range(50):
        a, b = quat.random_unit_quaternion(rng), quat.random_unit_quaternion(rng)
        naive = np.sqrt(max(0.0, 1.0 - min(1.0, float(np.dot(a, b)) ** 2)))
        assert abs(quat.sin_angle(a, b) - naive) < 1e-12


def test_sin_angle_resolves_tiny_angles():
    a = np.array([1.0, 0, 0, 0])
    b = quat.normalize([1.0, 1e-11, 0, 0])
    assert abs(quat.sin_angle(a, b) - 1e-11) < 1e-15


def test_quat_angle_small_rotations():
    for theta in (1e-3, 1e-6, 1e-9):
        q = quat.from_axis_angle([0, 0, 1], theta)
        assert abs(quat.quat_angle([1, 0, 0, 0], q) - theta) < 1e-12 * max(1, theta)
        assert abs(quat.quat_angle([1, 0, 0, 0], -q) - theta) < 1e-12
