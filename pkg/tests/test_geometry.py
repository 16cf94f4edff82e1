import math

import numpy as np
import pytest

from vlcsim import (
    AnglePair,
    ArrayOrientation,
    DegenerateNormalError,
    InvalidAdrError,
    SingularFrameError,
    ZeroVectorError,
)
from vlcsim.geometry import (
    angle_between,
    cart_to_sph,
    cluster_equivalent_normal,
    direction,
    gcs_to_lcs11,
    gcs_to_lcs_pd,
    invert_frame,
    led_position,
    pd_normals,
    point_to_lcs_ij,
    points_to_lcs_ij,
    sph_angles,
    sph_to_cart,
    wrap_azimuth,
)

SEED = 20220101
# ceiling-mounted array facing down: rows along +y, columns along +z
DEFAULT_ORIENTATION = ArrayOrientation(math.pi / 2, 0.0, math.pi, math.pi / 2)


def test_wrap_azimuth_range():
    a = np.array([-0.1, 0.0, 2.0 * math.pi, 7.0, -9.0])
    w = wrap_azimuth(a)
    assert np.all((w >= 0.0) & (w < 2.0 * math.pi))
    assert np.allclose(np.cos(w), np.cos(a))
    assert np.allclose(np.sin(w), np.sin(a))


def test_direction_frozen_values():
    assert np.allclose(direction(0.0, 0.0), [1.0, 0.0, 0.0])
    assert np.allclose(direction(math.pi / 2, 0.0), [0.0, 1.0, 0.0], atol=1e-15)
    assert np.allclose(direction(0.0, math.pi / 2), [0.0, 0.0, 1.0], atol=1e-15)
    assert np.allclose(
        direction(math.pi / 4, math.pi / 4),
        [0.5, 0.5, math.sqrt(0.5)],
    )


def test_cart_to_sph_round_trip():
    rng = np.random.default_rng(SEED)
    for _ in range(200):
        v = rng.normal(size=3) * rng.uniform(0.1, 50.0)
        pair, r = cart_to_sph(v)
        assert 0.0 <= pair.azimuth < 2.0 * math.pi
        assert -math.pi / 2 <= pair.elevation <= math.pi / 2
        assert np.allclose(sph_to_cart(pair, r), v, rtol=1e-12, atol=1e-12)


def test_cart_to_sph_zero_vector():
    with pytest.raises(ZeroVectorError):
        cart_to_sph([0.0, 0.0, 0.0])


def test_sph_angles_matches_scalar():
    rng = np.random.default_rng(SEED + 1)
    vecs = rng.normal(size=(64, 3))
    az, el, r = sph_angles(vecs)
    for k in range(64):
        pair, rk = cart_to_sph(vecs[k])
        assert az[k] == pytest.approx(pair.azimuth, abs=1e-14)
        assert el[k] == pytest.approx(pair.elevation, abs=1e-14)
        assert r[k] == pytest.approx(rk, rel=1e-14)


def test_angle_between_matches_dot_product():
    rng = np.random.default_rng(SEED + 2)
    for _ in range(100):
        a = AnglePair(rng.uniform(0, 2 * math.pi), rng.uniform(-1.5, 1.5))
        b = AnglePair(rng.uniform(0, 2 * math.pi), rng.uniform(-1.5, 1.5))
        dot = float(direction(*a) @ direction(*b))
        expect = math.acos(min(1.0, max(-1.0, dot)))
        assert angle_between(a, b) == pytest.approx(expect, abs=1e-12)


def test_gcs_to_lcs11_default_orientation_is_identity():
    m = gcs_to_lcs11(DEFAULT_ORIENTATION)
    assert np.allclose(m, np.eye(3), atol=1e-12)


def test_gcs_to_lcs11_columns_are_normal_row_col():
    rng = np.random.default_rng(SEED + 3)
    for _ in range(300):
        # random orthonormal row/col axes from a QR factorization
        q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        row, _ = cart_to_sph(q[:, 0])
        col, _ = cart_to_sph(q[:, 1])
        m = gcs_to_lcs11(ArrayOrientation(*row, *col))
        assert np.allclose(m[:, 1], q[:, 0], atol=1e-12)
        assert np.allclose(m[:, 2], q[:, 1], atol=1e-12)
        assert np.allclose(m[:, 0], np.cross(m[:, 1], m[:, 2]), atol=1e-12)
        det = float(np.linalg.det(m))
        assert abs(abs(det) - 1.0) < 1e-9


def test_gcs_to_lcs11_parallel_axes_raise():
    bad = ArrayOrientation(0.3, 0.1, 0.3, 0.1)
    with pytest.raises(SingularFrameError):
        gcs_to_lcs11(bad)


def test_gcs_to_lcs_pd_proper_rotation():
    rng = np.random.default_rng(SEED + 4)
    for _ in range(300):
        az = rng.uniform(0.0, 2.0 * math.pi)
        el = rng.uniform(-math.pi / 2, math.pi / 2)
        m = gcs_to_lcs_pd(az, el)
        assert np.allclose(m.T @ m, np.eye(3), atol=1e-12)
        assert np.linalg.det(m) == pytest.approx(1.0, abs=1e-12)
        # third column is the top detector normal
        assert np.allclose(m[:, 2], direction(az, el), atol=1e-12)


def test_gcs_to_lcs_pd_frozen_matrix():
    m = gcs_to_lcs_pd(math.pi, 0.0)
    expect = np.array(
        [
            [0.0, 0.0, -1.0],
            [1.0, 0.0, 0.0],
            [0.0, -1.0, 0.0],
        ]
    )
    assert np.allclose(m, expect, atol=1e-12)


def test_invert_frame_matches_numpy():
    rng = np.random.default_rng(SEED + 5)
    for _ in range(100):
        m = rng.normal(size=(3, 3))
        if abs(np.linalg.det(m)) < 1e-3:
            continue
        inv = invert_frame(m)
        assert np.allclose(inv, np.linalg.inv(m), rtol=1e-10, atol=1e-12)
        assert np.allclose(inv @ m, np.eye(3), atol=1e-10)


def test_invert_frame_singular_raises():
    with pytest.raises(SingularFrameError):
        invert_frame(np.ones((3, 3)))


@pytest.mark.parametrize(
    "i,j,expect",
    [
        (1, 1, (0.0, 0.0, 0.0)),
        (1, 2, (0.0, 1.0, 0.0)),
        (2, 1, (0.0, 0.0, 1.0)),
        (4, 4, (0.0, 3.0, 3.0)),
    ],
)
def test_led_position_default_orientation(i, j, expect):
    p = led_position(i, j, DEFAULT_ORIENTATION, 1.0, 1.0)
    assert np.allclose(p, expect, atol=1e-12)


def test_led_position_spacing_scales():
    p = led_position(3, 2, DEFAULT_ORIENTATION, 0.5, 0.25)
    assert np.allclose(p, [0.0, 0.25, 1.0], atol=1e-12)


def test_point_to_lcs_ij_vectorized_agrees():
    rng = np.random.default_rng(SEED + 6)
    frame = gcs_to_lcs11(DEFAULT_ORIENTATION)
    inv = invert_frame(frame)
    points = rng.uniform(-4.0, 4.0, size=(50, 3))
    for (i, j) in [(1, 1), (2, 3), (4, 4)]:
        az, el = points_to_lcs_ij(points, i, j, inv, 1.0, 1.0)
        for k in range(points.shape[0]):
            pair = point_to_lcs_ij(points[k], i, j, frame, 1.0, 1.0)
            assert az[k] == pytest.approx(pair.azimuth, abs=1e-12)
            assert el[k] == pytest.approx(pair.elevation, abs=1e-12)


def test_point_to_lcs_ij_recovers_offset_point():
    # a point straight ahead of element (2, 3) sits on its local +x axis
    frame = gcs_to_lcs11(DEFAULT_ORIENTATION)
    base = led_position(2, 3, DEFAULT_ORIENTATION, 1.0, 1.0)
    ahead = base + np.array([2.0, 0.0, 0.0])
    pair = point_to_lcs_ij(ahead, 2, 3, frame, 1.0, 1.0)
    assert pair.azimuth == pytest.approx(0.0, abs=1e-12)
    assert pair.elevation == pytest.approx(0.0, abs=1e-12)


def test_pd_normals_single_detector():
    normals = pd_normals(1, 0.0, math.pi, 0.1, 0.0, 0.0, 0.0)
    assert len(normals) == 1
    assert np.allclose(normals[0], direction(math.pi, 0.1), atol=1e-15)


def test_pd_normals_adr_geometry():
    theta = math.radians(40.0)
    normals = pd_normals(4, theta, math.pi, 0.0, 0.0, 0.0, 0.0)
    assert len(normals) == 4
    top = normals[0]
    assert np.allclose(top, direction(math.pi, 0.0), atol=1e-12)
    for side in normals[1:]:
        assert np.linalg.norm(side) == pytest.approx(1.0, abs=1e-12)
        assert float(top @ side) == pytest.approx(math.cos(theta), abs=1e-12)
    # three side detectors are spread 120 degrees apart around the top axis
    gamma = math.pi / 2 - theta
    expect_dot = math.cos(gamma) ** 2 * math.cos(2 * math.pi / 3) + math.sin(gamma) ** 2
    for a in range(1, 4):
        for b in range(a + 1, 4):
            assert float(normals[a] @ normals[b]) == pytest.approx(
                expect_dot, abs=1e-12
            )


def test_pd_normals_rotation_advances_angles():
    rot_a, rot_e, t = 0.7, -0.3, 0.5
    still = pd_normals(3, 0.5, 2.0, 0.2, 0.0, 0.0, t)
    moved = pd_normals(3, 0.5, 2.0, 0.2, rot_a, rot_e, t)
    for n0, n1 in zip(still, moved):
        pair, _ = cart_to_sph(n0)
        expect = direction(pair.azimuth + rot_a * t, pair.elevation + rot_e * t)
        assert np.allclose(n1, expect, atol=1e-12)


def test_pd_normals_invalid_layouts():
    with pytest.raises(InvalidAdrError):
        pd_normals(0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0)
    with pytest.raises(InvalidAdrError):
        pd_normals(3, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    with pytest.raises(InvalidAdrError):
        pd_normals(3, math.pi / 2, 0.0, 0.0, 0.0, 0.0, 0.0)


def test_cluster_equivalent_normal_points_back_at_axis():
    rng = np.random.default_rng(SEED + 7)
    for _ in range(500):
        az = rng.uniform(0.0, 2.0 * math.pi)
        el = rng.uniform(-math.pi / 2 + 0.05, math.pi / 2 - 0.05)
        d = rng.uniform(0.2, 10.0)
        center = sph_to_cart(AnglePair(az, el), d)
        if math.hypot(center[1], center[2]) < 1e-6:
            continue
        n = cluster_equivalent_normal(az, el, d)
        assert np.linalg.norm(n) == pytest.approx(1.0, abs=1e-12)
        # perpendicular foot construction: normal has no component along
        # the link axis and points from the cluster back toward it
        assert abs(n[0]) < 1e-9
        h = math.hypot(center[1], center[2])
        assert np.allclose(n, [0.0, -center[1] / h, -center[2] / h], atol=1e-9)


def test_cluster_equivalent_normal_on_axis_raises():
    with pytest.raises(DegenerateNormalError):
        cluster_equivalent_normal(0.0, 0.0, 3.0)
