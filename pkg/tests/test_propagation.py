import mpmath
import numpy as np
import pytest

from filmsim.geometry import CoincidentPointsError, build_layer_grid
from filmsim.propagation import (
    UserSet,
    array_response,
    diffraction_matrix,
    path_loss_amplitude,
    steering_vector,
    user_channel,
)

LAM = 10.7e-3
HALF = LAM / 2
AREA = HALF * HALF


def plane_wave_oracle(theta, phi, geom, wavelength):
    """Steering vector as exp(-j k_c p.u) evaluated atom by atom."""
    k_c = 2 * np.pi / wavelength
    u = np.array([np.sin(theta) * np.cos(phi),
                  np.sin(theta) * np.sin(phi),
                  np.cos(theta)])
    return np.array([np.exp(-1j * k_c * np.dot(p, u)) for p in geom.positions()])


class TestDiffractionMatrix:
    def test_on_axis_magnitude_high_precision(self):
        src = np.array([[0.0, 0.0, 0.0]])
        dst = np.array([[0.0, 5e-3, 0.0]])
        w = diffraction_matrix(src, dst, LAM, AREA).entries[0, 0]
        with mpmath.workdps(50):
            d = mpmath.mpf(5) / 1000
            lam = mpmath.mpf("10.7") / 1000
            area = (lam / 2) ** 2
            expected = area / d * mpmath.sqrt(
                (1 / (2 * mpmath.pi * d)) ** 2 + (1 / lam) ** 2
            )
            phase = 2 * mpmath.pi * d / lam
            expected_re = float(expected * mpmath.cos(phase + mpmath.atan2(-1 / lam, 1 / (2 * mpmath.pi * d))))
        assert abs(w) == pytest.approx(float(expected), rel=1e-12)
        assert w.real == pytest.approx(expected_re, rel=1e-10)

    def test_in_plane_pair_is_dark(self):
        src = np.array([[0.0, 0.0, 0.0]])
        dst = np.array([[3e-3, 0.0, 4e-3]])
        w = diffraction_matrix(src, dst, LAM, AREA).entries[0, 0]
        assert w == 0.0

    def test_attenuation_factor_scales_power(self, rng):
        src = rng.uniform(-1e-2, 1e-2, (3, 3))
        dst = rng.uniform(-1e-2, 1e-2, (4, 3)) + np.array([0, 5e-2, 0])
        full = diffraction_matrix(src, dst, LAM, AREA).entries
        damped = diffraction_matrix(src, dst, LAM, AREA,
                                    amplitude_factor=np.sqrt(0.9)).entries
        np.testing.assert_allclose(np.abs(damped) ** 2, 0.9 * np.abs(full) ** 2,
                                   rtol=1e-12)

    def test_geometry_reciprocity(self, rng):
        a = rng.uniform(-1e-2, 1e-2, (3, 3))
        b = rng.uniform(-1e-2, 1e-2, (5, 3)) + np.array([0, 7e-3, 0])
        forward = diffraction_matrix(a, b, LAM, AREA).entries
        backward = diffraction_matrix(b, a, LAM, AREA).entries
        np.testing.assert_allclose(np.abs(forward), np.abs(backward).T, rtol=1e-12)

    def test_coincident_points_propagate(self):
        p = np.array([[0.0, 0.0, 0.0]])
        with pytest.raises(CoincidentPointsError):
            diffraction_matrix(p, p, LAM, AREA)

    def test_validation(self):
        src = np.array([[0.0, 0.0, 0.0]])
        dst = np.array([[0.0, 5e-3, 0.0]])
        with pytest.raises(ValueError):
            diffraction_matrix(src, dst, -1.0, AREA)
        with pytest.raises(ValueError):
            diffraction_matrix(src, dst, LAM, AREA, amplitude_factor=1.5)


class TestSteeringVector:
    def test_broadside_all_ones(self):
        geom = build_layer_grid(3, 4, HALF, HALF, 0.0, 0.0)
        v = steering_vector(np.pi / 2, np.pi / 2, geom, LAM)
        np.testing.assert_allclose(v, np.ones(12), atol=1e-14)

    def test_zenith_pure_z_progression(self):
        geom = build_layer_grid(3, 4, HALF, HALF, 0.0, 0.0)
        v = steering_vector(0.0, 1.23, geom, LAM)
        k_c = 2 * np.pi / LAM
        iz = np.arange(12) // 3
        np.testing.assert_allclose(v, np.exp(-1j * k_c * iz * HALF), atol=1e-13)

    def test_against_plane_wave_oracle(self, rng):
        geom = build_layer_grid(10, 10, HALF, HALF, 0.0, 2.4e-3)
        geom = geom.with_offsets(rng.uniform(-2.4e-3, 2.4e-3, 100))
        v = steering_vector(np.pi / 6, np.pi / 3, geom, LAM)
        np.testing.assert_allclose(v, plane_wave_oracle(np.pi / 6, np.pi / 3, geom, LAM),
                                   atol=1e-12)

    def test_unit_modulus(self, rng):
        geom = build_layer_grid(5, 5, HALF, HALF, -5e-3, 2.4e-3)
        geom = geom.with_offsets(rng.uniform(-2.4e-3, 2.4e-3, 25))
        for _ in range(10):
            v = steering_vector(rng.uniform(0, np.pi), rng.uniform(0, np.pi), geom, LAM)
            np.testing.assert_allclose(np.abs(v), 1.0, atol=1e-12)

    def test_morphing_is_elementwise(self, rng):
        geom = build_layer_grid(4, 4, HALF, HALF, 0.0, 2.4e-3)
        base = steering_vector(1.0, 0.7, geom, LAM)
        offsets = np.zeros(16)
        offsets[6] = 1.5e-3
        moved = steering_vector(1.0, 0.7, geom.with_offsets(offsets), LAM)
        changed = np.abs(moved - base) > 1e-15
        assert changed[6] and not np.any(np.delete(changed, 6))


class TestArrayResponse:
    def test_single_user_single_column(self):
        geom = build_layer_grid(4, 4, HALF, HALF, 0.0, 0.0)
        users = UserSet(theta=[0.8], phi=[1.1], distance=[100.0], exponent=2.0)
        a = array_response(users, geom, LAM)
        assert a.shape == (16, 1)
        np.testing.assert_array_equal(a[:, 0], steering_vector(0.8, 1.1, geom, LAM))

    def test_identical_users_identical_columns(self):
        geom = build_layer_grid(4, 4, HALF, HALF, 0.0, 0.0)
        users = UserSet(theta=[0.8, 0.8], phi=[1.1, 1.1],
                        distance=[100.0, 100.0], exponent=2.0)
        a = array_response(users, geom, LAM)
        np.testing.assert_array_equal(a[:, 0], a[:, 1])

    def test_table_users_full_rank(self, table_users):
        geom = build_layer_grid(10, 10, HALF, HALF, 0.0, 0.0)
        a = array_response(table_users, geom, LAM)
        s = np.linalg.svd(a, compute_uv=False)
        assert np.sum(s > 1e-8 * s[0]) == 4


class TestPathLoss:
    def test_table_distance(self):
        beta = path_loss_amplitude(150.0, 2.5, LAM)
        pl_db = -20 * np.log10(4 * np.pi / LAM) - 25 * np.log10(150.0)
        assert pl_db == pytest.approx(-115.8, abs=0.05)
        assert beta == pytest.approx(10 ** (pl_db / 20), rel=1e-14)
        assert beta == pytest.approx(1.622e-6, rel=1e-3)

    def test_zero_exponent_reference(self):
        assert path_loss_amplitude(1.0, 0.0, LAM) == pytest.approx(LAM / (4 * np.pi),
                                                                   rel=1e-14)

    def test_power_law_doubling(self):
        b1 = path_loss_amplitude(70.0, 2.5, LAM)
        b2 = path_loss_amplitude(140.0, 2.5, LAM)
        assert (b2 / b1) ** 2 == pytest.approx(2 ** -2.5, rel=1e-12)

    def test_rejects_nonpositive_distance(self):
        with pytest.raises(ValueError):
            path_loss_amplitude(0.0, 2.5, LAM)


class TestUserChannel:
    def test_single_broadside_row(self):
        geom = build_layer_grid(3, 3, HALF, HALF, 0.0, 0.0)
        users = UserSet(theta=[np.pi / 2], phi=[np.pi / 2], distance=[50.0], exponent=2.0)
        chan = user_channel(users, geom, LAM)
        np.testing.assert_allclose(chan.H[0], chan.beta[0] * np.ones(9), atol=1e-18)

    def test_rows_are_scaled_conjugate_steering(self, table_users):
        geom = build_layer_grid(10, 10, HALF, HALF, 0.0, 0.0)
        chan = user_channel(table_users, geom, LAM)
        a = array_response(table_users, geom, LAM)
        for k in range(4):
            np.testing.assert_allclose(chan.H[k], chan.beta[k] * a[:, k].conj(),
                                       rtol=1e-14)

    def test_frobenius_norm(self, table_users):
        geom = build_layer_grid(10, 10, HALF, HALF, 0.0, 0.0)
        chan = user_channel(table_users, geom, LAM)
        expected = np.sqrt(100 * np.sum(chan.beta ** 2))
        assert np.linalg.norm(chan.H) == pytest.approx(expected, rel=1e-12)


class TestUserSetValidation:
    def test_angle_ranges(self):
        with pytest.raises(ValueError):
            UserSet(theta=[4.0], phi=[1.0], distance=[10.0], exponent=2.0)

    def test_positive_distance(self):
        with pytest.raises(ValueError):
            UserSet(theta=[1.0], phi=[1.0], distance=[0.0], exponent=2.0)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            UserSet(theta=[1.0, 1.0], phi=[1.0], distance=[10.0], exponent=2.0)
