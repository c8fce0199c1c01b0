import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vehcalib.exceptions import DegenerateError, EmptyInputError, InvalidInputError
from vehcalib.geom import (
    EulerYPR,
    circular_mean,
    circular_std,
    euler_to_matrix,
    matrix_to_euler,
    rodrigues,
    rotation_between,
    weighted_angle_mean,
    wrap_angle,
)


def quat_rotate(axis, angle, v):
    """Rotate v by q v q* with hand-rolled Hamilton products (oracle)."""

    def mul(p, q):
        w1, x1, y1, z1 = p
        w2, x2, y2, z2 = q
        return (
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        )

    h = angle / 2
    q = (math.cos(h), *(math.sin(h) * a for a in axis))
    qc = (q[0], -q[1], -q[2], -q[3])
    return np.array(mul(mul(q, (0.0, *v)), qc)[1:])


unit_vectors = st.tuples(
    st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1)
).filter(lambda v: np.linalg.norm(v) > 0.1).map(lambda v: np.array(v) / np.linalg.norm(v))


class TestRodrigues:
    def test_zero_angle_is_identity(self):
        np.testing.assert_array_equal(rodrigues((0, 0, 1), 0.0), np.eye(3))

    def test_quarter_turn_about_z(self):
        R = rodrigues((0, 0, 1), math.pi / 2)
        np.testing.assert_allclose(R @ [1, 0, 0], [0, 1, 0], atol=1e-15)

    def test_matches_quaternion_oracle(self):
        axis, angle = (0.0, 1.0, 0.0), 0.0872665
        R = rodrigues(axis, angle)
        expected = np.column_stack([quat_rotate(axis, angle, e) for e in np.eye(3)])
        np.testing.assert_allclose(R, expected, atol=1e-12)

    def test_rejects_non_unit_axis(self):
        with pytest.raises(InvalidInputError):
            rodrigues((0, 0, 2), 0.1)

    def test_orthonormal_for_many_random_inputs(self):
        rng = np.random.default_rng(0)
        axes = rng.normal(size=(10_000, 3))
        axes /= np.linalg.norm(axes, axis=1, keepdims=True)
        angles = rng.uniform(-10, 10, size=10_000)
        for n, a in zip(axes, angles):
            R = rodrigues(n, a)
            assert np.abs(R.T @ R - np.eye(3)).max() < 1e-9
            assert abs(np.linalg.det(R) - 1) < 1e-9

    @given(unit_vectors, st.floats(-6, 6))
    def test_matches_oracle_property(self, axis, angle):
        R = rodrigues(axis, angle)
        for e in np.eye(3):
            np.testing.assert_allclose(R @ e, quat_rotate(axis, angle, e), atol=1e-12)


class TestRotationBetween:
    def test_parallel(self):
        axis, angle = rotation_between((0, 0, 1), (0, 0, 1))
        assert angle == 0.0
        np.testing.assert_array_equal(axis, [0, 0, 1])

    def test_five_degree_tilt(self):
        s, c = math.sin(math.radians(5)), math.cos(math.radians(5))
        axis, angle = rotation_between((s, 0, c), (0, 0, 1))
        assert angle == pytest.approx(0.0872665, abs=1e-7)
        np.testing.assert_allclose(axis, [0, -1, 0], atol=1e-15)

    def test_orthogonal(self):
        axis, angle = rotation_between((1, 0, 0), (0, 0, 1))
        assert angle == pytest.approx(math.pi / 2, abs=1e-15)
        np.testing.assert_allclose(axis, [0, -1, 0])

    def test_antiparallel_raises(self):
        with pytest.raises(DegenerateError):
            rotation_between((0, 0, 1), (0, 0, -1))

    @given(unit_vectors, unit_vectors)
    def test_maps_from_onto_to_and_composes_to_identity(self, a, b):
        if a @ b < -0.999:
            return
        ax1, an1 = rotation_between(a, b)
        ax2, an2 = rotation_between(b, a)
        R1, R2 = rodrigues(ax1, an1), rodrigues(ax2, an2)
        np.testing.assert_allclose(R1 @ a, b, atol=1e-9)
        np.testing.assert_allclose(R2 @ R1, np.eye(3), atol=1e-9)


class TestEuler:
    @settings(max_examples=500)
    @given(st.floats(-math.pi + 1e-9, math.pi), st.floats(-1.4, 1.4), st.floats(-math.pi + 1e-9, math.pi))
    def test_round_trip(self, yaw, pitch, roll):
        y, p, r = matrix_to_euler(euler_to_matrix(yaw, pitch, roll))
        assert abs(wrap_angle(y - yaw)) < 1e-10
        assert abs(p - pitch) < 1e-10
        assert abs(wrap_angle(r - roll)) < 1e-10

    def test_positive_pitch_is_nose_down(self):
        R = EulerYPR(pitch=0.1).to_matrix()
        assert (R @ [1, 0, 0])[2] < 0

    def test_degree_helpers(self):
        e = EulerYPR.from_degrees(3, 2, 1)
        np.testing.assert_allclose(e.as_degrees(), (3, 2, 1))
        back = EulerYPR.from_matrix(e.to_matrix())
        assert back.as_degrees() == pytest.approx(e.as_degrees(), abs=1e-12)


class TestCircularMean:
    def test_singleton(self):
        assert circular_mean([0.1]) == pytest.approx(0.1, abs=1e-15)

    def test_wrap_symmetry(self):
        assert circular_mean([math.pi - 0.1, -math.pi + 0.1]) == pytest.approx(math.pi, abs=1e-12)

    def test_three_values(self):
        # sin/cos sums are symmetric about 0.2, so atan2 returns 0.2
        assert circular_mean([0.1, 0.2, 0.3]) == pytest.approx(0.2, abs=1e-12)

    def test_empty(self):
        with pytest.raises(EmptyInputError):
            circular_mean([])

    def test_antipodal(self):
        with pytest.raises(DegenerateError):
            circular_mean([0.0, math.pi])

    @given(
        st.lists(st.floats(-1.0, 1.0), min_size=1, max_size=20),
        st.lists(st.booleans(), min_size=20, max_size=20),
    )
    def test_invariant_to_two_pi_shifts(self, angles, shift):
        shifted = [a + 2 * math.pi * s for a, s in zip(angles, shift)]
        assert abs(wrap_angle(circular_mean(angles) - circular_mean(shifted))) < 1e-12


class TestCircularStd:
    def test_constant(self):
        assert circular_std([0.5, 0.5, 0.5]) == 0.0

    def test_small_dispersion_matches_linear_std(self):
        assert circular_std([0.0, 0.02]) == pytest.approx(np.std([0.0, 0.02]), abs=1e-4)

    def test_wrap(self):
        assert circular_std([math.pi - 0.01, -math.pi + 0.01]) == pytest.approx(0.01, abs=1e-4)

    def test_too_short(self):
        with pytest.raises(EmptyInputError):
            circular_std([0.3])

    @given(st.lists(st.floats(-3.0, 3.0), min_size=2, max_size=20), st.floats(-50, 50))
    def test_rotation_invariant(self, angles, offset):
        a = circular_std(angles)
        b = circular_std([x + offset for x in angles])
        assert a == pytest.approx(b, rel=1e-6, abs=1e-9)


class TestWeightedAngleMean:
    def test_hand_computed(self):
        got = weighted_angle_mean(np.radians([10, 12]), [0.8, 0.2])
        assert got == pytest.approx(math.radians(10.4), abs=1e-9)

    def test_zero_weight_ignored(self):
        assert weighted_angle_mean(np.radians([10, 20]), [1.0, 0.0]) == pytest.approx(math.radians(10))

    def test_across_seam(self):
        got = weighted_angle_mean([math.pi - 0.1, -math.pi + 0.1], [1, 1])
        assert got == pytest.approx(math.pi, abs=1e-12)
