import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from teleopsim.errors import ConfigError, ValidationError
from teleopsim.hands import (CouplingLaw, GloveMapping, HandRetargeter, clamp_drive,
                             expand, grouped_glove_mapping, identity_law,
                             interlocked_law, retarget_glove)


def wide_limits(m, lim=100.0):
    return np.tile([-lim, lim], (m, 1))


class TestExpand:
    def test_identity_coupling(self):
        law = identity_law(2)
        np.testing.assert_allclose(expand(law, np.array([0.3, -0.1])), [0.3, -0.1])

    def test_three_by_two_matrix(self):
        law = CouplingLaw(np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.5]]),
                          np.zeros(3), wide_limits(2))
        np.testing.assert_allclose(expand(law, np.array([0.4, 0.2])), [0.4, 0.2, 0.1])

    def test_interlocked_dimensions(self):
        law = interlocked_law(18, 13)
        out = expand(law, np.full(13, 0.5))
        assert out.shape == (18,)

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError):
            expand(identity_law(3), np.zeros(2))

    def test_out_of_limit_input_clamps(self):
        law = identity_law(1, limit=1.0)
        np.testing.assert_allclose(expand(law, np.array([5.0])), [1.0])


class TestLawValidation:
    def test_fewer_full_than_drive_rejected(self):
        with pytest.raises(ValidationError):
            CouplingLaw(np.zeros((2, 3)), np.zeros(2), wide_limits(3))

    def test_bad_limits_rejected(self):
        with pytest.raises(ValidationError):
            CouplingLaw(np.eye(2), np.zeros(2), np.array([[1.0, -1.0], [0.0, 1.0]]))

    def test_offset_shape_rejected(self):
        with pytest.raises(ValidationError):
            CouplingLaw(np.eye(2), np.zeros(3), wide_limits(2))


@given(st.floats(-2, 2), st.floats(-2, 2),
       st.lists(st.floats(-1, 1), min_size=3, max_size=3),
       st.lists(st.floats(-1, 1), min_size=3, max_size=3))
@settings(max_examples=200)
def test_expand_linearity(alpha, beta, q1, q2):
    # expand(a q1 + b q2) == a expand(q1) + b expand(q2) - (a + b - 1) offset
    rng = np.random.default_rng(7)
    law = CouplingLaw(rng.normal(size=(5, 3)), rng.normal(size=5), wide_limits(3, 1e6))
    q1, q2 = np.array(q1), np.array(q2)
    lhs = expand(law, alpha * q1 + beta * q2)
    rhs = alpha * expand(law, q1) + beta * expand(law, q2) - (alpha + beta - 1) * law.offset
    np.testing.assert_allclose(lhs, rhs, atol=1e-9)


@given(st.integers(1, 12), st.integers(0, 8))
@settings(max_examples=100)
def test_output_always_full_dimensional(m, extra):
    n = m + extra
    rng = np.random.default_rng(m * 31 + extra)
    law = CouplingLaw(rng.normal(size=(n, m)), rng.normal(size=n), wide_limits(m))
    assert expand(law, rng.uniform(-1, 1, size=m)).shape == (n,)


def test_clamp_idempotent():
    law = identity_law(4, limit=0.5)
    raw = np.array([2.0, -2.0, 0.1, 0.5])
    once, n1 = clamp_drive(law, raw)
    twice, n2 = clamp_drive(law, once)
    np.testing.assert_array_equal(once, twice)
    assert n1 == 2 and n2 == 0


class TestRetarget:
    def test_identity_mapping_passthrough(self):
        law = identity_law(3, limit=10.0)
        mapping = GloveMapping(3, (((0, 1.0),), ((1, 1.0),), ((2, 1.0),)))
        q, clamped = retarget_glove(law, np.array([0.1, 0.2, 0.3]), mapping)
        np.testing.assert_allclose(q, [0.1, 0.2, 0.3])
        assert clamped == 0

    def test_clamp_counted(self):
        law = identity_law(1, limit=1.5)
        mapping = GloveMapping(1, (((0, 1.0),),))
        q, clamped = retarget_glove(law, np.array([2.0]), mapping)
        assert q[0] == 1.5 and clamped == 1

    def test_weighted_average(self):
        law = identity_law(1, limit=10.0)
        mapping = GloveMapping(2, (((0, 0.5), (1, 0.5)),))
        q, _ = retarget_glove(law, np.array([0.2, 0.4]), mapping)
        assert q[0] == pytest.approx(0.3)

    def test_missing_glove_joint_is_config_error(self):
        with pytest.raises(ConfigError):
            GloveMapping(2, (((5, 1.0),),))

    def test_wrong_glove_size_is_config_error(self):
        law = identity_law(1)
        mapping = GloveMapping(2, (((0, 1.0),),))
        with pytest.raises(ConfigError):
            retarget_glove(law, np.zeros(3), mapping)


def test_retargeter_tracks_clamps():
    law = identity_law(2, limit=1.0)
    mapping = GloveMapping(2, (((0, 1.0),), ((1, 1.0),)))
    rt = HandRetargeter(law, mapping)
    rt.retarget(np.array([2.0, 0.5]))
    rt.retarget(np.array([3.0, -4.0]))
    assert rt.clamp_count == 3
    assert rt.full_joints(np.array([0.1, 0.1])).shape == (2,)


def test_grouped_mapping_covers_all_drive_joints():
    mapping = grouped_glove_mapping(20, 13)
    assert mapping.n_drive == 13
    used = {idx for row in mapping.rows for idx, _ in row}
    assert used == set(range(20))
    # weights per drive joint sum to 1
    for row in mapping.rows:
        assert sum(w for _, w in row) == pytest.approx(1.0)
