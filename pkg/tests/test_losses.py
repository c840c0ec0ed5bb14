import numpy as np
import pytest

from locstruct.losses import ANGULAR_SIN_SQ, SQUARED_VECTOR, ZERO_ONE_WINDOW, part_loss, structured_loss
from locstruct.parts import (
    GridPatches,
    SequenceWindows,
    ShapeMismatchError,
    Uniform,
    VectorBlocks,
)


class TestPartLoss:
    def test_zero_one_identical_windows(self):
        assert part_loss(ZERO_ONE_WINDOW, "ab", "ab") == 0.0
        assert part_loss(ZERO_ONE_WINDOW, "ab", "ac") == 1.0

    def test_zero_one_on_arrays(self):
        assert part_loss(ZERO_ONE_WINDOW, np.array([1.0, 2.0]), np.array([1.0, 2.0])) == 0.0
        assert part_loss(ZERO_ONE_WINDOW, np.array([1.0, 2.0]), np.array([1.0, 2.1])) == 1.0

    def test_angular_scalar(self):
        assert part_loss(ANGULAR_SIN_SQ, np.pi / 2, 0.0) == pytest.approx(1.0)

    def test_squared_vector_by_hand(self):
        assert part_loss(SQUARED_VECTOR, np.array([1.0, 2.0]), np.zeros(2)) == pytest.approx(5.0)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            part_loss(SQUARED_VECTOR, np.zeros(2), np.zeros(3))

    def test_input_part_accepted_and_ignored(self):
        a = part_loss(SQUARED_VECTOR, np.ones(2), np.zeros(2), x_p=np.full(2, 9.0))
        b = part_loss(SQUARED_VECTOR, np.ones(2), np.zeros(2))
        assert a == b


class TestStructuredLoss:
    def test_zero_at_ground_truth(self):
        scheme = VectorBlocks(2, 3)
        y = np.arange(6.0)
        pi = Uniform(3)
        for spec in (SQUARED_VECTOR, ANGULAR_SIN_SQ):
            assert structured_loss(spec, y, y, None, scheme, pi) == 0.0
        seq = SequenceWindows(4, 2)
        assert structured_loss(ZERO_ONE_WINDOW, "abca", "abca", None, seq, Uniform(3)) == 0.0

    def test_single_position_mismatch_charges_one_window_of_three(self):
        scheme = SequenceWindows(3, 1)
        loss = structured_loss(ZERO_ONE_WINDOW, "abc", "abd", None, scheme, Uniform(3))
        assert loss == pytest.approx(1.0 / 3.0)

    def test_constant_angular_offset_over_grid(self):
        scheme = GridPatches(width=8, height=8, patch_w=4, patch_h=4, stride=4, circular=True)
        y = np.zeros((8, 8))
        z = np.full((8, 8), np.pi / 2)
        loss = structured_loss(ANGULAR_SIN_SQ, z, y, None, scheme, Uniform(scheme.num_parts))
        assert loss == pytest.approx(1.0)

    def test_linear_in_weights(self):
        scheme = VectorBlocks(2, 3)
        rng = np.random.default_rng(0)
        z, y = rng.standard_normal(6), rng.standard_normal(6)
        w = np.array([0.2, 0.5, 0.3])
        a = structured_loss(SQUARED_VECTOR, z, y, None, scheme, w)
        b = structured_loss(SQUARED_VECTOR, z, y, None, scheme, 2.0 * w) / 2.0
        assert a == pytest.approx(b, rel=1e-12)

    def test_unnormalized_cover_weights_accepted(self):
        # cover-multiplicity constants ride on raw weights without renormalizing
        scheme = VectorBlocks(1, 2)
        w = np.array([16.0, 16.0])
        loss = structured_loss(SQUARED_VECTOR, np.ones(2), np.zeros(2), None, scheme, w)
        assert loss == pytest.approx(32.0)

    def test_angular_shift_invariance(self):
        scheme = VectorBlocks(1, 4)
        rng = np.random.default_rng(1)
        z, y = rng.uniform(-np.pi, np.pi, 4), rng.uniform(-np.pi, np.pi, 4)
        a = structured_loss(ANGULAR_SIN_SQ, z, y, None, scheme, Uniform(4))
        b = structured_loss(ANGULAR_SIN_SQ, z + np.pi, y + np.pi, None, scheme, Uniform(4))
        assert a == pytest.approx(b, rel=1e-12)

    def test_nonnegative(self):
        scheme = VectorBlocks(2, 2)
        rng = np.random.default_rng(2)
        for _ in range(20):
            z, y = rng.standard_normal(4), rng.standard_normal(4)
            assert structured_loss(SQUARED_VECTOR, z, y, None, scheme, Uniform(2)) >= 0.0
            assert structured_loss(ANGULAR_SIN_SQ, z, y, None, scheme, Uniform(2)) >= 0.0
