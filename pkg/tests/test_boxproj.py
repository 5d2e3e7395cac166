import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from boxlevelset.boxproj import (
    axis_projection,
    box_projection_gradient,
    box_projection_loss,
    dice_1d,
)
from boxlevelset.core import InvalidArgumentError, PixelGrid
from boxlevelset.oracles import central_differences, relative_error

EPS = 1e-6
masks = arrays(
    np.float64,
    st.tuples(st.integers(1, 6), st.integers(1, 6)),
    elements=st.floats(1e-6, 1 - 1e-6),
)


def test_projection_of_ones_and_zeros():
    ones = np.ones((2, 3))
    assert axis_projection(ones, "x").tolist() == [1, 1, 1]
    assert axis_projection(ones, "y").tolist() == [1, 1]
    assert axis_projection(np.zeros((2, 3)), "x").tolist() == [0, 0, 0]
    assert axis_projection(np.zeros((2, 3)), "y").tolist() == [0, 0]


def test_projection_small_case():
    mask = np.array([[0.2, 0.9], [0.4, 0.1]])
    assert axis_projection(mask, "x").tolist() == [0.4, 0.9]
    assert axis_projection(mask, "y").tolist() == [0.9, 0.4]
    assert axis_projection(PixelGrid(mask), "x").tolist() == [0.4, 0.9]
    with pytest.raises(InvalidArgumentError):
        axis_projection(mask, "z")


def test_dice_values():
    assert dice_1d([1, 1, 0], [1, 1, 0], EPS) == pytest.approx(1.0, abs=1e-6)
    assert dice_1d([1, 0], [0, 1], EPS) == 0.0
    assert dice_1d([0.5, 0.5], [1, 0], 0.0) == pytest.approx(2 / 3, abs=1e-15)
    with pytest.raises(InvalidArgumentError):
        dice_1d([1, 0], [1, 0, 0])


def test_loss_extremes():
    assert box_projection_loss(np.ones((3, 5)), eps_dice=EPS) == pytest.approx(0.0, abs=1e-5)
    assert box_projection_loss(np.zeros((3, 5)), eps_dice=EPS) == pytest.approx(2.0, abs=1e-5)


def test_left_half_mask():
    mask = np.zeros((4, 4))
    mask[:, :2] = 1.0
    # x: 2*2 / (2 + 4) = 2/3; y: every row reaches 1
    assert box_projection_loss(mask, eps_dice=0.0) == pytest.approx(1 / 3, abs=1e-15)
    assert box_projection_loss(mask, eps_dice=EPS) == pytest.approx(1 / 3, abs=1e-6)


@given(masks)
def test_loss_range(mask):
    assert 0.0 <= box_projection_loss(mask, eps_dice=EPS) <= 2.0


# a column maximum of 1 - d costs about d^2 / (2 n), so "not touching" is only
# distinguishable from zero loss when the mask stays clear of 1
clear_of_one = arrays(
    np.float64,
    st.tuples(st.integers(1, 6), st.integers(1, 6)),
    elements=st.floats(0.0, 0.95),
)


@given(clear_of_one, st.data())
def test_zero_loss_iff_every_row_and_column_reaches_one(mask, data):
    mask = mask.copy()
    assert box_projection_loss(mask, eps_dice=EPS) > 10 * EPS
    h, w = mask.shape
    rows = data.draw(st.permutations(range(h)))
    for c in range(w):
        mask[rows[c % h], c] = 1.0
    for r in range(h):
        mask[r, data.draw(st.integers(0, w - 1))] = 1.0
    assert box_projection_loss(mask, eps_dice=EPS) <= 10 * EPS


@given(masks, st.randoms(use_true_random=False))
def test_x_term_invariant_to_column_permutation(mask, random):
    shuffled = mask.copy()
    for c in range(mask.shape[1]):
        column = list(shuffled[:, c])
        random.shuffle(column)
        shuffled[:, c] = column
    q = np.ones(mask.shape[1])
    assert dice_1d(axis_projection(shuffled, "x"), q) == dice_1d(axis_projection(mask, "x"), q)


def test_saturated_gradient():
    grad = box_projection_gradient(np.ones((3, 4)), eps_dice=EPS)
    assert np.all(grad <= 0)
    assert np.abs(grad).max() < 1e-6
    # first maxima along each column (row 0) and each row (column 0)
    support = np.zeros((3, 4), dtype=bool)
    support[0, :] = True
    support[:, 0] = True
    assert np.all(grad[~support] == 0) and np.all(grad[support] < 0)


def test_non_argmax_pixels_get_zero_gradient(rng):
    mask = rng.uniform(0.05, 0.95, (5, 4))
    grad = box_projection_gradient(mask, eps_dice=EPS)
    is_col_max = mask == mask.max(axis=0, keepdims=True)
    is_row_max = mask == mask.max(axis=1, keepdims=True)
    assert np.all(grad[~(is_col_max | is_row_max)] == 0)


@pytest.mark.parametrize("seed", range(10))
def test_gradient_matches_central_differences(seed):
    rng = np.random.default_rng(seed)
    shape = (3, 3) if seed == 0 else tuple(rng.integers(2, 7, size=2))
    mask = rng.uniform(0.05, 0.95, shape)
    analytic = box_projection_gradient(mask, eps_dice=EPS)
    numeric = central_differences(lambda m: box_projection_loss(m, eps_dice=EPS), mask, 1e-6)
    assert relative_error(analytic, numeric) < 1e-5
    nonzero = analytic != 0
    np.testing.assert_allclose(analytic[nonzero], numeric[nonzero], rtol=1e-5)


def test_gradient_with_partial_box_region(rng):
    mask = rng.uniform(0.05, 0.95, (6, 7))
    region = np.zeros((6, 7))
    region[1:4, 2:6] = 1.0
    analytic = box_projection_gradient(mask, region, EPS)
    numeric = central_differences(lambda m: box_projection_loss(m, region, EPS), mask, 1e-6)
    assert relative_error(analytic, numeric) < 1e-5
