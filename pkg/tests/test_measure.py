import json

import numpy as np
import pytest

from gasketgrad.measure import MeasureError, MeasureSpec, parse_weights


def test_standard_measure_identity():
    for N in range(3, 9):
        spec = MeasureSpec.standard(N)
        assert spec.resistance_factor * spec.weights[0] * (N + 2) == pytest.approx(1.0, abs=1e-15)


def test_two_level_resistance():
    spec = MeasureSpec.two_level(3, 0.10, 0.7 / 6)
    assert spec.resistance_factor == pytest.approx((3 / 5) ** 2)
    assert spec.weight_of((1, 1)) == 0.10
    assert spec.weight_of((0, 2)) == pytest.approx(0.7 / 6)


@pytest.mark.parametrize("weights", [(0.5, 0.5, 0.0), (0.5, 0.6, -0.1), (0.4, 0.4, 0.4)])
def test_invalid_weights(weights):
    with pytest.raises(MeasureError):
        MeasureSpec(3, 1, weights)


def test_cell_measure_partial_block():
    spec = MeasureSpec.two_level(3, 0.10, 0.7 / 6)
    assert spec.cell_measure((0, 1, 2, 2)) == pytest.approx((0.7 / 6) * 0.10)
    # trailing letter: sum over its completions
    assert spec.cell_measure((1,)) == pytest.approx(0.10 + 2 * 0.7 / 6)
    assert spec.cell_measure(()) == 1.0


def test_cell_measures_sum_to_one():
    spec = MeasureSpec.two_level(3, 0.10, 0.7 / 6)
    cm = spec.cell_measures(4)
    assert cm.sum() == pytest.approx(1.0, abs=1e-12)
    assert cm[0] == pytest.approx(0.01)  # word 0000
    with pytest.raises(MeasureError):
        spec.cell_measures(3)


def test_parse_weights_forms():
    assert parse_weights("standard", 4).weights == (0.25,) * 4
    assert parse_weights("uniform", 3).block_len == 2
    assert parse_weights("uneven", 3).weight_of((2, 2)) == 0.10
    spec = parse_weights(json.dumps({"0": 0.2, "1": 0.3, "2": 0.5}), 3)
    assert spec.weights == (0.2, 0.3, 0.5)
    with pytest.raises(MeasureError):
        parse_weights(json.dumps({"0": 0.5, "1": 0.5}), 3)
    with pytest.raises(MeasureError):
        parse_weights("uneven", 4)


def test_letter_marginals():
    spec = MeasureSpec.two_level(3, 0.10, 0.7 / 6)
    np.testing.assert_allclose(spec.letter_marginals(), [1 / 3] * 3)
