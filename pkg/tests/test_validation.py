import numpy as np
import pytest

from routechoice.network import NetworkError
from routechoice.validation import (check_probability_vector, check_weight_set,
                                    check_weight_vector)


def test_weight_vector_clamps_roundoff():
    p = check_weight_vector([1 + 1e-13, -1e-13, 0.0])
    assert p.min() >= 0 and p.sum() == 1.0


@pytest.mark.parametrize("p", [[0.5, 0.6, 0.0], [1.5, -0.5, 0.0], [np.nan, 1.0, 0.0]])
def test_weight_vector_off_simplex(p):
    with pytest.raises(ValueError):
        check_weight_vector(p)


def test_weight_vector_dimension():
    with pytest.raises(NetworkError):
        check_weight_vector([0.5, 0.5], r=3)


def test_weight_set_shapes():
    assert check_weight_set([1.0, 0.0]).shape == (1, 2)
    with pytest.raises(ValueError):
        check_weight_set(np.empty((0, 3)))


def test_probability_vector():
    check_probability_vector([0.25, 0.75], 2)
    with pytest.raises(ValueError):
        check_probability_vector([0.5, 0.6], 2)
    with pytest.raises(ValueError):
        check_probability_vector([1.0], 2)
