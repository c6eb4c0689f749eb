import math

import numpy as np
import pytest

from ultrawave.sequences import AssociatedFunction, gevrey_sequence, product_sequence
from ultrawave.weights import (assoc_weight, beurling_domar_check, composite_weight, custom_weight,
                               exp_power_weight, moderate_check, polynomial_weight, submultiplicative_check,
                               weight_from_dict)

GRID = np.linspace(-10, 10, 81)


def test_exponential_is_submultiplicative():
    rep = submultiplicative_check(exp_power_weight(1.0, 1.0), GRID)
    assert rep.holds and rep.witness_C <= 1.0 + 1e-12
    assert 0 < rep.skipped_fraction < 1


def test_polynomial_not_submultiplicative_but_moderate():
    v = polynomial_weight(2.0)
    assert not submultiplicative_check(v, GRID).holds
    rep = moderate_check(v, v, GRID)
    assert rep.holds and rep.witness_C <= 2.0


def test_composite_example_small_constant():
    rep = submultiplicative_check(composite_weight(1.0, 0.5, 1.0, 1.0), GRID)
    assert rep.witness_C <= 2.0


def test_self_moderate_bounded_by_submultiplicative_ratio():
    v = exp_power_weight(0.7, 2.0)
    assert moderate_check(v, v, GRID).witness_C <= submultiplicative_check(v, GRID).witness_C + 1e-12


def test_assoc_weight_moderate():
    w = assoc_weight(gevrey_sequence(2.0), 1.0)
    rep = moderate_check(w, w, GRID)
    assert rep.holds and math.isfinite(rep.witness_C)


def test_reciprocal_polynomial_moderate():
    rep = moderate_check(polynomial_weight(-2.0), polynomial_weight(2.0), GRID)
    assert rep.holds and rep.witness_C <= 2.0


def test_reciprocal_inherits_moderateness():
    v = polynomial_weight(3.0)
    om = composite_weight(0.2, 0.5, 1.0, 0.0)
    assert moderate_check(om, v, GRID).holds
    assert moderate_check(om.reciprocal(), v, GRID).holds


def test_moderate_dimension_mismatch():
    with pytest.raises(ValueError):
        moderate_check(polynomial_weight(1, 1), polynomial_weight(1, 2), GRID)


def test_empty_pair_set():
    with pytest.raises(ValueError):
        submultiplicative_check(polynomial_weight(1), np.array([5.0, 7.0]))


def test_two_dimensional_grid():
    k = np.arange(-3, 4, dtype=float)
    pts = np.stack(np.meshgrid(k, k, indexing="ij"), axis=-1).reshape(-1, 2)
    rep = submultiplicative_check(exp_power_weight(1.0, 1.0, 2), pts)
    assert rep.holds


@pytest.mark.parametrize("w,verdict", [
    (exp_power_weight(1.0, 2.0), "converges"),
    (exp_power_weight(1.0, 1.0), "diverges"),
    (polynomial_weight(3.0), "converges"),
])
def test_beurling_domar(w, verdict):
    assert beurling_domar_check(w, [1.0, 2.5], 1000).verdict == verdict


def test_beurling_domar_needs_terms():
    with pytest.raises(ValueError):
        beurling_domar_check(polynomial_weight(1.0), [1.0], 50)


def test_assoc_weight_values():
    with pytest.raises(ValueError):
        assoc_weight(gevrey_sequence(2.0), 0.0)
    w = assoc_weight(product_sequence(np.arange(1, 201)), 1.0)
    assert float(w.eval(10.0)) == pytest.approx(2.75e3, rel=0.01)
    assert float(w.log_eval(0.0)) == 0.0


def test_assoc_weight_asymptotics():
    s, N = 2.0, 1.5
    w = assoc_weight(gevrey_sequence(s), N)
    r = np.array([1e4, 1e6])
    ratio = w.log_radial(r) / (N * s * r ** (1 / s))
    assert np.all(np.abs(ratio - 1) < 0.05)


def test_assoc_weight_monotone_in_N(rng):
    xi = rng.uniform(0, 500, 200)
    a = assoc_weight(gevrey_sequence(2.0), 1.0).log_eval(xi)
    b = assoc_weight(gevrey_sequence(2.0), 2.0).log_eval(xi)
    assert np.all(a <= b)


def test_positivity_and_finiteness():
    pts = np.linspace(-1e3, 1e3, 101)
    for w in (polynomial_weight(2), exp_power_weight(3, 1.5), composite_weight(1, .5, 1, 1),
              assoc_weight(gevrey_sequence(1.5), 3), custom_weight(lambda r: np.sqrt(r))):
        v = w.log_eval(pts)
        assert np.all(np.isfinite(v))


def test_weight_json_round_trip():
    for w in (polynomial_weight(2.0), exp_power_weight(1.0, 2.0), composite_weight(1, .5, 1, 1),
              assoc_weight(gevrey_sequence(2.0), 2.0), polynomial_weight(2.0).reciprocal()):
        back = weight_from_dict(w.to_dict())
        r = np.linspace(0, 50, 11)
        assert np.allclose(back.log_radial(r), w.log_radial(r))


def test_fit_slope():
    assert assoc_weight(AssociatedFunction(gevrey_sequence(2.0)), 3.0).fit_slope() == 3.0
    assert polynomial_weight(1.0).fit_slope() is None
