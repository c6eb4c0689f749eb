import math

import numpy as np
import pytest
from scipy.special import gammaln

from ultrawave.sequences import (AssociatedFunction, DefiningSequence, LemmaViolation, TruncationError,
                                 assoc_eval, check_conditions, fine_tuned_sequence, gevrey_sequence,
                                 growth_exponent, product_sequence, sequence_from_dict, sequence_from_json,
                                 verify_assoc_lemma)


def brute_assoc(log_m, rho):
    p = np.arange(len(log_m))
    return max(0.0, float(np.max(p * math.log(rho) - log_m)))


def test_gevrey_rejects_quasianalytic():
    with pytest.raises(ValueError):
        gevrey_sequence(1.0)


def test_gevrey_values_by_hand():
    assert np.allclose(gevrey_sequence(2.0, 3).values, [1, 1, 4, 36])


def test_gevrey_m2_witness_near_four():
    rep = check_conditions(gevrey_sequence(2.0, 200))
    assert rep.m1 and rep.m2.holds
    assert rep.m2.H <= 4.0 and rep.m2.H == pytest.approx(4.0, abs=0.15)
    assert rep.m2.A == pytest.approx(1.0)
    assert rep.m3prime.holds is True


def test_m2_witness_is_admissible():
    seq = gevrey_sequence(2.0, 60)
    w = check_conditions(seq).m2
    lv = seq.log_values
    for n in range(1, 61):
        for p in range(n + 1):
            assert lv[n] - lv[p] - lv[n - p] <= math.log(w.A) + n * math.log(w.H) + 1e-9


def test_constant_sequence_diverges():
    rep = check_conditions(DefiningSequence(np.zeros(100)))
    assert rep.m3prime.holds is False
    assert rep.m3prime.partial_sum == pytest.approx(99.0)


def test_product_factorial():
    seq = product_sequence(np.arange(1, 30))
    assert np.allclose(seq.log_values, gammaln(np.arange(30) + 1.0))


def test_product_rejects_non_monotone():
    with pytest.raises(ValueError):
        product_sequence([1.0, 3.0, 2.0])


def test_fine_tuned_between_bounds():
    j = np.arange(1, 80)
    seq = fine_tuned_sequence(np.sqrt(j))
    half = 0.5 * gammaln(np.arange(80) + 1.0)
    full = gammaln(np.arange(80) + 1.0)
    assert np.all(seq.log_values >= half - 1e-12)
    assert np.all(seq.log_values <= full + 1e-9)


def test_log_factor_sequence_is_log_convex():
    seq = product_sequence(np.log(math.e + np.arange(1, 101)))
    assert check_conditions(seq).m1


def test_assoc_gevrey1_oracle():
    af = AssociatedFunction(product_sequence(np.arange(1, 201)))
    assert af(1.0) == 0.0
    log_m = gammaln(np.arange(201) + 1.0)
    assert af(10.0) == pytest.approx(brute_assoc(log_m, 10.0), abs=1e-12)
    assert af(10.0) == pytest.approx(7.92, abs=0.01)


def test_assoc_against_brute_force(rng):
    af = AssociatedFunction(gevrey_sequence(2.0, 512))
    lm = af.seq.log_values
    for rho in np.exp(rng.uniform(-3, 10, 50)):
        assert af(rho) == pytest.approx(brute_assoc(lm, rho), abs=1e-10)


def test_assoc_known_values():
    af = AssociatedFunction(gevrey_sequence(2.0))
    assert af(4.0) == pytest.approx(math.log(4.0), abs=1e-3)
    assert af(8.0) == pytest.approx(2.77, abs=0.01)


def test_assoc_rejects_nonpositive():
    af = AssociatedFunction(gevrey_sequence(2.0))
    with pytest.raises(ValueError):
        af.eval_many(np.array([0.0, 1.0]))


def test_truncation_error_on_finite_sequence():
    af = AssociatedFunction(DefiningSequence(np.array([0.0, 0.0, 0.5, 1.5]), "custom"))
    with pytest.raises(TruncationError):
        af(1e6)


def test_auto_extension_is_stable():
    small = AssociatedFunction(gevrey_sequence(2.0, 64))
    big = AssociatedFunction(gevrey_sequence(2.0, 4096))
    rho = np.geomspace(1.0, 1e5, 40)
    assert np.allclose(small.eval_many(rho), big.eval_many(rho), atol=1e-12, rtol=0)


def test_cache_and_assoc_eval():
    af = AssociatedFunction(gevrey_sequence(2.0))
    v = assoc_eval(af, 123.0)
    assert assoc_eval(af, 123.0) == v


@pytest.mark.parametrize("s", [1.5, 2.0, 3.0])
def test_growth_exponent(s):
    assert abs(growth_exponent(AssociatedFunction(gevrey_sequence(s))) - 1.0 / s) <= 0.05


def test_lemma_vanishing_region_equalities():
    af = AssociatedFunction(gevrey_sequence(2.0))
    rep = verify_assoc_lemma(af, np.geomspace(0.01, 0.49, 50), strict=True)
    assert rep.results["subadditivity"].violations == 0
    assert rep.results["doubling"].worst_slack == 0.0


def test_lemma_doubling_and_scaled_form_hold():
    af = AssociatedFunction(gevrey_sequence(2.0))
    rep = verify_assoc_lemma(af, np.geomspace(1e-2, 1e6, 1000), A=1.0, H=4.0, strict=False)
    assert rep.results["doubling"].violations == 0
    assert rep.results["subadditivity_scaled"].violations == 0
    for k, r in rep.results.items():
        if k.startswith(("dilation", "power")):
            assert math.isfinite(r.constants.get("C", r.constants.get("K_L")))


def test_literal_subadditivity_counterexample():
    # M(1) = 0 but M(2) = ln 2 for p!^2: the unscaled inequality cannot hold
    af = AssociatedFunction(gevrey_sequence(2.0))
    assert af(2.0) > af(1.0) + af(1.0)
    with pytest.raises(LemmaViolation):
        verify_assoc_lemma(af, np.array([1.0, 1.0]), n=2, n_tuples=4, strict=True)


def test_sequence_json_round_trip():
    seq = gevrey_sequence(1.5, 128)
    back = sequence_from_json(seq.to_json())
    assert np.allclose(back.log_values, seq.log_values)
    prod = sequence_from_dict({"kind": "product", "factors": [1, 2, 3, 4]})
    assert prod.p_max == 4


def test_sequence_invariants():
    with pytest.raises(ValueError):
        DefiningSequence(np.array([0.1, 0.0, 0.0]))
    with pytest.raises(ValueError):
        DefiningSequence(np.array([0.0, np.inf, 1.0]))
