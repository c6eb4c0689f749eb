import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ultrawave.cones import Cone
from ultrawave.sequences import gevrey_sequence
from ultrawave.signals import SampledSignal, WindowSpec, centered_grid, gevrey_bump, synth
from ultrawave.spectral import dft, stft, window_signal
from ultrawave.verify import FAMILY, battery_grid, truth_match
from ultrawave.wavefront import (ConeSeminormParams, WFConfig, close_positions, config_from_dict,
                                 directional_decay_fit, fl_cone_seminorm, membership_iff_empty, mod_cone_seminorm,
                                 report_from_dict, reweight, thread_count, wf_estimate, wf_family,
                                 wf_gevrey_estimate, wf_weight_family)
from ultrawave.weights import assoc_weight, polynomial_weight

G = centered_grid(256, 16)
SEQ = gevrey_sequence(2.0)


def _random(seed, grid=G):
    r = np.random.default_rng(seed)
    return SampledSignal(r.standard_normal(grid.extent) + 1j * r.standard_normal(grid.extent), grid)


# -- semi-norms -------------------------------------------------------------


def test_delta_fl_seminorm_is_one():
    d = synth("delta", {}, G)
    val = fl_cone_seminorm(d, ConeSeminormParams(math.inf, None, Cone((1.0,)), (0.5, 4.0)))
    assert val == pytest.approx(1.0)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.01, 100.0), st.sampled_from([1.0, 2.0, math.inf]))
def test_fl_seminorm_axioms(seed, c, q):
    f, g = _random(seed), _random(seed + 1)
    prm = ConeSeminormParams(q, polynomial_weight(1.0), Cone((-1.0,)), (0.5, 6.0))
    nf, ng = fl_cone_seminorm(f, prm), fl_cone_seminorm(g, prm)
    assert nf >= 0
    assert fl_cone_seminorm(f * c, prm) == pytest.approx(c * nf, rel=1e-10)
    assert fl_cone_seminorm(f + g, prm) <= (nf + ng) * (1 + 1e-12)


def test_seminorm_parameter_errors():
    with pytest.raises(ValueError):
        ConeSeminormParams(0.5, None, None, None)
    with pytest.raises(ValueError):
        ConeSeminormParams(2.0, None, None, (2.0, 1.0))
    with pytest.raises(ValueError):
        fl_cone_seminorm(_random(0), ConeSeminormParams(2.0, None, None, (1.0, 1e3)))


def test_mod_seminorm_moyal():
    f = _random(3, centered_grid(128, 16))
    w = WindowSpec("gaussian", sigma=0.5)
    val = mod_cone_seminorm(f, w, 2.0, 2.0, None, None, None)
    assert val == pytest.approx(f.norm() * window_signal(w, f.grid).norm(), rel=1e-10)


def test_mod_seminorm_homogeneous_and_positive():
    f = _random(4, centered_grid(128, 16))
    w = WindowSpec("gevrey_bump", s=2.0, R=2.0)
    cone = Cone((1.0,))
    a = mod_cone_seminorm(f, w, 2.0, math.inf, polynomial_weight(2.0), cone, (0.5, 3.0), stride=4)
    b = mod_cone_seminorm(f * 3.0, w, 2.0, math.inf, polynomial_weight(2.0), cone, (0.5, 3.0), stride=4)
    assert a > 0 and b == pytest.approx(3 * a)
    with pytest.raises(ValueError):
        mod_cone_seminorm(f, w, 0.5, 2.0, None, None, None)


# -- decay fits -------------------------------------------------------------


def test_decay_fit_step_vs_gaussian():
    g = battery_grid(1)
    step = directional_decay_fit(dft(synth("step", {}, g)), Cone((1.0,)), SEQ)
    gauss = directional_decay_fit(dft(synth("gaussian", {"sigma": 1.0}, g)), Cone((1.0,)), SEQ)
    assert step.valid and step.status == "ok" and step.r2 > 0.8
    assert gauss.tau == -math.inf or gauss.tau < step.tau
    assert gauss.status in ("underflow", "zero", "ok")


def test_decay_fit_zero_and_stft():
    g = centered_grid(128, 16)
    z = directional_decay_fit(dft(SampledSignal(np.zeros(128), g)), None, SEQ)
    assert z.status in ("zero", "underflow") and z.tau == -math.inf
    V = stft(synth("step", {}, g), WindowSpec("gaussian", sigma=0.5), 4)
    fit = directional_decay_fit(V, Cone((1.0,)), SEQ, p=2.0)
    assert fit.valid


# -- configuration ----------------------------------------------------------


def test_config_validation_and_round_trip():
    cfg = WFConfig(q=2.0, window=WindowSpec("gaussian", sigma=0.3))
    back = config_from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert back.q == 2.0 and back.window == cfg.window
    for bad in ({"threshold": 0.1}, {"annulus": (0.5, 0.2)}, {"q": 0.5}, {"position_stride": 0}):
        with pytest.raises(ValueError):
            WFConfig(**bad).validate(1)
    with pytest.raises(ValueError):
        config_from_dict({"bogus": 1})


def test_thread_count(monkeypatch):
    monkeypatch.setenv("ULTRAWAVE_THREADS", "3")
    assert thread_count() == 3
    assert thread_count(2) == 2
    monkeypatch.setenv("ULTRAWAVE_THREADS", "junk")
    assert thread_count() == 1


def test_closure_pass():
    s = np.zeros((7, 2), dtype=bool)
    s[1, 0] = s[3, 0] = s[6, 0] = True
    out, flipped = close_positions(s)
    assert out[1:4, 0].all() and not out[4:6, 0].any() and not out[:, 1].any()
    assert flipped == [(2, 0)]


# -- estimator on the battery ----------------------------------------------


@pytest.mark.parametrize("name", ["delta", "step", "gaussian"])
def test_fl_battery_1d(battery, name):
    rep = battery.report(name, "FL")
    ok, info = truth_match(rep, battery.signal(name))
    assert ok, info
    assert rep.failure_fraction() <= 0.1


def test_gaussian_empty(battery):
    assert battery.report("gaussian", "FL").is_empty()
    assert battery.report("gaussian", "MOD").is_empty()


def test_step_directions(battery):
    rep = battery.report("step", "FL")
    assert rep.singular_directions() == {0, 1}
    xs = [p[0] for p in rep.singular_positions()]
    assert min(xs) <= 0 <= max(xs)


def test_mod_step(battery):
    ok, info = truth_match(battery.report("step", "MOD"), battery.signal("step"))
    assert ok, info


def test_threads_deterministic():
    f = synth("step", {}, centered_grid(1024, 32))
    a = wf_estimate(f, threads=1)
    b = wf_estimate(f, threads=4)
    assert np.array_equal(a.singular, b.singular)
    assert np.array_equal(np.nan_to_num(a.tau), np.nan_to_num(b.tau))


def test_report_round_trip(battery):
    rep = battery.report("step", "FL")
    d = json.loads(rep.to_json())
    back = report_from_dict(d)
    assert np.array_equal(back.singular, rep.singular)
    assert np.allclose(np.nan_to_num(back.tau), np.nan_to_num(rep.tau))
    assert d["summary"]["n_singular"] == int(rep.singular.sum())
    lines = rep.to_csv().strip().splitlines()
    assert lines[0] == "x0,direction_angle,singular,tau"
    assert len(lines) == rep.singular.size + 1


def test_estimate_rejects_gevrey_kind():
    with pytest.raises(ValueError):
        wf_estimate(synth("step", {}, G), "GEVREY")


# -- weight families --------------------------------------------------------


def test_reweight_monotone(battery):
    rep = battery.report("step", "FL")
    prev = None
    for N in (0.5, 1.0, 2.0, 4.0):
        cur = reweight(rep, N).singular
        if prev is not None:
            assert np.all(prev <= cur)
        prev = cur


def test_family_of_one_equals_member(battery):
    f = battery.signal("step")
    members = wf_weight_family(f, [2.0])
    inf_r, sup_r = wf_family(members)
    assert np.array_equal(inf_r.singular, members[0].singular)
    assert np.array_equal(sup_r.singular, members[0].singular)


def test_family_step(battery):
    f = battery.signal("step")
    inf_r, sup_r = wf_family(wf_weight_family(f, FAMILY))
    assert np.all(inf_r.singular <= sup_r.singular)
    assert truth_match(inf_r, f)[0] and truth_match(sup_r, f)[0]


def test_family_errors():
    with pytest.raises(ValueError):
        wf_family([])
    with pytest.raises(ValueError):
        wf_weight_family(synth("step", {}, G), [0.0, 1.0])


# -- Gevrey estimator and membership ----------------------------------------


def test_gevrey_step_singular():
    f = synth("step", {}, battery_grid(1))
    rep = wf_gevrey_estimate(f, 2.0)
    assert not rep.is_empty()
    assert rep.extra["roumieu"].any()
    assert np.all(rep.extra["roumieu"] <= rep.singular)


def test_gevrey_bump_small_family():
    f = gevrey_bump(2.0, 4.0, battery_grid(1))
    assert wf_gevrey_estimate(f, 2.0, (0.1, 0.2)).is_empty()


def test_gevrey_errors():
    with pytest.raises(ValueError):
        wf_gevrey_estimate(synth("step", {}, G), 1.0)
    with pytest.raises(ValueError):
        wf_gevrey_estimate(synth("step", {}, G), 2.0, ())


@pytest.mark.parametrize("name,params,expect", [
    ("gaussian", {"sigma": 1.0}, (True, True)),
    ("step", {}, (False, False)),
])
def test_membership_iff_empty(name, params, expect):
    f = synth(name, params, battery_grid(1))
    assert membership_iff_empty(f) == expect


def test_membership_bump_small_weight():
    f = gevrey_bump(2.0, 4.0, battery_grid(1))
    w = assoc_weight(SEQ, 0.2)
    assert membership_iff_empty(f, weight=w) == (True, True)
