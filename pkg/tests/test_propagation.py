import copy

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ultrawave.propagation import (conv_wf_check, convolve, crop, embed, embedding_check, pad, padded_grid,
                                   support_points)
from ultrawave.sequences import gevrey_sequence
from ultrawave.signals import SampledSignal, centered_grid, synth
from ultrawave.spectral import dft
from ultrawave.verify import battery_grid
from ultrawave.wavefront import wf_estimate
from ultrawave.weights import assoc_weight, polynomial_weight

G = centered_grid(128, 16)


def _random(seed, grid=G, width=3.0):
    r = np.random.default_rng(seed)
    v = r.standard_normal(grid.extent) + 1j * r.standard_normal(grid.extent)
    x = grid.coords()
    mask = sum(c ** 2 for c in x) <= width ** 2
    return SampledSignal(v * mask, grid)


def test_delta_is_identity():
    f = synth("gaussian", {"sigma": 0.5}, G)
    out = convolve(synth("delta", {"x0": 0.0}, G), f, same_grid=True)
    assert np.allclose(out.values, f.values, atol=1e-12)


def test_delta_shift():
    f = synth("gaussian", {"sigma": 0.5}, G)
    out = convolve(synth("delta", {"x0": 1.0}, G), f, same_grid=True)
    ref = synth("gaussian", {"sigma": 0.5, "center": 1.0}, G)
    assert np.allclose(out.values, ref.values, atol=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 1000), st.floats(-3, 3), st.floats(-3, 3))
def test_commutative_and_bilinear(seed, a, b):
    f, g, h = _random(seed), _random(seed + 1), _random(seed + 2)
    assert np.allclose(convolve(f, g).values, convolve(g, f).values, atol=1e-10)
    lhs = convolve(f * a + g * b, h).values
    rhs = a * convolve(f, h).values + b * convolve(g, h).values
    assert np.allclose(lhs, rhs, atol=1e-9)


def test_fourier_product():
    f, g = _random(5, width=2.0), _random(6, width=2.0)
    c = convolve(f, g)
    prod = dft(pad_to(f, c.grid)).values * dft(pad_to(g, c.grid)).values
    assert np.allclose(dft(c).values, prod, atol=1e-10)


def pad_to(f, grid):
    return embed(f, grid)


def test_2d_convolution_matches_direct():
    g = centered_grid(16, 4, 2)
    f1, f2 = _random(1, g, 1.0), _random(2, g, 1.0)
    c = convolve(f1, f2)
    # direct sum at one output node
    assert c.grid == padded_grid(g)
    from scipy.signal import convolve as sconv
    ref = sconv(f1.values, f2.values) * g.cell
    assert np.allclose(c.values[:31, :31], ref, atol=1e-12)


def test_support_overflow():
    f = synth("step", {}, G)
    with pytest.raises(ValueError, match="support overflow"):
        convolve(f, f, same_grid=True)


def test_grid_mismatch():
    with pytest.raises(ValueError):
        convolve(synth("gaussian", {}, G), synth("gaussian", {}, centered_grid(128, 8)))


def test_pad_embed_crop():
    f = synth("gaussian", {"sigma": 0.5}, G)
    p = pad(f)
    assert p.extent == (256,) and np.array_equal(p.values[:128], f.values)
    e = embed(f, padded_grid(G))
    assert np.allclose(crop(e, G).values, f.values)
    with pytest.raises(ValueError):
        embed(f, centered_grid(64, 8))
    with pytest.raises(ValueError):
        embed(f, centered_grid(256, 30))


def test_support_points():
    f = synth("gevrey_bump", {"R": 1.0}, G)
    pts = support_points(f)
    assert np.all(np.abs(pts) < 1.0)
    assert support_points(SampledSignal(np.zeros(128), G)).shape == (0, 1)


@pytest.fixture(scope="module")
def delta_step():
    f2 = synth("step", {}, battery_grid(1))
    f1 = synth("delta", {"x0": 1.0}, f2.grid)
    conv = convolve(f1, f2)
    wf2 = wf_estimate(embed(f2, conv.grid))
    wf12 = wf_estimate(conv)
    return f1, f2, wf2, wf12


def test_conv_inclusion_holds(delta_step):
    f1, f2, wf2, wf12 = delta_step
    v = conv_wf_check(f1, f2, wf2, wf12)
    assert v.holds and v.n_checked > 0
    xs = [p[0] for p in wf12.singular_positions()]
    assert min(xs) <= 1.0 <= max(xs)


def test_conv_inclusion_negative_control(delta_step):
    f1, f2, wf2, wf12 = delta_step
    bad = copy.copy(wf12)
    bad.singular = wf12.singular.copy()
    far = int(np.argmin(np.abs(wf12.coords[0] + 20.0)))
    bad.singular[far, 0] = True
    v = conv_wf_check(f1, f2, wf2, bad)
    assert not v.holds
    assert any(abs(c["pos"][0] - wf12.coords[0][far]) < 1e-9 for c in v.violating)


def test_mollified_step_is_smooth():
    step = synth("step", {}, battery_grid(1))
    moll = synth("gevrey_bump", {"s": 1.5, "R": 4.0, "center": [0.0]}, step.grid)
    assert wf_estimate(convolve(moll, step)).is_empty()


def test_embedding_check():
    f = synth("step", {}, battery_grid(1))
    seq = gevrey_sequence(2.0)
    rep = embedding_check(f, (2.0, assoc_weight(seq, 2.0)), (4.0, assoc_weight(seq, 1.0)))
    assert rep.holds and rep.singular_2 <= rep.singular_1
    with pytest.raises(ValueError):
        embedding_check(f, (4.0, assoc_weight(seq, 1.0)), (2.0, assoc_weight(seq, 1.0)))
    with pytest.raises(ValueError):
        embedding_check(f, (1.0, polynomial_weight(1.0)), (2.0, assoc_weight(seq, 20.0)))
