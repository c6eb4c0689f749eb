import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ultrawave.sequences import gevrey_sequence
from ultrawave.signals import SampledSignal, WindowSpec, centered_grid, synth
from ultrawave.spectral import (adjoint_stft, dft, idft, invert_stft, linear_fit, paley_wiener_fit, stft,
                                stft_growth_probe, stft_profile, tail_envelope, window_inner, window_signal)

G = centered_grid(128, 16)
GAUSS = WindowSpec("gaussian", sigma=0.5)
BUMP = WindowSpec("gevrey_bump", s=2.0, R=2.0)


def _random(rng, grid):
    v = rng.standard_normal(grid.extent) + 1j * rng.standard_normal(grid.extent)
    return SampledSignal(v, grid)


def test_gaussian_transform_matches_closed_form():
    g = centered_grid(512, 32)
    f = synth("gaussian", {"sigma": 1.0}, g)
    F = dft(f)
    xi = F.freq.axis(0)
    exact = np.sqrt(2 * np.pi) * np.exp(-2 * np.pi ** 2 * xi ** 2)
    assert np.max(np.abs(F.values - exact)) < 1e-10


def test_sign_convention_shifted_gaussian():
    g = centered_grid(512, 32)
    f = synth("gaussian", {"sigma": 1.0, "center": 2.0}, g)
    xi = dft(f).freq.axis(0)
    exact = np.sqrt(2 * np.pi) * np.exp(-2 * np.pi ** 2 * xi ** 2) * np.exp(-2j * np.pi * 2.0 * xi)
    assert np.max(np.abs(dft(f).values - exact)) < 1e-10


def test_parseval_and_roundtrip(rng):
    for grid in (G, centered_grid(32, 4, 2)):
        f = _random(rng, grid)
        F = dft(f)
        assert F.norm() == pytest.approx(f.norm(), rel=1e-12)
        assert np.max(np.abs(idft(F).values - f.values)) < 1e-12


def test_delta_transform_is_flat():
    F = dft(synth("delta", {}, G))
    assert np.allclose(np.abs(F.values), 1.0)


def test_translation_covariance(rng):
    f = synth("gaussian", {"sigma": 0.5}, G)
    from ultrawave.signals import translate
    a = 8 * G.spacing[0]
    lhs = dft(translate(f, a)).values
    xi = dft(f).freq.axis(0)
    assert np.allclose(lhs, np.exp(-2j * np.pi * a * xi) * dft(f).values, atol=1e-12)


def test_linear_fit():
    x = np.arange(10.0)
    s, c, r2 = linear_fit(x, 3 - 2 * x)
    assert (s, c, r2) == pytest.approx((-2, 3, 1))
    with pytest.raises(ValueError):
        linear_fit(np.ones(4), np.arange(4.0))


def test_tail_envelope_monotone(rng):
    r = rng.uniform(0, 10, 300)
    radii, env = tail_envelope(r, rng.random(300))
    assert np.all(np.diff(env) <= 0)
    assert np.all(np.diff(radii) > 0)


def test_paley_wiener_fit_bump_vs_step():
    g = centered_grid(4096, 2.125 * 64)
    seq = gevrey_sequence(2.0)
    bump = paley_wiener_fit(dft(synth("gevrey_bump", {"s": 2.0, "R": 1.0}, g)), seq)
    step = paley_wiener_fit(dft(synth("step", {}, g)), seq)
    assert bump.h > 0.5 and bump.r2 > 0.9
    assert step.h < bump.h / 10


def test_paley_wiener_fit_zero_signal():
    with pytest.raises(ValueError):
        paley_wiener_fit(dft(SampledSignal(np.zeros(128), G)), gevrey_sequence(2.0))


def test_stft_moyal(rng):
    f = _random(rng, G)
    for w in (GAUSS, BUMP):
        V = stft(f, w)
        gnorm = window_signal(w, G).norm()
        assert V.norm() == pytest.approx(f.norm() * gnorm, rel=1e-10)


@pytest.mark.parametrize("g,psi", [(GAUSS, GAUSS), (GAUSS, BUMP), (BUMP, WindowSpec("gaussian", sigma=1.0))])
def test_stft_inversion(rng, g, psi):
    f = _random(rng, G)
    V = stft(f, psi)
    rec = invert_stft(V, g)
    assert np.max(np.abs(rec.values - f.values)) < 1e-10 * np.max(np.abs(f.values))


def test_adjoint_identity(rng):
    f = _random(rng, G)
    V = stft(f, GAUSS, 2)
    F = stft(_random(rng, G), GAUSS, 2)
    lhs = np.sum(V.values * np.conj(F.values)) * V.position_cell * V.freq.cell
    back = adjoint_stft(F, GAUSS)
    rhs = np.sum(f.values * np.conj(back.values)) * G.cell
    assert lhs == pytest.approx(rhs, rel=1e-10)


def test_cauchy_schwarz(rng):
    f = _random(rng, G)
    V = stft(f, BUMP)
    assert np.max(np.abs(V.values)) <= f.norm() * window_signal(BUMP, G).norm() * (1 + 1e-12)


def test_window_errors():
    f = synth("gaussian", {}, G)
    with pytest.raises(ValueError):
        stft(f, WindowSpec("gevrey_bump", s=2.0, R=10.0))
    with pytest.raises(ValueError):
        stft(f, GAUSS, stride=3)


def test_disjoint_windows_rejected():
    g = centered_grid(128, 16)
    psi = WindowSpec("gaussian", sigma=0.1)
    V = stft(synth("gaussian", {}, g), psi)
    far = WindowSpec("gevrey_bump", s=2.0, R=0.5, center=(5.0,))
    assert window_inner(far, psi, g) == 0
    with pytest.raises(ValueError):
        invert_stft(V, far)


@settings(max_examples=10, deadline=None)
@given(st.sampled_from([1, 2, 4, 8]), st.sampled_from([1.0, 2.0, np.inf]))
def test_stft_profile_matches_full(stride, p):
    rng = np.random.default_rng(stride)
    f = _random(rng, centered_grid(64, 8))
    w = WindowSpec("gaussian", sigma=0.4)
    V = stft(f, w, stride)
    a = np.abs(V.values)
    if np.isinf(p):
        ref = a.max(axis=0)
    else:
        ref = (np.sum(a ** p, axis=0) * V.position_cell) ** (1 / p)
    prof = stft_profile(f, w, stride, p)
    assert np.allclose(np.abs(prof.values), ref, rtol=1e-10)


def test_growth_probe():
    g = centered_grid(256, 16)
    seq = gevrey_sequence(2.0)
    bump = synth("gevrey_bump", {"R": 2.0}, g)
    pb = stft_growth_probe(stft(bump, BUMP, 4), seq, bump)
    assert pb.h_space > 0 and pb.support_ok is True
    d = synth("delta", {}, g)
    pd = stft_growth_probe(stft(d, GAUSS, 4), seq)
    assert abs(pd.eps_freq) < 1e-8
