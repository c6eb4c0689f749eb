import json
import os

import numpy as np
import pytest

from ultrawave.io import (MAGIC, atomic_write, decode_array, encode_array, load_signal, load_stft, read_json,
                          save_signal, save_stft, sidecar_path, signal_from_csv, signal_to_csv, write_json)
from ultrawave.signals import SampledSignal, WindowSpec, centered_grid, synth
from ultrawave.spectral import stft


def test_container_round_trip(tmp_path, rng):
    for grid in (centered_grid(64, 8), centered_grid(16, 4, 2)):
        f = SampledSignal(rng.standard_normal(grid.extent) + 1j * rng.standard_normal(grid.extent), grid,
                          "noise", {"k": 1})
        path = tmp_path / f"s{grid.dimension}.uwv"
        save_signal(f, path, {"note": np.float64(2.5)})
        g = load_signal(path)
        assert np.array_equal(g.values, f.values)
        assert g.grid == f.grid and g.name == "noise" and g.meta == {"k": 1}
        assert read_json(sidecar_path(path))["note"] == 2.5
        assert path.read_bytes()[:8] == MAGIC


def test_container_without_sidecar(tmp_path):
    f = synth("step", {}, centered_grid(64, 8))
    path = tmp_path / "a.uwv"
    save_signal(f, path)
    os.unlink(sidecar_path(path))
    assert np.array_equal(load_signal(path).values, f.values)


def test_bad_containers():
    raw = encode_array(np.ones(4), (0.0,), (1.0,))
    with pytest.raises(ValueError):
        decode_array(b"NOTMAGIC" + raw[8:])
    with pytest.raises(ValueError):
        decode_array(raw[:-1])
    with pytest.raises(ValueError):
        decode_array(b"x")
    with pytest.raises(ValueError):
        encode_array(np.ones(4), (0.0, 0.0), (1.0,))


def test_csv_round_trip():
    for grid in (centered_grid(32, 4), centered_grid(16, 2, 2)):
        f = synth("gaussian", {"sigma": 0.5}, grid)
        text = signal_to_csv(f)
        g = signal_from_csv(text)
        assert g.grid == f.grid
        assert np.array_equal(g.values, f.values)


def test_csv_size_limit():
    with pytest.raises(ValueError):
        signal_to_csv(synth("gaussian", {}, centered_grid(1 << 17, 64)))


def test_stft_round_trip(tmp_path):
    f = synth("step", {}, centered_grid(64, 8))
    V = stft(f, WindowSpec("gaussian", sigma=0.5), 4)
    path = tmp_path / "v.uwv"
    save_stft(V, path)
    W = load_stft(path)
    assert np.array_equal(W.values, V.values)
    assert W.window == V.window and W.stride == 4
    assert all(np.allclose(a, b) for a, b in zip(W.positions, V.positions))


def test_atomic_write_leaves_no_temp(tmp_path):
    p = tmp_path / "sub" / "x.json"
    write_json(p, {"a": 1})
    atomic_write(p, "replaced")
    assert p.read_text() == "replaced"
    assert os.listdir(p.parent) == ["x.json"]


def test_atomic_write_failure_keeps_old(tmp_path):
    p = tmp_path / "x.json"
    write_json(p, {"a": 1})
    with pytest.raises(ValueError):
        write_json(p, {"a": float("nan")})
    assert json.loads(p.read_text()) == {"a": 1}
    assert os.listdir(tmp_path) == ["x.json"]
