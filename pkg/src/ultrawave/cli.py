"""Command-line front end: ``ultrawave {synth,analyze,verify,compare}``.

Exit codes: 0 ok, 1 configuration or input error, 2 degraded run (more than
10% of cells failed to fit), 3 verification failure.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .io import atomic_write, load_signal, read_json, save_signal, signal_to_csv, write_json
from .sequences import gevrey_sequence
from .signals import WindowSpec, centered_grid, synth
from .verify import BATTERY_DX, SUITES, run_suite
from .wavefront import (WFConfig, report_from_dict, wf_estimate, wf_family, wf_gevrey_estimate,
                        wf_weight_family)
from .weights import assoc_weight

EXIT_OK, EXIT_CONFIG, EXIT_DEGRADED, EXIT_VERIFY = 0, 1, 2, 3
DEGRADED_FRACTION = 0.10
ESTIMATORS = ("FL", "MOD", "GEVREY", "FAMILY")

DEFAULTS = {
    "synth": {"name": None, "n": 4096, "dim": None, "dx": BATTERY_DX, "x0": None, "sigma": None,
              "s": None, "r": None, "c": None, "axis": None, "a": None, "center": None,
              "out": None, "csv": None},
    "analyze": {"input": None, "estimator": "FL", "seq_s": 2.0, "N": 1.0, "family": "1,2,4",
                "family_type": "inf", "gevrey_s": 2.0, "q": "inf", "p": 2.0, "window": "gaussian",
                "window_sigma": None, "window_s": 1.5, "window_r": None, "n_dir": 16, "overlap": 1.5,
                "r_min": 0.125, "r_max": 0.5, "threshold": -0.05, "stride": 8, "cutoff_radius": 68,
                "fit_ratio": 3.0, "mod_stride": 16, "smoothing": True, "out": None, "csv": None},
    "verify": {"suite": "all", "out": None},
    "compare": {"report1": None, "report2": None, "out": None},
}


class ConfigError(ValueError):
    pass


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ultrawave", description="Wave-front set estimation toolkit")
    ap.add_argument("--version", action="version", version=f"ultrawave {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    S = argparse.SUPPRESS

    def cmd(name, help_):
        p = sub.add_parser(name, help=help_, argument_default=S)
        p.add_argument("--config", help="JSON file with option values; flags override it")
        return p

    p = cmd("synth", "write a battery signal")
    p.add_argument("--name")
    p.add_argument("--n", type=int, help="samples per axis (power of two)")
    p.add_argument("--dim", type=int, choices=(1, 2))
    p.add_argument("--dx", type=float, help="sample spacing")
    p.add_argument("--x0", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--s", type=float, help="Gevrey order of a bump")
    p.add_argument("--r", type=float, help="bump radius")
    p.add_argument("--c", type=float, help="feature line offset (ridge, halfplane)")
    p.add_argument("--axis", type=int)
    p.add_argument("--a", type=float, help="chirp rate")
    p.add_argument("--center", type=float, nargs="+")
    p.add_argument("--out")
    p.add_argument("--csv")

    p = cmd("analyze", "estimate the wave-front set of a signal file")
    p.add_argument("--input")
    p.add_argument("--estimator", type=str.upper)
    p.add_argument("--seq-s", dest="seq_s", type=float, help="Gevrey order of the defining sequence")
    p.add_argument("--N", type=float, help="weight exp(N M)")
    p.add_argument("--family", help="comma-separated N values (FAMILY / GEVREY)")
    p.add_argument("--family-type", dest="family_type", choices=("inf", "sup"))
    p.add_argument("--gevrey-s", dest="gevrey_s", type=float)
    p.add_argument("--q")
    p.add_argument("--p", type=float)
    p.add_argument("--window", choices=("gaussian", "bump"))
    p.add_argument("--window-sigma", dest="window_sigma", type=float)
    p.add_argument("--window-s", dest="window_s", type=float)
    p.add_argument("--window-r", dest="window_r", type=float)
    p.add_argument("--n-dir", dest="n_dir", type=int)
    p.add_argument("--overlap", type=float)
    p.add_argument("--r-min", dest="r_min", type=float, help="annulus start (fraction of Nyquist)")
    p.add_argument("--r-max", dest="r_max", type=float, help="annulus end (fraction of Nyquist)")
    p.add_argument("--threshold", type=float)
    p.add_argument("--stride", type=int)
    p.add_argument("--cutoff-radius", dest="cutoff_radius", type=int)
    p.add_argument("--fit-ratio", dest="fit_ratio", type=float)
    p.add_argument("--mod-stride", dest="mod_stride", type=int)
    p.add_argument("--no-smoothing", dest="smoothing", action="store_false")
    p.add_argument("--out")
    p.add_argument("--csv")

    p = cmd("verify", "run verification suites")
    p.add_argument("--suite", choices=SUITES)
    p.add_argument("--out")

    p = cmd("compare", "cell-wise diff of two reports")
    p.add_argument("report1", nargs="?")
    p.add_argument("report2", nargs="?")
    p.add_argument("--out")
    return ap


def resolve_config(command: str, args: dict) -> dict:
    """Built-in defaults, then the ``--config`` file, then explicit flags."""
    cfg = dict(DEFAULTS[command])
    path = args.pop("config", None)
    if path:
        try:
            data = read_json(path)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        data = {k.replace("-", "_"): v for k, v in data.items() if k != "command"}
        unknown = sorted(set(data) - set(cfg))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        cfg.update(data)
    cfg.update(args)
    cfg["command"] = command
    return cfg


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _emit(doc: dict, out: str | None):
    doc = {**doc, "created": _now()}
    if out:
        write_json(out, doc)
    else:
        sys.stdout.write(json.dumps(doc, indent=1, sort_keys=True) + "\n")


# ----------------------------------------------------------------------------
# commands


def cmd_synth(cfg: dict) -> int:
    name = cfg["name"]
    if not name:
        raise ConfigError("--name is required")
    key = name.replace("-", "_")
    dim = cfg["dim"] or (2 if key in ("ridge", "halfplane") else 1)
    n = int(cfg["n"])
    grid = centered_grid(n, n * float(cfg["dx"]), dim)
    params = {}
    for k_cli, k_sig in (("x0", "x0"), ("sigma", "sigma"), ("s", "s"), ("r", "R"), ("c", "c"),
                         ("axis", "axis"), ("a", "a"), ("center", "center")):
        if cfg[k_cli] is not None:
            params[k_sig] = cfg[k_cli]
    if "x0" in params and dim == 2:
        params["x0"] = [params["x0"]] * 2
    try:
        f = synth(key, params, grid)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    out = cfg["out"] or f"{key}.uwv"
    save_signal(f, out, {"config": cfg, "version": __version__})
    if cfg["csv"]:
        atomic_write(cfg["csv"], signal_to_csv(f))
    print(f"wrote {out}")
    return EXIT_OK


def _wf_config(cfg: dict, f) -> WFConfig:
    dx = f.spacing[0]
    R = int(cfg["cutoff_radius"])
    win = None
    if cfg["estimator"] == "MOD":
        if cfg["window"] == "bump":
            win = WindowSpec("gevrey_bump", s=float(cfg["window_s"]),
                             R=float(cfg["window_r"]) if cfg["window_r"] else R * dx)
        else:
            win = WindowSpec("gaussian", sigma=float(cfg["window_sigma"]) if cfg["window_sigma"] else R * dx / 4)
    q = math.inf if str(cfg["q"]).lower() in ("inf", "infinity") else float(cfg["q"])
    wc = WFConfig(kind="MOD" if cfg["estimator"] == "MOD" else "FL", q=q, p=float(cfg["p"]),
                  threshold=float(cfg["threshold"]), position_stride=int(cfg["stride"]), cutoff_radius=R,
                  window=win, mod_stride=int(cfg["mod_stride"]),
                  annulus=(float(cfg["r_min"]), float(cfg["r_max"])), n_dir=int(cfg["n_dir"]),
                  overlap=float(cfg["overlap"]), fit_ratio=float(cfg["fit_ratio"]),
                  smoothing=bool(cfg["smoothing"]))
    wc.validate(f.dimension)
    return wc


def _family(cfg: dict) -> list:
    try:
        vals = [float(v) for v in str(cfg["family"]).split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad family list {cfg['family']!r}") from exc
    if not vals or min(vals) <= 0:
        raise ConfigError("family values must be positive")
    return vals


def cmd_analyze(cfg: dict) -> int:
    if not cfg["input"]:
        raise ConfigError("--input is required")
    if cfg["estimator"] not in ESTIMATORS:
        raise ConfigError(f"estimator must be one of {', '.join(ESTIMATORS)}")
    try:
        f = load_signal(cfg["input"])
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot load signal: {exc}") from exc
    try:
        wc = _wf_config(cfg, f)
        seq = gevrey_sequence(float(cfg["seq_s"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    est = cfg["estimator"]
    if est == "GEVREY":
        rep = wf_gevrey_estimate(f, float(cfg["gevrey_s"]), _family(cfg), wc)
    elif est == "FAMILY":
        members = wf_weight_family(f, _family(cfg), wc.kind, seq, wc)
        inf_r, sup_r = wf_family(members)
        rep = inf_r if cfg["family_type"] == "inf" else sup_r
    else:
        if not float(cfg["N"]) > 0:
            raise ConfigError("N must be positive")
        rep = wf_estimate(f, wc.kind, seq, assoc_weight(seq, float(cfg["N"]), f.dimension), wc)
    doc = rep.to_dict(config=cfg)
    out = cfg["out"] or os.path.splitext(cfg["input"])[0] + ".report.json"
    _emit(doc, out)
    csv_path = cfg["csv"] or os.path.splitext(out)[0] + ".csv"
    atomic_write(csv_path, rep.to_csv())
    frac = rep.failure_fraction()
    print(f"wrote {out} ({int(rep.singular.sum())} singular cells, {100 * frac:.1f}% fit failures)")
    if frac > DEGRADED_FRACTION:
        print("degraded: more than 10% of cells failed to fit", file=sys.stderr)
        return EXIT_DEGRADED
    return EXIT_OK


def cmd_verify(cfg: dict) -> int:
    summary = run_suite(cfg["suite"])
    summary["config"] = cfg
    _emit(summary, cfg["out"])
    for c in summary["checks"]:
        print(f"[{'PASS' if c['passed'] else 'FAIL'}] criterion {c['criterion']:>2} {c['name']} "
              f"({c['runtime']:.1f}s)", file=sys.stderr)
    return EXIT_OK if summary["passed"] else EXIT_VERIFY


def compare_reports(d1: dict, d2: dict) -> dict:
    r1, r2 = report_from_dict(d1), report_from_dict(d2)
    if not r1.compatible(r2) or len(r1.cover) != len(r2.cover):
        raise ConfigError("reports live on different grids or covers")
    flip = r1.singular != r2.singular
    flipped = []
    for idx in zip(*np.nonzero(flip)):
        flipped.append({"pos": [float(r1.coords[k][idx[k]]) for k in range(len(r1.positions))],
                        "dir": int(idx[-1]), "first": bool(r1.singular[idx]), "second": bool(r2.singular[idx])})
    with np.errstate(invalid="ignore"):
        dt = r2.tau - r1.tau
    fin = np.isfinite(dt)
    return {"n_cells": int(flip.size), "n_flipped": int(flip.sum()),
            "agreement": 100.0 * (1.0 - float(flip.mean())) if flip.size else 100.0,
            "flipped": flipped,
            "tau_delta": {"max_abs": float(np.abs(dt[fin]).max()) if fin.any() else 0.0,
                          "mean_abs": float(np.abs(dt[fin]).mean()) if fin.any() else 0.0,
                          "per_cell": [None if not np.isfinite(v) else float(v) for v in dt.ravel()]},
            "kinds": [r1.kind, r2.kind]}


def cmd_compare(cfg: dict) -> int:
    if not cfg["report1"] or not cfg["report2"]:
        raise ConfigError("two report files are required")
    try:
        d1, d2 = read_json(cfg["report1"]), read_json(cfg["report2"])
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read report: {exc}") from exc
    doc = compare_reports(d1, d2)
    doc.update(config=cfg, version=__version__)
    _emit(doc, cfg["out"])
    print(f"agreement {doc['agreement']:.2f}% ({doc['n_flipped']} flipped cells)", file=sys.stderr)
    return EXIT_OK


COMMANDS = {"synth": cmd_synth, "analyze": cmd_analyze, "verify": cmd_verify, "compare": cmd_compare}


def main(argv=None) -> int:
    ap = _parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    args = vars(ns)
    command = args.pop("command")
    try:
        cfg = resolve_config(command, args)
        return COMMANDS[command](cfg)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
