"""Command line entry point: ``memrc <subcommand> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from ..engine import CircuitSystem, SolverConfig, build_input, integrate
from ..memristor import DeviceSet, VariabilitySpec, sample_devices
from ..netlist import NETWORK_TYPES, make_network, read_netlist
from .datasets import DatasetError
from .experiment import (
    DEFAULT_SWEEP_VALUES,
    SWEEP_AXES,
    ExperimentConfig,
    ExperimentError,
    baseline_linear,
    run_sweep,
    run_task,
)

log = logging.getLogger("memrc")


def load_config_file(path) -> dict:
    """Read a JSON, TOML or YAML config file into a flat dict."""
    path = Path(path)
    text = path.read_text()
    suffix = path.suffix.lower()
    if suffix == ".json":
        return json.loads(text)
    if suffix == ".toml":
        try:
            import tomllib
        except ImportError:  # python < 3.11
            import tomli as tomllib
        return tomllib.loads(text)
    if suffix in (".yaml", ".yml"):
        import yaml

        return yaml.safe_load(text) or {}
    raise SystemExit(f"unsupported config format: {path.suffix} (use .json, .toml or .yaml)")


def _common(p):
    p.add_argument("--config", help="JSON/TOML/YAML file with experiment settings")
    p.add_argument("--seed", type=int, help="network seed (topologies, devices, folds)")
    p.add_argument("--out-dir", help="write results here")
    p.add_argument("--jobs", type=int, help="worker processes across networks")
    p.add_argument("--network", choices=NETWORK_TYPES)
    p.add_argument("--n-networks", type=int)
    p.add_argument("--r-mean", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--v-max", type=float)
    p.add_argument("--n-x", type=int)
    p.add_argument("--n-train", type=int)
    p.add_argument("--s-mask", type=int)
    p.add_argument("--folds", type=int)
    p.add_argument("--ridge", type=float)
    p.add_argument("--data", dest="data_path", help="dataset directory (ECG200 UCR files or digit features)")
    p.add_argument("--surrogate", action="store_true", default=None,
                   help="use the built-in synthetic stand-in dataset")


_FLAG_FIELDS = ("network", "n_networks", "r_mean", "sigma", "v_max", "n_x", "n_train", "s_mask",
                "folds", "ridge", "data_path", "surrogate", "jobs", "out_dir")


def _make_config(task: str, args) -> ExperimentConfig:
    d = load_config_file(args.config) if args.config else {}
    d.pop("task", None)
    if args.seed is not None:
        d["network_seed"] = args.seed
    for k in _FLAG_FIELDS:
        v = getattr(args, k, None)
        if v is not None:
            d[k] = v
    if task == "ecg" and d.get("s_mask") is not None and "l_in" not in d:
        d["l_in"] = d["s_mask"]
        d.setdefault("l_out", d["s_mask"])
    return ExperimentConfig.for_task(task, **d)


def _report(res, label=""):
    print(f"{label}accuracy {res.mean:.4f} +- {res.sem:.4f} over {len(res.accuracies)} trials "
          f"({res.wall_clock:.1f}s)")
    print("confusion matrix (rows = true class):")
    for row in res.confusion:
        print("  " + " ".join(f"{x:6d}" for x in row))


def cmd_simulate(args) -> int:
    if args.netlist:
        topo = read_netlist(args.netlist)
    else:
        topo = make_network(args.network, args.seed)
    if args.uniform:
        devs = DeviceSet.uniform(topo.n_memristors, R_off=args.r_mean * 100.0)
    else:
        devs = sample_devices(VariabilitySpec(args.r_mean, args.sigma), topo.n_memristors,
                              None if args.seed is None else args.seed + 1)
    sys_ = CircuitSystem(topo, devs)
    if args.input:
        raw = np.loadtxt(args.input, delimiter=",", ndmin=1).ravel()
    else:
        raw = np.sin(2 * np.pi * np.arange(args.length) / args.length)
    inp = build_input(raw, args.v_max, args.t_relax, args.t_main)
    cfg = SolverConfig(rtol=args.rtol, atol=args.atol)
    grid = None
    if args.samples:
        grid = np.linspace(args.t_relax, args.t_relax + args.t_main, args.samples)
    traj = integrate(sys_, inp, cfg, sample_times=grid)
    out = Path(args.out) if args.out else None
    if out is None and args.out_dir:
        out = Path(args.out_dir) / "trajectory.csv"
    if out is None:
        out = Path("trajectory.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    traj.to_csv(out)
    print(f"wrote {len(traj.times)} time points for {topo.n_memristors} branches to {out}")
    return 0


def cmd_task(args) -> int:
    cfg = _make_config(args.command, args)
    res = run_task(cfg)
    _report(res, f"{cfg.task} {cfg.network}: ")
    if cfg.out_dir:
        print(f"results in {cfg.out_dir}")
    return 0


def cmd_baseline(args) -> int:
    cfg = _make_config(args.task, args)
    res = baseline_linear(cfg)
    _report(res, f"{cfg.task} linear baseline: ")
    return 0


def cmd_sweep(args) -> int:
    cfg = _make_config(args.task, args)
    axis = SWEEP_AXES[args.axis]
    if args.values:
        values = [float(v) if axis in ("r_mean", "sigma", "v_max") else int(v)
                  for v in args.values.split(",")]
    elif axis in DEFAULT_SWEEP_VALUES:
        values = DEFAULT_SWEEP_VALUES[axis]
    else:
        raise ValueError(f"--values is required for axis {args.axis}")
    results = run_sweep(cfg, args.axis, values)
    print(f"{args.axis:>10s}  mean      sem")
    failed = 0
    for v, res in zip(values, results):
        if res is None:
            failed += 1
            print(f"{v:>10g}  FAILED")
        else:
            print(f"{v:>10g}  {res.mean:.4f}  {res.sem:.4f}")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="memrc", description="Memristor network reservoir computing")
    ap.add_argument("-v", "--verbose", action="store_true")
    verbose = argparse.ArgumentParser(add_help=False)
    verbose.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate one network and dump the trajectory as CSV",
                       parents=[verbose])
    p.add_argument("--netlist", help="text netlist (M/V lines); default: generate --network")
    p.add_argument("--network", choices=NETWORK_TYPES, default="rand-rp")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--r-mean", type=float, default=50.0)
    p.add_argument("--sigma", type=float, default=0.2)
    p.add_argument("--uniform", action="store_true", help="identical devices (R_on=100, w0=D/10)")
    p.add_argument("--input", help="CSV of raw input samples (default: one sine period)")
    p.add_argument("--length", type=int, default=100)
    p.add_argument("--v-max", type=float, default=0.5)
    p.add_argument("--t-relax", type=float, default=3.0)
    p.add_argument("--t-main", type=float, default=3.0)
    p.add_argument("--samples", type=int, help="uniform output samples instead of solver steps")
    p.add_argument("--rtol", type=float, default=1e-6)
    p.add_argument("--atol", type=float, default=1e-9)
    p.add_argument("--out", help="output CSV path")
    p.add_argument("--out-dir")
    p.add_argument("--config", help="ignored; accepted for uniformity")
    p.add_argument("--jobs", type=int, help="ignored; accepted for uniformity")
    p.set_defaults(func=cmd_simulate)

    for name, text in (("waveform", "sine vs triangle classification"),
                       ("ecg", "ECG200 heartbeat classification"),
                       ("digits", "spoken-digit feature classification")):
        p = sub.add_parser(name, help=text, parents=[verbose])
        _common(p)
        p.set_defaults(func=cmd_task)

    p = sub.add_parser("sweep", help="vary one parameter and report accuracy at each value",
                       parents=[verbose])
    p.add_argument("task", choices=("waveform", "ecg", "digits"))
    p.add_argument("--axis", required=True, choices=sorted(SWEEP_AXES))
    p.add_argument("--values", help="comma separated values (default: a built-in grid)")
    _common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("baseline", help="same pipeline with the reservoir removed",
                       parents=[verbose])
    p.add_argument("task", choices=("waveform", "ecg", "digits"))
    _common(p)
    p.set_defaults(func=cmd_baseline)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ExperimentError, DatasetError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
