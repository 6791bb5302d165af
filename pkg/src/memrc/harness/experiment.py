"""End-to-end benchmark runs: preprocess, drive, collect, evaluate, persist."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__
from ..engine import CircuitSystem, SolverConfig, build_input, integrate_many, main_grid
from ..memristor import VariabilitySpec, sample_devices
from ..netlist import NETWORK_TYPES, make_network
from ..pipeline import (
    apply_mask,
    assemble_states,
    collect_case_i,
    collect_case_ii,
    collect_columns,
    collect_waveform,
    confusion_matrix,
    cross_validate,
    fit_predict,
    make_mask,
)
from .datasets import (
    LabeledDataset,
    gen_digit_surrogate,
    gen_ucr_surrogate,
    gen_waveform_dataset,
    load_features,
    load_ucr_split,
)

log = logging.getLogger(__name__)

TASKS = ("waveform", "ecg", "digits")
SWEEP_AXES = {
    "r_mean": "r_mean",
    "r": "r_mean",
    "sigma": "sigma",
    "n_x": "n_x",
    "n_train": "n_train",
    "v_max": "v_max",
    "s_mask": "s_mask",
}
# grids used when a sweep is requested without explicit values
DEFAULT_SWEEP_VALUES = {
    "r_mean": [50.0, 100.0, 500.0, 1000.0, 5000.0, 1e4],
    "sigma": [0.0, 0.1, 0.2, 0.3, 0.4],
    "n_x": list(range(1, 21)),
    "v_max": [0.01, 0.02, 0.05, 0.1, 0.5],
    "s_mask": [10, 25, 50, 100],
}

_TASK_DEFAULTS = {
    "waveform": dict(v_max=0.5, t_relax=3.0, t_main=3.0, l_in=100, l_out=100, s_mask=None,
                     mask_alphabet=(-1, 1), data_length=100),
    "ecg": dict(v_max=0.05, t_relax=3.0, t_main=3.0, l_in=50, l_out=50, s_mask=50,
                mask_alphabet=(-1, 1), case="ii"),
    "digits": dict(v_max=0.5, t_relax=0.05, t_main=0.05, l_in=100, l_out=100, s_mask=100,
                   mask_alphabet=(0, 1), n_per_class=50),
}


class ExperimentError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one benchmark run.  Use :meth:`for_task`
    to start from the per-task defaults."""

    task: str = "waveform"
    network: str = "rand-rp"
    n_networks: int = 10
    network_seed: int = 0
    # devices
    r_mean: float = 50.0
    sigma: float = 0.2
    R_on_mean: float = 100.0
    D: float = 1e-8
    mu_v: float = 1e-14
    # input signal
    v_max: float = 0.5
    t_relax: float = 3.0
    t_main: float = 3.0
    l_in: int | None = 100
    l_out: int = 100
    # preprocessing / readout
    s_mask: int | None = None
    mask_alphabet: tuple = (-1, 1)
    case: str = "ii"
    n_x: int | None = None
    n_train: int | None = None
    folds: int = 10
    ridge: float = 0.0
    # solver
    rtol: float = 1e-6
    atol: float = 1e-9
    batch_size: int = 2048
    # data
    seed: int = 0
    data_path: str | None = None
    n_per_class: int = 100
    f0: float = 5.0
    delta: float = 0.4
    data_length: int = 100
    surrogate: bool = False
    # execution
    jobs: int = 1
    out_dir: str | None = None

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"task must be one of {TASKS}")
        if self.network not in NETWORK_TYPES + ("identity",):
            raise ValueError(f"network must be one of {NETWORK_TYPES}")
        if self.case not in ("i", "ii"):
            raise ValueError("case must be 'i' or 'ii'")
        if self.n_networks < 1:
            raise ValueError("n_networks must be >= 1")
        object.__setattr__(self, "mask_alphabet", tuple(self.mask_alphabet))

    @classmethod
    def for_task(cls, task: str, **overrides) -> "ExperimentConfig":
        params = dict(_TASK_DEFAULTS[task])
        params.update(overrides)
        return cls(task=task, **params)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["mask_alphabet"] = list(self.mask_alphabet)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        task = d.get("task", "waveform")
        return cls.for_task(task, **{k: v for k, v in d.items() if k != "task"})

    def config_hash(self) -> str:
        d = self.to_dict()
        for k in ("jobs", "out_dir", "batch_size"):
            d.pop(k)
        return hashlib.sha1(json.dumps(d, sort_keys=True).encode()).hexdigest()[:10]

    def solver(self) -> SolverConfig:
        return SolverConfig(rtol=self.rtol, atol=self.atol, batch_size=self.batch_size)

    def variability(self) -> VariabilitySpec:
        return VariabilitySpec(self.r_mean, self.sigma, self.R_on_mean, self.D, self.mu_v)


@dataclass
class ExperimentResult:
    config: dict
    trial_accuracies: list  # [network index, fold index, accuracy]
    confusion: np.ndarray
    wall_clock: float
    class_names: tuple = ()
    n_test_per_trial: list = field(default_factory=list)
    baseline: bool = False

    @property
    def accuracies(self) -> np.ndarray:
        return np.array([a for _, _, a in self.trial_accuracies])

    @property
    def mean(self) -> float:
        return float(np.mean(self.accuracies))

    @property
    def sem(self) -> float:
        a = self.accuracies
        return float(np.std(a, ddof=1) / np.sqrt(len(a))) if len(a) > 1 else 0.0

    def network_means(self) -> np.ndarray:
        nets = sorted({n for n, _, _ in self.trial_accuracies})
        return np.array([np.mean([a for n, _, a in self.trial_accuracies if n == k]) for k in nets])

    def to_dict(self) -> dict:
        return {
            "version": __version__,
            "config": self.config,
            "baseline": self.baseline,
            "mean_accuracy": self.mean,
            "standard_error": self.sem,
            "trial_accuracies": [[int(n), int(f), float(a)] for n, f, a in self.trial_accuracies],
            "n_test_per_trial": [int(x) for x in self.n_test_per_trial],
            "confusion_matrix": self.confusion.tolist(),
            "class_names": list(self.class_names),
            "wall_clock_s": self.wall_clock,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentResult":
        return cls(d["config"], [tuple(t) for t in d["trial_accuracies"]],
                   np.array(d["confusion_matrix"]), d["wall_clock_s"], tuple(d["class_names"]),
                   d.get("n_test_per_trial", []), d.get("baseline", False))

    def save(self, out_dir) -> Path:
        """Write ``<task>_<hash>.json`` plus per-trial and confusion CSVs."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        cfg = ExperimentConfig.from_dict(self.config)
        stem = f"{cfg.task}{'_baseline' if self.baseline else ''}_{cfg.config_hash()}"
        path = out_dir / f"{stem}.json"
        path.write_text(json.dumps(self.to_dict(), indent=2) + "\n")
        with open(out_dir / f"{stem}_trials.csv", "w") as fh:
            fh.write("network,fold,accuracy\n")
            for n, f, a in self.trial_accuracies:
                fh.write(f"{n},{f},{a!r}\n")
        np.savetxt(out_dir / f"{stem}_confusion.csv", self.confusion, fmt="%d", delimiter=",")
        return path


def load_result(path) -> ExperimentResult:
    return ExperimentResult.from_dict(json.loads(Path(path).read_text()))


# -- data and preprocessing ------------------------------------------------------------


@dataclass
class PreparedData:
    """Raw reservoir input series for every sample, ready for scaling."""

    dataset: LabeledDataset
    inputs: list  # per sample: list of 1-D raw series (one per reservoir drive)
    scale_ref: float
    train_idx: np.ndarray | None = None  # fixed split (ECG)
    test_idx: np.ndarray | None = None


def load_dataset(cfg: ExperimentConfig):
    """Dataset for ``cfg.task`` plus an optional fixed ``(train_idx, test_idx)`` split."""
    if cfg.task == "waveform":
        return gen_waveform_dataset(cfg.n_per_class, cfg.f0, cfg.delta, cfg.data_length, cfg.seed), None
    if cfg.task == "ecg":
        if cfg.data_path and not cfg.surrogate:
            train, test = load_ucr_split(cfg.data_path, "ECG200")
        else:
            train, test = gen_ucr_surrogate(cfg.seed)
        ds = LabeledDataset.concat(train, test, name=train.name.replace("_TRAIN", ""))
        n = len(train)
        return ds, (np.arange(n), np.arange(n, n + len(test)))
    if cfg.data_path and not cfg.surrogate:
        ds = load_features(cfg.data_path)
    else:
        ds = gen_digit_surrogate(cfg.n_per_class, seed=cfg.seed)
    return ds, None


def _resample(x, n):
    x = np.asarray(x, dtype=float)
    if n is None or len(x) == n:
        return x
    return np.interp(np.linspace(0, 1, n), np.linspace(0, 1, len(x)), x)


def prepare(cfg: ExperimentConfig, dataset: LabeledDataset | None = None, split=None) -> PreparedData:
    """Mask and split each sample into the raw series driven into the reservoir.

    * waveform: the series itself (one drive per sample)
    * ecg: ``S_mask x 1`` mask outer product, one drive per data column
    * digits: ``S_mask x N_f`` mask times the feature matrix, one drive per column

    The scaling reference is the dataset-wide maximum absolute raw value.
    """
    if dataset is None:
        dataset, split = load_dataset(cfg)
    inputs = []
    if cfg.task == "waveform":
        inputs = [[_resample(s, cfg.l_in)] for s in dataset.samples]
    else:
        rows = 1 if cfg.task == "ecg" else np.asarray(dataset.samples[0]).shape[0]
        mask = make_mask(cfg.s_mask, rows, cfg.mask_alphabet, seed=cfg.seed)
        for s in dataset.samples:
            masked = apply_mask(s, mask)
            inputs.append([_resample(masked[:, j], cfg.l_in) for j in range(masked.shape[1])])
    scale_ref = max(float(np.max(np.abs(col))) for cols in inputs for col in cols)
    if scale_ref == 0:
        scale_ref = 1.0
    tr, te = split if split is not None else (None, None)
    return PreparedData(dataset, inputs, scale_ref, tr, te)


# -- reservoir runs -----------------------------------------------------------------------


def network_seeds(cfg: ExperimentConfig, i: int):
    """Independent seeds for topology, devices and branch subset of network ``i``."""
    ss = np.random.SeedSequence([cfg.network_seed, i])
    return [int(c.generate_state(1)[0]) for c in ss.spawn(3)]


def build_system(cfg: ExperimentConfig, i: int) -> CircuitSystem:
    topo_seed, dev_seed, _ = network_seeds(cfg, i)
    topo = make_network(cfg.network, topo_seed)
    devs = sample_devices(cfg.variability(), topo.n_memristors, dev_seed)
    return CircuitSystem(topo, devs)


def _reservoir_key(cfg: ExperimentConfig, i: int):
    keys = ("task", "network", "network_seed", "r_mean", "sigma", "R_on_mean", "D", "mu_v", "v_max",
            "t_relax", "t_main", "l_in", "l_out", "s_mask", "mask_alphabet", "rtol", "atol", "seed",
            "data_path", "n_per_class", "f0", "delta", "data_length", "surrogate")
    return tuple(getattr(cfg, k) for k in keys) + (i,)


def drive_all(cfg: ExperimentConfig, data: PreparedData, i: int) -> np.ndarray:
    """Traces for every reservoir input of every sample: (n_drives, L_out, N_m)."""
    flat = [col for cols in data.inputs for col in cols]
    signals = [build_input(col, cfg.v_max, cfg.t_relax, cfg.t_main, data.scale_ref) for col in flat]
    if cfg.network == "identity":
        # no reservoir: the sampled source voltage is the only "branch"
        ts = main_grid(cfg.t_relax, cfg.t_main, cfg.l_out)
        return np.stack([s.voltage(ts)[:, None] for s in signals])
    sys = build_system(cfg, i)
    ts = main_grid(cfg.t_relax, cfg.t_main, cfg.l_out)
    cur, failures = integrate_many(sys, signals, ts, cfg.solver())
    if failures:
        k = min(failures)
        raise ExperimentError(
            f"network {i}: {len(failures)} drive(s) failed, first drive {k}: {failures[k]}"
        ) from failures[k]
    return cur


def collect(cfg: ExperimentConfig, data: PreparedData, traces: np.ndarray, i: int):
    """Per-sample state blocks ``X_k`` from the flat trace array."""
    subset_seed = network_seeds(cfg, i)[2]
    n_x = cfg.n_x if cfg.network != "identity" else None
    blocks, pos = [], 0
    for cols in data.inputs:
        tr = traces[pos:pos + len(cols)]
        pos += len(cols)
        if cfg.task == "waveform":
            blocks.append(collect_waveform(tr[0], n_x, subset_seed))
        elif cfg.task == "ecg":
            collect_fn = collect_case_ii if cfg.case == "ii" else collect_case_i
            blocks.append(collect_fn(tr, n_x, subset_seed))
        else:
            blocks.append(collect_columns(tr, n_x, subset_seed))
    return assemble_states(blocks, data.dataset.labels)


def _evaluate(cfg: ExperimentConfig, data: PreparedData, states, i: int):
    n_classes = data.dataset.n_classes
    labels = data.dataset.labels

    def fp(tr, te):
        return fit_predict(states.subset(tr), states.subset(te), n_classes, cfg.ridge)

    if data.train_idx is not None:
        pred = fp(data.train_idx, data.test_idx)
        acc = float(np.mean(pred == labels[data.test_idx]))
        return [(i, 0, acc)], labels[data.test_idx], pred, [len(data.test_idx)]
    if cfg.n_train is not None and cfg.n_train >= len(labels):
        raise ExperimentError(f"n_train={cfg.n_train} leaves no test data ({len(labels)} samples)")
    fold_seed = network_seeds(cfg, i)[2] + 1
    cv = cross_validate(labels, cfg.folds, fp, seed=fold_seed, n_train=cfg.n_train)
    trials = [(i, f, float(a)) for f, a in enumerate(cv.fold_accuracies)]
    return trials, cv.y_true, cv.y_pred, [len(te) for _, te in cv.folds]


def _run_network(cfg, data, i, cache=None):
    key = _reservoir_key(cfg, i)
    if cache is not None and key in cache:
        traces = cache[key]
    else:
        traces = drive_all(cfg, data, i)
        if cache is not None:
            cache[key] = traces
    states = collect(cfg, data, traces, i)
    return _evaluate(cfg, data, states, i)


def _run_network_job(args):
    cfg, data, i = args
    return _run_network(cfg, data, i)


def run_task(cfg: ExperimentConfig, data: PreparedData | None = None, cache: dict | None = None,
             baseline: bool = False) -> ExperimentResult:
    """Run ``cfg.n_networks`` reservoir realisations and aggregate accuracies.

    ``cache`` (a dict) keeps reservoir traces between calls that differ only
    in readout-side settings (``n_x``, ``case``, ``n_train``, ``ridge``).
    """
    t0 = time.perf_counter()
    if data is None:
        data = prepare(cfg)
    n_nets = 1 if baseline else cfg.n_networks
    run_cfg = cfg.replace(network="identity") if baseline else cfg
    if cfg.jobs > 1 and n_nets > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            outs = list(pool.map(_run_network_job, [(run_cfg, data, i) for i in range(n_nets)]))
    else:
        outs = [_run_network(run_cfg, data, i, cache) for i in range(n_nets)]
    n_classes = data.dataset.n_classes
    trials, cm, n_test = [], np.zeros((n_classes, n_classes), dtype=int), []
    for tr, y_true, y_pred, nt in outs:
        trials += tr
        n_test += nt
        cm += confusion_matrix(y_true, y_pred, n_classes)
    res = ExperimentResult(cfg.to_dict(), trials, cm, time.perf_counter() - t0,
                           data.dataset.class_names, n_test, baseline)
    log.info("%s %s r=%g sigma=%g: accuracy %.4f +- %.4f (%d trials, %.1fs)", cfg.task,
             "baseline" if baseline else cfg.network, cfg.r_mean, cfg.sigma, res.mean, res.sem,
             len(trials), res.wall_clock)
    if cfg.out_dir:
        res.save(cfg.out_dir)
    return res


def baseline_linear(cfg: ExperimentConfig, data: PreparedData | None = None) -> ExperimentResult:
    """Same preprocessing and readout with the reservoir replaced by the identity:
    the sampled input voltage goes straight to the readout."""
    return run_task(cfg, data, baseline=True)


def run_sweep(cfg: ExperimentConfig, axis: str, values, data: PreparedData | None = None,
              cache: dict | None = None) -> list:
    """``run_task`` at each value of ``axis``, sharing network seeds (paired design).

    A failing point is logged and recorded as ``None``; the sweep continues.
    """
    if axis not in SWEEP_AXES:
        raise ValueError(f"axis must be one of {sorted(SWEEP_AXES)}")
    field_name = SWEEP_AXES[axis]
    if data is None and field_name != "s_mask":
        data = prepare(cfg)
    cache = {} if cache is None and cfg.jobs <= 1 else cache
    results = []
    for v in values:
        point = cfg.replace(**{field_name: v})
        if field_name == "s_mask":
            point = point.replace(l_in=v)
        try:
            pdata = prepare(point) if field_name == "s_mask" else data
            results.append(run_task(point, pdata, cache))
        except Exception as exc:  # noqa: BLE001 - a sweep point failure must not stop the sweep
            log.error("sweep %s=%r failed: %s", axis, v, exc)
            results.append(None)
    return results
