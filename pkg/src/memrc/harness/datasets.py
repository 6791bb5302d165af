"""Benchmark datasets: generated waveforms, UCR-format series, feature matrices."""

from __future__ import annotations

import csv
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import sawtooth

log = logging.getLogger(__name__)


class DatasetError(ValueError):
    pass


@dataclass
class LabeledDataset:
    """Samples (1-D series or 2-D feature matrices) with integer class labels."""

    samples: list
    labels: np.ndarray
    n_classes: int
    class_names: tuple = ()
    name: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=int)
        if len(self.samples) != len(self.labels):
            raise DatasetError("one label per sample required")
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= self.n_classes):
            raise DatasetError("labels outside [0, n_classes)")

    def __len__(self):
        return len(self.samples)

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes)

    def max_abs(self) -> float:
        return float(max(np.max(np.abs(s)) for s in self.samples))

    def subset(self, idx) -> "LabeledDataset":
        idx = np.asarray(idx, dtype=int)
        return LabeledDataset([self.samples[i] for i in idx], self.labels[idx], self.n_classes,
                              self.class_names, self.name, dict(self.meta))

    @staticmethod
    def concat(a: "LabeledDataset", b: "LabeledDataset", name="") -> "LabeledDataset":
        if a.n_classes != b.n_classes:
            raise DatasetError("datasets have different class counts")
        return LabeledDataset(list(a.samples) + list(b.samples),
                              np.concatenate([a.labels, b.labels]), a.n_classes,
                              a.class_names, name or a.name)


# -- waveforms ----------------------------------------------------------------------

SINE, TRIANGLE = 0, 1


def triangle_wave(t, f):
    """Symmetric triangle, phase-aligned with ``sin(2 pi f t)`` (zero and rising at t=0)."""
    return sawtooth(2 * np.pi * f * np.asarray(t) + np.pi / 2, 0.5)


def gen_waveform_dataset(n_per_class: int = 100, f0: float = 5.0, delta: float = 0.4,
                         length: int = 100, seed=None) -> LabeledDataset:
    """Sine and triangle waves sampled at ``length`` points on [0, 1].

    Each sample draws its frequency from U[f0 (1 - delta), f0 (1 + delta)].
    Samples are ordered all sines first, then all triangles.
    """
    if n_per_class < 1:
        raise ValueError("n_per_class must be >= 1")
    rng = np.random.default_rng(seed)
    t = np.linspace(0.0, 1.0, length)
    lo, hi = f0 * (1 - delta), f0 * (1 + delta)
    samples, labels, freqs = [], [], []
    for label, wave in ((SINE, lambda tt, f: np.sin(2 * np.pi * f * tt)), (TRIANGLE, triangle_wave)):
        for _ in range(n_per_class):
            f = rng.uniform(lo, hi)
            samples.append(wave(t, f))
            labels.append(label)
            freqs.append(f)
    return LabeledDataset(samples, labels, 2, ("sine", "triangle"), "waveform",
                          {"frequencies": freqs, "f0": f0, "delta": delta})


# -- UCR archive format ---------------------------------------------------------------------

ECG200_COUNTS = {"TRAIN": {-1: 31, 1: 69}, "TEST": {-1: 36, 1: 64}}
ECG200_LABELS = {-1: 0, 1: 1}  # abnormal -> 0, normal -> 1
ECG200_NAMES = ("abnormal", "normal")


def _split_row(line: str):
    return [p for p in re.split(r"[,\s]+", line.strip()) if p]


def load_ucr(path, label_map: dict | None = None, class_names=()) -> LabeledDataset:
    """Read a UCR file: one series per line, class label first, any of
    comma/tab/space as delimiter.

    Without ``label_map`` the sorted distinct raw labels map to 0, 1, ...
    ECG200 split files additionally have their documented class counts
    checked (a mismatch is logged as a warning).
    """
    path = Path(path)
    rows = []
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        if not line.strip():
            continue
        parts = _split_row(line)
        try:
            vals = [float(p) for p in parts]
        except ValueError as exc:
            raise DatasetError(f"{path}:{lineno}: malformed row") from exc
        if len(vals) < 2:
            raise DatasetError(f"{path}:{lineno}: row has no series values")
        rows.append(vals)
    if not rows:
        raise DatasetError(f"{path}: empty file")
    lengths = {len(r) for r in rows}
    if len(lengths) != 1:
        raise DatasetError(f"{path}: inconsistent series lengths {sorted(n - 1 for n in lengths)}")
    raw_labels = [int(r[0]) if float(r[0]).is_integer() else r[0] for r in rows]
    is_ecg200 = "ECG200" in path.name.upper()
    if label_map is None:
        if is_ecg200:
            label_map, class_names = ECG200_LABELS, ECG200_NAMES
        else:
            label_map = {lab: k for k, lab in enumerate(sorted(set(raw_labels)))}
    try:
        labels = [label_map[lab] for lab in raw_labels]
    except KeyError as exc:
        raise DatasetError(f"{path}: unexpected label {exc.args[0]!r}") from exc
    n_classes = max(max(label_map.values()) + 1, len(class_names))
    ds = LabeledDataset([np.array(r[1:]) for r in rows], labels, n_classes,
                        tuple(class_names), path.stem, {"raw_labels": raw_labels})
    if is_ecg200:
        split = "TEST" if "TEST" in path.name.upper() else "TRAIN"
        expected = ECG200_COUNTS[split]
        found = {lab: raw_labels.count(lab) for lab in expected}
        if found != expected or len(rows) != 100 or lengths != {97}:
            log.warning("%s: expected ECG200 %s split %s with 100 x 96 series, found %s with %d x %d",
                        path, split, expected, found, len(rows), next(iter(lengths)) - 1)
    return ds


def write_ucr(path, dataset: LabeledDataset, raw_labels=None, delimiter=",") -> None:
    raw_labels = dataset.meta.get("raw_labels") if raw_labels is None else raw_labels
    if raw_labels is None:
        raw_labels = dataset.labels.tolist()
    with open(path, "w") as fh:
        for lab, s in zip(raw_labels, dataset.samples):
            fh.write(delimiter.join([repr(lab)] + [repr(float(x)) for x in np.ravel(s)]) + "\n")


def _find_split(directory: Path, name: str, split: str) -> Path:
    for ext in (".tsv", ".txt", ".csv", ""):
        p = directory / f"{name}_{split}{ext}"
        if p.exists():
            return p
    raise FileNotFoundError(f"no {name}_{split} file in {directory}")


def load_ucr_split(directory, name: str = "ECG200"):
    """``(train, test)`` datasets from ``<name>_TRAIN`` / ``<name>_TEST`` files."""
    directory = Path(directory)
    train = load_ucr(_find_split(directory, name, "TRAIN"))
    test = load_ucr(_find_split(directory, name, "TEST"))
    if train.n_classes != test.n_classes:
        raise DatasetError("train and test splits disagree on the class set")
    return train, test


def gen_ucr_surrogate(seed=None, length: int = 96, counts=((31, 69), (36, 64)),
                      noise: float = 0.35) -> tuple[LabeledDataset, LabeledDataset]:
    """Two-class heartbeat-like series with the ECG200 split sizes.

    Class 1 ("normal") is a sharp QRS-like spike followed by a T bump; class 0
    ("abnormal") has a wider, shifted spike and an inverted T bump.  Timing,
    amplitude and additive noise vary per sample.  For exercising the ECG
    pipeline when the archive files are not available.
    """
    rng = np.random.default_rng(seed)
    t = np.linspace(0, 1, length)

    def beat(label):
        shift = rng.normal(0, 0.03)
        amp = rng.normal(1.0, 0.15)
        if label == 1:
            qrs = 3.0 * np.exp(-((t - 0.3 - shift) ** 2) / (2 * 0.02**2))
            tw = 0.8 * np.exp(-((t - 0.65 - shift) ** 2) / (2 * 0.06**2))
        else:
            qrs = 2.2 * np.exp(-((t - 0.34 - shift) ** 2) / (2 * 0.035**2))
            tw = -0.5 * np.exp(-((t - 0.62 - shift) ** 2) / (2 * 0.07**2))
        x = amp * (qrs + tw) - 0.5 + rng.normal(0, noise, length)
        return (x - x.mean()) / x.std()

    out = []
    for split, (n0, n1) in zip(("TRAIN", "TEST"), counts):
        labels = [0] * n0 + [1] * n1
        order = rng.permutation(len(labels))
        labels = [labels[i] for i in order]
        samples = [beat(lab) for lab in labels]
        out.append(LabeledDataset(samples, labels, 2, ECG200_NAMES, f"surrogate_{split}",
                                  {"raw_labels": [-1 if lab == 0 else 1 for lab in labels]}))
    return out[0], out[1]


# -- feature matrices (precomputed cochleagrams) ------------------------------------------------


def load_features(directory, manifest: str = "manifest.txt", n_f: int | None = None,
                  n_classes: int | None = None, length_range=None) -> LabeledDataset:
    """Per-sample CSV matrices (N_f x L_data) listed in a ``filename,label`` manifest."""
    directory = Path(directory)
    mpath = directory / manifest
    if not mpath.exists():
        raise FileNotFoundError(f"manifest {mpath} not found")
    samples, labels, names = [], [], []
    with open(mpath, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            if not row or row[0].startswith("#"):
                continue
            if len(row) != 2:
                raise DatasetError(f"{mpath}:{lineno}: expected 'filename,label'")
            fname, lab = row[0].strip(), int(row[1])
            fpath = directory / fname
            if not fpath.exists():
                raise DatasetError(f"{mpath}:{lineno}: missing file {fname}")
            m = np.loadtxt(fpath, delimiter=",", ndmin=2)
            if n_f is not None and m.shape[0] != n_f:
                raise DatasetError(f"{fname}: {m.shape[0]} channels, expected {n_f}")
            if length_range is not None and not length_range[0] <= m.shape[1] <= length_range[1]:
                raise DatasetError(f"{fname}: length {m.shape[1]} outside {length_range}")
            samples.append(m)
            labels.append(lab)
            names.append(fname)
    if not samples:
        raise DatasetError(f"{mpath}: no samples listed")
    if len({s.shape[0] for s in samples}) != 1:
        raise DatasetError("feature matrices disagree on the channel count")
    k = n_classes if n_classes is not None else max(labels) + 1
    if min(labels) < 0 or max(labels) >= k:
        raise DatasetError(f"labels outside [0, {k})")
    return LabeledDataset(samples, labels, k, tuple(str(c) for c in range(k)), directory.name,
                          {"files": names})


def write_features(directory, dataset: LabeledDataset, manifest: str = "manifest.txt") -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    lines = []
    for k, (m, lab) in enumerate(zip(dataset.samples, dataset.labels)):
        fname = f"sample_{k:04d}.csv"
        np.savetxt(directory / fname, np.atleast_2d(m), delimiter=",", fmt="%.17g")
        lines.append(f"{fname},{int(lab)}")
    (directory / manifest).write_text("\n".join(lines) + "\n")


def gen_digit_surrogate(n_per_class: int = 10, n_f: int = 78, length_range=(48, 60),
                        n_classes: int = 10, seed=None, noise: float = 0.05) -> LabeledDataset:
    """Seeded 10-class stand-in for cochleagrams: amplitude-modulated tone grids.

    Each class owns two tone tracks (channel centre moving linearly in time
    between points of a fixed channel grid) and a loudness level.  Classes come in pairs that share their tone
    tracks and differ only in loudness, so a sample's class is not a
    property of the *direction* of its spectral frames; a bias-free linear
    readout of the frames cannot separate such pairs, while the memristive
    nonlinearity makes responses depend on amplitude.  Per-sample jitter in
    length, track position, envelope and additive noise keeps the task
    non-trivial.
    """
    rng = np.random.default_rng(seed)
    n_tracks = (n_classes + 1) // 2
    # tone endpoints on an evenly spaced channel grid, so that no two track
    # pairs overlap by accident
    grid = np.linspace(0.12, 0.88, n_tracks) * n_f
    i = np.arange(n_tracks)
    starts = np.column_stack([grid[i], grid[(i + 3) % n_tracks]])
    ends = np.column_stack([grid[(i + 1) % n_tracks], grid[(i + 2) % n_tracks]])
    levels = np.where(np.arange(n_classes) % 2 == 0, 1.0, 0.45)
    ch = np.arange(n_f)[:, None]
    samples, labels = [], []
    for c in range(n_classes):
        tr = c // 2
        for _ in range(n_per_class):
            L = int(rng.integers(length_range[0], length_range[1] + 1))
            u = np.linspace(0, 1, L)[None, :]
            jitter = rng.normal(0, 1.5, size=2)
            env = np.sin(np.pi * u) ** rng.uniform(0.5, 1.5)
            P = np.zeros((n_f, L))
            for k in range(2):
                centre = starts[tr, k] + (ends[tr, k] - starts[tr, k]) * u + jitter[k]
                P += np.exp(-((ch - centre) ** 2) / (2 * 3.0**2))
            gain = levels[c] * rng.uniform(0.9, 1.1)
            P = gain * env * P + noise * rng.random((n_f, L))
            samples.append(P)
            labels.append(c)
    return LabeledDataset(samples, labels, n_classes, tuple(str(c) for c in range(n_classes)),
                          "digit_surrogate")
