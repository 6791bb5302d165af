"""Pre/post-processing around the reservoir and the linear readout.

Every input sample ``k`` becomes a block ``X_k`` of state columns.  All
columns of a block share the sample's one-hot teacher column; the readout
``W_out`` minimises ``||W_out X - D||_F^2 (+ ridge ||W_out||_F^2)`` and a
sample is classified by the most frequent per-column argmax of
``W_out X_k``.  Ties go to the lowest class index.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .reservoir import ReservoirTrace, stack_traces

# -- masking --------------------------------------------------------------------


@dataclass(frozen=True)
class Mask:
    matrix: np.ndarray  # (S_mask, L_row)
    alphabet: tuple = (-1, 1)
    seed: int | None = None


def make_mask(s_mask: int, l_row: int = 1, alphabet=(-1, 1), seed=None) -> Mask:
    """Random mask with entries drawn i.i.d. uniformly from ``alphabet``."""
    rng = np.random.default_rng(seed)
    alphabet = tuple(alphabet)
    m = rng.choice(np.asarray(alphabet, dtype=float), size=(s_mask, l_row))
    m.flags.writeable = False
    return Mask(m, alphabet, seed)


def apply_mask(data, mask: Mask | np.ndarray) -> np.ndarray:
    """``Q @ P`` for a 2-D data matrix ``P``.

    A 1-D series of length ``L`` is treated as a 1 x L row, so an
    ``S_mask x 1`` mask yields the ``S_mask x L`` outer-product layout whose
    column ``j`` is ``mask * data[j]``.
    """
    Q = mask.matrix if isinstance(mask, Mask) else np.asarray(mask, dtype=float)
    P = np.asarray(data, dtype=float)
    if P.ndim == 1:
        P = P[None, :]
    if Q.shape[1] != P.shape[0]:
        raise ValueError(f"mask {Q.shape} and data {P.shape} have mismatched inner dimensions")
    return Q @ P


# -- state collection -----------------------------------------------------------------


def select_branches(n_m: int, n_x: int | None, seed=None) -> np.ndarray:
    """Indices of the ``n_x`` branches fed to the readout (all, in order, if ``n_x == n_m``)."""
    if n_x is None or n_x == n_m:
        return np.arange(n_m)
    if not 1 <= n_x <= n_m:
        raise ValueError(f"n_x must lie in [1, {n_m}], got {n_x}")
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(n_m, size=n_x, replace=False))


def _currents(trace) -> np.ndarray:
    return trace.currents if isinstance(trace, ReservoirTrace) else np.asarray(trace, dtype=float)


def _stack(traces) -> np.ndarray:
    if isinstance(traces, np.ndarray) and traces.ndim == 3:
        return traces
    traces = list(traces)
    if not traces:
        raise ValueError("no traces")
    if all(isinstance(t, ReservoirTrace) for t in traces):
        return stack_traces(traces)
    arrs = [np.asarray(t, dtype=float) for t in traces]
    if len({a.shape for a in arrs}) != 1:
        raise ValueError("ragged trace shapes")
    return np.stack(arrs)


def collect_waveform(trace, n_x: int | None = None, subset_seed=None) -> np.ndarray:
    """``|currents|`` of the selected branches as an (n_x, L_out) block."""
    c = _currents(trace)
    sel = select_branches(c.shape[1], n_x, subset_seed)
    return np.abs(c[:, sel]).T


def collect_case_i(traces, n_x: int | None = None, subset_seed=None) -> np.ndarray:
    """Transpose each (L_out, N_m) trace and stack vertically: (n_x * L_data, L_out)."""
    c = _stack(traces)
    sel = select_branches(c.shape[2], n_x, subset_seed)
    return c[:, :, sel].transpose(0, 2, 1).reshape(-1, c.shape[1])


def collect_case_ii(traces, n_x: int | None = None, subset_seed=None) -> np.ndarray:
    """Flatten each trace branch by branch and concatenate into one column."""
    c = _stack(traces)
    sel = select_branches(c.shape[2], n_x, subset_seed)
    return c[:, :, sel].transpose(0, 2, 1).reshape(-1, 1)


def uncollect_case_ii(column, n_traces: int, l_out: int, n_x: int) -> np.ndarray:
    """Inverse layout of :func:`collect_case_ii`: (n_traces, L_out, n_x)."""
    return np.asarray(column).reshape(n_traces, n_x, l_out).transpose(0, 2, 1)


def collect_columns(traces, n_x: int | None = None, subset_seed=None) -> np.ndarray:
    """One column per trace, each the branch-by-branch flattening: (n_x * L_out, L_data)."""
    c = _stack(traces)
    sel = select_branches(c.shape[2], n_x, subset_seed)
    return c[:, :, sel].transpose(0, 2, 1).reshape(c.shape[0], -1).T


@dataclass
class StateCollection:
    X: np.ndarray  # (features, columns)
    spans: list  # (start, stop) column range per sample
    labels: np.ndarray

    def block(self, k: int) -> np.ndarray:
        a, b = self.spans[k]
        return self.X[:, a:b]

    @property
    def n_samples(self) -> int:
        return len(self.spans)

    def subset(self, idx) -> "StateCollection":
        return assemble_states([self.block(k) for k in idx], self.labels[np.asarray(idx, dtype=int)])


@dataclass
class TeacherCollection:
    D: np.ndarray  # (n_classes, columns)
    labels: np.ndarray


def assemble_states(blocks: Sequence[np.ndarray], labels) -> StateCollection:
    """Concatenate per-sample blocks ``X_k`` column-wise."""
    blocks = [np.asarray(b, dtype=float) for b in blocks]
    if not blocks:
        raise ValueError("no state blocks")
    if len({b.shape[0] for b in blocks}) != 1:
        raise ValueError("state blocks have different feature dimensions")
    labels = np.asarray(labels, dtype=int)
    if len(labels) != len(blocks):
        raise ValueError("one label per block required")
    widths = np.array([b.shape[1] for b in blocks])
    stops = np.cumsum(widths)
    spans = list(zip((stops - widths).tolist(), stops.tolist()))
    X = np.concatenate(blocks, axis=1)
    if not np.all(np.isfinite(X)):
        raise ValueError("state collection contains non-finite entries")
    return StateCollection(X, spans, labels)


def teacher_for(states: StateCollection, n_classes: int) -> TeacherCollection:
    """One-hot teacher columns aligned with ``states``."""
    D = np.zeros((n_classes, states.X.shape[1]))
    for (a, b), c in zip(states.spans, states.labels):
        if not 0 <= c < n_classes:
            raise ValueError(f"label {c} outside [0, {n_classes})")
        D[c, a:b] = 1.0
    return TeacherCollection(D, states.labels.copy())


# -- readout -------------------------------------------------------------------------


@dataclass
class ReadoutWeights:
    W_out: np.ndarray  # (n_classes, features)
    ridge: float = 0.0

    @property
    def n_classes(self) -> int:
        return self.W_out.shape[0]


def train_readout(X, D, ridge: float = 0.0) -> ReadoutWeights:
    """Least-squares readout ``W_out = D X^+`` (ridge-regularised when ``ridge > 0``).

    ``ridge == 0`` gives the minimum-norm solution via an SVD-based solver.
    """
    X = X.X if isinstance(X, StateCollection) else np.asarray(X, dtype=float)
    D = D.D if isinstance(D, TeacherCollection) else np.asarray(D, dtype=float)
    if X.shape[1] == 0:
        raise ValueError("empty training set")
    if X.shape[1] != D.shape[1]:
        raise ValueError(f"X has {X.shape[1]} columns but D has {D.shape[1]}")
    if ridge < 0:
        raise ValueError("ridge must be non-negative")
    if ridge == 0:
        Wt, *_ = scipy.linalg.lstsq(X.T, D.T, lapack_driver="gelsd")
        W = Wt.T
    elif X.shape[0] <= X.shape[1]:
        A = X @ X.T + ridge * np.eye(X.shape[0])
        W = scipy.linalg.solve(A, X @ D.T, assume_a="pos").T
    else:
        A = X.T @ X + ridge * np.eye(X.shape[1])
        W = scipy.linalg.solve(A, D.T, assume_a="pos").T @ X.T
    if not np.all(np.isfinite(W)):
        raise FloatingPointError("readout weights are not finite")
    return ReadoutWeights(W, ridge)


def readout_objective(W, X, D, ridge: float = 0.0) -> float:
    R = W @ X - D
    return float(np.sum(R * R) + ridge * np.sum(W * W))


def predict(weights, X_k) -> int:
    """Majority vote over the per-column argmax rows of ``W_out X_k``."""
    W = weights.W_out if isinstance(weights, ReadoutWeights) else np.asarray(weights)
    Y = W @ np.asarray(X_k, dtype=float)
    votes = np.argmax(Y, axis=0)
    return int(np.argmax(np.bincount(votes, minlength=W.shape[0])))


def predict_all(weights, states: StateCollection) -> np.ndarray:
    W = weights.W_out if isinstance(weights, ReadoutWeights) else np.asarray(weights)
    votes = np.argmax(W @ states.X, axis=0)
    out = np.empty(states.n_samples, dtype=int)
    for k, (a, b) in enumerate(states.spans):
        out[k] = np.argmax(np.bincount(votes[a:b], minlength=W.shape[0]))
    return out


def fit_predict(train: StateCollection, test: StateCollection, n_classes: int,
                ridge: float = 0.0) -> np.ndarray:
    w = train_readout(train, teacher_for(train, n_classes), ridge)
    return predict_all(w, test)


# -- evaluation ----------------------------------------------------------------------------


def confusion_matrix(y_true, y_pred, n_classes: int) -> np.ndarray:
    cm = np.zeros((n_classes, n_classes), dtype=int)
    np.add.at(cm, (np.asarray(y_true, dtype=int), np.asarray(y_pred, dtype=int)), 1)
    return cm


def stratified_folds(labels, folds: int, seed=None) -> np.ndarray:
    """Fold id per sample; each class is shuffled and cut into ``folds``
    equal chunks with the last chunk absorbing the remainder."""
    labels = np.asarray(labels, dtype=int)
    if folds < 2:
        raise ValueError("need at least 2 folds")
    rng = np.random.default_rng(seed)
    fold_of = np.empty(len(labels), dtype=int)
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        if len(idx) < folds:
            raise ValueError(f"class {c} has {len(idx)} samples, fewer than {folds} folds")
        idx = rng.permutation(idx)
        size = len(idx) // folds
        ids = np.minimum(np.arange(len(idx)) // size, folds - 1)
        fold_of[idx] = ids
    return fold_of


def stratified_split(labels, n_train: int, seed=None):
    """Random train/test split with ``n_train / n_classes`` training samples per class."""
    labels = np.asarray(labels, dtype=int)
    classes = np.unique(labels)
    per = n_train // len(classes)
    if per < 1 or per * len(classes) != n_train:
        raise ValueError(f"n_train={n_train} must be a positive multiple of {len(classes)} classes")
    rng = np.random.default_rng(seed)
    train = []
    for c in classes:
        idx = np.flatnonzero(labels == c)
        if len(idx) <= per:
            raise ValueError(f"class {c} has no samples left for testing")
        train.append(rng.choice(idx, size=per, replace=False))
    train = np.sort(np.concatenate(train))
    test = np.setdiff1d(np.arange(len(labels)), train)
    return train, test


@dataclass
class CVResult:
    fold_accuracies: np.ndarray
    y_true: np.ndarray
    y_pred: np.ndarray
    folds: list = field(default_factory=list)  # (train_idx, test_idx) per fold

    @property
    def mean(self) -> float:
        return float(np.mean(self.fold_accuracies))

    @property
    def sem(self) -> float:
        a = self.fold_accuracies
        return float(np.std(a, ddof=1) / np.sqrt(len(a))) if len(a) > 1 else 0.0


def cross_validate(labels, folds: int, fit_and_predict: Callable, seed=None,
                   n_train: int | None = None) -> CVResult:
    """Evaluate ``fit_and_predict(train_idx, test_idx) -> predicted labels``.

    With ``n_train=None`` this is stratified k-fold cross validation.  With
    ``n_train`` set, ``folds`` independent stratified random splits with that
    many training samples are used instead.
    """
    labels = np.asarray(labels, dtype=int)
    splits = []
    if n_train is None:
        fold_of = stratified_folds(labels, folds, seed)
        for f in range(folds):
            splits.append((np.flatnonzero(fold_of != f), np.flatnonzero(fold_of == f)))
    else:
        rng = np.random.default_rng(seed)
        for _ in range(folds):
            splits.append(stratified_split(labels, n_train, rng))
    accs, y_true, y_pred = [], [], []
    for tr, te in splits:
        if len(te) == 0:
            raise ValueError("empty test fold")
        pred = np.asarray(fit_and_predict(tr, te), dtype=int)
        accs.append(np.mean(pred == labels[te]))
        y_true.append(labels[te])
        y_pred.append(pred)
    return CVResult(np.array(accs), np.concatenate(y_true), np.concatenate(y_pred), splits)


# -- CSV export ----------------------------------------------------------------------------


def save_matrix_csv(path, M) -> None:
    """Row-major CSV with a ``# shape R C`` header line."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    with open(Path(path), "w") as fh:
        fh.write(f"# shape {M.shape[0]} {M.shape[1]}\n")
        np.savetxt(fh, M, delimiter=",", fmt="%.17g")


def load_matrix_csv(path) -> np.ndarray:
    with open(Path(path)) as fh:
        header = fh.readline().split()
        if header[:2] != ["#", "shape"]:
            raise ValueError(f"{path}: missing '# shape' header")
        shape = (int(header[2]), int(header[3]))
        M = np.loadtxt(fh, delimiter=",", ndmin=2)
    return M.reshape(shape)
