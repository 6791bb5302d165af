import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from memrc.pipeline import (
    apply_mask,
    assemble_states,
    collect_case_i,
    collect_case_ii,
    collect_columns,
    collect_waveform,
    confusion_matrix,
    cross_validate,
    fit_predict,
    load_matrix_csv,
    make_mask,
    predict,
    predict_all,
    readout_objective,
    save_matrix_csv,
    select_branches,
    stratified_folds,
    stratified_split,
    teacher_for,
    train_readout,
    uncollect_case_ii,
)


def test_mask_shapes_and_alphabet():
    m = make_mask(50, 1, (-1, 1), seed=0)
    assert m.matrix.shape == (50, 1) and set(np.unique(m.matrix)) <= {-1.0, 1.0}
    assert apply_mask(np.arange(96.0), m).shape == (50, 96)
    m2 = make_mask(100, 78, (0, 1), seed=0)
    assert apply_mask(np.ones((78, 60)), m2).shape == (100, 60)
    np.testing.assert_array_equal(make_mask(10, 3, seed=4).matrix, make_mask(10, 3, seed=4).matrix)


def test_selector_mask_picks_entries():
    Q = np.zeros((3, 4))
    Q[0, 2] = Q[1, 0] = Q[2, 3] = 1
    P = np.arange(12.0).reshape(4, 3)
    np.testing.assert_array_equal(apply_mask(P, Q), P[[2, 0, 3]])


def test_outer_product_layout():
    m = make_mask(5, 1, seed=1)
    x = np.array([1.0, -2.0, 3.0])
    out = apply_mask(x, m)
    np.testing.assert_array_equal(out[:, 1], -2.0 * m.matrix[:, 0])


def test_mask_dimension_mismatch():
    with pytest.raises(ValueError):
        apply_mask(np.ones((3, 4)), make_mask(5, 2))


def test_branch_selection():
    np.testing.assert_array_equal(select_branches(20, None), np.arange(20))
    sel = select_branches(20, 7, seed=3)
    assert len(sel) == 7 and len(set(sel)) == 7 and np.all(np.diff(sel) > 0)
    np.testing.assert_array_equal(sel, select_branches(20, 7, seed=3))
    with pytest.raises(ValueError):
        select_branches(20, 21)


def test_waveform_collection():
    tr = np.random.default_rng(0).normal(size=(100, 20))
    X = collect_waveform(tr)
    assert X.shape == (20, 100) and np.all(X >= 0)
    np.testing.assert_array_equal(X, np.abs(tr).T)
    assert not np.any(collect_waveform(np.zeros((10, 20))))


def test_ecg_layouts():
    traces = np.random.default_rng(0).normal(size=(96, 50, 20))
    Xi = collect_case_i(traces)
    assert Xi.shape == (1920, 50)
    np.testing.assert_array_equal(Xi[:20], traces[0].T)
    Xii = collect_case_ii(traces)
    assert Xii.shape == (96000, 1)
    np.testing.assert_array_equal(uncollect_case_ii(Xii, 96, 50, 20), traces)
    one = collect_case_ii(traces[:1, :, :1])
    np.testing.assert_array_equal(one[:, 0], traces[0, :, 0])
    np.testing.assert_array_equal(collect_case_i(traces[:1]), traces[0].T)


def test_digit_layout():
    traces = np.random.default_rng(1).normal(size=(55, 100, 20))
    X = collect_columns(traces)
    assert X.shape == (2000, 55)
    np.testing.assert_array_equal(X[:, 3], collect_case_ii(traces[3:4])[:, 0])


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 5), st.integers(1, 6), st.integers(1, 4))
def test_case_ii_round_trip(n, l_out, n_x):
    traces = np.arange(n * l_out * n_x, dtype=float).reshape(n, l_out, n_x)
    np.testing.assert_array_equal(uncollect_case_ii(collect_case_ii(traces), n, l_out, n_x), traces)


def test_assemble_and_teacher():
    blocks = [np.ones((3, 2)), 2 * np.ones((3, 4)), np.zeros((3, 1))]
    st_ = assemble_states(blocks, [1, 0, 1])
    assert st_.X.shape == (3, 7) and st_.spans == [(0, 2), (2, 6), (6, 7)]
    np.testing.assert_array_equal(st_.block(1), blocks[1])
    D = teacher_for(st_, 2).D
    np.testing.assert_array_equal(D, [[0, 0, 1, 1, 1, 1, 0], [1, 1, 0, 0, 0, 0, 1]])
    sub = st_.subset([2, 0])
    assert sub.spans == [(0, 1), (1, 3)] and list(sub.labels) == [1, 1]
    with pytest.raises(ValueError):
        assemble_states([np.ones((3, 2)), np.ones((4, 2))], [0, 1])
    with pytest.raises(ValueError):
        teacher_for(st_, 1)


def test_readout_identity():
    D = np.random.default_rng(0).normal(size=(2, 5))
    np.testing.assert_allclose(train_readout(np.eye(5), D).W_out, D, atol=1e-14)


def test_readout_duplicated_feature():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(3, 12))
    D = rng.normal(size=(2, 12))
    Xd = np.vstack([X, X[:1]])
    w = train_readout(X, D).W_out
    wd = train_readout(Xd, D).W_out
    assert readout_objective(wd, Xd, D) == pytest.approx(readout_objective(w, X, D), rel=1e-10)
    # the minimum-norm solution splits the weight evenly over the copies
    np.testing.assert_allclose(wd[:, 0], wd[:, 3], rtol=1e-10)
    np.testing.assert_allclose(wd[:, 0] + wd[:, 3], w[:, 0], rtol=1e-10)


@pytest.mark.parametrize("ridge", [0.0, 1e-3, 1.0])
def test_readout_matches_normal_equations(ridge):
    rng = np.random.default_rng(7)
    X = rng.normal(size=(5, 8))
    D = rng.normal(size=(2, 8))
    W = train_readout(X, D, ridge).W_out
    ref = D @ X.T @ np.linalg.inv(X @ X.T + ridge * np.eye(5))
    np.testing.assert_allclose(W, ref, rtol=1e-8, atol=1e-12)


def test_ridge_dual_form_matches_primal():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(30, 8))  # more features than columns
    D = rng.normal(size=(2, 8))
    W = train_readout(X, D, 0.5).W_out
    ref = D @ X.T @ np.linalg.inv(X @ X.T + 0.5 * np.eye(30))
    np.testing.assert_allclose(W, ref, rtol=1e-8, atol=1e-12)


def test_readout_is_optimal():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(6, 40))
    D = rng.normal(size=(3, 40))
    W = train_readout(X, D).W_out
    best = readout_objective(W, X, D)
    for _ in range(20):
        assert readout_objective(W + 1e-3 * rng.normal(size=W.shape), X, D) >= best


def test_readout_errors():
    with pytest.raises(ValueError):
        train_readout(np.ones((2, 3)), np.ones((2, 4)))
    with pytest.raises(ValueError):
        train_readout(np.ones((2, 3)), np.ones((2, 3)), ridge=-1)


def test_prediction_rules():
    assert predict(np.eye(2), np.array([[0.2], [0.9]])) == 1
    W = np.eye(3)
    X = np.array([[0, 0, 0], [1, 1, 0], [0, 0, 1.0]])
    assert predict(W, X) == 1
    # tie between classes 0 and 2 goes to the lower index
    assert predict(W, np.array([[1.0, 0.0], [0, 0], [0.0, 1.0]])) == 0
    st_ = assemble_states([X, np.array([[1.0], [0], [0]])], [1, 0])
    np.testing.assert_array_equal(predict_all(W, st_), [1, 0])


def test_stratified_folds():
    labels = np.repeat([0, 1], 100)
    folds = stratified_folds(labels, 10, seed=0)
    for f in range(10):
        assert np.sum(folds == f) == 20
        assert np.sum(labels[folds == f] == 0) == 10
    np.testing.assert_array_equal(folds, stratified_folds(labels, 10, seed=0))
    uneven = stratified_folds(np.repeat([0, 1], 23), 10, seed=0)
    assert np.sum(uneven == 9) == 10  # last fold takes the remainder
    with pytest.raises(ValueError):
        stratified_folds(np.repeat([0, 1], 5), 10)


def test_stratified_split():
    labels = np.repeat([0, 1], 50)
    tr, te = stratified_split(labels, 20, seed=0)
    assert len(tr) == 20 and np.sum(labels[tr] == 0) == 10 and len(te) == 80
    assert not set(tr) & set(te)
    with pytest.raises(ValueError):
        stratified_split(labels, 100)
    with pytest.raises(ValueError):
        stratified_split(labels, 21)


def _separable(n=100, seed=0):
    rng = np.random.default_rng(seed)
    labels = np.repeat([0, 1], n // 2)
    blocks = [np.vstack([rng.normal(5 if c else -5, 1, (1, 3)), np.ones((1, 3))]) for c in labels]
    return assemble_states(blocks, labels)


def test_cross_validation_on_separable_data():
    st_ = _separable()
    res = cross_validate(st_.labels, 10, lambda tr, te: fit_predict(st_.subset(tr), st_.subset(te), 2),
                         seed=1)
    assert np.all(res.fold_accuracies == 1.0) and res.sem == 0.0
    cm = confusion_matrix(res.y_true, res.y_pred, 2)
    assert cm.sum() == 100 and np.trace(cm) == 100
    rs = cross_validate(st_.labels, 5, lambda tr, te: fit_predict(st_.subset(tr), st_.subset(te), 2),
                        seed=1, n_train=20)
    assert len(rs.folds) == 5 and all(len(tr) == 20 for tr, _ in rs.folds)


def test_cv_sem():
    st_ = _separable()
    res = cross_validate(st_.labels, 4, lambda tr, te: np.zeros(len(te), dtype=int), seed=0)
    assert res.mean == pytest.approx(0.5)
    assert res.sem == pytest.approx(np.std(res.fold_accuracies, ddof=1) / 2)


@settings(max_examples=25, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 6)),
              elements=st.floats(-1e6, 1e6, allow_nan=False)))
def test_matrix_csv_round_trip(tmp_path_factory, M):
    path = tmp_path_factory.mktemp("csv") / "m.csv"
    save_matrix_csv(path, M)
    np.testing.assert_array_equal(load_matrix_csv(path), M)
