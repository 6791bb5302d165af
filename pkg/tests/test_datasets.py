import logging

import numpy as np
import pytest

from memrc.harness.datasets import (
    DatasetError,
    LabeledDataset,
    gen_digit_surrogate,
    gen_ucr_surrogate,
    gen_waveform_dataset,
    load_features,
    load_ucr,
    load_ucr_split,
    triangle_wave,
    write_features,
    write_ucr,
)


def test_waveform_defaults():
    ds = gen_waveform_dataset(seed=0)
    assert len(ds) == 200 and list(ds.class_counts()) == [100, 100]
    assert all(len(s) == 100 for s in ds.samples)
    f = np.array(ds.meta["frequencies"])
    assert f.min() >= 3.0 and f.max() <= 7.0
    assert np.all(np.abs(np.concatenate(ds.samples)) <= 1.0 + 1e-12)


def test_waveform_zero_delta_shares_frequency():
    ds = gen_waveform_dataset(5, delta=0.0, seed=1)
    assert set(ds.meta["frequencies"]) == {5.0}
    np.testing.assert_allclose(ds.samples[0], ds.samples[1])


def test_triangle_phase():
    # zero and rising at t = 0, peak at a quarter period, like the sine
    assert triangle_wave(0.0, 5.0) == pytest.approx(0.0, abs=1e-12)
    assert triangle_wave(1e-3, 5.0) > 0
    assert triangle_wave(0.05, 5.0) == pytest.approx(1.0)
    assert triangle_wave(0.15, 5.0) == pytest.approx(-1.0)
    t = np.linspace(0, 1, 1001)
    assert np.abs(triangle_wave(t, 3.3)).max() <= 1.0 + 1e-12


def test_waveform_reproducible():
    a, b = gen_waveform_dataset(seed=4), gen_waveform_dataset(seed=4)
    np.testing.assert_array_equal(np.stack(a.samples), np.stack(b.samples))


def test_ucr_round_trip(tmp_path):
    train, _ = gen_ucr_surrogate(seed=0)
    path = tmp_path / "toy_TRAIN.txt"
    write_ucr(path, train)
    back = load_ucr(path)
    np.testing.assert_array_equal(back.labels, train.labels)
    np.testing.assert_array_equal(np.stack(back.samples), np.stack(train.samples))


@pytest.mark.parametrize("delim", ["\t", " ", ","])
def test_ucr_delimiters(tmp_path, delim):
    path = tmp_path / "d.tsv"
    path.write_text(delim.join(["2", "0.5", "1.5"]) + "\n" + delim.join(["1", "-1", "3"]) + "\n")
    ds = load_ucr(path)
    assert list(ds.labels) == [1, 0]
    np.testing.assert_array_equal(ds.samples[1], [-1.0, 3.0])


def test_ucr_errors(tmp_path):
    empty = tmp_path / "empty.txt"
    empty.write_text("")
    with pytest.raises(DatasetError):
        load_ucr(empty)
    bad = tmp_path / "bad.txt"
    bad.write_text("1,2,x\n")
    with pytest.raises(DatasetError):
        load_ucr(bad)
    ragged = tmp_path / "ragged.txt"
    ragged.write_text("1,2,3\n1,2\n")
    with pytest.raises(DatasetError):
        load_ucr(ragged)


def test_ecg200_conventions(tmp_path, caplog):
    train, test = gen_ucr_surrogate(seed=3)
    assert len(train) == 100 and len(test) == 100
    assert list(train.class_counts()) == [31, 69] and list(test.class_counts()) == [36, 64]
    write_ucr(tmp_path / "ECG200_TRAIN.txt", train)
    write_ucr(tmp_path / "ECG200_TEST.txt", test)
    with caplog.at_level(logging.WARNING):
        tr, te = load_ucr_split(tmp_path)
    assert not caplog.records
    assert tr.class_names == ("abnormal", "normal")
    assert len(tr.samples[0]) == 96
    np.testing.assert_array_equal(te.labels, test.labels)
    # wrong counts are flagged
    write_ucr(tmp_path / "ECG200_TEST.txt", test.subset(range(50)))
    with caplog.at_level(logging.WARNING):
        load_ucr(tmp_path / "ECG200_TEST.txt")
    assert "expected ECG200" in caplog.text


def test_missing_split(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_ucr_split(tmp_path)


def test_features_round_trip(tmp_path):
    ds = gen_digit_surrogate(2, seed=0)
    write_features(tmp_path, ds)
    back = load_features(tmp_path, n_f=78, n_classes=10, length_range=(48, 102))
    assert len(back) == 20 and back.n_classes == 10
    np.testing.assert_array_equal(back.samples[5], ds.samples[5])


def test_features_single_short_sample(tmp_path):
    ds = LabeledDataset([np.ones((78, 48))], [3], 10)
    write_features(tmp_path, ds)
    back = load_features(tmp_path, n_f=78, n_classes=10, length_range=(48, 102))
    assert back.samples[0].shape == (78, 48)


def test_features_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_features(tmp_path)
    write_features(tmp_path, LabeledDataset([np.ones((5, 48))], [0], 10))
    with pytest.raises(DatasetError):
        load_features(tmp_path, n_f=78)
    (tmp_path / "manifest.txt").write_text("missing.csv,1\n")
    with pytest.raises(DatasetError):
        load_features(tmp_path)


def test_digit_surrogate_shape():
    ds = gen_digit_surrogate(50, seed=1)
    assert len(ds) == 500 and list(ds.class_counts()) == [50] * 10
    assert all(s.shape[0] == 78 and 48 <= s.shape[1] <= 60 for s in ds.samples)
    np.testing.assert_array_equal(ds.samples[7], gen_digit_surrogate(50, seed=1).samples[7])


def test_labeled_dataset_validation():
    with pytest.raises(DatasetError):
        LabeledDataset([np.ones(3)], [0, 1], 2)
    with pytest.raises(DatasetError):
        LabeledDataset([np.ones(3)], [2], 2)
