"""
Tests for CSV ingestion, synthetic generators and splits
"""

import numpy as np
import pytest

from app.core.errors import EmptyDatasetError, NoLabeledSamplesError, ParseError, SplitError, UsageError
from app.schemas.dataset import Dataset, SplitSpec
from app.services.data_service import (
    load_csv, make_synthetic, save_csv, split, split_fraction, split_holdout, standardize
)


def write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestLoadCsv:
    def test_single_row(self, tmp_path):
        ds = load_csv(write(tmp_path, "1.0,2.0,A\n"))
        assert (ds.n, ds.d, ds.n_classes) == (1, 2, 1)
        assert ds.class_names == ["A"]
        assert ds.labels.tolist() == [1]

    def test_invalid_utf8(self, tmp_path):
        path = tmp_path / "binary.csv"
        path.write_bytes(b"\xff\xfe1.0,2.0,a\n")
        with pytest.raises(ParseError, match="UTF-8"):
            load_csv(path)

    def test_all_unlabeled(self, tmp_path):
        with pytest.raises(NoLabeledSamplesError, match="no labeled samples"):
            load_csv(write(tmp_path, "1.0,2.0,?\n3.0,4.0,?\n"))

    def test_unlabeled_markers(self, tmp_path):
        ds = load_csv(write(tmp_path, "1,2,a\n3,4,?\n5,6,\n7,8,b\n"))
        assert ds.labels.tolist() == [1, 0, 0, 2]
        assert ds.l == 2

    def test_custom_marker(self, tmp_path):
        ds = load_csv(write(tmp_path, "1,2,a\n3,4,none\n"), unlabeled_marker="none")
        assert ds.labels.tolist() == [1, 0]

    def test_empty_file(self, tmp_path):
        with pytest.raises(EmptyDatasetError):
            load_csv(write(tmp_path, ""))

    def test_header_only(self, tmp_path):
        with pytest.raises(EmptyDatasetError):
            load_csv(write(tmp_path, "x1,x2,label\n"))

    def test_too_many_fields(self, tmp_path):
        with pytest.raises(ParseError) as info:
            load_csv(write(tmp_path, "1,2,a\n1,2,3,b\n"))
        assert info.value.row == 2

    def test_too_few_fields(self, tmp_path):
        with pytest.raises(ParseError) as info:
            load_csv(write(tmp_path, "1,2,a\n3,4,b\n5,a\n"))
        assert info.value.row == 3

    def test_non_numeric_feature(self, tmp_path):
        with pytest.raises(ParseError):
            load_csv(write(tmp_path, "1,2,a\n3,oops,b\n"))

    def test_header_and_named_label_column(self, tmp_path):
        ds = load_csv(write(tmp_path, "cls,f1,f2\nb,1,2\na,3,4\n"), label_column="cls")
        assert ds.class_names == ["a", "b"]
        assert ds.labels.tolist() == [2, 1]
        np.testing.assert_array_equal(ds.samples, [[1.0, 2.0], [3.0, 4.0]])

    @pytest.mark.parametrize("column", [0, -3, "0"])
    def test_first_column_label(self, tmp_path, column):
        ds = load_csv(write(tmp_path, "0,1,2\n1,3,4\n"), label_column=column)
        np.testing.assert_array_equal(ds.samples, [[1.0, 2.0], [3.0, 4.0]])
        assert ds.n_classes == 2

    def test_numeric_labels_sorted_numerically(self, tmp_path):
        ds = load_csv(write(tmp_path, "1,10\n2,9\n3,2\n"))
        assert ds.class_names == ["2", "9", "10"]
        assert ds.labels.tolist() == [3, 2, 1]

    def test_unknown_label_column(self, tmp_path):
        with pytest.raises(UsageError):
            load_csv(write(tmp_path, "a,b\n1,x\n"), label_column="missing")


class TestSaveCsv:
    def test_round_trip_is_bit_exact(self, tmp_path, rng):
        samples = rng.normal(size=(25, 3)) * 1e3
        labels = np.tile([1, 2, 0, 3, 0], 5)
        ds = Dataset.from_arrays(samples, labels, class_names=["x", "y", "z"])
        back = load_csv(save_csv(ds, tmp_path / "out.csv"))
        assert np.array_equal(back.samples, ds.samples)
        assert back.labels.tolist() == ds.labels.tolist()
        assert back.class_names == ds.class_names

    def test_writes_truth_when_asked(self, tmp_path, two_arcs_split):
        path = save_csv(two_arcs_split, tmp_path / "truth.csv", use_truth=True)
        back = load_csv(path)
        assert back.l == back.n


class TestMakeSynthetic:
    @pytest.mark.parametrize("kind", ["two-arcs", "arch-and-s", "circles", "noisy-gap"])
    def test_class_balance(self, kind):
        ds = make_synthetic(kind, 50, noise=0.05, seed=7)
        assert (ds.n, ds.d, ds.n_classes) == (100, 2, 2)
        assert np.bincount(ds.labels).tolist() == [0, 50, 50]
        assert ds.l == ds.n

    def test_full_sized_set(self):
        ds = make_synthetic("two-arcs", 500, noise=0.05, seed=7)
        assert ds.n == 1000

    def test_deterministic(self):
        a = make_synthetic("noisy-gap", 40, noise=0.05, seed=3)
        b = make_synthetic("noisy-gap", 40, noise=0.05, seed=3)
        assert np.array_equal(a.samples, b.samples)

    def test_seed_changes_samples(self):
        a = make_synthetic("two-arcs", 40, seed=1)
        b = make_synthetic("two-arcs", 40, seed=2)
        assert not np.array_equal(a.samples, b.samples)

    def test_zero_noise_points_on_curves(self):
        ds = make_synthetic("two-arcs", 500, noise=0.0, seed=7)
        upper = ds.samples[ds.labels == 1]
        lower = ds.samples[ds.labels == 2]
        np.testing.assert_allclose(np.hypot(upper[:, 0], upper[:, 1]), 1.0, atol=1e-12)
        assert np.all(upper[:, 1] >= -1e-12)
        np.testing.assert_allclose(np.hypot(1.0 - lower[:, 0], 0.5 - lower[:, 1]), 1.0, atol=1e-12)

    def test_bridging_points_leave_the_curves(self):
        ds = make_synthetic("two-arcs", 100, noise=0.0, seed=7, bridging=20)
        upper = ds.samples[ds.labels == 1]
        off_curve = np.abs(np.hypot(upper[:, 0], upper[:, 1]) - 1.0) > 1e-9
        assert off_curve.sum() == 10

    def test_unknown_kind(self):
        with pytest.raises(UsageError):
            make_synthetic("spiral", 50)

    def test_too_few_points(self):
        with pytest.raises(UsageError):
            make_synthetic("two-arcs", 5)


class TestSplit:
    def test_three_per_class(self, two_arcs):
        ds = split(two_arcs, SplitSpec(labels_per_class=3, seed=11))
        assert ds.l == 6
        assert np.bincount(ds.labels, minlength=3)[1:].tolist() == [3, 3]
        assert np.array_equal(ds.truth, two_arcs.labels)

    def test_same_seed_same_indices(self, two_arcs):
        spec = SplitSpec(labels_per_class=4, seed=99)
        a = split(two_arcs, spec)
        b = split(two_arcs, spec)
        assert np.array_equal(a.labeled_indices, b.labeled_indices)

    def test_class_size_keeps_all(self, two_arcs):
        ds = split(two_arcs, SplitSpec(labels_per_class=30, seed=0))
        assert ds.l == ds.n

    def test_too_many_labels(self, two_arcs):
        with pytest.raises(SplitError):
            split(two_arcs, SplitSpec(labels_per_class=31, seed=0))

    def test_labels_agree_with_truth(self, two_arcs_split):
        labeled = two_arcs_split.labeled_indices
        assert np.array_equal(two_arcs_split.labels[labeled], two_arcs_split.truth[labeled])

    def test_split_fraction(self, two_arcs):
        ds = split_fraction(two_arcs, 0.1, seed=0)
        assert ds.l == 6

    def test_split_holdout(self, two_arcs):
        base, held, truth = split_holdout(two_arcs, 10, seed=0)
        assert base.n == 50
        assert held.shape == (10, 2)
        assert truth.shape == (10,)
        assert base.truth is not None


def test_standardize(rng):
    samples = np.column_stack([rng.normal(5.0, 3.0, 50), np.full(50, 2.0)])
    ds = standardize(Dataset.from_arrays(samples, np.ones(50, dtype=int)))
    np.testing.assert_allclose(ds.samples.mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(ds.samples[:, 0].std(), 1.0)
    assert np.all(ds.samples[:, 1] == 0.0)


def test_dataset_is_read_only(two_arcs):
    with pytest.raises(ValueError):
        two_arcs.samples[0, 0] = 1.0


def test_non_finite_sample_names_its_row():
    with pytest.raises(ValueError, match="row 1"):
        Dataset.from_arrays([[0.0, 1.0], [np.inf, 2.0]], [1, 0])
