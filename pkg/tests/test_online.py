"""
Tests for sequential classification and leave-one-out reconstruction
"""

import numpy as np
import pytest

from app.core.errors import DataError, DimensionError, ParseError, UsageError
from app.services.classify_service import classify_point
from app.services.online_service import OnlineSession, read_stream, reconstruct_leave_one_out
from app.services.trw_service import save_model


@pytest.fixture
def session(fitted_model):
    return OnlineSession(fitted_model)


class TestClassifyOnline:
    def test_existing_unlabeled_point(self, session, fitted_model):
        ds = fitted_model.dataset
        p = int(ds.unlabeled_indices[4])
        result = session.classify_online(ds.samples[p])

        assert result.neighbors[0] == p
        assert result.z.z[0] == 1.0
        assert result.recon_error == 0.0
        np.testing.assert_allclose(result.weights_to_labeled, fitted_model.trw.sym_weights[p, ds.labeled_indices])
        predicted, _ = classify_point(fitted_model, p)
        assert result.predicted_class == predicted

    def test_existing_labeled_point_keeps_its_label(self, fitted_model):
        ds = fitted_model.dataset
        session = OnlineSession(fitted_model.model_copy(update={"k": 1}))
        for q in ds.labeled_indices:
            assert session.classify_online(ds.samples[q]).predicted_class == ds.labels[q]

    def test_weights_nonnegative(self, session, rng):
        for x in rng.uniform(-1.0, 2.0, size=(10, 2)):
            result = session.classify_online(x)
            assert np.all(result.weights_to_labeled >= 0)
            assert result.weights_to_labeled.shape == (session.model.dataset.l,)

    def test_model_is_not_modified(self, session, fitted_model, rng):
        before = fitted_model.trw.sym_weights.tobytes()
        session.batch_online(rng.uniform(-1.0, 2.0, size=(5, 2)))
        assert fitted_model.trw.sym_weights.tobytes() == before

    def test_full_rows_match_restricted(self, fitted_model, rng):
        restricted = OnlineSession(fitted_model, k_recon=4)
        full = OnlineSession(fitted_model, k_recon=4, full_rows=True)
        for x in rng.uniform(-1.0, 2.0, size=(5, 2)):
            a = restricted.classify_online(x)
            b = full.classify_online(x)
            np.testing.assert_allclose(a.weights_to_labeled, b.weights_to_labeled, rtol=1e-12)
            assert a.predicted_class == b.predicted_class

    def test_k_recon_clipped_to_n(self, fitted_model):
        session = OnlineSession(fitted_model, k_recon=10_000)
        assert session.k_recon == fitted_model.dataset.n

    def test_wrong_dimension(self, session):
        with pytest.raises(DimensionError):
            session.classify_online([0.0, 0.0, 0.0])

    def test_non_finite(self, session):
        with pytest.raises(DataError):
            session.classify_online([np.nan, 0.0])


class TestBatchOnline:
    def test_order_independent(self, session, rng):
        xs = rng.uniform(-1.0, 2.0, size=(8, 2))
        forward, _ = session.batch_online(xs)
        backward, _ = session.batch_online(xs[::-1])
        assert [r.predicted_class for r in forward] == [r.predicted_class for r in backward][::-1]
        for a, b in zip(forward, backward[::-1]):
            assert np.array_equal(a.weights_to_labeled, b.weights_to_labeled)

    def test_empty_batch(self, session):
        assert session.batch_online([]) == ([], [])

    def test_stats(self, fitted_model, rng):
        session = OnlineSession(fitted_model)
        _, timings = session.batch_online(rng.uniform(size=(3, 2)))
        stats = session.stats
        assert stats.points_classified == 3
        assert stats.cumulative_seconds == pytest.approx(sum(timings))


class TestStreams:
    def test_session_from_dump(self, tmp_path, fitted_model, rng):
        path = save_model(fitted_model.trw, tmp_path / "model.bin")
        reloaded = OnlineSession.from_dump(path, fitted_model.dataset, k=fitted_model.k)
        original = OnlineSession(fitted_model)
        for x in rng.uniform(-1.0, 2.0, size=(4, 2)):
            a = original.classify_online(x)
            b = reloaded.classify_online(x)
            assert a.predicted_class == b.predicted_class
            assert np.array_equal(a.weights_to_labeled, b.weights_to_labeled)

    def test_classify_csv(self, tmp_path, session):
        path = tmp_path / "stream.csv"
        path.write_text("0.1,0.2\n1.0,-0.3\n0.5,0.5\n")
        streamed = [r.predicted_class for r in session.classify_csv(path, chunk_rows=2)]
        direct = [session.classify_online(x).predicted_class for x in ([0.1, 0.2], [1.0, -0.3], [0.5, 0.5])]
        assert streamed == direct

    def test_empty_stream(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        assert list(read_stream(path)) == []

    def test_malformed_stream(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("0.1,0.2\nabc,0.3\n")
        with pytest.raises(ParseError):
            list(read_stream(path))

    def test_missing_stream(self, tmp_path):
        with pytest.raises(DataError):
            list(read_stream(tmp_path / "absent.csv"))


class TestLeaveOneOut:
    def test_k_one_copies_nearest_neighbor(self, fitted_model):
        ds = fitted_model.dataset
        x_hat, _, _ = reconstruct_leave_one_out(fitted_model, 1)
        dist = ((ds.samples[:, None, :] - ds.samples[None, :, :]) ** 2).sum(axis=2)
        np.fill_diagonal(dist, np.inf)
        np.testing.assert_array_equal(x_hat, ds.samples[dist.argmin(axis=1)])

    def test_all_columns_by_default(self, fitted_model):
        ds = fitted_model.dataset
        _, truth, recon = reconstruct_leave_one_out(fitted_model, 3)
        assert truth.shape == recon.shape == (ds.n, ds.n)

    def test_masked_columns(self, fitted_model):
        ds = fitted_model.dataset
        _, truth, recon = reconstruct_leave_one_out(fitted_model, 3, columns="all")
        assert truth.shape == recon.shape == (ds.n, ds.n)
        assert np.all(np.diag(truth) == 0.0)
        assert np.all(np.diag(recon) == 0.0)

    def test_labeled_columns(self, fitted_model):
        ds = fitted_model.dataset
        _, truth, recon = reconstruct_leave_one_out(fitted_model, 3, columns="labeled")
        assert truth.shape == recon.shape == (ds.n, ds.l)
        assert np.all(recon >= 0)

    @pytest.mark.parametrize("k", [0, 60])
    def test_k_range(self, fitted_model, k):
        with pytest.raises(UsageError):
            reconstruct_leave_one_out(fitted_model, k)
