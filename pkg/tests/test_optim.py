import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import cyclic_generator, deterministic_series
from ecrnet.evaluate import score_sequence, score_static
from ecrnet.linalg import DimensionError, ParameterError, spectral_radius, threshold_adjacency
from ecrnet.model import GraphSequence, HyperParams, Segmentation, TimeSeries, ecr_loss, lagged_pairs, recon_loss
from ecrnet.optim import (
    MomentState,
    NonFiniteError,
    adam_step,
    fit_ecr,
    fit_static,
    init_graphs,
    project_stable,
)
from ecrnet.simgen import GenConfig, make_dataset

NOISELESS = HyperParams(alpha=1e-6, gamma=1e-6)


class TestAdam:
    def test_zero_gradient(self):
        p = np.array([[0.3, -0.2], [1.0, 0.0]])
        state = MomentState.zeros_like(p)
        q = p
        for _ in range(100):
            q = adam_step(q, np.zeros_like(p), state, 0.1)
        assert np.array_equal(q, p)
        assert state.step == 100

    def test_scalar_quadratic(self):
        w = np.array([0.0])
        state = MomentState.zeros_like(w)
        for _ in range(500):
            w = adam_step(w, 2 * (w - 3), state, 0.1)
        assert abs(w[0] - 3) < 1e-3

    @given(st.floats(1e-6, 1e6), st.booleans())
    @settings(max_examples=50, deadline=None)
    def test_first_step_is_eta(self, scale, negative):
        g = np.array([scale * (-1 if negative else 1), 0.5 * scale])
        state = MomentState.zeros_like(g)
        step = np.abs(adam_step(np.zeros(2), g, state, 0.01))
        assert np.all(step >= 0.9 * 0.01) and np.all(step <= 0.01)

    def test_non_finite_reports_regime(self):
        g = np.zeros((3, 2, 2))
        g[2, 1, 0] = np.nan
        with pytest.raises(NonFiniteError) as info:
            adam_step(np.zeros_like(g), g, MomentState.zeros_like(g), 0.01)
        assert info.value.regime == 2

    def test_bad_inputs(self):
        with pytest.raises(DimensionError):
            adam_step(np.zeros(2), np.zeros(3), MomentState.zeros_like(np.zeros(2)), 0.1)
        with pytest.raises(ParameterError):
            adam_step(np.zeros(2), np.zeros(2), MomentState.zeros_like(np.zeros(2)), 0.0)


class TestProjection:
    def test_inside_unchanged(self):
        w = np.diag([0.5, -0.2, 0.1])
        assert np.array_equal(project_stable(w, 0.99), w)

    def test_diagonal_example(self):
        out = project_stable(np.diag([2.0, 0.1]), 0.99)
        assert np.allclose(out, np.diag([0.99, 0.0495]), atol=1e-15)

    def test_zero(self):
        assert np.array_equal(project_stable(np.zeros((4, 4)), 0.99), np.zeros((4, 4)))

    def test_stack_independent(self):
        ws = np.stack([np.diag([2.0, 0.1]), np.diag([0.5, 0.2])])
        out = project_stable(ws, 0.99)
        assert np.allclose(out[0], np.diag([0.99, 0.0495]))
        assert np.array_equal(out[1], ws[1])

    @given(st.integers(0, 10_000), st.floats(0.1, 5.0))
    @settings(max_examples=60, deadline=None)
    def test_bound(self, seed, scale):
        w = scale * np.random.default_rng(seed).standard_normal((6, 6))
        assert spectral_radius(project_stable(w, 0.99)) <= 0.99 + 1e-9

    def test_errors(self):
        with pytest.raises(DimensionError):
            project_stable(np.zeros((2, 3)), 0.99)
        with pytest.raises(ParameterError):
            project_stable(np.eye(2), 1.0)


class TestFitEcr:
    def test_noiseless_single_regime(self):
        w_true = cyclic_generator(5)
        ts = deterministic_series([w_true], [400], seed=3)
        gs, report = fit_ecr(ts, NOISELESS, seed=0)
        x, y = lagged_pairs(ts, 0)
        assert recon_loss(gs[0], x, y) < 1e-6
        # Least-squares oracle recovers the generator on noiseless data.
        ols = np.linalg.lstsq(x, y, rcond=None)[0]
        assert np.array_equal(threshold_adjacency(ols, 0.3), threshold_adjacency(w_true, 0.3))
        assert np.array_equal(threshold_adjacency(gs[0], 0.3), threshold_adjacency(ols, 0.3))

    def test_init_at_truth(self):
        gt, ts = make_dataset(GenConfig(d=5, K=3, T=3000), seed=5)
        hp = HyperParams()
        gs, report = fit_ecr(ts, hp, init=gt.graphs)
        drift = hp.alpha * np.abs(gt.graphs.graphs).sum()
        assert max(report.losses) <= report.losses[0] + drift
        assert report.final_loss <= report.losses[0]
        assert score_sequence(gt, gs).total_shd == 0

    def test_zero_data_patience(self):
        ts = TimeSeries(np.zeros((300, 4)), Segmentation.equal(300, 3))
        init = init_graphs(3, 4, seed=1)
        gs, report = fit_ecr(ts, HyperParams(), init=init)
        assert report.stop_reason == "patience"
        assert report.iterations < HyperParams().max_iters / 2
        assert np.abs(gs.graphs).max() < 0.01
        assert np.abs(gs.graphs).sum() < np.abs(init).sum()

    def test_projection_every_step(self):
        gt, ts = make_dataset(GenConfig(d=6, K=3, T=900), seed=2)
        seen = []

        def check(it, params):
            seen.append(float(max(spectral_radius(w) for w in params)))

        fit_ecr(ts, HyperParams(max_iters=300), init=np.stack([np.eye(6) * 3] * 3), on_step=check)
        assert len(seen) > 0 and max(seen) <= 0.99 + 1e-9

    def test_deterministic(self, small_series):
        hp = HyperParams(max_iters=200)
        _, a = fit_ecr(small_series, hp, seed=4)
        _, b = fit_ecr(small_series, hp, seed=4)
        assert a.losses == b.losses

    def test_best_so_far(self, small_series):
        gs, report = fit_ecr(small_series, HyperParams(eta=0.2, max_iters=300), seed=1)
        best = report.best_losses
        assert all(b2 <= b1 for b1, b2 in zip(best, best[1:]))
        assert report.final_loss == min(report.losses)
        assert ecr_loss(gs, small_series, HyperParams(eta=0.2)) == pytest.approx(report.final_loss, rel=1e-10)

    def test_decoupling(self, small_series):
        hp = HyperParams(gamma=0.0, max_iters=400, patience=10_000)
        init = init_graphs(small_series.K, small_series.d, seed=9)
        _, joint = fit_ecr(small_series, hp, init=init)
        total = 0.0
        for k in range(small_series.K):
            lo, hi = small_series.segmentation.bounds(k)
            start = max(lo - 1, 0)
            part = TimeSeries(small_series.data[start:hi], Segmentation((0, hi - start)))
            _, rep = fit_ecr(part, hp, init=init[k : k + 1])
            total += rep.final_loss
        assert joint.final_loss == pytest.approx(total, abs=1e-8)

    def test_bad_init_shape(self, small_series):
        with pytest.raises(DimensionError):
            fit_ecr(small_series, init=np.zeros((2, 4, 4)))


def _opposite_edge_series(n=1500, sigma=0.1, seed=0):
    rng = np.random.default_rng(seed)
    w1 = np.zeros((3, 3))
    w1[0, 1] = 0.6
    w2 = -w1
    x = np.empty((2 * n, 3))
    x[0] = sigma * rng.standard_normal(3)
    for t in range(1, 2 * n):
        w = w1 if t < n else w2
        x[t] = x[t - 1] @ w + sigma * rng.standard_normal(3)
    return GraphSequence(np.stack([w1, w2])), TimeSeries(x, Segmentation((0, n, 2 * n)))


class TestFitStatic:
    def test_single_regime_matches_ecr(self):
        ts = deterministic_series([cyclic_generator(5)], [400], seed=1)
        w_static, _ = fit_static(ts, NOISELESS, seed=2)
        gs, _ = fit_ecr(ts, NOISELESS, seed=2)
        assert np.array_equal(threshold_adjacency(w_static, 0.3), threshold_adjacency(gs[0], 0.3))

    def test_opposite_sign_edge(self):
        truth, ts = _opposite_edge_series()
        w_static, _ = fit_static(ts)
        gs, _ = fit_ecr(ts)
        assert abs(w_static[0, 1]) < 0.3
        assert score_static(truth, w_static).total_shd >= 2
        assert score_sequence(truth, gs).total_shd == 0

    def test_zero_data(self):
        ts = TimeSeries(np.zeros((200, 3)), Segmentation.equal(200, 2))
        init = init_graphs(1, 3, seed=0)[0]
        w, report = fit_static(ts, HyperParams(), init=init)
        assert report.stop_reason == "patience"
        assert np.abs(w).max() < 0.01
        assert np.abs(w).sum() < np.abs(init).sum()

    def test_bad_init_shape(self, small_series):
        with pytest.raises(DimensionError):
            fit_static(small_series, init=np.zeros((3, 3)))
