import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ecrnet.evaluate import shd
from ecrnet.linalg import spectral_radius, threshold_adjacency
from ecrnet.model import GraphSequence, Segmentation, lagged_pairs, recon_loss
from ecrnet.simgen import (
    GenConfig,
    GroundTruth,
    evolve_graph,
    gen_initial_graph,
    make_dataset,
    make_ground_truth,
    simulate,
    stream_seed,
)


def pattern(w):
    return (np.asarray(w) != 0).astype(int)


class TestInitialGraph:
    @given(st.integers(0, 2**32 - 1), st.sampled_from([5, 7, 10]), st.floats(0.1, 0.9))
    @settings(max_examples=80, deadline=None)
    def test_stable(self, seed, d, p):
        w = gen_initial_graph(GenConfig(d=d, K=1, T=10, edge_prob=p), np.random.default_rng(seed))
        assert spectral_radius(w) < 0.99

    def test_edge_density(self):
        rng = np.random.default_rng(0)
        cfg = GenConfig(d=5, K=1, T=10)
        counts = [np.count_nonzero(gen_initial_graph(cfg, rng)) for _ in range(1000)]
        assert 4.0 <= np.mean(counts) <= 6.0

    def test_weight_range_without_rescale(self):
        rng = np.random.default_rng(1)
        cfg = GenConfig(d=5, K=1, T=10)
        for _ in range(200):
            events = []
            w = gen_initial_graph(cfg, rng, events=events)
            mags = np.abs(w[w != 0])
            if not events:
                assert np.all((mags >= 0.3) & (mags <= 0.8))
            else:
                assert spectral_radius(w) == pytest.approx(0.9, abs=1e-12)

    def test_vanishing_edge_prob(self):
        w = gen_initial_graph(GenConfig(d=5, K=1, T=10, edge_prob=1e-12), np.random.default_rng(0))
        assert not w.any()

    def test_config_validation(self):
        for bad in ({"edge_prob": 0.0}, {"weight_low": 0.9}, {"noise_sigma": -1.0}, {"T": 3, "K": 2}):
            with pytest.raises(ValueError):
                GenConfig(**bad)


class TestEvolveGraph:
    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=80, deadline=None)
    def test_two_flips(self, seed):
        rng = np.random.default_rng(seed)
        cfg = GenConfig(d=5, K=2, T=10)
        prev = gen_initial_graph(cfg, rng)
        if not prev.any():
            return
        nxt = evolve_graph(prev, cfg, rng)
        assert np.count_nonzero(nxt) == np.count_nonzero(prev)
        assert np.sum(pattern(prev) != pattern(nxt)) == 2
        assert spectral_radius(nxt) < 0.99

    def test_from_zero(self):
        cfg = GenConfig(d=5, K=2, T=10)
        nxt = evolve_graph(np.zeros((5, 5)), cfg, np.random.default_rng(0))
        assert np.count_nonzero(nxt) == 1

    def test_rescale_preserves_pattern(self):
        cfg = GenConfig(d=3, K=2, T=10)
        prev = np.array([[0.8, 0.0, 0.0], [0.0, 0.8, 0.0], [0.0, 0.0, 0.0]])
        for seed in range(50):
            events = []
            nxt = evolve_graph(prev, cfg, np.random.default_rng(seed), regime=1, events=events)
            raw = evolve_graph(prev, GenConfig(d=3, K=2, T=10, stability_cap=50.0, rescale_target=10.0),
                               np.random.default_rng(seed))
            assert np.array_equal(pattern(nxt), pattern(raw))
            if events:
                assert np.allclose(nxt, raw * events[0].factor)
                assert events[0].min_magnitude_after == pytest.approx(np.abs(nxt[nxt != 0]).min())

    def test_ground_truth_chain(self):
        for seed in range(20):
            gt = make_ground_truth(GenConfig(d=7, K=10, T=100), seed=seed)
            for k in range(9):
                a, b = gt.patterns[k], gt.patterns[k + 1]
                if a.any():
                    assert np.sum(a != b) == 2
            assert all(spectral_radius(w) < 0.99 for w in gt.graphs)


class TestSimulate:
    def test_zero_everything(self):
        cfg = GenConfig(d=4, K=2, T=40, noise_sigma=0.0)
        gt = GroundTruth(GraphSequence(np.zeros((2, 4, 4))), Segmentation.equal(40, 2), 0, cfg)
        assert not simulate(gt, seed=0).data.any()

    def test_noiseless_recursion(self):
        cfg = GenConfig(d=5, K=1, T=60, noise_sigma=0.0, init_sigma=1.0)
        gt = make_ground_truth(cfg, seed=3)
        ts = simulate(gt, seed=4)
        assert np.allclose(ts.data[1:], ts.data[:-1] @ gt.graphs[0], rtol=0, atol=1e-15)
        x, y = lagged_pairs(ts, 0)
        assert recon_loss(gt.graphs[0], x, y) == pytest.approx(0.0, abs=1e-28)

    def test_state_carries_over(self):
        cfg = GenConfig(d=3, K=2, T=20, noise_sigma=0.0, init_sigma=1.0)
        gt = make_ground_truth(cfg, seed=1)
        ts = simulate(gt, seed=1)
        # First point of regime 1 is produced from the last point of regime 0.
        assert np.allclose(ts.data[10], ts.data[9] @ gt.graphs[1])

    def test_deterministic(self):
        cfg = GenConfig(d=5, K=3, T=300)
        a = make_dataset(cfg, 11)[1].data
        b = make_dataset(cfg, 11)[1].data
        c = make_dataset(cfg, 12)[1].data
        assert a.tobytes() == b.tobytes()
        assert not np.array_equal(a, c)

    @pytest.mark.parametrize("T,K", [(6000, 3), (6001, 3), (20000, 10), (103, 10)])
    def test_regime_lengths(self, T, K):
        gt, ts = make_dataset(GenConfig(d=3, K=K, T=T), 0)
        lengths = ts.segmentation.lengths()
        assert lengths.sum() == T and ts.data.shape == (T, 3)
        assert np.all(np.abs(lengths - T / K) <= 1)

    @pytest.mark.parametrize("seed", range(3))
    def test_least_squares_recovery(self, seed):
        sigma = 0.1
        gt, ts = make_dataset(GenConfig(d=5, K=3, T=6000, noise_sigma=sigma), seed)
        for k in range(3):
            x, y = lagged_pairs(ts, k)
            ols = np.linalg.lstsq(x, y, rcond=None)[0]
            # Standard error of each coefficient row scales with sigma / sqrt(n).
            se = sigma * np.sqrt(np.diag(np.linalg.inv(x.T @ x)))[:, None]
            z = np.abs(ols - gt.graphs[k]) / se
            # 3 se covers 99.7% of entries; allow a rare excursion among 25.
            assert np.mean(z <= 3) >= 0.95 and z.max() < 4.5
            true_p = pattern(gt.graphs[k])
            if np.abs(gt.graphs[k][true_p == 1]).min() >= 0.3:
                assert shd(true_p, threshold_adjacency(ols, 0.3)) == 0


def test_stream_seed():
    assert stream_seed(1, "a", 0) == stream_seed(1, "a", 0)
    assert stream_seed(1, "a", 0) != stream_seed(1, "a", 1)
    assert 0 <= stream_seed(2024, "d5_K3_n2000", 4) < 2**63
