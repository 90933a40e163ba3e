"""Ground-truth regime graphs and piecewise-stationary VAR(1) series.

Edges may sit on the diagonal (self-lags). Scoring ignores the diagonal, but
self-lags do shape the simulated dynamics.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .linalg import spectral_radius
from .model import GraphSequence, Segmentation, TimeSeries

log = logging.getLogger(__name__)


@dataclass
class GenConfig:
    d: int = 5
    K: int = 3
    T: int = 6000
    edge_prob: float = 0.2
    weight_low: float = 0.3
    weight_high: float = 0.8
    noise_sigma: float = 0.1
    removals: int = 1
    additions: int = 1
    stability_cap: float = 0.99
    rescale_target: float = 0.9
    # Scale of the initial state; None means noise_sigma.
    init_sigma: float | None = None

    def __post_init__(self):
        if self.d < 1 or self.K < 1:
            raise ValueError("d and K must be >= 1")
        if not 0 < self.edge_prob < 1:
            raise ValueError("edge_prob must lie in (0, 1)")
        if not 0 < self.weight_low < self.weight_high:
            raise ValueError("need 0 < weight_low < weight_high")
        if self.noise_sigma < 0 or (self.init_sigma is not None and self.init_sigma < 0):
            raise ValueError("noise scales must be >= 0")
        if not 0 < self.rescale_target < self.stability_cap:
            raise ValueError("need 0 < rescale_target < stability_cap")
        if self.T < 2 * self.K:
            raise ValueError("T must allow at least 2 points per regime")

    def to_dict(self):
        return asdict(self)


@dataclass
class RescaleEvent:
    regime: int
    rho_before: float
    factor: float
    min_magnitude_after: float


@dataclass
class GroundTruth:
    graphs: GraphSequence
    segmentation: Segmentation
    seed: int | None
    gen_config: GenConfig
    rescale_events: list = field(default_factory=list)

    @property
    def patterns(self):
        """Exact nonzero pattern of every truth graph, ``(K, d, d)`` of 0/1."""
        return (self.graphs.graphs != 0).astype(np.int8)


def stream_seed(master_seed, *keys):
    """Stable 63-bit seed derived from a master seed and any labels."""
    text = ":".join(str(x) for x in (master_seed,) + keys)
    digest = hashlib.blake2b(text.encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big") >> 1


def _signed_weights(n, cfg, rng):
    mag = rng.uniform(cfg.weight_low, cfg.weight_high, size=n)
    sign = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    return mag * sign


def _stabilise(w, cfg, regime=None, events=None):
    rho = spectral_radius(w)
    if rho < cfg.stability_cap:
        return w
    factor = cfg.rescale_target / rho
    w = w * factor
    nz = np.abs(w[w != 0])
    event = RescaleEvent(regime, float(rho), float(factor), float(nz.min()) if nz.size else 0.0)
    log.debug("rescaled truth graph: %s", event)
    if events is not None:
        events.append(event)
    return w


def gen_initial_graph(cfg, rng, events=None):
    """Sparse random graph with signed weights in ``+-[weight_low, weight_high]``,
    rescaled if its spectral radius reaches ``stability_cap``."""
    d = cfg.d
    for _ in range(100):
        mask = rng.random((d, d)) < cfg.edge_prob
        if mask.any():
            break
    w = np.zeros((d, d))
    w[mask] = _signed_weights(int(mask.sum()), cfg, rng)
    return _stabilise(w, cfg, regime=0, events=events)


def evolve_graph(prev, cfg, rng, regime=None, events=None):
    """Apply ``cfg.removals`` edge removals and ``cfg.additions`` additions.

    Additions are drawn from the positions absent in ``prev``, so a removed
    edge is never re-added in the same transition.
    """
    w = np.array(prev, dtype=float)
    flat = w.reshape(-1)
    present = np.flatnonzero(flat)
    absent = np.flatnonzero(flat == 0)
    n_rm = min(cfg.removals, present.size)
    if n_rm:
        flat[rng.choice(present, size=n_rm, replace=False)] = 0.0
    n_add = min(cfg.additions, absent.size)
    if n_add:
        idx = rng.choice(absent, size=n_add, replace=False)
        flat[idx] = _signed_weights(n_add, cfg, rng)
    return _stabilise(w, cfg, regime=regime, events=events)


def make_ground_truth(cfg, rng=None, seed=None):
    """Draw ``cfg.K`` truth graphs, each an edit of its predecessor."""
    if rng is None:
        rng = np.random.default_rng(seed)
    events = []
    graphs = [gen_initial_graph(cfg, rng, events=events)]
    for k in range(1, cfg.K):
        graphs.append(evolve_graph(graphs[-1], cfg, rng, regime=k, events=events))
    return GroundTruth(
        graphs=GraphSequence(np.stack(graphs)),
        segmentation=Segmentation.equal(cfg.T, cfg.K),
        seed=seed,
        gen_config=cfg,
        rescale_events=events,
    )


def simulate(gt, rng=None, seed=None):
    """Run the piecewise VAR(1) recursion through every regime.

    The state carries over regime boundaries: ``x[t + 1]`` uses the graph
    of the regime containing ``t + 1``.
    """
    if rng is None:
        rng = np.random.default_rng(seed)
    cfg = gt.gen_config
    seg = gt.segmentation
    d, T = gt.graphs.d, seg.T
    sigma = cfg.noise_sigma
    init_sigma = sigma if cfg.init_sigma is None else cfg.init_sigma
    noise = rng.standard_normal((T, d))
    x = np.empty((T, d))
    x[0] = init_sigma * noise[0]
    for k in range(seg.K):
        lo, hi = seg.bounds(k)
        w = gt.graphs[k]
        for t in range(max(lo, 1), hi):
            x[t] = x[t - 1] @ w + sigma * noise[t]
    return TimeSeries(x, seg)


def make_dataset(cfg, seed):
    """Truth and series from independent child streams of ``seed``."""
    truth_ss, sim_ss = np.random.SeedSequence(seed).spawn(2)
    gt = make_ground_truth(cfg, rng=np.random.default_rng(truth_ss))
    gt.seed = seed
    ts = simulate(gt, rng=np.random.default_rng(sim_ss))
    return gt, ts
