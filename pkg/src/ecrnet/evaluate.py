"""Structural Hamming distance scoring of estimated regime graphs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import DimensionError, threshold_adjacency
from .model import GraphSequence


@dataclass
class ScoreCard:
    per_regime_shd: list
    total_shd: int
    tau: float
    tp: int
    fp: int
    fn: int
    tn: int

    def to_dict(self):
        return {
            "per_regime_shd": list(self.per_regime_shd),
            "total_shd": self.total_shd,
            "tau": self.tau,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "tn": self.tn,
        }


def _binary(a, name):
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {a.shape}")
    if not np.all((a == 0) | (a == 1)):
        raise ValueError(f"{name} must be binary")
    return a.astype(np.int8)


def shd(a_true, a_est):
    """Number of off-diagonal positions where two binary adjacencies differ."""
    a_true, a_est = _binary(a_true, "a_true"), _binary(a_est, "a_est")
    if a_true.shape != a_est.shape:
        raise DimensionError(f"shape mismatch: {a_true.shape} vs {a_est.shape}")
    diff = a_true != a_est
    np.fill_diagonal(diff, False)
    return int(diff.sum())


def _score(true_patterns, est_patterns, tau):
    off = ~np.eye(true_patterns.shape[-1], dtype=bool)
    t = true_patterns.astype(bool) & off
    e = est_patterns.astype(bool) & off
    per = [shd(a, b) for a, b in zip(true_patterns, est_patterns)]
    return ScoreCard(
        per_regime_shd=per,
        total_shd=int(sum(per)),
        tau=float(tau),
        tp=int(np.sum(t & e)),
        fp=int(np.sum(~t & e & off)),
        fn=int(np.sum(t & ~e)),
        tn=int(np.sum(~t & ~e & off)),
    )


def truth_patterns(truth):
    """Exact nonzero patterns of the truth graphs.

    Truth is binarised by its nonzero pattern rather than by ``tau``, since
    stability rescaling can shrink true weights below the threshold.
    """
    graphs = getattr(truth, "graphs", truth)
    if isinstance(graphs, GraphSequence):
        graphs = graphs.graphs
    return (np.asarray(graphs) != 0).astype(np.int8)


def score_sequence(truth, est, tau=0.3):
    """Per-regime and total SHD of an estimated sequence against the truth."""
    true_p = truth_patterns(truth)
    est_w = est.graphs if isinstance(est, GraphSequence) else np.asarray(est, dtype=float)
    if est_w.ndim == 2:
        est_w = est_w[None]
    if est_w.shape != true_p.shape:
        raise DimensionError(f"estimate shape {est_w.shape} does not match truth {true_p.shape}")
    est_p = np.stack([threshold_adjacency(w, tau) for w in est_w])
    return _score(true_p, est_p, tau)


def score_static(truth, w_static, tau=0.3):
    """Score one shared estimate against every regime's truth."""
    true_p = truth_patterns(truth)
    w_static = np.asarray(w_static, dtype=float)
    if w_static.shape != true_p.shape[1:]:
        raise DimensionError(f"estimate shape {w_static.shape} does not match truth {true_p.shape[1:]}")
    est_p = np.broadcast_to(threshold_adjacency(w_static, tau), true_p.shape)
    return _score(true_p, est_p, tau)
