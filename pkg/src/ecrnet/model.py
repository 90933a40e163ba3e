"""Data containers and the regime-graph objectives.

Row-vector convention throughout: ``x[t + 1] = x[t] @ W``, so ``W[i, j]`` is
the influence of variable ``i`` at time ``t`` on variable ``j`` at ``t + 1``.
Regimes are indexed from 0.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .linalg import DimensionError, ParameterError, grad_trace_exp_hadamard_sq, trace_exp_hadamard_sq


class DegenerateRegimeError(ValueError):
    """A regime has no lagged pairs to fit."""


@dataclass(frozen=True)
class Segmentation:
    """Contiguous regimes given by boundaries ``0 = t_0 < t_1 < ... < t_K = T``."""

    boundaries: tuple

    def __post_init__(self):
        b = tuple(int(x) for x in self.boundaries)
        object.__setattr__(self, "boundaries", b)
        if len(b) < 2 or b[0] != 0:
            raise ValueError(f"boundaries must start at 0 and hold at least two entries, got {b}")
        for lo, hi in zip(b[:-1], b[1:]):
            if hi - lo < 2:
                raise ValueError(f"regime [{lo}, {hi}) has fewer than 2 time points")

    @classmethod
    def equal(cls, T, K):
        """Split ``T`` points into ``K`` near-equal regimes; the remainder goes
        to the earliest regimes."""
        if K < 1 or T < 2 * K:
            raise ValueError(f"cannot split T={T} into K={K} regimes of >= 2 points")
        base, extra = divmod(T, K)
        lengths = [base + (1 if k < extra else 0) for k in range(K)]
        return cls(tuple(np.concatenate([[0], np.cumsum(lengths)]).tolist()))

    @property
    def K(self):
        return len(self.boundaries) - 1

    @property
    def T(self):
        return self.boundaries[-1]

    def bounds(self, k):
        if not 0 <= k < self.K:
            raise IndexError(f"regime {k} out of range for K={self.K}")
        return self.boundaries[k], self.boundaries[k + 1]

    def lengths(self):
        return np.diff(self.boundaries)

    def regime_of(self, t):
        """Regime containing time index ``t``."""
        if not 0 <= t < self.T:
            raise IndexError(f"time {t} outside [0, {self.T})")
        return int(np.searchsorted(self.boundaries, t, side="right") - 1)


@dataclass
class TimeSeries:
    """A ``T x d`` observation matrix with its regime segmentation."""

    data: np.ndarray
    segmentation: Segmentation

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.ndim != 2:
            raise DimensionError(f"data must be 2-D, got shape {self.data.shape}")
        if self.data.shape[0] != self.segmentation.T:
            raise DimensionError(
                f"data has {self.data.shape[0]} rows but segmentation covers {self.segmentation.T}"
            )
        if not np.all(np.isfinite(self.data)):
            raise ValueError("data contains non-finite values")

    @property
    def T(self):
        return self.data.shape[0]

    @property
    def d(self):
        return self.data.shape[1]

    @property
    def K(self):
        return self.segmentation.K


class GraphSequence:
    """Ordered regime graphs ``W_0, ..., W_{K-1}`` stored as a ``(K, d, d)`` array."""

    def __init__(self, graphs):
        g = np.array(graphs, dtype=float)
        if g.ndim == 2:
            g = g[None]
        if g.ndim != 3 or g.shape[1] != g.shape[2] or g.shape[0] < 1:
            raise DimensionError(f"graphs must stack to (K, d, d), got shape {g.shape}")
        self.graphs = g

    @property
    def K(self):
        return self.graphs.shape[0]

    @property
    def d(self):
        return self.graphs.shape[1]

    def __len__(self):
        return self.K

    def __getitem__(self, k):
        return self.graphs[k]

    def __iter__(self):
        return iter(self.graphs)

    def copy(self):
        return GraphSequence(self.graphs.copy())

    def __repr__(self):
        return f"GraphSequence(K={self.K}, d={self.d})"


@dataclass
class HyperParams:
    alpha: float = 1e-4
    gamma: float = 1e-4
    lambda_acyc: float = 0.0
    eta: float = 0.01
    rho_max: float = 0.99
    tau: float = 0.3
    patience: int = 20
    max_iters: int = 5000
    eval_every: int = 10
    rel_tol: float = 1e-6
    abs_tol: float = 1e-12
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        for name in ("alpha", "gamma", "lambda_acyc", "abs_tol", "rel_tol"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be >= 0")
        if self.eta <= 0:
            raise ParameterError("eta must be > 0")
        if not 0 < self.rho_max < 1:
            raise ParameterError("rho_max must lie in (0, 1)")
        if self.tau <= 0:
            raise ParameterError("tau must be > 0")
        if self.patience < 1 or self.eval_every < 1 or self.max_iters < 0:
            raise ParameterError("patience and eval_every must be >= 1, max_iters >= 0")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1) or self.eps <= 0:
            raise ParameterError("moment decay rates must lie in [0, 1) and eps > 0")

    def replace(self, **changes):
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(changes)
        return HyperParams(**values)


# ---------------------------------------------------------------------------
# per-term losses


def lagged_pairs(ts, k):
    """Regressor/target rows ``(X, Y)`` for regime ``k``.

    A pair ``(x[t], x[t + 1])`` belongs to the regime of its successor
    ``t + 1``, so the pair straddling a boundary is assigned to the later
    regime.
    """
    lo, hi = ts.segmentation.bounds(k)
    start = max(lo, 1)
    return ts.data[start - 1 : hi - 1], ts.data[start:hi]


def _check_pairs(w, x, y):
    w = np.asarray(w, dtype=float)
    if len(x) == 0:
        raise DegenerateRegimeError("regime has no lagged pairs")
    if w.ndim != 2 or w.shape[0] != w.shape[1] or x.shape[1] != w.shape[0] or y.shape != x.shape:
        raise DimensionError(f"shape mismatch: w {w.shape}, X {x.shape}, Y {y.shape}")
    return w


def recon_loss(w, x, y):
    """Mean over pairs of ``||y_t - x_t @ w||^2``."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    w = _check_pairs(w, x, y)
    r = y - x @ w
    return float(np.sum(r * r) / len(x))


def grad_recon(w, x, y):
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    w = _check_pairs(w, x, y)
    return 2.0 * x.T @ (x @ w - y) / len(x)


def sparsity(w):
    return float(np.sum(np.abs(w)))


def grad_sparsity(w):
    # np.sign(0) == 0, which is the subgradient used at exact zeros.
    return np.sign(np.asarray(w, dtype=float))


def adapt_penalty(w_k, w_next):
    """Squared Frobenius distance between consecutive regime graphs."""
    w_k, w_next = np.asarray(w_k, dtype=float), np.asarray(w_next, dtype=float)
    if w_k.shape != w_next.shape:
        raise DimensionError(f"shape mismatch: {w_k.shape} vs {w_next.shape}")
    diff = w_k - w_next
    return float(np.sum(diff * diff))


def grad_adapt_penalty(w_k, w_next):
    """Gradients of :func:`adapt_penalty` with respect to ``w_k`` and ``w_next``."""
    diff = 2.0 * (np.asarray(w_k, dtype=float) - np.asarray(w_next, dtype=float))
    return diff, -diff


# ---------------------------------------------------------------------------
# whole objectives


class RegimeStats:
    """Per-regime sufficient statistics of the lagged pairs.

    The reconstruction loss of regime ``k`` is quadratic in ``W``::

        n_k * L_k(W) = yy_k - 2 <W, xy_k> + <W, xx_k @ W>

    so fitting costs ``O(K d^3)`` per step regardless of ``T``.
    """

    def __init__(self, ts):
        K, d = ts.K, ts.d
        self.xx = np.empty((K, d, d))
        self.xy = np.empty((K, d, d))
        self.yy = np.empty(K)
        self.n = np.empty(K)
        for k in range(K):
            x, y = lagged_pairs(ts, k)
            if len(x) == 0:
                raise DegenerateRegimeError(f"regime {k} has no lagged pairs")
            self.xx[k] = x.T @ x
            self.xy[k] = x.T @ y
            self.yy[k] = np.sum(y * y)
            self.n[k] = len(x)
        self.K, self.d = K, d

    def recon(self, ws):
        """Reconstruction loss of each regime for a ``(K, d, d)`` stack."""
        quad = np.einsum("kij,kij->k", ws, self.xx @ ws)
        cross = np.einsum("kij,kij->k", ws, self.xy)
        return np.maximum(self.yy - 2.0 * cross + quad, 0.0) / self.n

    def grad_recon(self, ws):
        return 2.0 * (self.xx @ ws - self.xy) / self.n[:, None, None]


def _stack(gs):
    return gs.graphs if isinstance(gs, GraphSequence) else np.asarray(gs, dtype=float)


class EcrObjective:
    """Joint regime objective: per-regime reconstruction, L1 and acyclicity
    terms plus the adaptation penalty chaining neighbouring regimes."""

    def __init__(self, ts, hp, stats=None):
        self.hp = hp
        self.stats = stats if stats is not None else RegimeStats(ts)

    def value(self, ws):
        ws = _stack(ws)
        self._check(ws)
        hp = self.hp
        total = float(np.sum(self.stats.recon(ws)))
        if hp.alpha:
            total += hp.alpha * float(np.sum(np.abs(ws)))
        if hp.lambda_acyc:
            total += hp.lambda_acyc * sum(trace_exp_hadamard_sq(w) for w in ws)
        if hp.gamma and len(ws) > 1:
            diff = ws[:-1] - ws[1:]
            total += hp.gamma * float(np.sum(diff * diff))
        return total

    def grad(self, ws):
        ws = _stack(ws)
        self._check(ws)
        hp = self.hp
        g = self.stats.grad_recon(ws)
        if hp.alpha:
            g += hp.alpha * np.sign(ws)
        if hp.lambda_acyc:
            g += hp.lambda_acyc * np.stack([grad_trace_exp_hadamard_sq(w) for w in ws])
        if hp.gamma and len(ws) > 1:
            diff = 2.0 * hp.gamma * (ws[:-1] - ws[1:])
            g[:-1] += diff
            g[1:] -= diff
        return g

    def _check(self, ws):
        if ws.shape != (self.stats.K, self.stats.d, self.stats.d):
            raise DimensionError(
                f"expected graphs of shape {(self.stats.K, self.stats.d, self.stats.d)}, got {ws.shape}"
            )


class StaticObjective:
    """Single shared matrix: reconstruction summed over regimes, with the L1
    and acyclicity terms applied once."""

    def __init__(self, ts, hp, stats=None):
        self.hp = hp
        self.stats = stats if stats is not None else RegimeStats(ts)

    def value(self, w):
        w = self._check(w)
        hp = self.hp
        ws = np.broadcast_to(w, (self.stats.K,) + w.shape)
        total = float(np.sum(self.stats.recon(ws)))
        if hp.alpha:
            total += hp.alpha * float(np.sum(np.abs(w)))
        if hp.lambda_acyc:
            total += hp.lambda_acyc * trace_exp_hadamard_sq(w)
        return total

    def grad(self, w):
        w = self._check(w)
        hp = self.hp
        ws = np.broadcast_to(w, (self.stats.K,) + w.shape)
        g = self.stats.grad_recon(ws).sum(axis=0)
        if hp.alpha:
            g += hp.alpha * np.sign(w)
        if hp.lambda_acyc:
            g += hp.lambda_acyc * grad_trace_exp_hadamard_sq(w)
        return g

    def _check(self, w):
        w = np.asarray(w, dtype=float)
        if w.shape != (self.stats.d, self.stats.d):
            raise DimensionError(f"expected a {self.stats.d}x{self.stats.d} matrix, got {w.shape}")
        return w


def ecr_loss(gs, ts, hp):
    """Joint objective of a graph sequence on a segmented series."""
    ws = _stack(gs)
    if ws.shape[0] != ts.K:
        raise DimensionError(f"{ws.shape[0]} graphs for {ts.K} regimes")
    return EcrObjective(ts, hp).value(ws)


def ecr_grad(gs, ts, hp):
    """Gradient of :func:`ecr_loss`, one ``d x d`` block per regime."""
    ws = _stack(gs)
    if ws.shape[0] != ts.K:
        raise DimensionError(f"{ws.shape[0]} graphs for {ts.K} regimes")
    return EcrObjective(ts, hp).grad(ws)


def static_loss(w, ts, hp):
    return StaticObjective(ts, hp).value(w)


def static_grad(w, ts, hp):
    return StaticObjective(ts, hp).grad(w)
