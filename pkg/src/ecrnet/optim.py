"""Adaptive-moment descent with spectral projection and patience stopping."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .linalg import DimensionError, ParameterError, spectral_radii
from .model import EcrObjective, GraphSequence, HyperParams, RegimeStats, StaticObjective

INIT_SCALE = 0.01


class NonFiniteError(FloatingPointError):
    """Gradient or loss became NaN/inf during a fit."""

    def __init__(self, message, regime=None):
        super().__init__(message)
        self.regime = regime


@dataclass
class MomentState:
    """First/second moment accumulators and the step counter."""

    m: np.ndarray
    v: np.ndarray
    step: int = 0

    @classmethod
    def zeros_like(cls, params):
        return cls(np.zeros_like(params, dtype=float), np.zeros_like(params, dtype=float), 0)


def adam_step(params, grads, state, eta, beta1=0.9, beta2=0.999, eps=1e-8):
    """One bias-corrected adaptive-moment update.

    Returns the new parameter array; ``state`` is updated in place.
    """
    params = np.asarray(params, dtype=float)
    grads = np.asarray(grads, dtype=float)
    if params.shape != grads.shape or state.m.shape != params.shape:
        raise DimensionError(f"shape mismatch: params {params.shape}, grads {grads.shape}")
    if eta <= 0:
        raise ParameterError("eta must be > 0")
    if not np.all(np.isfinite(grads)):
        bad = np.argwhere(~np.isfinite(grads))[0]
        regime = int(bad[0]) if grads.ndim == 3 else None
        raise NonFiniteError(f"non-finite gradient at index {tuple(bad.tolist())}", regime=regime)
    state.step += 1
    state.m = beta1 * state.m + (1.0 - beta1) * grads
    state.v = beta2 * state.v + (1.0 - beta2) * (grads * grads)
    m_hat = state.m / (1.0 - beta1**state.step)
    v_hat = state.v / (1.0 - beta2**state.step)
    return params - eta * m_hat / (np.sqrt(v_hat) + eps)


def project_stable(w, rho_max):
    """Scale ``w`` down so its spectral radius does not exceed ``rho_max``.

    Accepts one ``(d, d)`` matrix or a ``(K, d, d)`` stack; each matrix is
    projected independently.
    """
    if not 0 < rho_max < 1:
        raise ParameterError("rho_max must lie in (0, 1)")
    w = np.asarray(w, dtype=float)
    single = w.ndim == 2
    ws = w[None] if single else w
    if ws.ndim != 3 or ws.shape[1] != ws.shape[2]:
        raise DimensionError(f"expected a square matrix or (K, d, d) stack, got shape {w.shape}")
    rho = spectral_radii(ws)
    scale = np.where(rho > rho_max, rho_max / np.where(rho > 0, rho, 1.0), 1.0)
    if np.all(scale == 1.0):
        return w.copy()
    out = ws * scale[:, None, None]
    return out[0] if single else out


@dataclass
class FitReport:
    final_loss: float
    losses: list = field(default_factory=list)
    iterations: int = 0
    stop_reason: str = "max_iters"
    wall_time: float = 0.0
    best_iteration: int = 0

    @property
    def best_losses(self):
        """Running minimum of the recorded loss trajectory."""
        return np.minimum.accumulate(np.asarray(self.losses, dtype=float)).tolist()

    def to_dict(self):
        return {
            "final_loss": self.final_loss,
            "iterations": self.iterations,
            "stop_reason": self.stop_reason,
            "wall_time": self.wall_time,
            "best_iteration": self.best_iteration,
            "losses": list(self.losses),
        }


def descend(objective, params, hp, on_step=None):
    """Projected Adam on ``objective`` starting from ``params``.

    The loss is evaluated at the start and every ``hp.eval_every`` steps. A
    fit stops once the best loss has not improved by more than
    ``max(rel_tol * |best|, abs_tol)`` for ``hp.patience`` consecutive
    evaluations, when the loss reaches exactly zero, or after
    ``hp.max_iters`` steps. The best parameters seen at an evaluation are
    returned.
    """
    start = time.perf_counter()
    params = project_stable(np.array(params, dtype=float), hp.rho_max)
    state = MomentState.zeros_like(params)

    loss = _checked(objective.value(params))
    best, best_params, best_it = loss, params.copy(), 0
    losses = [loss]
    stale = 0
    reason = "max_iters"
    it = 0
    if loss == 0.0:
        reason = "converged"
    else:
        while it < hp.max_iters:
            grads = objective.grad(params)
            params = adam_step(params, grads, state, hp.eta, hp.beta1, hp.beta2, hp.eps)
            params = project_stable(params, hp.rho_max)
            it += 1
            if on_step is not None:
                on_step(it, params)
            if it % hp.eval_every and it != hp.max_iters:
                continue
            loss = _checked(objective.value(params))
            losses.append(loss)
            if loss < best - max(hp.rel_tol * abs(best), hp.abs_tol):
                stale = 0
            else:
                stale += 1
            if loss < best:
                best, best_params, best_it = loss, params.copy(), it
            if best == 0.0:
                reason = "converged"
                break
            if stale >= hp.patience:
                reason = "patience"
                break

    report = FitReport(
        final_loss=best,
        losses=losses,
        iterations=it,
        stop_reason=reason,
        wall_time=time.perf_counter() - start,
        best_iteration=best_it,
    )
    return best_params, report


def _checked(loss):
    if not np.isfinite(loss):
        raise NonFiniteError(f"non-finite loss {loss}")
    return float(loss)


def init_graphs(K, d, seed):
    """Near-zero uniform start in ``[-0.01, 0.01]`` drawn from ``seed``."""
    rng = np.random.default_rng(seed)
    return rng.uniform(-INIT_SCALE, INIT_SCALE, size=(K, d, d))


def fit_ecr(ts, hp=None, init=None, seed=0, on_step=None, stats=None):
    """Fit one graph per regime by minimising the joint objective.

    Returns ``(GraphSequence, FitReport)``.
    """
    hp = hp or HyperParams()
    if init is None:
        params = init_graphs(ts.K, ts.d, seed)
    else:
        params = init.graphs if isinstance(init, GraphSequence) else np.asarray(init, dtype=float)
        if params.shape != (ts.K, ts.d, ts.d):
            raise DimensionError(f"init has shape {params.shape}, expected {(ts.K, ts.d, ts.d)}")
    objective = EcrObjective(ts, hp, stats=stats)
    params, report = descend(objective, params, hp, on_step=on_step)
    return GraphSequence(params), report


def fit_static(ts, hp=None, init=None, seed=0, on_step=None, stats=None):
    """Fit a single graph shared by all regimes. Returns ``(W, FitReport)``."""
    hp = hp or HyperParams()
    if init is None:
        params = init_graphs(1, ts.d, seed)[0]
    else:
        params = np.asarray(init, dtype=float)
        if params.shape != (ts.d, ts.d):
            raise DimensionError(f"init has shape {params.shape}, expected {(ts.d, ts.d)}")
    objective = StaticObjective(ts, hp, stats=stats or RegimeStats(ts))
    return descend(objective, params, hp, on_step=on_step)
