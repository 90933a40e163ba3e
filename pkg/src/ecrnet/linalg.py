"""Dense matrix kernels: spectral radius, the trace-exponential acyclicity
penalty and its gradient, and edge thresholding.

All functions are pure and accept plain ``numpy`` arrays.
"""

from __future__ import annotations

import math

import numpy as np


class DimensionError(ValueError):
    """Raised when an array does not have the required shape."""


class ParameterError(ValueError):
    """Raised when a scalar argument is outside its valid range."""


def _square(m, name="m"):
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise DimensionError(f"{name} must be a non-empty square matrix, got shape {m.shape}")
    return m


def spectral_radius(m, tol=1e-10, max_iter=1000, method="eig"):
    """Largest eigenvalue modulus of a square matrix.

    Parameters
    ----------
    m : array_like, shape (d, d)
    tol : float
        Relative tolerance for the power-iteration path.
    max_iter : int
        Iteration cap for the power-iteration path.
    method : {"eig", "power"}
        ``"eig"`` solves the dense eigenproblem (the default). ``"power"``
        runs power iteration on ``m`` itself and falls back to the dense
        solve if the iterate norm has not settled within ``max_iter``.

    Returns
    -------
    float
    """
    m = _square(m)
    if tol <= 0:
        raise ParameterError("tol must be positive")
    if max_iter < 1:
        raise ParameterError("max_iter must be >= 1")
    if method not in ("eig", "power"):
        raise ParameterError(f"unknown method {method!r}")
    if method == "power":
        est = _power_radius(m, tol, max_iter)
        if est is not None:
            return est
    return float(np.max(np.abs(np.linalg.eigvals(m))))


def _power_radius(m, tol, max_iter):
    # Returns None when the iterate norm ratio does not settle (e.g. a complex
    # dominant pair, or several eigenvalues of equal modulus).
    x = np.ones(m.shape[0]) / math.sqrt(m.shape[0])
    prev = None
    for _ in range(max_iter):
        y = x @ m
        nrm = float(np.linalg.norm(y))
        if nrm == 0.0:
            return None
        x = y / nrm
        if prev is not None and abs(nrm - prev) <= tol * nrm:
            return nrm
        prev = nrm
    return None


def spectral_radii(ws):
    """Spectral radius of every matrix in a ``(K, d, d)`` stack."""
    ws = np.asarray(ws, dtype=float)
    if ws.ndim != 3 or ws.shape[1] != ws.shape[2]:
        raise DimensionError(f"expected a (K, d, d) stack, got shape {ws.shape}")
    return np.max(np.abs(np.linalg.eigvals(ws)), axis=-1)


def expm(a):
    """Matrix exponential by scaling and squaring with a Taylor core.

    The argument is scaled by ``2**-s`` so its 1-norm is at most 1/2, the
    series is summed until terms drop below machine precision relative to the
    running sum, and the result is squared ``s`` times.
    """
    a = _square(a, "a")
    d = a.shape[0]
    norm = float(np.max(np.sum(np.abs(a), axis=0)))
    s = 0
    if norm > 0.5:
        s = int(math.ceil(math.log2(norm / 0.5)))
    b = a / (2.0**s)
    result = np.eye(d)
    term = np.eye(d)
    for k in range(1, 40):
        term = term @ b / k
        result = result + term
        if np.max(np.abs(term)) <= np.finfo(float).eps * np.max(np.abs(result)):
            break
    for _ in range(s):
        result = result @ result
    return result


def trace_exp_hadamard_sq(w):
    """Acyclicity penalty ``tr(exp(w * w)) - d``.

    Zero exactly when the nonzero pattern of ``w`` has no directed cycles
    (self-loops included), positive otherwise.
    """
    w = _square(w, "w")
    val = float(np.trace(expm(w * w))) - w.shape[0]
    # Rounding can leave a -1e-16 residue on acyclic inputs.
    return max(val, 0.0)


def grad_trace_exp_hadamard_sq(w):
    """Gradient of :func:`trace_exp_hadamard_sq`: ``2 * exp(w * w).T * w``."""
    w = _square(w, "w")
    return 2.0 * expm(w * w).T * w


def threshold_adjacency(w, tau):
    """Binary adjacency with an edge wherever ``|w| >= tau``."""
    if not tau > 0:
        raise ParameterError(f"tau must be positive, got {tau}")
    w = np.asarray(w, dtype=float)
    return (np.abs(w) >= tau).astype(np.int8)
