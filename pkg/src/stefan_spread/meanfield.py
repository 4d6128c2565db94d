"""Large-alpha asymptotic system for the far-field level and the spread.

    d w_inf = (2 alpha / lam**2) w_inf dt + dW(t),
    d spread / dt = -(2 / lam) w_inf,

with sigma = 1 and space-constant noise.  Writing ``w_inf = beta + W`` turns
the SDE into a random ODE for ``beta``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ModelConfig
from .noise import STREAM_MEANFIELD, make_rng


@dataclass
class MeanFieldPath:
    """One path (or a batch, leading axis) on ``times``."""

    times: np.ndarray
    w_inf: np.ndarray
    spread: np.ndarray
    a_coef: float
    spread_rate_coef: float
    dW: np.ndarray | None = None

    @property
    def brownian(self) -> np.ndarray:
        """``W(t_n)`` with ``W(0) = 0``."""
        if self.dW is None:
            raise ValueError("path was generated without keeping its increments")
        lead = self.dW.shape[:-1]
        return np.concatenate((np.zeros(lead + (1,)), np.cumsum(self.dW, axis=-1)), axis=-1)


def coefficients(alpha: float, lam: float) -> tuple[float, float]:
    return 2.0 * alpha / lam**2, 2.0 / lam


def simulate_meanfield(alpha: float, lam: float, w0: float, spread0: float, T: float,
                       dt: float, seed: int = 0, n_paths: int | None = None,
                       zero_noise: bool = False, path_offset: int = 0,
                       keep_increments: bool = True) -> MeanFieldPath:
    """Euler-Maruyama for ``w_inf`` and the explicit spread recursion.

    ``n_paths=None`` gives a single path with 1-d arrays.  Path ``p`` draws
    from stream ``(seed, path_offset + p, 3)``, so a batch reproduces the
    corresponding single paths.
    """
    a, c = coefficients(alpha, lam)
    if dt * a >= 0.5:
        raise ValueError(f"dt * 2 alpha / lam^2 = {dt * a:.3g} must be < 0.5")
    nt = int(round(T / dt))
    if nt < 1 or abs(nt * dt - T) > 1e-9 * max(T, 1.0):
        raise ValueError("T must be a positive multiple of dt")
    single = n_paths is None
    n = 1 if single else int(n_paths)
    if zero_noise:
        dW = np.zeros((n, nt))
    else:
        sd = math.sqrt(dt)
        dW = np.stack([make_rng(seed, path_offset + p, STREAM_MEANFIELD).standard_normal(nt) * sd
                       for p in range(n)])
    w = np.empty((n, nt + 1))
    s = np.empty((n, nt + 1))
    w[:, 0] = w0
    s[:, 0] = spread0
    growth = 1.0 + dt * a
    for k in range(nt):
        w[:, k + 1] = growth * w[:, k] + dW[:, k]
    s[:, 1:] = spread0 - dt * c * np.cumsum(w[:, :-1], axis=1)
    times = dt * np.arange(nt + 1)
    if single:
        w, s, dW = w[0], s[0], dW[0]
    return MeanFieldPath(times, w, s, a, c, dW if keep_increments else None)


def meanfield_from_config(cfg: ModelConfig, n_paths: int | None = None, **kw) -> MeanFieldPath:
    """``w0`` is the far-field level, ``spread0 = s+ - s-``, ``dt`` the grid step."""
    return simulate_meanfield(cfg.alpha, cfg.lam, cfg.far_field_level,
                              cfg.s_plus_0 - cfg.s_minus_0, cfg.horizon_T, cfg.grid.dt,
                              cfg.seed, n_paths=n_paths, **kw)


def meanfield_moments(alpha: float, lam: float, w0: float, t: float) -> tuple[float, float]:
    """Mean ``e^{at} w0`` and variance ``(e^{2at} - 1) / (2a)`` of ``w_inf(t)``."""
    if t < 0:
        raise ValueError("t must be >= 0")
    a, _ = coefficients(alpha, lam)
    mean = math.exp(a * t) * w0
    if a * t < 1e-8:
        var = t * (1.0 + a * t)
    else:
        var = math.expm1(2.0 * a * t) / (2.0 * a)
    return mean, var


def beta_equivalence_check(path: MeanFieldPath, W: np.ndarray | None = None) -> float:
    """Max local defect of ``beta_{n+1} - beta_n = dt a (beta_n + W_n)``, ``beta = w_inf - W``."""
    if W is None:
        W = path.brownian
    W = np.asarray(W, dtype=float)
    if W.shape != path.w_inf.shape:
        raise ValueError(f"Brownian path shape {W.shape} != w_inf shape {path.w_inf.shape}")
    dt = path.times[1] - path.times[0]
    beta = path.w_inf - W
    lhs = np.diff(beta, axis=-1)
    rhs = dt * path.a_coef * (beta[..., :-1] + W[..., :-1])
    return float(np.max(np.abs(lhs - rhs))) if lhs.size else 0.0
