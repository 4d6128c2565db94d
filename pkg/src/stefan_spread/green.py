"""Dirichlet heat kernel of ``-alpha * Laplacian`` on ``(0, lam)``.

    G(t, x, y) = (2/lam) sum_n exp(-alpha mu_n t) sin(n pi x/lam) sin(n pi y/lam),
    mu_n = (n pi / lam)**2.

The series is truncated once the tail is below double precision at the
smallest time it will be asked about, ``t_min``.  Grid fields are moved in and
out of mode space with a type-I discrete sine transform, which is exact for
grid-sampled eigenfunctions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft

# tail exp(-alpha mu_N t_min) < 1e-32
_TAIL_EXPONENT = 32.0 * math.log(10.0)


def eigenvalue(n, lam: float):
    """``mu_n = n^2 pi^2 / lam^2``."""
    n = np.asarray(n, dtype=float)
    if np.any(n < 0):
        raise ValueError("mode index must be >= 0")
    out = (n * np.pi / lam) ** 2
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class GreenSeries:
    alpha: float
    lam: float
    t_min: float
    n_terms: int = 0

    def __post_init__(self):
        if not (self.alpha > 0 and self.lam > 0 and self.t_min > 0):
            raise ValueError("GreenSeries needs alpha, lam, t_min > 0")
        if self.n_terms <= 0:
            n = math.ceil(self.lam / math.pi * math.sqrt(_TAIL_EXPONENT / (self.alpha * self.t_min)))
            while self.alpha * eigenvalue(n, self.lam) * self.t_min <= _TAIL_EXPONENT:
                n += 1
            object.__setattr__(self, "n_terms", int(n))

    @property
    def modes(self) -> np.ndarray:
        return np.arange(1, self.n_terms + 1, dtype=float)

    def rates(self) -> np.ndarray:
        return self.alpha * eigenvalue(self.modes, self.lam)

    def _check(self, t, x, y):
        t = np.asarray(t, dtype=float)
        if np.any(t < self.t_min * (1 - 1e-12)):
            raise ValueError(
                f"t = {t.min():.3g} below t_min = {self.t_min:.3g}; "
                "build a GreenSeries with a smaller t_min (more terms)"
            )
        for arr in (x, y):
            a = np.asarray(arr, dtype=float)
            if np.any(a < 0) or np.any(a > self.lam):
                raise ValueError(f"point outside [0, {self.lam}]")
        return t, np.asarray(x, dtype=float), np.asarray(y, dtype=float)


def _series(gs: GreenSeries, t, x, y, deriv: bool, chunk: int = 512):
    t, x, y = gs._check(t, x, y)
    t, x, y = np.broadcast_arrays(t, x, y)
    out = np.zeros(t.shape)
    k = np.pi / gs.lam
    for start in range(1, gs.n_terms + 1, chunk):
        n = np.arange(start, min(start + chunk, gs.n_terms + 1), dtype=float)
        damp = np.exp(-gs.alpha * (k * n) ** 2 * t[..., None])
        if deriv:
            xs = (k * n) * np.cos(k * n * x[..., None])
        else:
            xs = np.sin(k * n * x[..., None])
        out += np.sum(damp * xs * np.sin(k * n * y[..., None]), axis=-1)
    out *= 2.0 / gs.lam
    return float(out) if out.ndim == 0 else out


def green_eval(gs: GreenSeries, t, x, y):
    """Truncated series for ``G(t, x, y)``; arrays broadcast."""
    return _series(gs, t, x, y, deriv=False)


def grad_green_eval(gs: GreenSeries, t, x, y):
    """``d/dx G(t, x, y)`` from the term-wise differentiated series."""
    return _series(gs, t, x, y, deriv=True)


# --- grid transforms -------------------------------------------------------

def sine_coeffs(v: np.ndarray) -> np.ndarray:
    """Coefficients ``b_n`` (n = 1..ny) with ``v_i = sum_n b_n sin(n pi i/(ny+1))``."""
    v = np.asarray(v, dtype=float)
    return scipy.fft.dst(v, type=1, axis=-1) / (v.shape[-1] + 1)


def from_sine_coeffs(b: np.ndarray) -> np.ndarray:
    return scipy.fft.dst(np.asarray(b, dtype=float), type=1, axis=-1) / 2.0


def cosine_moments(f: np.ndarray, dy: float) -> np.ndarray:
    """Trapezoid values of ``int_0^lam cos(n pi z/lam) f(z) dz`` for n = 1..ny.

    ``f`` holds interior nodes; it is taken to vanish at both ends.
    """
    f = np.asarray(f, dtype=float)
    pad = np.zeros(f.shape[:-1] + (f.shape[-1] + 2,))
    pad[..., 1:-1] = f
    c = scipy.fft.dct(pad, type=1, axis=-1)
    return 0.5 * dy * c[..., 1:-1]


def grid_rates(alpha: float, lam: float, ny: int) -> np.ndarray:
    """``alpha * mu_n`` for the ``ny`` modes a grid of ``ny`` nodes resolves."""
    return alpha * eigenvalue(np.arange(1, ny + 1), lam)


def heat_convolve(gs: GreenSeries, v0: np.ndarray, t: float) -> np.ndarray:
    """``int G(y, z, t) v0(z) dz`` on the grid nodes of ``v0``."""
    if t < gs.t_min * (1 - 1e-12):
        raise ValueError(
            f"t = {t:.3g} below t_min = {gs.t_min:.3g}; build a GreenSeries with a smaller t_min"
        )
    v0 = np.asarray(v0, dtype=float)
    damp = np.exp(-grid_rates(gs.alpha, gs.lam, v0.shape[-1]) * t)
    return from_sine_coeffs(damp * sine_coeffs(v0))


# --- stochastic convolution -------------------------------------------------

def convolution_lags(n_steps: int, dt: float) -> np.ndarray:
    """Lag ``t - s`` used for each noise interval ``k`` of ``[0, t]``, ``t = n_steps*dt``.

    Interior intervals use their midpoint.  The last interval ``[t-dt, t]`` is
    evaluated at lag ``dt/4``: near the diagonal ``int G^2 dz ~ c/sqrt(tau)``, and
    ``dt * (dt/4)**-0.5 = int_0^dt tau**-0.5 dtau``, so the second moment of
    that interval is kept.
    """
    k = np.arange(n_steps)
    lags = (n_steps - k - 0.5) * dt
    if n_steps:
        lags[-1] = 0.25 * dt
    return lags


def kernel_table(gs: GreenSeries, taus: np.ndarray, ys: np.ndarray, zs: np.ndarray) -> np.ndarray:
    """``K[p, k, j] = G(taus[k], ys[p], zs[j])`` from the truncated series."""
    gs._check(taus, ys, zs)
    kk = np.pi / gs.lam * gs.modes
    sy = np.sin(np.outer(ys, kk))
    sz = np.sin(np.outer(zs, kk))
    damp = np.exp(-np.outer(taus, gs.rates()))
    left = (sy[:, None, :] * damp[None, :, :]).reshape(len(ys) * len(taus), -1)
    return (2.0 / gs.lam) * (left @ sz.T).reshape(len(ys), len(taus), len(zs))


def stochastic_convolution(gs: GreenSeries, sigma: np.ndarray, dW: np.ndarray, dt: float,
                           dy: float, n_steps: int | None = None, y=None) -> np.ndarray:
    """Riemann sum for ``int_0^t int G(y, z, t-s) sigma(z) W(dz, ds)``.

    ``dW`` has shape ``(..., nt, ny)``: per-cell increments on nodes
    ``z_j = j*dy``.  ``t = n_steps*dt`` (all slices by default).  ``y`` selects
    probe points; default is the grid nodes.  Leading axes of ``dW`` are kept,
    so a batch of paths is convolved in one call.
    """
    dW = np.asarray(dW, dtype=float)
    ny = dW.shape[-1]
    n = dW.shape[-2] if n_steps is None else int(n_steps)
    zs = dy * np.arange(1, ny + 1)
    ys = zs if y is None else np.atleast_1d(np.asarray(y, dtype=float))
    if n == 0:
        return np.zeros(dW.shape[:-2] + (len(ys),))
    lags = convolution_lags(n, dt)
    K = kernel_table(gs, lags, ys, zs) * np.asarray(sigma, dtype=float)[None, None, :]
    flat = dW[..., :n, :].reshape(dW.shape[:-2] + (n * ny,))
    out = flat @ K.reshape(len(ys), n * ny).T
    return out
