"""Property battery for the Green's function module.

Each check compares the series against something computed another way:
closed forms, finite differences, Simpson quadrature, or the
method-of-images kernel (used for the Ito isometry right-hand side).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from .green import (
    GreenSeries,
    convolution_lags,
    from_sine_coeffs,
    grad_green_eval,
    green_eval,
    heat_convolve,
    sine_coeffs,
    stochastic_convolution,
)
from .noise import make_rng


@dataclass
class CheckResult:
    name: str
    value: float
    tol: float
    passed: bool

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} {self.name}: {self.value:.3e} (tol {self.tol:.1e})"


def _result(name, value, tol, below=True) -> CheckResult:
    value = float(value)
    return CheckResult(name, value, tol, value < tol if below else value <= tol)


def images_kernel(alpha: float, lam: float, tau, x, z, n_images: int = 6):
    """Dirichlet heat kernel on ``(0, lam)`` by the method of images."""
    s = 0.0
    for k in range(-n_images, n_images + 1):
        s = s + np.exp(-(x - z + 2 * k * lam) ** 2 / (4 * alpha * tau))
        s = s - np.exp(-(x + z + 2 * k * lam) ** 2 / (4 * alpha * tau))
    return s / np.sqrt(4 * np.pi * alpha * tau)


def isometry_quadrature(alpha: float, lam: float, sigma: Callable, x: float, t: float) -> float:
    """``int_0^t int_0^lam G(tau, x, z)^2 sigma(z)^2 dz dtau`` by nested adaptive quadrature.

    Uses the image kernel and the substitution ``tau = u^2`` to remove the
    ``tau^{-1/2}`` singularity at the diagonal.
    """
    def inner(u):
        tau = u * u
        val, _ = integrate.quad(lambda z: images_kernel(alpha, lam, tau, x, z) ** 2 * sigma(z) ** 2,
                                0.0, lam, points=[x], limit=200, epsabs=1e-12)
        return 2.0 * u * val

    val, _ = integrate.quad(inner, 0.0, math.sqrt(t), limit=200, epsabs=1e-12)
    return val


def mc_variance(gs: GreenSeries, sigma: np.ndarray, dt: float, dy: float, nt: int,
                probes: np.ndarray, n_paths: int, seed: int = 0, batch: int = 500) -> np.ndarray:
    """Sample variance of the stochastic convolution at ``probes`` over ``n_paths`` noise paths."""
    ny = sigma.shape[0]
    rng = make_rng(seed, 0, 0)
    sd = math.sqrt(dt * dy)
    vals = []
    done = 0
    while done < n_paths:
        m = min(batch, n_paths - done)
        dW = rng.standard_normal((m, nt, ny)) * sd
        vals.append(stochastic_convolution(gs, sigma, dW, dt, dy, y=probes))
        done += m
    return np.concatenate(vals).var(axis=0, ddof=1)


def run_battery(alpha: float = 1.0, lam: float = 1.0, ny: int = 127, seed: int = 0,
                ito_paths: int = 10_000, ito_nt: int = 100, ito_t: float = 0.1) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    out: list[CheckResult] = []
    dy = lam / (ny + 1)
    y = dy * np.arange(1, ny + 1)
    gs = GreenSeries(alpha, lam, 1e-3)

    t, x, z = rng.uniform(1e-3, 1.0, 100), rng.uniform(0, lam, 100), rng.uniform(0, lam, 100)
    out.append(_result("symmetry G(t,x,y)=G(t,y,x)",
                       np.max(np.abs(green_eval(gs, t, x, z) - green_eval(gs, t, z, x))), 1e-13))
    ends = np.concatenate([green_eval(gs, t, 0.0, z), green_eval(gs, t, lam, z)])
    out.append(_result("Dirichlet G(t,0,y)=G(t,lam,y)=0", np.max(np.abs(ends)), 1e-13))

    zz = np.linspace(0.0, lam, 4001)
    proj_err = 0.0
    for xv in (0.2 * lam, 0.5 * lam, 0.77 * lam):
        f = green_eval(gs, 0.1, xv, zz) * np.sin(np.pi * zz / lam)
        exact = math.exp(-alpha * (math.pi / lam) ** 2 * 0.1) * math.sin(math.pi * xv / lam)
        proj_err = max(proj_err, abs(integrate.simpson(f, x=zz) - exact))
    out.append(_result("eigenfunction projection (Simpson)", proj_err, 1e-10))

    h = 1e-5
    xs, ys_ = rng.uniform(0.05, 0.95, 50) * lam, rng.uniform(0, lam, 50)
    fd = (green_eval(gs, 0.05, xs + h, ys_) - green_eval(gs, 0.05, xs - h, ys_)) / (2 * h)
    out.append(_result("grad vs central difference",
                       np.max(np.abs(fd - grad_green_eval(gs, 0.05, xs, ys_))), 1e-6))
    t_big = 41.0 / (alpha * (math.pi / lam) ** 2)
    out.append(_result("grad decays for alpha mu_1 t > 40",
                       np.max(np.abs(grad_green_eval(gs, t_big, y[:, None], y[None, :]))), 1e-15))
    out.append(_result("grad antisymmetry at x = lam/2",
                       np.max(np.abs(grad_green_eval(gs, 0.01, lam / 2, y)
                                     + grad_green_eval(gs, 0.01, lam / 2, lam - y))), 1e-13))

    v0 = np.sin(np.pi * y / lam)
    decay = math.exp(-alpha * (math.pi / lam) ** 2 * 0.1)
    out.append(_result("heat_convolve eigenmode decay",
                       np.max(np.abs(heat_convolve(gs, v0, 0.1) - decay * v0)), 1e-10))
    r = rng.standard_normal(ny)
    two = heat_convolve(gs, heat_convolve(gs, r, 0.03), 0.05)
    out.append(_result("semigroup", np.max(np.abs(two - heat_convolve(gs, r, 0.08))), 1e-10))
    out.append(_result("DST round trip", np.max(np.abs(from_sine_coeffs(sine_coeffs(r)) - r)), 1e-12))

    tt = np.array([1e-3, 1e-2, 0.1, 1.0])
    G = green_eval(gs, tt[:, None, None], y[None, :, None], y[None, None, :])
    out.append(_result("positivity -min G", max(-G.min(), 0.0), 1e-12, below=False))
    mass = G.sum(axis=-1) * dy
    out.append(_result("sub-Markov max int G dy - 1", max(mass.max() - 1.0, 0.0), 1e-10, below=False))

    if ito_paths > 0:
        dt = ito_t / ito_nt
        g2 = GreenSeries(alpha, lam, convolution_lags(ito_nt, dt).min())
        sig_fn = lambda zv: np.sin(np.pi * zv / lam)  # noqa: E731
        probes = np.array([0.25, 0.5, 0.8]) * lam
        var = mc_variance(g2, sig_fn(y), dt, dy, ito_nt, probes, ito_paths, seed)
        ref = np.array([isometry_quadrature(alpha, lam, sig_fn, p, ito_t) for p in probes])
        out.append(_result("Ito isometry max rel. error", np.max(np.abs(var / ref - 1)), 0.05))
    return out
