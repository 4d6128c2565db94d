"""Pathwise Picard iteration for the truncated reflected equation.

Each iterate is split as ``v_n = u_n + O_n``.  ``u_n`` is the mild (Green's
function) solution driven by the previous iterate's truncated drift and the
fixed noise realization; ``O_n`` solves the heat obstacle problem
``O >= -u_n`` whose multiplier is the reflection measure.

Mode-space convolutions decay each mode per step either exactly,
``exp(-alpha mu_n dt)`` (``propagator="exact"``, the continuous kernel), or by
the backward-Euler resolvent of the grid Laplacian (``propagator="grid"``, the
discrete Green's function of the time stepper).  The obstacle problem is
stepped on the same grid with backward Euler and a projection, so
``v_n = u_n + O_n`` holds node by node.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .core import CaseId, FieldState, GridSpec, ModelConfig, Side
from .green import cosine_moments, from_sine_coeffs, grid_rates, sine_coeffs
from .noise import noise_path, sigma_values, STREAM_V1
from .profiles import initial_values
from .solver import FieldSolver, StepParams, b_norm, boundary_gradient, truncate_T_M


class PicardDivergence(RuntimeError):
    pass


@dataclass
class ObstacleSolution:
    O: np.ndarray  # (nt+1, ny)
    eta_tilde: np.ndarray  # (nt, ny), reflection rate per step (mass / dt)


@dataclass
class PicardReport:
    n: int
    distances: list[float]
    converged: bool
    residual: float


@dataclass
class PicardProblem:
    """Everything that stays fixed across iterations, including the noise."""

    alpha: float
    grid: GridSpec
    v0: np.ndarray
    dW: np.ndarray  # (nt, ny)
    sigma: np.ndarray
    M: float
    reflect: bool = True
    drift_sign: int = -1
    noise_sign: int = 1
    propagator: str = "exact"
    _cache: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_config(cls, cfg: ModelConfig, path_index: int = 0, stream: int = STREAM_V1,
                    reflect: bool = True, propagator: str = "exact") -> "PicardProblem":
        if cfg.far_field_level != 0.0:
            raise ValueError("the Picard harness needs far_field_level = 0 (sine modes vanish at lam)")
        g = cfg.grid
        return cls(
            alpha=cfg.alpha,
            grid=g,
            v0=initial_values(cfg.profile_for(Side.PLUS), g.y, cfg.lam),
            dW=noise_path(cfg.seed, g, path_index, stream),
            sigma=sigma_values(cfg.sigma_profile, g.y, cfg.lam),
            M=cfg.grad_bound_M,
            reflect=reflect,
            propagator=propagator,
        )

    def step_decay(self) -> np.ndarray:
        g = self.grid
        if self.propagator == "exact":
            return np.exp(-grid_rates(self.alpha, g.lam, g.ny) * g.dt)
        if self.propagator == "grid":
            r = self.alpha * g.dt / g.dy**2
            n = np.arange(1, g.ny + 1)
            return 1.0 / (1.0 + 4.0 * r * np.sin(n * np.pi / (2 * (g.ny + 1))) ** 2)
        raise ValueError(f"unknown propagator {self.propagator!r}")

    def noise_modes(self) -> np.ndarray:
        if "xi" not in self._cache:
            f = (self.noise_sign / self.grid.dy) * self.sigma * self.dW
            self._cache["xi"] = sine_coeffs(f)
        return self._cache["xi"]


def solve_obstacle(u: np.ndarray, alpha: float, grid: GridSpec) -> ObstacleSolution:
    """Heat equation for ``O`` with ``O(., 0) = 0`` projected onto ``O >= -u``."""
    u = np.asarray(u, dtype=float)
    if np.any(u[0] < 0):
        raise ValueError("solve_obstacle needs u(., 0) >= 0 since O(., 0) = 0")
    nt = u.shape[0] - 1
    fac = kernels.implicit_heat(grid.ny, alpha * grid.dt / grid.dy**2)
    O = np.zeros_like(u)
    eta = np.zeros((nt, u.shape[1]))
    cur = np.zeros(u.shape[1])
    buf = np.empty(u.shape[1])
    for k in range(nt):
        kernels.obstacle_step(cur, np.ascontiguousarray(-u[k + 1]), fac, buf)
        O[k + 1] = cur
        eta[k] = buf / grid.dt
    return ObstacleSolution(O=O, eta_tilde=eta)


def mild_solution(prob: PicardProblem, v_prev: np.ndarray) -> np.ndarray:
    """``u`` on the whole time grid given the previous iterate's drift."""
    g = prob.grid
    lam = g.lam
    f = truncate_T_M(v_prev, prob.M, g.dy)
    grads = (4.0 * f[:, 0] - f[:, 1]) / (2.0 * g.dy)
    if prob.reflect:
        grads = np.maximum(grads, 0.0)
    n = np.arange(1, g.ny + 1)
    # sine coefficients of drift_sign * grad * d/dy f, via integration by parts
    drift = (-prob.drift_sign * (2.0 / lam) * (n * np.pi / lam)) * cosine_moments(f, g.dy)
    drift *= grads[:, None]
    decay = prob.step_decay()
    src = g.dt * drift[:-1] + prob.noise_modes()
    b = sine_coeffs(prob.v0)
    coeffs = np.empty((g.nt + 1, g.ny))
    coeffs[0] = b
    for k in range(g.nt):
        b = decay * (b + src[k])
        coeffs[k + 1] = b
    u = from_sine_coeffs(coeffs)
    u[0] = prob.v0
    return u


def picard_iterate(prob: PicardProblem, v_prev: np.ndarray):
    """One Picard map: returns ``(v_n, u_n, obstacle)``; ``obstacle`` is None when unreflected."""
    u = mild_solution(prob, v_prev)
    if not np.all(np.isfinite(u)):
        raise PicardDivergence("non-finite iterate; reduce the horizon T or the level M")
    if not prob.reflect:
        return u, u, None
    obs = solve_obstacle(u, prob.alpha, prob.grid)
    return u + obs.O, u, obs


def path_distance(a: np.ndarray, b: np.ndarray, dy: float) -> float:
    """``sup_t || a(., t) - b(., t) ||_B``."""
    y = dy * np.arange(1, a.shape[-1] + 1)
    return float(np.max(np.abs(a - b) / y))


def run_picard(prob: PicardProblem, n_max: int = 30, tol: float = 1e-6):
    """Iterate from ``v_0(y, t) = v0(y)`` until the sup-B step falls below ``tol``.

    Returns ``(report, final_path)``.
    """
    if not np.isfinite(b_norm(prob.v0, prob.grid.dy)):
        raise ValueError("v0 must have finite B-norm")
    v = np.tile(prob.v0, (prob.grid.nt + 1, 1))
    distances = []
    converged = False
    for _ in range(n_max):
        v_new, _, _ = picard_iterate(prob, v)
        d = path_distance(v_new, v, prob.grid.dy)
        distances.append(d)
        v = v_new
        if d < tol:
            converged = True
            break
    again, _, _ = picard_iterate(prob, v)
    residual = path_distance(again, v, prob.grid.dy)
    return PicardReport(len(distances), distances, converged, residual), v


def boundary_gradients(path: np.ndarray, dy: float, M: float | None = None,
                       nonneg: bool = True) -> np.ndarray:
    f = path if M is None else truncate_T_M(path, M, dy)
    return np.array([boundary_gradient(row, dy, nonneg) for row in f])


def stepper_path(prob: PicardProblem) -> np.ndarray:
    """The time-stepped truncated equation on the same noise, ``(nt+1, ny)``."""
    g = prob.grid
    params = StepParams(prob.alpha, g.dt, g.dy, prob.drift_sign, prob.noise_sign, prob.reflect,
                        sigma=prob.sigma, truncate_M=prob.M)
    solver = FieldSolver(FieldState.initial(prob.v0), params)
    out = np.empty((g.nt + 1, g.ny))
    out[0] = solver.state.v
    for k in range(g.nt):
        solver.advance(prob.dW[k])
        out[k + 1] = solver.state.v
    return out


def picard_check(cfg: ModelConfig, path_index: int = 0, propagator: str = "grid",
                 n_max: int = 30, tol: float = 1e-6) -> dict:
    """Contraction record and stepper agreement for one noise realization."""
    reflect = CaseId(cfg.case_id) is not CaseId.CASE3_UNREFLECTED
    prob = PicardProblem.from_config(cfg, path_index, reflect=reflect, propagator=propagator)
    report, path = run_picard(prob, n_max, tol)
    d = report.distances
    return {
        "path_index": path_index,
        "propagator": propagator,
        "iterations": report.n,
        "distances": d,
        "strictly_decreasing": all(d[i + 1] < d[i] for i in range(1, len(d) - 1)),
        "converged": report.converged,
        "residual": report.residual,
        "stepper_sup_diff": float(np.max(np.abs(stepper_path(prob) - path))),
    }
