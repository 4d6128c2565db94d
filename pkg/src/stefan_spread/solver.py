"""Time stepping of one fixed-domain equation

    v_t = alpha v_yy + drift_sign * g(t) * v_y + noise_sign * sigma(y) W_dot + eta_dot,
    g(t) = v_y(0+, t),

with Dirichlet ends, in reflected (``eta`` keeps ``v >= 0``) or unreflected
mode.  Diffusion is backward Euler, the drift is explicit and upwinded, the
noise enters as ``sigma_i dW_i / dy`` per node, and reflection is a projection
onto ``v >= 0`` whose defect is recorded as the reflection mass of the step.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .core import FieldState
from .noise import NoiseSlice, forcing


class BlowUpError(RuntimeError):
    def __init__(self, step_index: int, message: str = "non-finite field values"):
        self.step_index = step_index
        super().__init__(f"{message} at step {step_index}")


def boundary_gradient(v: np.ndarray, dy: float, nonneg: bool = False) -> float:
    """Second-order one-sided ``v_y(0+)`` using ``v(0) = 0``: ``(4 v_1 - v_2) / (2 dy)``.

    With ``nonneg`` the estimate is clipped at 0: a non-negative field that
    vanishes at 0 cannot have a negative right derivative there, but the
    two-point stencil can report one when ``v_2 > 4 v_1``.
    """
    g = (4.0 * v[0] - v[1]) / (2.0 * dy)
    if nonneg and g < 0.0:
        return 0.0
    return float(g)


def truncate_T_M(f: np.ndarray, M: float, dy: float) -> np.ndarray:
    """``y * min(f(y)/y, M)`` on the interior nodes (the y = 0 value is 0)."""
    y = dy * np.arange(1, f.shape[-1] + 1)
    return np.minimum(f, M * y)


def b_norm(f: np.ndarray, dy: float) -> float:
    """``sup_y |f(y) / y|`` over the interior nodes."""
    y = dy * np.arange(1, f.shape[-1] + 1)
    return float(np.max(np.abs(f / y))) if f.size else 0.0


@dataclass(frozen=True)
class StepParams:
    """Scheme constants for one field.

    ``drift_sign`` and ``noise_sign`` carry the case-dependent signs.  With
    ``truncate_M`` set the drift acts on ``T_M(v)`` (the truncated problem).
    ``drift=False`` forces ``g = 0``.  ``right_value`` is the Dirichlet value
    at ``y = lam``.
    """

    alpha: float
    dt: float
    dy: float
    drift_sign: int = -1
    noise_sign: int = 1
    reflect: bool = True
    sigma: np.ndarray | None = field(default=None, compare=False)
    truncate_M: float | None = None
    drift: bool = True
    right_value: float = 0.0
    time_only: bool = False

    def __post_init__(self):
        if self.drift_sign not in (-1, 1) or self.noise_sign not in (-1, 1):
            raise ValueError("drift_sign and noise_sign must be -1 or +1")

    @property
    def r(self) -> float:
        return self.alpha * self.dt / self.dy**2


class FieldSolver:
    """Owns one :class:`FieldState` and advances it in place."""

    def __init__(self, state: FieldState, params: StepParams):
        self.state = state
        self.p = params
        n = state.v.shape[0]
        self.fac = kernels.implicit_heat(n, params.r)
        self.sigma = np.zeros(n) if params.sigma is None else np.asarray(params.sigma, dtype=float)
        self.eta_inc = np.zeros(n)
        self.steps = 0
        self.state.g0 = self.gradient()

    def _drift_field(self, v):
        p = self.p
        if p.truncate_M is None:
            return v, p.right_value
        w = truncate_T_M(v, p.truncate_M, p.dy)
        lam = p.dy * (v.shape[0] + 1)
        return w, min(p.right_value, p.truncate_M * lam)

    def gradient(self) -> float:
        w, _ = self._drift_field(self.state.v)
        return boundary_gradient(w, self.p.dy, nonneg=self.p.reflect)

    def advance(self, dW: np.ndarray) -> float:
        """One step with noise increments ``dW``; returns the gradient used.

        ``self.eta_inc`` holds the reflection mass of the step afterwards.
        """
        p = self.p
        st = self.state
        g = st.g0 if p.drift else 0.0
        w, w_right = self._drift_field(st.v)
        cfl = p.drift_sign * g * p.dt / p.dy
        f = forcing(dW, self.sigma, p.dy, p.noise_sign, p.time_only)
        ok = kernels.spde_step(st.v, w, cfl, f, p.right_value, w_right, self.fac,
                               p.reflect, self.eta_inc)
        self.steps += 1
        if not ok:
            raise BlowUpError(self.steps)
        st.eta_cum += self.eta_inc
        st.t += p.dt
        st.g0 = self.gradient()
        return g


def step(state: FieldState, params: StepParams, noise: NoiseSlice | np.ndarray):
    """Pure single step: returns ``(new_state, eta_increment)``."""
    dW = noise.dW if isinstance(noise, NoiseSlice) else np.asarray(noise, dtype=float)
    solver = FieldSolver(state.copy(), params)
    step_index = noise.step_index if isinstance(noise, NoiseSlice) else 0
    try:
        solver.advance(dW)
    except BlowUpError:
        raise BlowUpError(step_index) from None
    return solver.state, solver.eta_inc.copy()
