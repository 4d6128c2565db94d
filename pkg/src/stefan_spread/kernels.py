"""Backend selection for the hot time-stepping loops.

The compiled extension ``_kernels`` is used when it was built; otherwise the
numpy/LAPACK fallback is imported.  Setting ``STEFAN_SPREAD_PURE=1`` forces
the fallback.
"""
from __future__ import annotations

import os
from functools import lru_cache

import numpy as np
from scipy.linalg.lapack import dgttrf

from . import _kernels_py

_impl = _kernels_py
BACKEND = "python"
if os.environ.get("STEFAN_SPREAD_PURE", "") in ("", "0"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"


class ImplicitHeat:
    """Backward-Euler operator ``I - dt*alpha*Laplacian`` with Dirichlet ends.

    ``r = alpha*dt/dy**2``.  Holds both the Thomas coefficients used by the
    compiled kernels and the LAPACK ``gttrf`` factors used by the fallback.
    """

    def __init__(self, n: int, r: float):
        self.n = n
        self.r = float(r)
        b = 1.0 + 2.0 * r
        cp = np.empty(n)
        dinv = np.empty(n)
        dinv[0] = 1.0 / b
        cp[0] = -r * dinv[0]
        for i in range(1, n):
            dinv[i] = 1.0 / (b + r * cp[i - 1])
            cp[i] = -r * dinv[i]
        self.cprime = cp
        self.dinv = dinv
        off = np.full(n - 1, -r)
        dl, d, du, du2, ipiv, info = dgttrf(off, np.full(n, b), off.copy())
        self.lu = (dl, d, du, du2, ipiv)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        out = (1.0 + 2.0 * self.r) * x
        out[1:] -= self.r * x[:-1]
        out[:-1] -= self.r * x[1:]
        return out


@lru_cache(maxsize=64)
def implicit_heat(n: int, r: float) -> ImplicitHeat:
    return ImplicitHeat(n, r)


def get_backend(name: str | None = None):
    """Kernel module by name (``"cython"`` / ``"python"``), default active one."""
    if name is None:
        return _impl
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown backend {name!r}")


def spde_step(v, w, cfl, forcing, v_right, w_right, fac, reflect, eta_inc) -> bool:
    """One semi-implicit step, in place on ``v``; returns False on non-finite output.

    ``rhs = v + cfl*D(w) + forcing`` with ``D`` the upwind difference chosen
    by the sign of ``cfl``; then ``(I - dt*alpha*Lap) v_new = rhs``; then, if
    ``reflect``, ``eta_inc = max(-v_new, 0)`` and ``v_new = max(v_new, 0)``.
    """
    return _impl.spde_step(v, w, cfl, forcing, v_right, w_right, fac, reflect, eta_inc)


def heat_solve(x, fac) -> None:
    _impl.heat_solve(x, fac)


def obstacle_step(O, lower, fac, eta_out) -> None:
    """Implicit heat step on ``O`` then projection onto ``O >= lower``."""
    _impl.obstacle_step(O, lower, fac, eta_out)
