"""Pure numpy/LAPACK versions of the time-stepping kernels."""
from __future__ import annotations

import numpy as np
from scipy.linalg.lapack import dgttrs


def heat_solve(x, fac):
    sol, info = dgttrs(*fac.lu, x)
    x[:] = sol


def spde_step(v, w, cfl, forcing, v_right, w_right, fac, reflect, eta_inc):
    n = v.shape[0]
    ext = np.empty(n + 2)
    ext[0] = 0.0
    ext[1:-1] = w
    ext[-1] = w_right
    if cfl > 0.0:
        d = ext[2:] - ext[1:-1]
    else:
        d = ext[1:-1] - ext[:-2]
    rhs = v + cfl * d + forcing
    rhs[-1] += fac.r * v_right
    sol, info = dgttrs(*fac.lu, rhs)
    if not np.all(np.isfinite(sol)):
        v[:] = sol
        return False
    if reflect:
        np.maximum(-sol, 0.0, out=eta_inc)
        np.maximum(sol, 0.0, out=v)
    else:
        eta_inc[:] = 0.0
        v[:] = sol
    return True


def obstacle_step(O, lower, fac, eta_out):
    sol, info = dgttrs(*fac.lu, O)
    np.maximum(lower - sol, 0.0, out=eta_out)
    np.maximum(sol, lower, out=O)
