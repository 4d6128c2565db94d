from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from stefan_spread import kernels
from stefan_spread.core import FieldState, GridSpec
from stefan_spread.noise import NoiseSlice
from stefan_spread.solver import (
    BlowUpError,
    FieldSolver,
    StepParams,
    b_norm,
    boundary_gradient,
    step,
    truncate_T_M,
)

BACKENDS = ["python"]
try:
    kernels.get_backend("cython")
    BACKENDS.insert(0, "cython")
except ImportError:
    pass


def heat_error(ny: int, nt: int, T: float = 0.1) -> float:
    g = GridSpec(ny, nt, 1.0, T)
    s = FieldSolver(FieldState.initial(np.sin(np.pi * g.y)), StepParams(1.0, g.dt, g.dy, drift=False))
    zero = np.zeros(ny)
    for _ in range(nt):
        s.advance(zero)
    return float(np.max(np.abs(s.state.v - oracles.eigenmode_decay(1, 1, T) * np.sin(np.pi * g.y))))


def test_heat_decay_converges():
    e1, e2 = heat_error(32, 64), heat_error(64, 256)
    assert e1 / e2 > 3.0
    assert e2 < 5e-3


@pytest.mark.parametrize("name", BACKENDS)
def test_heat_solve_matches_dense(name):
    be = kernels.get_backend(name)
    rhs = np.random.default_rng(0).standard_normal(30)
    fac = kernels.implicit_heat(30, 2.7)
    x = rhs.copy()
    be.heat_solve(x, fac)
    np.testing.assert_allclose(x, oracles.thomas_dense(rhs, 2.7), atol=1e-12)
    np.testing.assert_allclose(fac.matvec(x), rhs, atol=1e-12)


finite = st.floats(-5, 5, allow_nan=False)


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled extension not built")
@settings(max_examples=100, deadline=None)
@given(v=arrays(np.float64, 12, elements=finite), f=arrays(np.float64, 12, elements=finite),
       cfl=st.floats(-0.5, 0.5), r=st.floats(0.01, 50), reflect=st.booleans(),
       right=st.floats(0, 2))
def test_backends_agree(v, f, cfl, r, reflect, right):
    fac = kernels.implicit_heat(12, r)
    out = {}
    for name in BACKENDS:
        vv = v.copy()
        eta = np.full(12, np.nan)
        ok = kernels.get_backend(name).spde_step(vv, v.copy(), cfl, f, right, right, fac, reflect, eta)
        out[name] = (ok, vv, eta)
    a, b = out["cython"], out["python"]
    assert a[0] == b[0]
    np.testing.assert_allclose(a[1], b[1], rtol=1e-12, atol=1e-12)
    if reflect:
        np.testing.assert_allclose(a[2], b[2], rtol=1e-12, atol=1e-12)


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled extension not built")
def test_obstacle_backends_agree():
    rng = np.random.default_rng(4)
    fac = kernels.implicit_heat(20, 0.9)
    lower = rng.standard_normal(20)
    res = []
    for name in BACKENDS:
        O = rng.standard_normal(20) * 0 + 0.1
        eta = np.empty(20)
        kernels.get_backend(name).obstacle_step(O, lower, fac, eta)
        res.append((O, eta))
    np.testing.assert_allclose(res[0][0], res[1][0], atol=1e-13)
    np.testing.assert_allclose(res[0][1], res[1][1], atol=1e-13)


@pytest.mark.parametrize("name", BACKENDS)
def test_aliasing_safe(name):
    be = kernels.get_backend(name)
    v = np.abs(np.random.default_rng(1).standard_normal(16))
    fac = kernels.implicit_heat(16, 1.0)
    f = np.zeros(16)
    ref = v.copy()
    be.spde_step(ref, v.copy(), -0.2, f, 0.0, 0.0, fac, True, np.empty(16))
    be.spde_step(v, v, -0.2, f, 0.0, 0.0, fac, True, np.empty(16))
    np.testing.assert_array_equal(v, ref)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_reflection_complementarity(seed):
    rng = np.random.default_rng(seed)
    g = GridSpec(24, 50, 1.0, 0.1)
    s = FieldSolver(FieldState.initial(0.05 * np.sin(np.pi * g.y)),
                    StepParams(1.0, g.dt, g.dy, sigma=np.sin(np.pi * g.y)))
    for _ in range(g.nt):
        s.advance(rng.standard_normal(g.ny) * math.sqrt(g.dt * g.dy))
        assert s.state.v.min() >= 0.0
        assert s.eta_inc.min() >= 0.0
        assert np.dot(s.state.v, s.eta_inc) == 0.0
        assert s.state.g0 >= 0.0


def test_boundary_gradient_quadratic_exact():
    dy = 0.01
    y = dy * np.arange(1, 99)
    v = 3.0 * y - 7.0 * y**2
    assert boundary_gradient(v, dy) == pytest.approx(3.0, rel=1e-12)
    assert boundary_gradient(-v, dy, nonneg=True) == 0.0
    assert boundary_gradient(-v, dy) == pytest.approx(-3.0, rel=1e-12)


def test_truncation_and_norm():
    dy = 0.1
    y = dy * np.arange(1, 10)
    f = 5.0 * y
    np.testing.assert_allclose(truncate_T_M(f, 2.0, dy), 2.0 * y)
    assert b_norm(f, dy) == pytest.approx(5.0)
    assert b_norm(np.sin(np.pi * y), dy) == pytest.approx(np.pi, rel=0.02)


def test_step_is_pure():
    g = GridSpec(10, 5, 1.0, 0.05)
    st0 = FieldState.initial(np.sin(np.pi * g.y))
    before = st0.v.copy()
    p = StepParams(1.0, g.dt, g.dy, sigma=np.ones(g.ny) * 0)
    new, eta = step(st0, p, NoiseSlice(np.zeros(g.ny), 0))
    np.testing.assert_array_equal(st0.v, before)
    assert new.t == pytest.approx(g.dt)
    assert eta.shape == (g.ny,)


def test_blow_up_detected():
    g = GridSpec(10, 5, 1.0, 0.05)
    p = StepParams(1.0, g.dt, g.dy, sigma=np.ones(g.ny), reflect=False)
    with pytest.raises(BlowUpError) as exc:
        step(FieldState.initial(np.zeros(g.ny)), p, NoiseSlice(np.full(g.ny, np.inf), 3))
    assert exc.value.step_index == 3


def test_linear_steady_state_with_far_field():
    g = GridSpec(30, 100, 1.0, 0.1)
    v0 = 0.4 * g.y
    s = FieldSolver(FieldState.initial(v0), StepParams(1.0, g.dt, g.dy, reflect=False, drift=False,
                                                       right_value=0.4))
    for _ in range(g.nt):
        s.advance(np.zeros(g.ny))
    np.testing.assert_allclose(s.state.v, v0, atol=1e-13)
    assert s.state.g0 == pytest.approx(0.4)


def test_unreflected_noise_variance():
    """Zero initial data, no drift: Var v(y, t) is the discrete Ito sum of the stepper."""
    g = GridSpec(15, 40, 1.0, 0.04)
    sig = np.sin(np.pi * g.y)
    rng = np.random.default_rng(8)
    n_paths = 3000
    vals = np.empty((n_paths, g.ny))
    p = StepParams(1.0, g.dt, g.dy, sigma=sig, reflect=False, drift=False)
    for i in range(n_paths):
        s = FieldSolver(FieldState.initial(np.zeros(g.ny)), p)
        for _ in range(g.nt):
            s.advance(rng.standard_normal(g.ny) * math.sqrt(g.dt * g.dy))
        vals[i] = s.state.v
    A = np.linalg.inv(np.diag(np.full(g.ny, 1 + 2 * p.r)) + np.diag(np.full(g.ny - 1, -p.r), 1)
                      + np.diag(np.full(g.ny - 1, -p.r), -1))
    # cov_{k+1} = A (cov_k + S S^T dt dy) A^T
    cov = np.zeros((g.ny, g.ny))
    S = np.diag(sig / g.dy)
    for _ in range(g.nt):
        cov = A @ (cov + S @ S.T * (g.dt * g.dy)) @ A.T
    var = np.diag(cov)
    mid = g.ny // 2
    assert vals[:, mid].var(ddof=1) == pytest.approx(var[mid], rel=0.1)


def test_backend_selected_at_import():
    import os
    import subprocess
    import sys
    code = "from stefan_spread import kernels; print(kernels.BACKEND)"
    env = {**os.environ, "STEFAN_SPREAD_PURE": "1"}
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.stdout.strip() == "python"
    env["STEFAN_SPREAD_PURE"] = "0"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.stdout.strip() == BACKENDS[0]


grid_fields = arrays(np.float64, 20, elements=st.floats(-10, 10, allow_nan=False))
DY = 1.0 / 21


@settings(max_examples=100, deadline=None)
@given(f=grid_fields, M=st.floats(0.1, 50))
def test_truncation_properties(f, M):
    t = truncate_T_M(f, M, DY)
    np.testing.assert_array_equal(truncate_T_M(t, M, DY), t)
    assert np.max(t / (DY * np.arange(1, 21))) <= M + 1e-12
    if b_norm(f, DY) <= M:
        np.testing.assert_array_equal(t, f)


@settings(max_examples=100, deadline=None)
@given(f=grid_fields, g=grid_fields, c=st.floats(-5, 5))
def test_b_norm_axioms(f, g, c):
    assert b_norm(c * f, DY) == pytest.approx(abs(c) * b_norm(f, DY), rel=1e-12, abs=1e-12)
    assert b_norm(f + g, DY) <= b_norm(f, DY) + b_norm(g, DY) + 1e-9


def test_truncation_examples():
    y = 0.01 * np.arange(1, 100)
    np.testing.assert_allclose(truncate_T_M(2 * y, 1.0, 0.01), y)
    np.testing.assert_array_equal(truncate_T_M(0.5 * y, 1.0, 0.01), 0.5 * y)
    s = np.sin(np.pi * y)
    np.testing.assert_array_equal(truncate_T_M(s, 4.0, 0.01), s)
    assert b_norm(np.zeros(5), 0.1) == 0.0


@settings(max_examples=30, deadline=None)
@given(c=st.floats(0.0, 1.0), amp=st.floats(0.0, 0.3), sign=st.sampled_from([-1, 1]))
def test_unreflected_maximum_principle(c, amp, sign):
    g = GridSpec(32, 200, 1.0, 0.1)
    v0 = c * np.sin(np.pi * g.y) + amp * np.sin(3 * np.pi * g.y) ** 2
    s = FieldSolver(FieldState.initial(v0), StepParams(1.0, g.dt, g.dy, drift_sign=sign, reflect=False))
    for _ in range(g.nt):
        s.advance(np.zeros(g.ny))
        assert s.state.v.min() >= -1e-12


def _coarsen(dW):
    nt, ny = dW.shape
    nyc = (ny + 1) // 2 - 1
    t = dW.reshape(nt // 4, 4, ny).sum(axis=1)
    return t[:, : 2 * nyc].reshape(nt // 4, nyc, 2).sum(axis=2)


def test_self_convergence():
    """Same Brownian sheet at three resolutions (dt ~ dy^2): level differences shrink on average."""
    def run(ny, nt, dW):
        g = GridSpec(ny, nt, 1.0, 0.05)
        s = FieldSolver(FieldState.initial(0.1 * np.sin(np.pi * g.y)),
                        StepParams(1.0, g.dt, g.dy, sigma=0.5 * np.sin(np.pi * g.y)))
        for k in range(nt):
            s.advance(dW[k])
        return s.state.v

    d = []
    for seed in range(8):
        g3 = GridSpec(127, 1024, 1.0, 0.05)
        dW3 = np.random.default_rng(seed).standard_normal((1024, 127)) * math.sqrt(g3.dt * g3.dy)
        dW2 = _coarsen(dW3)
        v3, v2, v1 = run(127, 1024, dW3), run(63, 256, dW2), run(31, 64, _coarsen(dW2))
        d.append((np.max(np.abs(v1 - v2[1::2])), np.max(np.abs(v2 - v3[1::2]))))
    d = np.mean(d, axis=0)
    assert d[1] < d[0]
