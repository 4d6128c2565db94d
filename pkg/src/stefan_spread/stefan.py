"""Two-sided Stefan coupling: fields v1 (ask side) and v2 (bid side) on the
fixed domain, moving boundaries from the Stefan condition, and the stopping
times that delimit the maximal solution.

Step ``k`` advances ``t_{k-1} -> t_k``.  The gradients ``g1, g2`` observed at
``t_{k-1}`` drive both the drift of that step and the forward-Euler update of
``s+`` and ``s-``.  A :class:`StopEvent` names the refused step; the
trajectory holds only the times strictly before the stopping time.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import CaseId, FieldState, ModelConfig, Side, StopEvent, StopKind, to_fixed
from .noise import (
    STREAM_SHARED,
    STREAM_V1,
    STREAM_V2,
    NoiseStream,
    is_time_only,
    make_rng,
    sigma_values,
)
from .profiles import initial_values
from .solver import BlowUpError, FieldSolver, StepParams


class SimulationBlowUp(RuntimeError):
    def __init__(self, step_index: int, diagnostics: dict):
        self.step_index = step_index
        self.diagnostics = diagnostics
        super().__init__(f"solver blow-up at step {step_index}: {diagnostics}")


@dataclass(frozen=True)
class FieldSigns:
    drift_sign: int
    noise_sign: int
    reflect: bool


@dataclass(frozen=True)
class CaseSigns:
    v1: FieldSigns
    v2: FieldSigns
    # ds-/dt = minus_sign * g2 ; ds+/dt = -g1 in every case
    minus_sign: int

    def spread_rate(self, g1: float, g2: float) -> float:
        return -g1 - self.minus_sign * g2


def case_signs(case_id) -> CaseSigns:
    case_id = CaseId(case_id)
    if case_id is CaseId.CASE1_SIGNED:
        return CaseSigns(FieldSigns(-1, 1, True), FieldSigns(1, -1, True), minus_sign=-1)
    if case_id is CaseId.CASE2_REFLECTED:
        return CaseSigns(FieldSigns(-1, 1, True), FieldSigns(-1, 1, True), minus_sign=1)
    return CaseSigns(FieldSigns(-1, 1, False), FieldSigns(-1, 1, False), minus_sign=1)


def integrate_stefan(case_id, s_plus: float, s_minus: float, g1: float, g2: float,
                     dt: float) -> tuple[float, float]:
    """Forward Euler on ``ds+/dt = -g1`` and ``ds-/dt = -g2`` (Case 1) or ``+g2``."""
    signs = case_signs(case_id)
    return s_plus - g1 * dt, s_minus + signs.minus_sign * g2 * dt


def gradient_measure(case_id, g1: float, g2: float) -> float:
    """Quantity whose running sup is compared with M."""
    if CaseId(case_id) is CaseId.CASE3_UNREFLECTED:
        return abs(g1) + abs(g2)
    return g1 + g2


def check_stopping(case_id, g1: float, g2: float, s_plus: float, s_minus: float,
                   cfg: ModelConfig, grad_sup: float = -np.inf, step_index: int = 0,
                   time: float = 0.0, time_after: float | None = None) -> StopEvent | None:
    """First applicable stop for step ``step_index``.

    ``g1, g2`` are the gradients at the start of the step (time ``time``) and
    ``grad_sup`` the running sup before them.  ``s_plus, s_minus`` are the
    boundaries proposed for the end of the step (time ``time_after``).
    """
    case_id = CaseId(case_id)
    if time_after is None:
        time_after = time
    q = max(grad_sup, gradient_measure(case_id, g1, g2))
    if q >= cfg.grad_bound_M:
        return StopEvent(StopKind.GRADIENT_BOUND, step_index, time, float(q))
    spread = s_plus - s_minus
    if spread < 0:
        return StopEvent(StopKind.SPREAD_NON_NEGATIVITY, step_index, time_after, float(spread))
    if case_id is not CaseId.CASE2_REFLECTED and s_minus <= cfg.a:
        return StopEvent(StopKind.SPREAD_AREA_LEFT, step_index, time_after, float(s_minus))
    if case_id is CaseId.CASE3_UNREFLECTED and s_plus >= cfg.b:
        return StopEvent(StopKind.SPREAD_AREA_RIGHT, step_index, time_after, float(s_plus))
    return None


class LiteralFunctionals:
    """Running values of the stopping-time functionals in their ``sup >= budget/T`` form.

    Logged for comparison only; the coupler stops on the integrated
    constraints, which these functionals are built to guarantee.
    """

    def __init__(self, case_id: CaseId, cfg: ModelConfig):
        self.case_id = case_id
        spread0 = cfg.s_plus_0 - cfg.s_minus_0
        if case_id is CaseId.CASE1_SIGNED:
            self.forms = {
                "tau_1s": (lambda g1, g2: abs(g1 - g2), spread0),
                "tau_1star": (lambda g1, g2: g2, cfg.s_minus_0 - cfg.a),
            }
        elif case_id is CaseId.CASE2_REFLECTED:
            self.forms = {"tau_2s": (lambda g1, g2: g1 + g2, spread0)}
        else:
            self.forms = {
                "tau_3s": (lambda g1, g2: abs(g1 + g2), spread0),
                "tau_3star": (lambda g1, g2: abs(g2), cfg.s_minus_0 - cfg.a),
                "tau_3starstar": (lambda g1, g2: abs(g1), cfg.b - cfg.s_plus_0),
            }
        self.sup = {k: -np.inf for k in self.forms}
        self.values: dict[str, list[float]] = {k: [] for k in self.forms}
        self.thresholds: dict[str, list[float]] = {k: [] for k in self.forms}
        self.first_fire: dict[str, int | None] = {k: None for k in self.forms}

    def update(self, step_index: int, t_end: float, g1: float, g2: float):
        for name, (fn, budget) in self.forms.items():
            self.sup[name] = max(self.sup[name], fn(g1, g2))
            thr = budget / t_end
            self.values[name].append(self.sup[name])
            self.thresholds[name].append(thr)
            if self.first_fire[name] is None and self.sup[name] >= thr:
                self.first_fire[name] = step_index


@dataclass
class StefanTrajectory:
    case_id: CaseId
    times: np.ndarray
    s_plus: np.ndarray
    s_minus: np.ndarray
    g1: np.ndarray
    g2: np.ndarray
    eta1_total: np.ndarray
    eta2_total: np.ndarray
    stop: StopEvent | None
    snapshots: dict[float, tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)
    eta1_cum: np.ndarray | None = None
    eta2_cum: np.ndarray | None = None
    diagnostics: dict[str, np.ndarray] = field(default_factory=dict)
    functionals: LiteralFunctionals | None = None
    lam: float = 1.0
    far_field_level: float = 0.0
    dy: float = 0.0

    @property
    def spread(self) -> np.ndarray:
        return self.s_plus - self.s_minus

    @property
    def n_accepted(self) -> int:
        return len(self.times)


class _Recorder:
    def __init__(self):
        self.t, self.sp, self.sm, self.g1, self.g2, self.e1, self.e2 = ([] for _ in range(7))

    def push(self, t, sp, sm, g1, g2, e1, e2):
        self.t.append(t)
        self.sp.append(sp)
        self.sm.append(sm)
        self.g1.append(g1)
        self.g2.append(g2)
        self.e1.append(e1)
        self.e2.append(e2)

    def drop_last(self):
        for lst in (self.t, self.sp, self.sm, self.g1, self.g2, self.e1, self.e2):
            lst.pop()


def _snapshot_steps(times: Sequence[float], dt: float, nt: int) -> dict[int, float]:
    out = {}
    for t in times:
        k = int(round(t / dt))
        if 0 <= k <= nt:
            out[k] = k * dt
    return out


def simulate(cfg: ModelConfig, path_index: int = 0, snapshot_times: Sequence[float] = (),
             swap_streams: bool = False) -> StefanTrajectory:
    """One trajectory up to the first stop or the horizon.

    The two fields use independent streams ``(seed, path_index, 1)`` and
    ``(seed, path_index, 2)``; ``swap_streams`` exchanges them.  With
    ``noise_coupling == "shared"`` both read one sheet (stream 0).
    """
    grid = cfg.grid
    case_id = CaseId(cfg.case_id)
    signs = case_signs(case_id)
    dt, dy = grid.dt, grid.dy
    y = grid.y
    sigma = sigma_values(cfg.sigma_profile, y, cfg.lam)
    time_only = is_time_only(cfg.sigma_profile)

    def params(fs: FieldSigns) -> StepParams:
        return StepParams(cfg.alpha, dt, dy, fs.drift_sign, fs.noise_sign, fs.reflect,
                          sigma=sigma, right_value=cfg.far_field_level, time_only=time_only)

    v1 = FieldSolver(FieldState.initial(initial_values(cfg.profile_for(Side.PLUS), y, cfg.lam)),
                     params(signs.v1))
    v2 = FieldSolver(FieldState.initial(initial_values(cfg.profile_for(Side.MINUS), y, cfg.lam)),
                     params(signs.v2))

    if cfg.noise_coupling == "shared":
        n1 = NoiseStream(make_rng(cfg.seed, path_index, STREAM_SHARED), grid, time_only)
        n2 = None
    else:
        k1, k2 = (STREAM_V2, STREAM_V1) if swap_streams else (STREAM_V1, STREAM_V2)
        n1 = NoiseStream(make_rng(cfg.seed, path_index, k1), grid, time_only)
        n2 = NoiseStream(make_rng(cfg.seed, path_index, k2), grid, time_only)

    snaps_at = _snapshot_steps(snapshot_times, dt, grid.nt)
    snapshots: dict[float, tuple[np.ndarray, np.ndarray]] = {}
    if 0 in snaps_at:
        snapshots[0.0] = (v1.state.v.copy(), v2.state.v.copy())

    functionals = LiteralFunctionals(case_id, cfg)
    diag = {k: np.full(grid.nt, np.nan) for k in
            ("min_v1", "min_v2", "min_eta1", "min_eta2", "comp1", "comp2")}
    rec = _Recorder()
    s_plus, s_minus = cfg.s_plus_0, cfg.s_minus_0
    grad_sup = -np.inf
    stop = None
    executed = 0
    rec.push(0.0, s_plus, s_minus, v1.state.g0, v2.state.g0, 0.0, 0.0)

    for k in range(1, grid.nt + 1):
        t0 = (k - 1) * dt
        t1 = k * dt
        g1, g2 = v1.state.g0, v2.state.g0
        q = gradient_measure(case_id, g1, g2)
        if max(grad_sup, q) >= cfg.grad_bound_M:
            stop = check_stopping(case_id, g1, g2, s_plus, s_minus, cfg, grad_sup, k, t0, t0)
            rec.drop_last()  # the maximal interval is open at t0
            break
        grad_sup = max(grad_sup, q)
        d1 = n1.next().dW
        d2 = d1 if n2 is None else n2.next().dW
        try:
            v1.advance(d1)
            v2.advance(d2)
        except BlowUpError:
            raise SimulationBlowUp(k, {"t": t0, "g1": g1, "g2": g2,
                                       "s_plus": s_plus, "s_minus": s_minus}) from None
        i = k - 1
        executed = k
        diag["min_v1"][i] = v1.state.v.min()
        diag["min_v2"][i] = v2.state.v.min()
        diag["min_eta1"][i] = v1.eta_inc.min()
        diag["min_eta2"][i] = v2.eta_inc.min()
        diag["comp1"][i] = np.dot(v1.state.v, v1.eta_inc) * dy
        diag["comp2"][i] = np.dot(v2.state.v, v2.eta_inc) * dy
        functionals.update(k, t1, g1, g2)

        sp_new, sm_new = integrate_stefan(case_id, s_plus, s_minus, g1, g2, dt)
        stop = check_stopping(case_id, g1, g2, sp_new, sm_new, cfg, grad_sup, k, t0, t1)
        if stop is not None:
            break
        s_plus, s_minus = sp_new, sm_new
        rec.push(t1, s_plus, s_minus, v1.state.g0, v2.state.g0,
                 dy * v1.state.eta_cum.sum(), dy * v2.state.eta_cum.sum())
        if k in snaps_at:
            snapshots[snaps_at[k]] = (v1.state.v.copy(), v2.state.v.copy())

    for key in diag:
        diag[key] = diag[key][:executed]
    if rec.t:
        last_t = rec.t[-1]
        if stop is None or stop.kind is not StopKind.GRADIENT_BOUND:
            snapshots.setdefault(last_t, (v1.state.v.copy(), v2.state.v.copy()))
    return StefanTrajectory(
        case_id=case_id,
        times=np.array(rec.t),
        s_plus=np.array(rec.sp),
        s_minus=np.array(rec.sm),
        g1=np.array(rec.g1),
        g2=np.array(rec.g2),
        eta1_total=np.array(rec.e1),
        eta2_total=np.array(rec.e2),
        stop=stop,
        snapshots=snapshots,
        eta1_cum=v1.state.eta_cum.copy(),
        eta2_cum=v2.state.eta_cum.copy(),
        diagnostics=diag,
        functionals=functionals,
        lam=cfg.lam,
        far_field_level=cfg.far_field_level,
        dy=dy,
    )


def run_boundaries(cfg: ModelConfig, g1: Sequence[float], g2: Sequence[float]) -> StefanTrajectory:
    """Boundary integration and stopping for prescribed gradient sequences.

    ``g1[k-1], g2[k-1]`` are the gradients observed at the start of step ``k``.
    """
    case_id = CaseId(cfg.case_id)
    dt = cfg.grid.dt
    g1 = np.asarray(g1, dtype=float)
    g2 = np.asarray(g2, dtype=float)
    rec = _Recorder()
    s_plus, s_minus = cfg.s_plus_0, cfg.s_minus_0
    grad_sup = -np.inf
    stop = None
    functionals = LiteralFunctionals(case_id, cfg)
    rec.push(0.0, s_plus, s_minus, g1[0], g2[0], 0.0, 0.0)
    for k in range(1, len(g1) + 1):
        a, b = g1[k - 1], g2[k - 1]
        q = gradient_measure(case_id, a, b)
        if max(grad_sup, q) >= cfg.grad_bound_M:
            stop = check_stopping(case_id, a, b, s_plus, s_minus, cfg, grad_sup, k, (k - 1) * dt)
            rec.drop_last()
            break
        grad_sup = max(grad_sup, q)
        functionals.update(k, k * dt, a, b)
        sp_new, sm_new = integrate_stefan(case_id, s_plus, s_minus, a, b, dt)
        stop = check_stopping(case_id, a, b, sp_new, sm_new, cfg, grad_sup, k, (k - 1) * dt, k * dt)
        if stop is not None:
            break
        s_plus, s_minus = sp_new, sm_new
        nxt = min(k, len(g1) - 1)
        rec.push(k * dt, s_plus, s_minus, g1[nxt], g2[nxt], 0.0, 0.0)
    return StefanTrajectory(
        case_id=case_id,
        times=np.array(rec.t),
        s_plus=np.array(rec.sp),
        s_minus=np.array(rec.sm),
        g1=np.array(rec.g1),
        g2=np.array(rec.g2),
        eta1_total=np.array(rec.e1),
        eta2_total=np.array(rec.e2),
        stop=stop,
        functionals=functionals,
        lam=cfg.lam,
        far_field_level=cfg.far_field_level,
        dy=cfg.grid.dy,
    )


def _field_at(v: np.ndarray, yq: np.ndarray, dy: float, right: float) -> np.ndarray:
    nodes = dy * np.arange(v.shape[0] + 2)
    vals = np.concatenate(([0.0], v, [right]))
    return np.interp(yq, nodes, vals)


def reconstruct_density(traj: StefanTrajectory, t: float, x: np.ndarray) -> np.ndarray:
    """Physical density ``w(x, t)`` from the stored field snapshot at ``t``."""
    if traj.n_accepted == 0 or t > traj.times[-1] + 1e-12:
        raise ValueError(f"t = {t} is not before the stopping time")
    idx = int(np.argmin(np.abs(traj.times - t)))
    tk = float(traj.times[idx])
    key = next((s for s in traj.snapshots if abs(s - tk) < 1e-9 * max(1.0, tk)), None)
    if key is None:
        raise ValueError(f"no field snapshot at t = {t}; request it via snapshot_times")
    v1, v2 = traj.snapshots[key]
    sp, sm = traj.s_plus[idx], traj.s_minus[idx]
    x = np.asarray(x, dtype=float)
    w = np.zeros_like(x)
    right = traj.far_field_level
    plus = x >= sp
    minus = x <= sm
    if np.any(plus):
        yq = to_fixed(x[plus], Side.PLUS, sp, sm)
        w[plus] = _field_at(v1, np.atleast_1d(yq), traj.dy, right)
    if np.any(minus):
        yq = to_fixed(x[minus], Side.MINUS, sp, sm)
        vals = _field_at(v2, np.atleast_1d(yq), traj.dy, right)
        w[minus] = -vals if traj.case_id is CaseId.CASE1_SIGNED else vals
    return w
