"""Model configuration, grid, field state and the change of variables.

The two liquid segments of the order book, ``x >= s+`` and ``x <= s-``, are
mapped onto the fixed interval ``D = (0, lam)`` by ``y = x - s+`` and
``y = s- - x`` respectively.  Everything downstream works on ``D``.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Mapping

import numpy as np

__all__ = [
    "CaseId",
    "Side",
    "StopKind",
    "GridSpec",
    "ModelConfig",
    "FieldState",
    "StopEvent",
    "ConfigError",
    "DomainError",
    "to_physical",
    "to_fixed",
    "validate_config",
    "load_config",
    "config_from_dict",
    "config_to_dict",
]


class ConfigError(ValueError):
    """Invalid model configuration; ``errors`` lists every violated rule."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class DomainError(ValueError):
    """A point was requested outside the fixed domain [0, lam]."""


class CaseId(str, enum.Enum):
    CASE1_SIGNED = "Case1Signed"
    CASE2_REFLECTED = "Case2Reflected"
    CASE3_UNREFLECTED = "Case3Unreflected"


class Side(str, enum.Enum):
    PLUS = "Plus"
    MINUS = "Minus"


class StopKind(str, enum.Enum):
    GRADIENT_BOUND = "GradientBound"
    SPREAD_NON_NEGATIVITY = "SpreadNonNegativity"
    SPREAD_AREA_LEFT = "SpreadAreaLeft"
    SPREAD_AREA_RIGHT = "SpreadAreaRight"


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid: ``ny`` interior nodes ``y_i = i*dy`` and ``nt`` steps."""

    ny: int
    nt: int
    lam: float
    horizon: float

    @property
    def dy(self) -> float:
        return self.lam / (self.ny + 1)

    @property
    def dt(self) -> float:
        return self.horizon / self.nt

    @property
    def y(self) -> np.ndarray:
        return self.dy * np.arange(1, self.ny + 1)

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.nt + 1)

    def check(self) -> list[str]:
        errs = []
        if self.ny < 4:
            errs.append(f"grid.ny must be >= 4, got {self.ny}")
        if self.nt < 1:
            errs.append(f"grid.nt must be >= 1, got {self.nt}")
        if not self.lam > 0 or not self.horizon > 0:
            errs.append("grid needs lam > 0 and horizon > 0")
        elif abs(self.dy * (self.ny + 1) - self.lam) > 1e-12 * self.lam:
            errs.append("grid.dy*(ny+1) does not reproduce lam")
        return errs


_NOISE_COUPLINGS = {"independent", "shared"}

# JSON key -> attribute name; "lambda" is a Python keyword
_FIELDS = {
    "case_id": "case_id",
    "alpha": "alpha",
    "lambda": "lam",
    "a": "a",
    "b": "b",
    "s_plus_0": "s_plus_0",
    "s_minus_0": "s_minus_0",
    "sigma_profile": "sigma_profile",
    "initial_profile": "initial_profile",
    "grad_bound_M": "grad_bound_M",
    "horizon_T": "horizon_T",
    "grid": "grid",
    "seed": "seed",
    "noise_coupling": "noise_coupling",
    "far_field_level": "far_field_level",
}
_OPTIONAL = {"noise_coupling", "far_field_level"}


@dataclass(frozen=True)
class ModelConfig:
    """Parameters of one Stefan spread model.

    ``sigma_profile`` and ``initial_profile`` are small descriptor dicts, e.g.
    ``{"kind": "sine", "amplitude": 0.5}``.  ``initial_profile`` may instead
    hold separate ``"plus"`` and ``"minus"`` descriptors for v1 and v2.
    ``far_field_level`` is the Dirichlet value at ``y = lam`` (0 for the
    compactly supported book; nonzero only for quasi-static comparisons).
    """

    case_id: CaseId
    alpha: float
    lam: float
    a: float
    b: float
    s_plus_0: float
    s_minus_0: float
    sigma_profile: Mapping[str, Any]
    initial_profile: Mapping[str, Any]
    grad_bound_M: float
    horizon_T: float
    grid: GridSpec
    seed: int
    noise_coupling: str = "independent"
    far_field_level: float = 0.0

    def with_seed(self, seed: int) -> "ModelConfig":
        return _replace(self, seed=int(seed))

    def profile_for(self, side: Side) -> Mapping[str, Any]:
        prof = self.initial_profile
        if "plus" in prof or "minus" in prof:
            return prof["plus" if side is Side.PLUS else "minus"]
        return prof


def _replace(cfg: ModelConfig, **kw) -> ModelConfig:
    return replace(cfg, **kw)


@dataclass
class FieldState:
    """Density on the interior grid nodes; v(0) = v(lam) = boundary value."""

    v: np.ndarray
    eta_cum: np.ndarray
    g0: float = 0.0
    t: float = 0.0

    @classmethod
    def initial(cls, v0: np.ndarray, t: float = 0.0) -> "FieldState":
        v0 = np.array(v0, dtype=float)
        return cls(v=v0, eta_cum=np.zeros_like(v0), g0=0.0, t=t)

    def copy(self) -> "FieldState":
        return FieldState(self.v.copy(), self.eta_cum.copy(), self.g0, self.t)


@dataclass(frozen=True)
class StopEvent:
    kind: StopKind
    step_index: int
    time: float
    triggering_value: float

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "step_index": self.step_index,
            "time": self.time,
            "triggering_value": self.triggering_value,
        }


def to_physical(case_id, y, side, s_plus, s_minus, lam=None):
    """Map an offset ``y`` in D to a price.

    Plus side: ``x = y + s+``; minus side: ``x = s- - y``.  The map is the
    same for all three cases; ``case_id`` is accepted so callers can pass
    their config through unchanged.
    """
    y = np.asarray(y, dtype=float)
    if lam is not None and (np.any(y < 0) or np.any(y > lam)):
        raise DomainError(f"y outside [0, {lam}]")
    if lam is None and np.any(y < 0):
        raise DomainError("y must be non-negative")
    side = Side(side)
    x = y + s_plus if side is Side.PLUS else s_minus - y
    return float(x) if x.ndim == 0 else x


def to_fixed(x, side, s_plus, s_minus):
    """Inverse of :func:`to_physical`."""
    x = np.asarray(x, dtype=float)
    side = Side(side)
    y = x - s_plus if side is Side.PLUS else s_minus - x
    return float(y) if y.ndim == 0 else y


def validate_config(cfg: ModelConfig) -> ModelConfig:
    """Return ``cfg`` unchanged or raise :class:`ConfigError` with all issues."""
    from .noise import sigma_values, check_sigma
    from .profiles import initial_values

    errs: list[str] = []
    if not cfg.alpha > 0:
        errs.append(f"alpha must be > 0, got {cfg.alpha}")
    if not cfg.lam > 0:
        errs.append(f"lambda must be > 0, got {cfg.lam}")
    if abs((cfg.b - cfg.a) - cfg.lam) > 1e-12 * max(1.0, abs(cfg.lam)):
        errs.append(f"lambda must equal b - a ({cfg.b - cfg.a}), got {cfg.lam}")
    if not cfg.a < cfg.s_minus_0:
        errs.append("a must be < s_minus_0")
    if cfg.s_minus_0 > cfg.s_plus_0:
        errs.append("s_minus_0 > s_plus_0")
    if not cfg.s_plus_0 < cfg.b:
        errs.append("s_plus_0 must be < b")
    if not (cfg.s_plus_0 - cfg.s_minus_0) < cfg.lam:
        errs.append("initial spread s_plus_0 - s_minus_0 must be < lambda")
    if not cfg.grad_bound_M > 0:
        errs.append(f"grad_bound_M must be > 0, got {cfg.grad_bound_M}")
    if not cfg.horizon_T > 0:
        errs.append(f"horizon_T must be > 0, got {cfg.horizon_T}")
    if cfg.noise_coupling not in _NOISE_COUPLINGS:
        errs.append(f"noise_coupling must be one of {sorted(_NOISE_COUPLINGS)}")
    if cfg.case_id is CaseId.CASE2_REFLECTED or cfg.case_id is CaseId.CASE1_SIGNED:
        if cfg.far_field_level < 0:
            errs.append("far_field_level must be >= 0 in reflected cases")

    grid = cfg.grid
    errs.extend(grid.check())
    if abs(grid.lam - cfg.lam) > 1e-12 * cfg.lam or abs(grid.horizon - cfg.horizon_T) > 1e-12 * cfg.horizon_T:
        errs.append("grid lam/horizon disagree with lambda/horizon_T")

    if not errs:
        # upwind drift CFL: the coupler stops once |g| reaches M
        courant = grid.dt * cfg.grad_bound_M / grid.dy
        if courant > 0.5 + 1e-12:
            errs.append(
                f"stability: dt*M/dy = {courant:.4g} > 1/2; increase grid.nt or lower grad_bound_M"
            )
        try:
            errs.extend(check_sigma(cfg.sigma_profile, cfg.lam, grid))
            sigma_values(cfg.sigma_profile, grid.y, cfg.lam)
        except (KeyError, TypeError, ValueError) as exc:
            errs.append(f"sigma_profile: {exc}")
        for side in (Side.PLUS, Side.MINUS):
            try:
                prof = cfg.profile_for(side)
                v0 = initial_values(prof, np.array([0.0, cfg.lam]), cfg.lam)
            except (KeyError, TypeError, ValueError) as exc:
                errs.append(f"initial_profile[{side.value}]: {exc}")
                continue
            if abs(v0[0]) > 1e-12:
                errs.append(f"initial_profile[{side.value}] must vanish at y=0")
            if abs(v0[1] - cfg.far_field_level) > 1e-9 * max(1.0, abs(cfg.far_field_level)):
                errs.append(
                    f"initial_profile[{side.value}] must equal far_field_level at y=lambda"
                )
            if cfg.case_id is not CaseId.CASE3_UNREFLECTED:
                vals = initial_values(prof, grid.y, cfg.lam)
                if np.any(vals < 0):
                    errs.append(f"initial_profile[{side.value}] must be >= 0 in reflected cases")
    if errs:
        raise ConfigError(errs)
    return cfg


def config_from_dict(doc: Mapping[str, Any]) -> ModelConfig:
    """Build a config from its JSON document; unknown keys are rejected."""
    errs = []
    unknown = sorted(set(doc) - set(_FIELDS))
    if unknown:
        errs.append(f"unknown keys: {', '.join(unknown)}")
    missing = sorted(set(_FIELDS) - _OPTIONAL - set(doc))
    if missing:
        errs.append(f"missing keys: {', '.join(missing)}")
    grid_doc = doc.get("grid", {})
    if not isinstance(grid_doc, Mapping) or set(grid_doc) != {"ny", "nt"}:
        errs.append("grid must be an object with exactly the keys ny, nt")
    if errs:
        raise ConfigError(errs)
    try:
        case_id = CaseId(doc["case_id"])
    except ValueError:
        raise ConfigError([f"case_id must be one of {[c.value for c in CaseId]}"]) from None
    try:
        lam = float(doc["lambda"])
        horizon = float(doc["horizon_T"])
        grid = GridSpec(ny=int(grid_doc["ny"]), nt=int(grid_doc["nt"]), lam=lam, horizon=horizon)
        seed = int(doc["seed"])
        if not 0 <= seed < 2**64:
            raise ValueError("seed must fit in 64 bits")
        return ModelConfig(
            case_id=case_id,
            alpha=float(doc["alpha"]),
            lam=lam,
            a=float(doc["a"]),
            b=float(doc["b"]),
            s_plus_0=float(doc["s_plus_0"]),
            s_minus_0=float(doc["s_minus_0"]),
            sigma_profile=dict(doc["sigma_profile"]),
            initial_profile=dict(doc["initial_profile"]),
            grad_bound_M=float(doc["grad_bound_M"]),
            horizon_T=horizon,
            grid=grid,
            seed=seed,
            noise_coupling=str(doc.get("noise_coupling", "independent")),
            far_field_level=float(doc.get("far_field_level", 0.0)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError([str(exc)]) from None


def config_to_dict(cfg: ModelConfig) -> dict:
    doc = {}
    for key, attr in _FIELDS.items():
        val = getattr(cfg, attr)
        if attr == "case_id":
            val = val.value
        elif attr == "grid":
            val = {"ny": val.ny, "nt": val.nt}
        elif isinstance(val, Mapping):
            val = json.loads(json.dumps(val))
        doc[key] = val
    return doc


def load_config(path: str | Path) -> ModelConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError([f"invalid JSON: {exc}"]) from None
    if not isinstance(doc, dict):
        raise ConfigError(["config must be a JSON object"])
    return validate_config(config_from_dict(doc))

