"""Initial density descriptors, evaluated on the fixed domain."""
from __future__ import annotations

from typing import Any, Mapping

import numpy as np


def initial_values(profile: Mapping[str, Any], y: np.ndarray, lam: float) -> np.ndarray:
    """Evaluate ``v(y, 0)`` for a descriptor.

    ``sine``: ``c0 * sin(pi y / lam)`` (default); ``linear``: ``slope * y``,
    the quasi-static profile; ``zero``.
    """
    y = np.asarray(y, dtype=float)
    kind = profile.get("kind", "sine")
    if kind == "sine":
        return float(profile.get("amplitude", 1.0)) * np.sin(np.pi * y / lam)
    if kind == "linear":
        return float(profile["slope"]) * y
    if kind == "zero":
        return np.zeros_like(y)
    raise ValueError(f"unknown initial profile kind {kind!r}")
