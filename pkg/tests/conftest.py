from __future__ import annotations

import copy

import pytest

from stefan_spread.core import config_from_dict

BASE = {
    "case_id": "Case2Reflected",
    "alpha": 1.0,
    "lambda": 1.0,
    "a": 0.0,
    "b": 1.0,
    "s_plus_0": 0.55,
    "s_minus_0": 0.45,
    "sigma_profile": {"kind": "sine", "amplitude": 0.5},
    "initial_profile": {"kind": "sine", "amplitude": 0.1},
    "grad_bound_M": 10.0,
    "horizon_T": 0.5,
    "grid": {"ny": 64, "nt": 1000},
    "seed": 11,
}


def make_doc(**kw):
    doc = copy.deepcopy(BASE)
    for k, v in kw.items():
        doc["lambda" if k == "lam" else k] = v
    return doc


def make_cfg(**kw):
    return config_from_dict(make_doc(**kw))


@pytest.fixture
def base_doc():
    return make_doc()
