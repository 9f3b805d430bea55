"""JSON documents for minima, limit laws, moment reports and distributions."""

from __future__ import annotations

import json
import math
from enum import Enum

import numpy as np

from . import __version__
from .exactdist import Discrepancy, FiniteDist
from .landscape import CriticalPoint, MinimaSet
from .limits import LimitLaw, MomentReport
from .model import ModelSpec


def jsonable(obj):
    """Convert numpy values, enums and non-finite floats to plain JSON types."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def dumps(doc) -> str:
    return json.dumps(jsonable(doc), indent=2, sort_keys=True, allow_nan=False) + "\n"


def header(spec: ModelSpec) -> dict:
    return {"tool": "mscw", "version": __version__, "model": spec.to_dict()}


def tensor_entries(t: np.ndarray, atol: float = 0.0) -> dict:
    idx = np.argwhere(np.abs(t) > atol)
    return {"indices": idx.tolist(), "values": [float(t[tuple(i)]) for i in idx]}


def critical_point_to_dict(pt: CriticalPoint) -> dict:
    return {
        "mu": pt.mu,
        "value": pt.value,
        "grad_norm": pt.grad_norm,
        "hessian": pt.hessian,
        "hessian_eigenvalues": pt.hessian_eigenvalues,
        "k": pt.k,
        "quartic": None if pt.quartic is None else tensor_entries(pt.quartic),
        "third_order_norm": pt.third_order_norm,
        "null_coords": list(pt.null_coords),
    }


def minima_to_dict(ms: MinimaSet) -> dict:
    return {
        "points": [critical_point_to_dict(p) for p in ms.points],
        "f_min": ms.f_min,
        "delta_bar": ms.delta_bar,
    }


def law_to_dict(law: LimitLaw) -> dict:
    return {
        "kind": law.kind,
        "coords": list(law.coords),
        "exponents": law.exponents,
        "chi": law.chi,
        "quartic": None if law.quartic is None else tensor_entries(law.quartic),
        "factors": [law_to_dict(f) for f in law.factors],
    }


def report_to_dict(r: MomentReport) -> dict:
    out = {
        "mean": r.mean,
        "covariance": r.covariance,
        "third": r.third,
        "fourth": r.fourth,
        "kurtosis": r.kurtosis,
        "cross_fourth": r.cross_fourth,
        "exponents": r.exponents,
        "center": r.center,
        "log_norm": r.log_norm,
    }
    if r.stderr is not None:
        out["stderr"] = dict(r.stderr)
    return out


def discrepancy_to_dict(d: Discrepancy) -> dict:
    return {
        "cov_abs": d.cov_abs,
        "cov_rel": d.cov_rel,
        "mean_abs": d.mean_abs,
        "fourth_abs": d.fourth_abs,
        "kurtosis_abs": d.kurtosis_abs,
        "tv": d.tv,
    }


def dist_summary(dist: FiniteDist) -> dict:
    cond = None
    if dist.condition is not None:
        cond = {"center": dist.condition[0], "radius": dist.condition[1]}
    return {
        **header(dist.model.spec),
        "sizes": list(dist.partition.sizes),
        "log_Z": dist.log_Z,
        "condition": cond,
        "boundary_mass": dist.boundary_mass,
        "boundary_flag": dist.boundary_flag,
        "mean_magnetization": dist.mean_magnetization(),
    }
