"""Canonical JSON serialization for points, branches, and method records.

Schema conventions
------------------
* complex numbers are ``[re, im]`` pairs; complex arrays are nested lists of
  such pairs,
* every point record carries ``kind``, ``parameter`` and ``stability``
  (``null`` when absent),
* a branch record is ``{"kind", "parameter_names", "points", "methods"}``
  where ``methods`` bundles the point/stability/continuation settings and the
  free-parameter/bounds control,
* all numbers are 64-bit floats; parameter indices are 1-based.

Round-trips are exact for every finite float (``repr``-based JSON encoding).
"""

from __future__ import annotations

import dataclasses
import json
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from .model import (
    Branch,
    BranchMethod,
    ConnectingOrbit,
    ContinuationMethod,
    Fold,
    Hopf,
    Measure,
    Multipliers,
    ParameterControl,
    PeriodicOrbit,
    PiecewiseProfile,
    Point,
    PointMethod,
    Roots,
    Stability,
    StabilityMethod,
    SteadyState,
)

__all__ = [
    "point_to_dict",
    "point_from_dict",
    "stability_to_dict",
    "stability_from_dict",
    "branch_to_dict",
    "branch_from_dict",
    "branch_to_json",
    "branch_from_json",
    "write_branch",
    "read_branch",
]


# ---------------------------------------------------------------------------
# scalar/array encoding
# ---------------------------------------------------------------------------


def _encode_complex_array(a: np.ndarray) -> list:
    return np.stack([a.real, a.imag], axis=-1).tolist()


def _decode_complex_array(data: list, ndmin: int = 1) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.size == 0:
        return np.zeros(arr.shape[:-1] if arr.ndim > ndmin else (0,) * ndmin, dtype=complex)
    return (arr[..., 0] + 1j * arr[..., 1]).astype(complex)


def _encode_real_array(a: np.ndarray) -> list:
    return np.asarray(a, dtype=float).tolist()


# ---------------------------------------------------------------------------
# stability
# ---------------------------------------------------------------------------


def stability_to_dict(stability: Optional[Stability]) -> Optional[Dict[str, Any]]:
    if stability is None:
        return None
    if isinstance(stability, Multipliers):
        return {"mu": _encode_complex_array(stability.mu)}
    return {
        "h": float(stability.h),
        "l0": _encode_complex_array(stability.l0),
        "l1": _encode_complex_array(stability.l1),
        "n1": [int(n) for n in stability.n1],
    }


def stability_from_dict(data: Optional[Dict[str, Any]]) -> Optional[Stability]:
    if data is None:
        return None
    if "mu" in data:
        return Multipliers(mu=_decode_complex_array(data["mu"]))
    return Roots(
        h=float(data["h"]),
        l0=_decode_complex_array(data["l0"]),
        l1=_decode_complex_array(data["l1"]),
        n1=np.asarray(data["n1"], dtype=int),
    )


# ---------------------------------------------------------------------------
# profiles and points
# ---------------------------------------------------------------------------


def _profile_to_dict(profile: PiecewiseProfile) -> Dict[str, Any]:
    return {
        "values": _encode_real_array(profile.values),
        "degree": int(profile.degree),
        "mesh": None if profile.mesh is None else _encode_real_array(profile.mesh),
    }


def _profile_from_dict(data: Dict[str, Any]) -> PiecewiseProfile:
    return PiecewiseProfile(
        values=np.asarray(data["values"], dtype=float),
        degree=int(data["degree"]),
        mesh=None if data["mesh"] is None else np.asarray(data["mesh"], dtype=float),
    )


def point_to_dict(point: Point) -> Dict[str, Any]:
    record: Dict[str, Any] = {
        "kind": point.kind,
        "parameter": _encode_real_array(point.parameter),
        "stability": stability_to_dict(point.stability),
    }
    if point.kind in ("stst", "fold", "hopf"):
        record["x"] = _encode_real_array(point.x)
    if point.kind == "fold":
        record["v"] = _encode_real_array(point.v)
    if point.kind == "hopf":
        record["v"] = _encode_complex_array(point.v)
        record["omega"] = float(point.omega)
    if point.kind in ("psol", "hcli"):
        record["profile"] = _profile_to_dict(point.profile)
        record["period"] = float(point.period)
    if point.kind == "hcli":
        record.update(
            x1=_encode_real_array(point.x1),
            x2=_encode_real_array(point.x2),
            lambda_v=_encode_complex_array(point.lambda_v),
            lambda_w=_encode_complex_array(point.lambda_w),
            v=_encode_complex_array(point.v),
            w=_encode_complex_array(point.w),
            alpha=_encode_complex_array(point.alpha),
            epsilon=float(point.epsilon),
        )
    return record


def point_from_dict(data: Dict[str, Any]) -> Point:
    kind = data["kind"]
    parameter = np.asarray(data["parameter"], dtype=float)
    stability = stability_from_dict(data.get("stability"))
    if kind == "stst":
        return SteadyState(parameter=parameter, stability=stability,
                           x=np.asarray(data["x"], dtype=float))
    if kind == "fold":
        return Fold(parameter=parameter, stability=stability,
                    x=np.asarray(data["x"], dtype=float),
                    v=np.asarray(data["v"], dtype=float))
    if kind == "hopf":
        return Hopf(parameter=parameter, stability=stability,
                    x=np.asarray(data["x"], dtype=float),
                    v=_decode_complex_array(data["v"]),
                    omega=float(data["omega"]))
    if kind == "psol":
        return PeriodicOrbit(parameter=parameter, stability=stability,
                             profile=_profile_from_dict(data["profile"]),
                             period=float(data["period"]))
    if kind == "hcli":
        return ConnectingOrbit(
            parameter=parameter,
            stability=stability,
            profile=_profile_from_dict(data["profile"]),
            period=float(data["period"]),
            x1=np.asarray(data["x1"], dtype=float),
            x2=np.asarray(data["x2"], dtype=float),
            lambda_v=_decode_complex_array(data["lambda_v"]),
            lambda_w=_decode_complex_array(data["lambda_w"]),
            v=_decode_complex_array(data["v"], ndmin=2),
            w=_decode_complex_array(data["w"], ndmin=2),
            alpha=_decode_complex_array(data["alpha"]),
            epsilon=float(data["epsilon"]),
        )
    raise ValueError(f"unknown point kind {kind!r}")


# ---------------------------------------------------------------------------
# methods
# ---------------------------------------------------------------------------


def _measure_to_dict(measure: Measure) -> Dict[str, Any]:
    if callable(measure.func):
        raise ValueError("callable measure functions are not serializable")
    return {
        "field": measure.field,
        "subfield": measure.subfield,
        "row": measure.row,
        "col": measure.col,
        "func": measure.func,
    }


def _measure_from_dict(data: Dict[str, Any]) -> Measure:
    return Measure(**data)


def _point_method_to_dict(m: PointMethod) -> Dict[str, Any]:
    record = dataclasses.asdict(m)
    cp = record["collocation_parameters"]
    record["collocation_parameters"] = None if cp is None else _encode_real_array(cp)
    return record


def _point_method_from_dict(data: Dict[str, Any]) -> PointMethod:
    data = dict(data)
    if data.get("collocation_parameters") is not None:
        data["collocation_parameters"] = np.asarray(
            data["collocation_parameters"], dtype=float
        )
    return PointMethod(**data)


def _stability_method_to_dict(m: StabilityMethod) -> Dict[str, Any]:
    record = dataclasses.asdict(m)
    record["lms_alpha"] = list(m.lms_alpha)
    record["lms_beta"] = list(m.lms_beta)
    cp = record["collocation_parameters"]
    record["collocation_parameters"] = None if cp is None else _encode_real_array(cp)
    return record


def _stability_method_from_dict(data: Dict[str, Any]) -> StabilityMethod:
    data = dict(data)
    data["lms_alpha"] = tuple(data["lms_alpha"])
    data["lms_beta"] = tuple(data["lms_beta"])
    if data.get("collocation_parameters") is not None:
        data["collocation_parameters"] = np.asarray(
            data["collocation_parameters"], dtype=float
        )
    return StabilityMethod(**data)


def _continuation_method_to_dict(m: ContinuationMethod) -> Dict[str, Any]:
    pm = m.plot_measure
    return {
        "steplength_condition": m.steplength_condition,
        "plot": m.plot,
        "prediction": m.prediction,
        "steplength_growth_factor": m.steplength_growth_factor,
        "plot_progress": m.plot_progress,
        "plot_measure": None if pm is None else [_measure_to_dict(pm[0]),
                                                 _measure_to_dict(pm[1])],
        "halt_before_reject": m.halt_before_reject,
    }


def _continuation_method_from_dict(data: Dict[str, Any]) -> ContinuationMethod:
    data = dict(data)
    pm = data.get("plot_measure")
    if pm is not None:
        data["plot_measure"] = (_measure_from_dict(pm[0]), _measure_from_dict(pm[1]))
    return ContinuationMethod(**data)


def _control_to_dict(control: ParameterControl) -> Dict[str, Any]:
    return {
        "free": list(control.free),
        "min_bound": [[int(i), float(v)] for i, v in control.min_bound],
        "max_bound": [[int(i), float(v)] for i, v in control.max_bound],
        "max_step": [[int(i), float(v)] for i, v in control.max_step],
    }


def _control_from_dict(data: Dict[str, Any]) -> ParameterControl:
    pairs = lambda key: tuple((int(i), float(v)) for i, v in data.get(key, []))
    return ParameterControl(
        free=tuple(int(i) for i in data.get("free", [])),
        min_bound=pairs("min_bound"),
        max_bound=pairs("max_bound"),
        max_step=pairs("max_step"),
    )


# ---------------------------------------------------------------------------
# branches
# ---------------------------------------------------------------------------


def branch_to_dict(
    branch: Branch, parameter_names: Optional[Sequence[str]] = None
) -> Dict[str, Any]:
    kind = branch.points[0].kind if branch.points else None
    return {
        "kind": kind,
        "parameter_names": None if parameter_names is None else list(parameter_names),
        "points": [point_to_dict(p) for p in branch.points],
        "methods": {
            "point": _point_method_to_dict(branch.method.point),
            "stability": _stability_method_to_dict(branch.method.stability),
            "continuation": _continuation_method_to_dict(branch.method.continuation),
            "parameter": _control_to_dict(branch.parameter),
        },
    }


def branch_from_dict(data: Dict[str, Any]) -> Branch:
    methods = data["methods"]
    return Branch(
        method=BranchMethod(
            point=_point_method_from_dict(methods["point"]),
            stability=_stability_method_from_dict(methods["stability"]),
            continuation=_continuation_method_from_dict(methods["continuation"]),
        ),
        parameter=_control_from_dict(methods["parameter"]),
        points=[point_from_dict(p) for p in data["points"]],
    )


def branch_to_json(branch: Branch, parameter_names: Optional[Sequence[str]] = None,
                   indent: Optional[int] = 2) -> str:
    return json.dumps(branch_to_dict(branch, parameter_names), indent=indent)


def branch_from_json(text: str) -> Branch:
    return branch_from_dict(json.loads(text))


def write_branch(branch: Branch, path, parameter_names=None) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(branch_to_json(branch, parameter_names))
        handle.write("\n")


def read_branch(path) -> Branch:
    with open(path, "r", encoding="utf-8") as handle:
        return branch_from_json(handle.read())
