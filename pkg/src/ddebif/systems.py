"""Built-in demo systems.

* ``neuron``      coupled pair of delayed neurons (constant delays)
* ``sd_demo``     five-dimensional system with six state-dependent delays
* ``hom_neural``  two-dimensional neural model exhibiting homoclinic orbits

Each entry provides the right-hand side, analytic derivatives (first order
everywhere; full second order where the corrections need them), delay
specifications and a reference starting point.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from .system import (
    ConstantDelays,
    Problem,
    StateDependentDelays,
    assemble_problem,
)

__all__ = ["builtin_problem", "builtin_info", "BUILTIN_SYSTEMS", "SystemInfo"]


@dataclass(frozen=True)
class SystemInfo:
    name: str
    description: str
    n: int
    parameter_names: Tuple[str, ...]
    start_parameter: Tuple[float, ...]
    start_x: Tuple[float, ...]


# ---------------------------------------------------------------------------
# neuron: x1' = -k x1 + b tanh(x1(t - tau_s)) + a12 tanh(x2(t - tau_2))
#         x2' = -k x2 + b tanh(x2(t - tau_s)) + a21 tanh(x1(t - tau_1))
# parameters: (k, b, a12, a21, tau_1, tau_2, tau_s); delays at 5, 6, 7
# state columns: 0 present, 1 tau_1, 2 tau_2, 3 tau_s
# ---------------------------------------------------------------------------


def _neuron_rhs(xx: np.ndarray, par: np.ndarray) -> np.ndarray:
    k, b, a12, a21 = par[0], par[1], par[2], par[3]
    return np.array(
        [
            -k * xx[0, 0] + b * np.tanh(xx[0, 3]) + a12 * np.tanh(xx[1, 2]),
            -k * xx[1, 0] + b * np.tanh(xx[1, 3]) + a21 * np.tanh(xx[0, 1]),
        ]
    )


def _sech2(x: float) -> float:
    return 1.0 / np.cosh(x) ** 2


def _dsech2(x: float) -> float:
    # d/dx sech^2(x) = -2 sech^2(x) tanh(x)
    return -2.0 * _sech2(x) * np.tanh(x)


def _neuron_deri(xx, par, nx, np_, v):
    k, b, a12, a21 = par[0], par[1], par[2], par[3]
    zero = np.zeros((2, 2))
    if len(nx) == 1 and not np_ and v is None:
        j = nx[0]
        if j == 0:
            return -k * np.eye(2)
        if j == 1:
            return np.array([[0.0, 0.0], [a21 * _sech2(xx[0, 1]), 0.0]])
        if j == 2:
            return np.array([[0.0, a12 * _sech2(xx[1, 2])], [0.0, 0.0]])
        if j == 3:
            return np.diag([b * _sech2(xx[0, 3]), b * _sech2(xx[1, 3])])
    if not nx and len(np_) == 1 and v is None:
        q = np_[0]
        if q == 1:
            return np.array([-xx[0, 0], -xx[1, 0]])
        if q == 2:
            return np.array([np.tanh(xx[0, 3]), np.tanh(xx[1, 3])])
        if q == 3:
            return np.array([np.tanh(xx[1, 2]), 0.0])
        if q == 4:
            return np.array([0.0, np.tanh(xx[0, 1])])
        return np.zeros(2)
    if len(nx) == 1 and len(np_) == 1 and v is None:
        j, q = nx[0], np_[0]
        if j == 0 and q == 1:
            return -np.eye(2)
        if j == 1 and q == 4:
            return np.array([[0.0, 0.0], [_sech2(xx[0, 1]), 0.0]])
        if j == 2 and q == 3:
            return np.array([[0.0, _sech2(xx[1, 2])], [0.0, 0.0]])
        if j == 3 and q == 2:
            return np.diag([_sech2(xx[0, 3]), _sech2(xx[1, 3])])
        return zero
    if len(nx) == 2 and not np_ and v is not None:
        j, l = nx
        if j != l or j == 0:
            return zero
        if j == 1:
            return np.array(
                [[0.0, 0.0], [a21 * _dsech2(xx[0, 1]) * np.real(v[0]), 0.0]]
            )
        if j == 2:
            return np.array(
                [[0.0, a12 * _dsech2(xx[1, 2]) * np.real(v[1])], [0.0, 0.0]]
            )
        if j == 3:
            return np.diag(
                [
                    b * _dsech2(xx[0, 3]) * np.real(v[0]),
                    b * _dsech2(xx[1, 3]) * np.real(v[1]),
                ]
            )
        return zero
    return None


# ---------------------------------------------------------------------------
# sd_demo: five components, six state-dependent delays
# parameters p1..p11; tau_1 = p10, tau_2 = p11,
# tau_3 = 2 + p5 tau_1 x2(t) x2(t - tau_1),
# tau_4 = 1 - 1/(1 + x1(t) x2(t - tau_2)), tau_5 = x4(t), tau_6 = x5(t)
# ---------------------------------------------------------------------------


def _sd_rhs(xx: np.ndarray, par: np.ndarray) -> np.ndarray:
    p = par
    dnm = p[0] + xx[1, 0]
    e_p8 = np.exp(-p[7] * xx[3, 0])
    e_p1 = np.exp(-p[0] * xx[3, 0])
    return np.array(
        [
            (1.0 - p[1] * xx[0, 0] * xx[0, 3] * xx[2, 3] + p[2] * xx[0, 1] * xx[1, 2])
            / dnm,
            p[3] * xx[0, 0] / dnm + p[4] * np.tanh(xx[1, 5]) - 1.0,
            p[5] * (xx[1, 0] - xx[2, 0]) - p[6] * (xx[0, 6] - xx[1, 4]) * e_p8,
            xx[0, 4] * e_p1 - 0.1,
            3.0 * (xx[0, 2] - xx[4, 0]) - p[8],
        ]
    )


def _sd_tau(ind: int, xx: np.ndarray, par: np.ndarray) -> float:
    p = par
    if ind == 1:
        return p[9]
    if ind == 2:
        return p[10]
    if ind == 3:
        return 2.0 + p[4] * p[9] * xx[1, 0] * xx[1, 1]
    if ind == 4:
        return 1.0 - 1.0 / (1.0 + xx[0, 0] * xx[1, 2])
    if ind == 5:
        return xx[3, 0]
    if ind == 6:
        return xx[4, 0]
    raise ValueError(f"no delay {ind}")


def _sd_deri(xx, par, nx, np_, v):
    p = par
    dnm = p[0] + xx[1, 0]
    num = 1.0 - p[1] * xx[0, 0] * xx[0, 3] * xx[2, 3] + p[2] * xx[0, 1] * xx[1, 2]
    e_p8 = np.exp(-p[7] * xx[3, 0])
    e_p1 = np.exp(-p[0] * xx[3, 0])
    if len(nx) == 1 and not np_ and v is None:
        j = nx[0]
        jac = np.zeros((5, 5))
        if j == 0:
            jac[0, 0] = -p[1] * xx[0, 3] * xx[2, 3] / dnm
            jac[0, 1] = -num / dnm**2
            jac[1, 0] = p[3] / dnm
            jac[1, 1] = -p[3] * xx[0, 0] / dnm**2
            jac[2, 1] = p[5]
            jac[2, 2] = -p[5]
            jac[2, 3] = p[7] * p[6] * (xx[0, 6] - xx[1, 4]) * e_p8
            jac[3, 3] = -p[0] * xx[0, 4] * e_p1
            jac[4, 4] = -3.0
        elif j == 1:
            jac[0, 0] = p[2] * xx[1, 2] / dnm
        elif j == 2:
            jac[0, 1] = p[2] * xx[0, 1] / dnm
            jac[4, 0] = 3.0
        elif j == 3:
            jac[0, 0] = -p[1] * xx[0, 0] * xx[2, 3] / dnm
            jac[0, 2] = -p[1] * xx[0, 0] * xx[0, 3] / dnm
        elif j == 4:
            jac[2, 1] = p[6] * e_p8
            jac[3, 0] = e_p1
        elif j == 5:
            jac[1, 1] = p[4] * _sech2(xx[1, 5])
        elif j == 6:
            jac[2, 0] = -p[6] * e_p8
        return jac
    if not nx and len(np_) == 1 and v is None:
        q = np_[0]
        vec = np.zeros(5)
        if q == 1:
            vec[0] = -num / dnm**2
            vec[1] = -p[3] * xx[0, 0] / dnm**2
            vec[3] = -xx[3, 0] * xx[0, 4] * e_p1
        elif q == 2:
            vec[0] = -xx[0, 0] * xx[0, 3] * xx[2, 3] / dnm
        elif q == 3:
            vec[0] = xx[0, 1] * xx[1, 2] / dnm
        elif q == 4:
            vec[1] = xx[0, 0] / dnm
        elif q == 5:
            vec[1] = np.tanh(xx[1, 5])
        elif q == 6:
            vec[2] = xx[1, 0] - xx[2, 0]
        elif q == 7:
            vec[2] = -(xx[0, 6] - xx[1, 4]) * e_p8
        elif q == 8:
            vec[2] = p[6] * (xx[0, 6] - xx[1, 4]) * xx[3, 0] * e_p8
        elif q == 9:
            vec[4] = -1.0
        return vec
    return None  # second-order requests fall back to finite differences


def _sd_dtau(ind, xx, par, nx, np_, v):
    p = par
    if len(nx) == 1 and not np_ and v is None:
        k = nx[0]
        row = np.zeros(5)
        if ind == 3:
            if k == 0:
                row[1] = p[4] * p[9] * xx[1, 1]
            elif k == 1:
                row[1] = p[4] * p[9] * xx[1, 0]
        elif ind == 4:
            g = 1.0 + xx[0, 0] * xx[1, 2]
            if k == 0:
                row[0] = xx[1, 2] / g**2
            elif k == 2:
                row[1] = xx[0, 0] / g**2
        elif ind == 5:
            if k == 0:
                row[3] = 1.0
        elif ind == 6:
            if k == 0:
                row[4] = 1.0
        return row
    if not nx and len(np_) == 1 and v is None:
        q = np_[0]
        if ind == 1:
            return 1.0 if q == 10 else 0.0
        if ind == 2:
            return 1.0 if q == 11 else 0.0
        if ind == 3:
            if q == 5:
                return p[9] * xx[1, 0] * xx[1, 1]
            if q == 10:
                return p[4] * xx[1, 0] * xx[1, 1]
            return 0.0
        return 0.0
    return None  # second-order requests fall back to finite differences


# ---------------------------------------------------------------------------
# hom_neural: x1' = -x1 + q11 / (1 + exp(-4 x1(t - tau))) - q12 x2(t - tau) + e1
#             x2' = -x2 + q21 / (1 + exp(-4 x1(t - tau))) + e2
# parameters (q11, q12, q21, e1, e2, tau); delay at parameter 6
# ---------------------------------------------------------------------------


def _sigmoid(x: float) -> float:
    return 1.0 / (1.0 + np.exp(-4.0 * x))


def _hom_rhs(xx: np.ndarray, par: np.ndarray) -> np.ndarray:
    q11, q12, q21, e1, e2 = par[0], par[1], par[2], par[3], par[4]
    g = _sigmoid(xx[0, 1])
    return np.array(
        [
            -xx[0, 0] + q11 * g - q12 * xx[1, 1] + e1,
            -xx[1, 0] + q21 * g + e2,
        ]
    )


def _hom_deri(xx, par, nx, np_, v):
    q11, q12, q21 = par[0], par[1], par[2]
    g = _sigmoid(xx[0, 1])
    dg = 4.0 * g * (1.0 - g)
    ddg = 4.0 * dg * (1.0 - 2.0 * g)
    zero = np.zeros((2, 2))
    if len(nx) == 1 and not np_ and v is None:
        if nx[0] == 0:
            return -np.eye(2)
        return np.array([[q11 * dg, -q12], [q21 * dg, 0.0]])
    if not nx and len(np_) == 1 and v is None:
        q = np_[0]
        if q == 1:
            return np.array([g, 0.0])
        if q == 2:
            return np.array([-xx[1, 1], 0.0])
        if q == 3:
            return np.array([0.0, g])
        if q == 4:
            return np.array([1.0, 0.0])
        if q == 5:
            return np.array([0.0, 1.0])
        return np.zeros(2)
    if len(nx) == 1 and len(np_) == 1 and v is None:
        j, q = nx[0], np_[0]
        if j == 1 and q == 1:
            return np.array([[dg, 0.0], [0.0, 0.0]])
        if j == 1 and q == 2:
            return np.array([[0.0, -1.0], [0.0, 0.0]])
        if j == 1 and q == 3:
            return np.array([[0.0, 0.0], [dg, 0.0]])
        return zero
    if len(nx) == 2 and not np_ and v is not None:
        if nx[0] == 1 and nx[1] == 1:
            v0 = np.real(v[0])
            return np.array([[q11 * ddg * v0, 0.0], [q21 * ddg * v0, 0.0]])
        return zero
    return None


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------

BUILTIN_SYSTEMS: Dict[str, SystemInfo] = {
    "neuron": SystemInfo(
        name="neuron",
        description="two delay-coupled neurons (constant delays)",
        n=2,
        parameter_names=("kappa", "beta", "a12", "a21", "tau1", "tau2", "tau_s"),
        start_parameter=(0.5, -1.0, 1.0, 2.34, 0.2, 0.2, 1.5),
        start_x=(0.0, 0.0),
    ),
    "sd_demo": SystemInfo(
        name="sd_demo",
        description="five-dimensional system with six state-dependent delays",
        n=5,
        parameter_names=tuple(f"p{i}" for i in range(1, 12)),
        start_parameter=(4.5, 0.04, -1.4, 6.0, -0.45, -0.01, 3.0, 0.3, 0.1, 1.0, 0.2),
        start_x=(
            1.4133854,
            1.5192827,
            -25.107708,
            0.58857176,
            1.3800521,
        ),
    ),
    "hom_neural": SystemInfo(
        name="hom_neural",
        description="two-dimensional neural model with homoclinic orbits",
        n=2,
        parameter_names=("q11", "q12", "q21", "e1", "e2", "tau"),
        start_parameter=(2.6, 1.0, 1.3, -0.31, -0.5, 1.0),
        start_x=(0.0, 0.0),
    ),
}


def builtin_info(name: str) -> SystemInfo:
    try:
        return BUILTIN_SYSTEMS[name]
    except KeyError:
        raise ValueError(
            f"unknown system {name!r}; available: {sorted(BUILTIN_SYSTEMS)}"
        ) from None


def builtin_problem(name: str) -> Problem:
    info = builtin_info(name)
    if name == "neuron":
        return assemble_problem(
            rhs=_neuron_rhs,
            delays=ConstantDelays(indices=(5, 6, 7)),
            n=2,
            state_jacobian=_neuron_deri,
            name=name,
        )
    if name == "sd_demo":
        return assemble_problem(
            rhs=_sd_rhs,
            delays=StateDependentDelays(m=6, tau=_sd_tau, tau_jacobian=_sd_dtau),
            n=5,
            state_jacobian=_sd_deri,
            name=name,
        )
    if name == "hom_neural":
        return assemble_problem(
            rhs=_hom_rhs,
            delays=ConstantDelays(indices=(6,)),
            n=2,
            state_jacobian=_hom_deri,
            name=name,
        )
    raise ValueError(f"unknown system {name!r}")
