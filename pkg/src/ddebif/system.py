"""Problem definition: right-hand sides, delays, derivatives, extra conditions.

A delay differential equation

    x'(t) = f(x(t), x(t - tau_1), ..., x(t - tau_m), eta)

is described by a right-hand side ``rhs(states, par)`` where ``states`` is the
``n x (m+1)`` matrix whose column ``j`` holds ``x(t - tau_j)`` (column 0 is the
present state) and ``par`` the parameter vector.  Delays are either constant
(values of selected parameters, 1-based indices) or state dependent, in which
case delay ``j`` may depend on columns ``0..j-1`` only (delays are evaluated
in increasing order).

Derivative callbacks follow a request convention; any combination not
provided analytically falls back to central finite differences with step
``1e-6 * (1 + |value|)`` per perturbed entry.

``state_jacobian(states, par, nx, np, v)``:

    ========== ====== ========= =========================================
    nx         np     v         result
    ========== ====== ========= =========================================
    [j]        []     None      n x n   d f / d x^j
    []         [q]    None      (n,)    d f / d eta_q
    [j]        [q]    None      n x n   d^2 f / d x^j d eta_q
    [j, k]     []     vector    n x n   d/d x^k ( (d f / d x^j) v )
    ========== ====== ========= =========================================

``delay_jacobian(ind, states, par, nx, np, v)`` is analogous for the delay
functions (results: row n-vector, scalar, n-vector, n x n Hessian block).
State-block indices ``j``/``k`` are 0-based (0 = present state); parameter
indices ``q`` are 1-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .model import Point, point_axpy

__all__ = [
    "ConstantDelays",
    "StateDependentDelays",
    "DelaySpec",
    "Problem",
    "assemble_problem",
    "fd_state_jacobian",
    "fd_delay_jacobian",
    "eval_delay_values",
    "eval_extra_conditions",
]

FD_SCALE = 1e-6


@dataclass(frozen=True)
class ConstantDelays:
    """Delays given by parameter values; ``indices`` are 1-based."""

    indices: Tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))

    @property
    def m(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class StateDependentDelays:
    """State-dependent delays.

    ``tau(ind, states, par)`` returns the value of delay ``ind`` (1-based);
    ``states`` contains columns ``0..ind-1`` (present state and the states at
    the already-evaluated shorter delays).
    """

    m: int
    tau: Callable[[int, np.ndarray, np.ndarray], float]
    tau_jacobian: Optional[Callable] = None


DelaySpec = Union[ConstantDelays, StateDependentDelays]


def _fd_steps(values: np.ndarray) -> np.ndarray:
    return FD_SCALE * (1.0 + np.abs(values))


def fd_state_jacobian(
    rhs: Callable,
    states: np.ndarray,
    par: np.ndarray,
    nx: Sequence[int],
    np_: Sequence[int],
    v: Optional[np.ndarray] = None,
    first_order: Optional[Callable] = None,
) -> np.ndarray:
    """Central finite-difference evaluation of a derivative request.

    ``first_order`` optionally supplies an analytic first-order routine
    ``(states, par, nx, np, v) -> array`` used as the inner derivative for
    second-order requests.
    """
    states = np.asarray(states, dtype=float)
    par = np.asarray(par, dtype=float)
    n = states.shape[0]
    nx = list(nx)
    np_ = list(np_)

    def first(states_, par_, nx_, np__):
        if first_order is not None:
            result = first_order(states_, par_, nx_, np__, None)
            if result is not None:
                return np.asarray(result, dtype=float)
        return fd_state_jacobian(rhs, states_, par_, nx_, np__)

    if len(nx) == 1 and not np_ and v is None:
        j = nx[0]
        jac = np.zeros((n, n))
        h = _fd_steps(states[:, j])
        for i in range(n):
            up = states.copy()
            dn = states.copy()
            up[i, j] += h[i]
            dn[i, j] -= h[i]
            jac[:, i] = (np.asarray(rhs(up, par)) - np.asarray(rhs(dn, par))) / (
                2 * h[i]
            )
        return jac
    if not nx and len(np_) == 1 and v is None:
        q = np_[0] - 1
        h = FD_SCALE * (1.0 + abs(par[q]))
        up = par.copy()
        dn = par.copy()
        up[q] += h
        dn[q] -= h
        return (np.asarray(rhs(states, up)) - np.asarray(rhs(states, dn))) / (2 * h)
    if len(nx) == 1 and len(np_) == 1 and v is None:
        q = np_[0] - 1
        h = FD_SCALE * (1.0 + abs(par[q]))
        up = par.copy()
        dn = par.copy()
        up[q] += h
        dn[q] -= h
        return (first(states, up, nx, []) - first(states, dn, nx, [])) / (2 * h)
    if len(nx) == 2 and not np_ and v is not None:
        j, k = nx
        v = np.asarray(v)
        jac = np.zeros((n, n), dtype=float)
        h = _fd_steps(states[:, k])
        for i in range(n):
            up = states.copy()
            dn = states.copy()
            up[i, k] += h[i]
            dn[i, k] -= h[i]
            jac[:, i] = (
                first(up, par, [j], []) @ np.real(v)
                - first(dn, par, [j], []) @ np.real(v)
            ) / (2 * h[i])
        return jac
    raise ValueError(f"unsupported derivative request nx={nx} np={np_} v={v}")


def fd_delay_jacobian(
    tau: Callable,
    ind: int,
    states: np.ndarray,
    par: np.ndarray,
    nx: Sequence[int],
    np_: Sequence[int],
    v: Optional[np.ndarray] = None,
    first_order: Optional[Callable] = None,
) -> Union[float, np.ndarray]:
    """Central finite differences for delay-function derivative requests."""
    states = np.asarray(states, dtype=float)
    par = np.asarray(par, dtype=float)
    n = states.shape[0]
    nx = list(nx)
    np_ = list(np_)

    def first(states_, par_, nx_, np__):
        if first_order is not None:
            result = first_order(ind, states_, par_, nx_, np__, None)
            if result is not None:
                return np.asarray(result, dtype=float)
        return np.asarray(
            fd_delay_jacobian(tau, ind, states_, par_, nx_, np__), dtype=float
        )

    if len(nx) == 1 and not np_ and v is None:
        j = nx[0]
        row = np.zeros(n)
        h = _fd_steps(states[:, j])
        for i in range(n):
            up = states.copy()
            dn = states.copy()
            up[i, j] += h[i]
            dn[i, j] -= h[i]
            row[i] = (tau(ind, up, par) - tau(ind, dn, par)) / (2 * h[i])
        return row
    if not nx and len(np_) == 1 and v is None:
        q = np_[0] - 1
        h = FD_SCALE * (1.0 + abs(par[q]))
        up = par.copy()
        dn = par.copy()
        up[q] += h
        dn[q] -= h
        return (tau(ind, states, up) - tau(ind, states, dn)) / (2 * h)
    if len(nx) == 1 and len(np_) == 1 and v is None:
        q = np_[0] - 1
        h = FD_SCALE * (1.0 + abs(par[q]))
        up = par.copy()
        dn = par.copy()
        up[q] += h
        dn[q] -= h
        return (first(states, up, nx, []) - first(states, dn, nx, [])) / (2 * h)
    if len(nx) == 2 and not np_:
        j, k = nx
        hess = np.zeros((n, n))
        h = _fd_steps(states[:, k])
        for i in range(n):
            up = states.copy()
            dn = states.copy()
            up[i, k] += h[i]
            dn[i, k] -= h[i]
            hess[:, i] = (first(up, par, [j], []) - first(dn, par, [j], [])) / (
                2 * h[i]
            )
        return hess
    raise ValueError(f"unsupported delay derivative request nx={nx} np={np_}")


# extra conditions: point -> (residuals, gradient points)
ExtraCondition = Callable[[Point], Tuple[List[float], List[Point]]]


@dataclass
class Problem:
    """Assembled problem with all derivative routes filled in."""

    n: int
    rhs: Callable[[np.ndarray, np.ndarray], np.ndarray]
    delays: DelaySpec
    state_jacobian: Callable
    delay_jacobian: Optional[Callable] = None
    extra_condition: Optional[ExtraCondition] = None
    name: str = ""

    @property
    def m(self) -> int:
        return self.delays.m

    @property
    def sd_delays(self) -> bool:
        return isinstance(self.delays, StateDependentDelays)

    def constant_delay_parameters(self) -> Tuple[int, ...]:
        if isinstance(self.delays, ConstantDelays):
            return self.delays.indices
        return ()

    def delay_value(self, ind: int, states: np.ndarray, par: np.ndarray) -> float:
        """Value of delay ``ind`` (1-based); ``states`` holds columns 0..ind-1."""
        if isinstance(self.delays, ConstantDelays):
            return float(par[self.delays.indices[ind - 1] - 1])
        return float(self.delays.tau(ind, states, par))

    def steady_delay_values(self, x: np.ndarray, par: np.ndarray) -> np.ndarray:
        """All delay values at a steady state ``x``."""
        return eval_delay_values(self, par, lambda ind, tau: x)[0]


def assemble_problem(
    rhs: Callable,
    delays: DelaySpec,
    n: int,
    state_jacobian: Optional[Callable] = None,
    delay_jacobian: Optional[Callable] = None,
    extra_condition: Optional[ExtraCondition] = None,
    name: str = "",
) -> Problem:
    """Combine user callbacks with finite-difference fallbacks.

    User-supplied Jacobian callbacks may return ``None`` for request
    combinations they do not implement; those fall back to finite differences
    (second-order fallbacks reuse the analytic first-order routine when
    available).
    """

    def full_state_jacobian(states, par, nx, np_, v=None):
        if state_jacobian is not None:
            result = state_jacobian(states, par, list(nx), list(np_), v)
            if result is not None:
                return np.asarray(result, dtype=float)
        return fd_state_jacobian(
            rhs, states, par, nx, np_, v, first_order=state_jacobian
        )

    full_delay_jacobian = None
    if isinstance(delays, StateDependentDelays):
        tau = delays.tau
        user_dtau = delay_jacobian if delay_jacobian is not None else delays.tau_jacobian

        def full_delay_jacobian(ind, states, par, nx, np_, v=None):
            if user_dtau is not None:
                result = user_dtau(ind, states, par, list(nx), list(np_), v)
                if result is not None:
                    return np.asarray(result, dtype=float)
            return fd_delay_jacobian(
                tau, ind, states, par, nx, np_, v, first_order=user_dtau
            )

    return Problem(
        n=n,
        rhs=rhs,
        delays=delays,
        state_jacobian=full_state_jacobian,
        delay_jacobian=full_delay_jacobian,
        extra_condition=extra_condition,
        name=name,
    )


def eval_delay_values(
    problem: Problem,
    par: np.ndarray,
    accessor: Callable[[int, float], np.ndarray],
) -> Tuple[np.ndarray, np.ndarray]:
    """Evaluate all delays in increasing order.

    ``accessor(ind, tau)`` must return the state column ``x(t - tau)`` for
    delay ``ind`` (``accessor(0, 0.0)`` returns the present state).  Returns
    ``(taus, states)`` with ``states`` of shape ``n x (m+1)``.
    """
    par = np.asarray(par, dtype=float)
    x0 = np.asarray(accessor(0, 0.0), dtype=float).ravel()
    n = x0.size
    m = problem.m
    states = np.zeros((n, m + 1))
    states[:, 0] = x0
    taus = np.zeros(m)
    for ind in range(1, m + 1):
        taus[ind - 1] = problem.delay_value(ind, states[:, :ind], par)
        states[:, ind] = np.asarray(accessor(ind, taus[ind - 1]), dtype=float).ravel()
    return taus, states


def eval_extra_conditions(
    problem: Problem, point: Point
) -> Tuple[List[float], List[Point]]:
    """Evaluate user extra conditions; empty when none are installed."""
    if problem.extra_condition is None:
        return [], []
    residuals, gradients = problem.extra_condition(point)
    return list(residuals), list(gradients)
