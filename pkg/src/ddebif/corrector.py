"""Newton correction of points on their determining systems.

``correct`` drives a Newton iteration on the determining system matching the
point kind:

* steady state:      f(x*, eta) = 0
* fold:              f = 0, Delta(0) v = 0, c^T v = 1      (c frozen at entry)
* Hopf:              f = 0, Delta(i w) v = 0, c^H v = 1    (split real/imag)
* periodic orbit:    collocation, periodicity, integral phase condition
* connecting orbit:  collocation with exponential tail closure, equilibria,
                     eigenpairs, projection boundary conditions, initial
                     point, alpha normalization, phase condition

Steplength conditions, user extra conditions and the delay-zero boundary
rows (steady state: tau_d = 0; periodic orbit: tau_d(t_z) = 0 and
tau_d'(t_z) = 0 with t_z an extra unknown) append rows; free parameters
(1-based indices) append columns.  A non-square system is solved in the
least-squares sense (minimum-norm solution) and reported as an event.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from . import collocation as cl
from .model import (
    ConnectingOrbit,
    Fold,
    Hopf,
    PeriodicOrbit,
    PiecewiseProfile,
    Point,
    PointMethod,
    SteadyState,
    default_point_method,
)
from .spectrum import linearize_at_steady_state
from .system import ConstantDelays, Problem, eval_extra_conditions

__all__ = ["CorrectionReport", "correct", "pack_point", "unpack_point"]


@dataclass
class CorrectionReport:
    success: bool
    iterations: int
    residual: float
    events: List[str] = dc_field(default_factory=list)


# ---------------------------------------------------------------------------
# packing
# ---------------------------------------------------------------------------


def _assert_real(array: np.ndarray, what: str) -> np.ndarray:
    if np.max(np.abs(np.imag(array)), initial=0.0) > 1e-8:
        raise ValueError(
            f"connecting-orbit corrections support real {what} only"
        )
    return np.real(array)


def pack_point(point: Point, free: Sequence[int], tz: Optional[float] = None) -> np.ndarray:
    parts: List[np.ndarray] = []
    kind = point.kind
    if kind in ("stst", "fold", "hopf"):
        parts.append(point.x)
    if kind == "fold":
        parts.append(point.v)
    if kind == "hopf":
        parts.extend([np.real(point.v), np.imag(point.v), [point.omega]])
    if kind in ("psol", "hcli"):
        parts.extend([point.profile.values.ravel(order="F"), [point.period]])
    if kind == "hcli":
        parts.extend(
            [
                point.x1,
                point.x2,
                _assert_real(point.lambda_v, "eigenvalues"),
                _assert_real(point.v, "eigenvectors").ravel(order="F"),
                _assert_real(point.lambda_w, "eigenvalues"),
                _assert_real(point.w, "eigenvectors").ravel(order="F"),
                _assert_real(point.alpha, "alpha"),
            ]
        )
    parts.append(point.parameter[[q - 1 for q in free]])
    if tz is not None:
        parts.append([tz])
    return np.concatenate([np.atleast_1d(np.asarray(p, dtype=float)) for p in parts])


def unpack_point(
    vector: np.ndarray,
    template: Point,
    free: Sequence[int],
    with_tz: bool = False,
) -> Tuple[Point, Optional[float]]:
    kind = template.kind
    pos = 0

    def take(count: int) -> np.ndarray:
        nonlocal pos
        out = vector[pos : pos + count]
        pos += count
        return out

    parameter = template.parameter.copy()
    if kind == "stst":
        x = take(template.x.size)
        point: Point = SteadyState(parameter=parameter, x=x)
    elif kind == "fold":
        x = take(template.x.size)
        v = take(template.v.size)
        point = Fold(parameter=parameter, x=x, v=v)
    elif kind == "hopf":
        x = take(template.x.size)
        vr = take(template.v.size)
        vi = take(template.v.size)
        omega = take(1)[0]
        point = Hopf(parameter=parameter, x=x, v=vr + 1j * vi, omega=omega)
    else:
        profile = template.profile
        values = take(profile.values.size).reshape(profile.values.shape, order="F")
        new_profile = PiecewiseProfile(
            values=values, degree=profile.degree, mesh=profile.mesh
        )
        period = take(1)[0]
        if kind == "psol":
            point = PeriodicOrbit(parameter=parameter, profile=new_profile, period=period)
        else:
            n = profile.n
            s1 = template.lambda_v.size
            s2 = template.lambda_w.size
            x1 = take(n)
            x2 = take(n)
            lambda_v = take(s1).astype(complex)
            v = take(n * s1).reshape((n, s1), order="F").astype(complex)
            lambda_w = take(s2).astype(complex)
            w = take(n * s2).reshape((n, s2), order="F").astype(complex)
            alpha = take(s1).astype(complex)
            point = ConnectingOrbit(
                parameter=parameter,
                profile=new_profile,
                period=period,
                x1=x1,
                x2=x2,
                lambda_v=lambda_v,
                lambda_w=lambda_w,
                v=v,
                w=w,
                alpha=alpha,
                epsilon=template.epsilon,
            )
    for q in free:
        parameter[q - 1] = take(1)[0]
    point = point.replace(parameter=parameter)
    tz = take(1)[0] if with_tz else None
    return point, tz


def _point_dot(coeff: Point, point: Point) -> float:
    """Inner product of a coefficient point with a point (all parameters)."""
    if coeff.kind in ("psol", "hcli"):
        same = (
            coeff.profile.values.shape == point.profile.values.shape
            and np.array_equal(coeff.profile.full_mesh(), point.profile.full_mesh())
        )
        if not same:
            values = cl.interp_profile(
                coeff.profile,
                point.profile.full_mesh(),
                wrap=(coeff.kind == "psol"),
            )
            coeff = coeff.replace(
                profile=PiecewiseProfile(
                    values=values,
                    degree=point.profile.degree,
                    mesh=point.profile.mesh,
                )
            )
    all_par = list(range(1, coeff.parameter.size + 1))
    return float(pack_point(coeff, all_par) @ pack_point(point, all_par))


# ---------------------------------------------------------------------------
# steady-state-like determining systems
# ---------------------------------------------------------------------------


def _steady_rhs(problem: Problem, x: np.ndarray, par: np.ndarray) -> np.ndarray:
    states = np.tile(x.reshape(-1, 1), (1, problem.m + 1))
    return np.asarray(problem.rhs(states, par), dtype=float)


def _steady_dtau_dx(problem: Problem, x: np.ndarray, par: np.ndarray, ind: int) -> np.ndarray:
    """d tau_ind / d x at a steady state (all state columns equal)."""
    if isinstance(problem.delays, ConstantDelays):
        return np.zeros(x.size)
    states = np.tile(x.reshape(-1, 1), (1, ind))
    total = np.zeros(x.size)
    for k in range(ind):
        total += np.asarray(
            problem.delay_jacobian(ind, states, par, [k], []), dtype=float
        )
    return total


def _steady_dtau_dpar(problem: Problem, x: np.ndarray, par: np.ndarray, ind: int, q: int) -> float:
    if isinstance(problem.delays, ConstantDelays):
        return 1.0 if problem.delays.indices[ind - 1] == q else 0.0
    states = np.tile(x.reshape(-1, 1), (1, ind))
    return float(problem.delay_jacobian(ind, states, par, [], [q]))


def _stst_system(
    problem: Problem,
    point: SteadyState,
    free: Sequence[int],
    d_nr: Optional[int],
) -> Tuple[np.ndarray, np.ndarray]:
    x, par = point.x, point.parameter
    n = x.size
    states = np.tile(x.reshape(-1, 1), (1, problem.m + 1))
    res = np.asarray(problem.rhs(states, par), dtype=float)
    n_cols = n + len(free)
    jac = np.zeros((n, n_cols))
    for j in range(problem.m + 1):
        jac[:, :n] += np.asarray(problem.state_jacobian(states, par, [j], []))
    for pos, q in enumerate(free):
        jac[:, n + pos] = np.asarray(problem.state_jacobian(states, par, [], [q]))
    if d_nr is not None:
        taus, _ = (
            problem.steady_delay_values(x, par),
            None,
        )
        row = np.zeros(n_cols)
        row[:n] = _steady_dtau_dx(problem, x, par, d_nr)
        for pos, q in enumerate(free):
            row[n + pos] = _steady_dtau_dpar(problem, x, par, d_nr, q)
        res = np.concatenate([res, [taus[d_nr - 1]]])
        jac = np.vstack([jac, row])
    return res, jac


def _second_derivative_sum(
    problem: Problem,
    states: np.ndarray,
    par: np.ndarray,
    i: int,
    v: np.ndarray,
) -> np.ndarray:
    """sum_j d/dx^j ( (df/dx^i) v ), collapsing all state blocks to x."""
    n = states.shape[0]
    total = np.zeros((n, n))
    for j in range(problem.m + 1):
        total += np.asarray(problem.state_jacobian(states, par, [i, j], [], v))
    return total


def _fold_system(
    problem: Problem,
    point: Fold,
    free: Sequence[int],
    c_vec: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray]:
    x, v, par = point.x, point.v, point.parameter
    n = x.size
    states = np.tile(x.reshape(-1, 1), (1, problem.m + 1))
    matrices = [
        np.asarray(problem.state_jacobian(states, par, [j], []))
        for j in range(problem.m + 1)
    ]
    delta0 = -sum(matrices)
    f = np.asarray(problem.rhs(states, par), dtype=float)
    res = np.concatenate([f, delta0 @ v, [c_vec @ v - 1.0]])
    n_cols = 2 * n + len(free)
    jac = np.zeros((2 * n + 1, n_cols))
    jac[:n, :n] = sum(matrices)
    for pos, q in enumerate(free):
        jac[:n, 2 * n + pos] = np.asarray(problem.state_jacobian(states, par, [], [q]))
    for i in range(problem.m + 1):
        jac[n : 2 * n, :n] -= _second_derivative_sum(problem, states, par, i, v)
    jac[n : 2 * n, n : 2 * n] = delta0
    for pos, q in enumerate(free):
        total = np.zeros(n)
        for i in range(problem.m + 1):
            total -= np.asarray(problem.state_jacobian(states, par, [i], [q])) @ v
        jac[n : 2 * n, 2 * n + pos] = total
    jac[2 * n, n : 2 * n] = c_vec
    return res, jac


def _hopf_system(
    problem: Problem,
    point: Hopf,
    free: Sequence[int],
    c_vec: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray]:
    x, v, omega, par = point.x, point.v, point.omega, point.parameter
    n = x.size
    lam = 1j * omega
    states = np.tile(x.reshape(-1, 1), (1, problem.m + 1))
    lin = linearize_at_steady_state(problem, x, par)
    matrices = lin.matrices
    taus = np.concatenate([[0.0], lin.taus])
    expf = np.exp(-lam * taus)
    delta = lam * np.eye(n, dtype=complex)
    for i in range(problem.m + 1):
        delta -= matrices[i] * expf[i]
    f = np.asarray(problem.rhs(states, par), dtype=float)
    g = delta @ v
    cv = np.conjugate(c_vec) @ v - 1.0
    res = np.concatenate([f, g.real, g.imag, [cv.real, cv.imag]])

    n_free = len(free)
    n_cols = 3 * n + 1 + n_free
    jac = np.zeros((3 * n + 2, n_cols))
    # f rows
    jac[:n, :n] = sum(matrices)
    for pos, q in enumerate(free):
        jac[:n, 3 * n + 1 + pos] = np.asarray(
            problem.state_jacobian(states, par, [], [q])
        )
    # d(Delta v)/dx
    dg_dx = np.zeros((n, n), dtype=complex)
    for i in range(problem.m + 1):
        second = _second_derivative_sum(
            problem, states, par, i, v.real
        ) + 1j * _second_derivative_sum(problem, states, par, i, v.imag)
        dg_dx -= expf[i] * second
        if i > 0:
            dtau_dx = _steady_dtau_dx(problem, x, par, i)
            if np.any(dtau_dx):
                dg_dx += lam * expf[i] * np.outer(matrices[i] @ v, dtau_dx)
    # d(Delta v)/dv, d/domega, d/dpar
    dg_domega = 1j * (
        v + sum(taus[i] * expf[i] * (matrices[i] @ v) for i in range(problem.m + 1))
    )
    rows_re = slice(n, 2 * n)
    rows_im = slice(2 * n, 3 * n)
    jac[rows_re, :n] = dg_dx.real
    jac[rows_im, :n] = dg_dx.imag
    jac[rows_re, n : 2 * n] = delta.real
    jac[rows_re, 2 * n : 3 * n] = -delta.imag
    jac[rows_im, n : 2 * n] = delta.imag
    jac[rows_im, 2 * n : 3 * n] = delta.real
    jac[rows_re, 3 * n] = dg_domega.real
    jac[rows_im, 3 * n] = dg_domega.imag
    for pos, q in enumerate(free):
        dg_dq = np.zeros(n, dtype=complex)
        for i in range(problem.m + 1):
            da = np.asarray(problem.state_jacobian(states, par, [i], [q]))
            dg_dq -= expf[i] * (da @ v)
            if i > 0:
                dtau_dq = _steady_dtau_dpar(problem, x, par, i, q)
                if dtau_dq:
                    dg_dq += lam * expf[i] * dtau_dq * (matrices[i] @ v)
        jac[rows_re, 3 * n + 1 + pos] = dg_dq.real
        jac[rows_im, 3 * n + 1 + pos] = dg_dq.imag
    # normalization rows
    jac[3 * n, n : 2 * n] = c_vec.real
    jac[3 * n, 2 * n : 3 * n] = c_vec.imag
    jac[3 * n + 1, n : 2 * n] = -c_vec.imag
    jac[3 * n + 1, 2 * n : 3 * n] = c_vec.real
    return res, jac


# ---------------------------------------------------------------------------
# periodic orbits
# ---------------------------------------------------------------------------


def _psol_system(
    problem: Problem,
    point: PeriodicOrbit,
    free: Sequence[int],
    method: PointMethod,
    phase_ref: Optional[PeriodicOrbit],
    d_nr: Optional[int],
    tz: Optional[float],
) -> Tuple[np.ndarray, np.ndarray]:
    profile, period, par = point.profile, point.period, point.parameter
    n_extra = 1 + len(free)
    res_c, jac_c = cl.collocation_residual_jacobian(
        problem, profile, period, par, list(free), method.collocation_parameters
    )
    res_p, jac_p = cl.periodicity_residual_jacobian(profile, n_extra)
    blocks_res = [res_c, res_p]
    blocks_jac = [jac_c, jac_p]
    if method.phase_condition:
        ref = phase_ref if phase_ref is not None else point
        res_ph, jac_ph = cl.phase_residual_jacobian(profile, ref.profile, n_extra)
        blocks_res.append(np.array([res_ph]))
        blocks_jac.append(jac_ph.reshape(1, -1))
    res = np.concatenate(blocks_res)
    jac = np.vstack(blocks_jac)
    if d_nr is not None:
        # two boundary rows: tau(tz) = 0 and d tau/ds (tz) = 0, tz unknown
        tau, g_tau = cl.delay_value_gradient(
            problem, profile, period, par, list(free), tz, d_nr
        )
        slope = cl.delay_derivative_on_orbit(problem, point, d_nr, tz)
        h = 1e-6
        _, g_plus = cl.delay_value_gradient(
            problem, profile, period, par, list(free), tz + h, d_nr
        )
        _, g_minus = cl.delay_value_gradient(
            problem, profile, period, par, list(free), tz - h, d_nr
        )
        g_slope = (g_plus - g_minus) / (2 * h)
        curv = (
            cl.delay_derivative_on_orbit(problem, point, d_nr, tz + h)
            - cl.delay_derivative_on_orbit(problem, point, d_nr, tz - h)
        ) / (2 * h)
        jac = np.hstack([jac, np.zeros((jac.shape[0], 1))])
        row1 = np.concatenate([g_tau, [slope]])
        row2 = np.concatenate([g_slope, [curv]])
        res = np.concatenate([res, [tau, slope]])
        jac = np.vstack([jac, row1, row2])
    return res, jac


# ---------------------------------------------------------------------------
# connecting orbits
# ---------------------------------------------------------------------------


def _hcli_residual(
    problem: Problem,
    point: ConnectingOrbit,
    method: PointMethod,
    phase_ref: Optional[ConnectingOrbit],
    c_norm: np.ndarray,
    d_norm: np.ndarray,
) -> np.ndarray:
    profile, period, par = point.profile, point.period, point.parameter
    n = profile.n
    x1, x2 = point.x1, point.x2
    lambda_v = np.real(point.lambda_v)
    lambda_w = np.real(point.lambda_w)
    v = np.real(point.v)
    w = np.real(point.w)
    alpha = np.real(point.alpha)
    epsilon = point.epsilon

    def tail(c: float) -> np.ndarray:
        decay = alpha * np.exp(lambda_v * period * c)
        return x1 + epsilon * (v @ decay)

    res_c = cl.collocation_residual(
        problem, profile, period, par, method.collocation_parameters, tail=tail
    )
    res_init = profile.values[:, 0] - tail(0.0)
    res_eq1 = _steady_rhs(problem, x1, par)
    res_eq2 = _steady_rhs(problem, x2, par)

    lin1 = linearize_at_steady_state(problem, x1, par)
    lin2 = linearize_at_steady_state(problem, x2, par)
    from .spectrum import char_matrix

    eig_rows: List[np.ndarray] = []
    for k in range(lambda_v.size):
        delta = np.real(char_matrix(lin1, complex(lambda_v[k])))
        eig_rows.append(delta @ v[:, k])
        eig_rows.append(np.array([c_norm[:, k] @ v[:, k] - 1.0]))
    for k in range(lambda_w.size):
        delta = np.real(char_matrix(lin2, complex(lambda_w[k])))
        eig_rows.append(delta.T @ w[:, k])
        eig_rows.append(np.array([d_norm[:, k] @ w[:, k] - 1.0]))

    # projection boundary conditions at the head equilibrium
    interp = cl.ProfileInterpolant(profile)
    u_end = profile.values[:, -1]
    nodes, weights = cl.gauss_legendre_nodes(max(profile.degree, 2))
    proj_rows = []
    taus2 = lin2.taus
    for k in range(lambda_w.size):
        lam = lambda_w[k]
        total = float(w[:, k] @ (u_end - x2))
        for i, tau_i in enumerate(taus2, start=1):
            if tau_i <= 0:
                continue
            a_i = lin2.matrices[i]
            for node, weight in zip(nodes, weights):
                theta = -tau_i + node * tau_i  # theta in [-tau_i, 0]
                u_theta = interp.eval(1.0 + theta / period, wrap=False)
                total += (
                    weight
                    * tau_i
                    * math.exp(-lam * (theta + tau_i))
                    * float(w[:, k] @ (a_i @ (u_theta - x2)))
                )
        proj_rows.append(np.array([total]))

    blocks = [res_c, res_init, res_eq1, res_eq2] + eig_rows + proj_rows
    if method.phase_condition:
        ref = phase_ref if phase_ref is not None else point
        res_ph, _ = cl.phase_residual_jacobian(profile, ref.profile, 0)
        blocks.append(np.array([res_ph]))
    blocks.append(np.array([float(alpha @ alpha) - 1.0]))
    return np.concatenate(blocks)


# ---------------------------------------------------------------------------
# Newton driver
# ---------------------------------------------------------------------------


def _fd_jacobian(func: Callable[[np.ndarray], np.ndarray], x: np.ndarray) -> np.ndarray:
    r0 = func(x)
    jac = np.zeros((r0.size, x.size))
    for i in range(x.size):
        h = 1e-6 * (1.0 + abs(x[i]))
        up = x.copy()
        dn = x.copy()
        up[i] += h
        dn[i] -= h
        jac[:, i] = (func(up) - func(dn)) / (2 * h)
    return jac


def build_system(
    problem: Problem,
    point: Point,
    free: Sequence[int],
    method: PointMethod,
    seed: Point,
    step_conds: Sequence[Point],
    previous: Optional[Point],
    d_nr: Optional[int],
    tz: Optional[float],
    context: dict,
) -> Tuple[np.ndarray, np.ndarray]:
    """Residual and Jacobian of the full determining system at ``point``."""
    kind = point.kind
    if kind == "stst":
        res, jac = _stst_system(problem, point, free, d_nr)
    elif kind == "fold":
        res, jac = _fold_system(problem, point, free, context["c"])
    elif kind == "hopf":
        res, jac = _hopf_system(problem, point, free, context["c"])
    elif kind == "psol":
        res, jac = _psol_system(problem, point, free, method, previous, d_nr, tz)
    elif kind == "hcli":
        def packed_residual(vec: np.ndarray) -> np.ndarray:
            pt, _ = unpack_point(vec, point, free)
            return _hcli_residual(
                problem, pt, method, previous, context["c"], context["d"]
            )

        x_now = pack_point(point, free)
        res = packed_residual(x_now)
        jac = _fd_jacobian(packed_residual, x_now)
    else:
        raise ValueError(f"unknown point kind {kind}")

    with_tz = tz is not None
    rows_res: List[float] = []
    rows_jac: List[np.ndarray] = []
    for coeff in step_conds:
        rows_res.append(_point_dot(coeff, point) - _point_dot(coeff, seed))
        row = pack_point(coeff, free)
        if with_tz:
            row = np.concatenate([row, [0.0]])
        rows_jac.append(row)
    if method.extra_condition:
        extra_res, extra_grads = eval_extra_conditions(problem, point)
        for value, grad in zip(extra_res, extra_grads):
            rows_res.append(value)
            row = pack_point(grad, free)
            if with_tz:
                row = np.concatenate([row, [0.0]])
            rows_jac.append(row)
    if rows_res:
        res = np.concatenate([res, rows_res])
        jac = np.vstack([jac] + [row.reshape(1, -1) for row in rows_jac])
    return res, jac


def _entry_context(point: Point) -> dict:
    """Normalization vectors frozen at entry of the correction."""
    context: dict = {}
    if point.kind == "fold":
        v0 = point.v
        context["c"] = v0 / float(v0 @ v0)
    elif point.kind == "hopf":
        v0 = point.v
        context["c"] = v0 / complex(np.conjugate(v0) @ v0)
    elif point.kind == "hcli":
        v0 = np.real(point.v)
        w0 = np.real(point.w)
        c_norm = np.zeros_like(v0)
        d_norm = np.zeros_like(w0)
        for k in range(v0.shape[1]):
            c_norm[:, k] = v0[:, k] / float(v0[:, k] @ v0[:, k])
        for k in range(w0.shape[1]):
            d_norm[:, k] = w0[:, k] / float(w0[:, k] @ w0[:, k])
        context["c"] = c_norm
        context["d"] = d_norm
    return context


def _correct_once(
    problem: Problem,
    point: Point,
    free: Sequence[int],
    method: PointMethod,
    step_conds: Sequence[Point],
    previous: Optional[Point],
    d_nr: Optional[int],
    tz: Optional[float],
) -> Tuple[Point, Optional[float], CorrectionReport]:
    seed = point
    context = _entry_context(point)
    events: List[str] = []
    with_tz = tz is not None
    vector = pack_point(point, free, tz=tz)
    current = point
    current_tz = tz
    res, jac = build_system(
        problem, current, free, method, seed, step_conds, previous, d_nr, current_tz, context
    )
    rnorm = float(np.max(np.abs(res))) if res.size else 0.0
    if jac.shape[0] != jac.shape[1] and "least-squares" not in events:
        events.append(
            f"least-squares solve: {jac.shape[0]} conditions, {jac.shape[1]} unknowns"
        )
    iterations = 0
    for it in range(1, method.newton_max_iterations + 1):
        if rnorm <= method.halting_accuracy:
            break
        if jac.shape[0] == jac.shape[1]:
            try:
                step = np.linalg.solve(jac, -res)
            except np.linalg.LinAlgError:
                step, *_ = np.linalg.lstsq(jac, -res, rcond=None)
        else:
            step, *_ = np.linalg.lstsq(jac, -res, rcond=None)
        vector = vector + step
        current, current_tz = unpack_point(vector, seed, free, with_tz=with_tz)
        res, jac = build_system(
            problem,
            current,
            free,
            method,
            seed,
            step_conds,
            previous,
            d_nr,
            current_tz,
            context,
        )
        new_norm = float(np.max(np.abs(res))) if res.size else 0.0
        iterations = it
        if method.print_residual_info:
            print(f"  newton it {it}: |res| = {new_norm:.3e}")
        if it > method.newton_nmon_iterations + 1 and new_norm > rnorm:
            rnorm = new_norm
            events.append("halted on residual increase")
            break
        rnorm = new_norm
    success = rnorm <= method.minimal_accuracy
    report = CorrectionReport(
        success=success, iterations=iterations, residual=rnorm, events=events
    )
    return current, current_tz, report


def correct(
    problem: Problem,
    point: Point,
    free: Sequence[int] = (),
    method: Optional[PointMethod] = None,
    step_conds: Sequence[Point] = (),
    previous: Optional[Point] = None,
    d_nr: Optional[int] = None,
    tz: Optional[float] = None,
    adapt: bool = False,
) -> Tuple[Point, CorrectionReport]:
    """Correct ``point`` on its determining system.

    ``free`` lists the free parameter indices (1-based).  ``step_conds`` are
    coefficient points of steplength conditions anchored at the input point;
    ``previous`` supplies the phase-condition reference for orbits.  For
    delay-zero boundary corrections pass ``d_nr`` (and for orbits an initial
    ``tz``).  With ``adapt`` (orbits on a stored mesh only) the point is
    corrected, the mesh adapted, and the point corrected again.

    Carried-over stability information is dropped; the returned point is the
    final Newton iterate even when the report flags failure.
    """
    if method is None:
        method = default_point_method(point.kind)
    if point.kind == "psol" and d_nr is not None and tz is None:
        raise ValueError("delay-zero correction of an orbit needs an initial tz")
    point = point.replace(stability=None) if point.stability else point
    corrected, tz_out, report = _correct_once(
        problem, point, free, method, step_conds, previous, d_nr, tz
    )
    if (
        adapt
        and report.success
        and corrected.kind in ("psol", "hcli")
        and corrected.profile.mesh is not None
    ):
        adapted = cl.remesh(corrected, adaptive=True)
        previous2 = previous if previous is not None else corrected
        corrected2, tz_out, report2 = _correct_once(
            problem, adapted, free, method, step_conds, previous2, d_nr, tz_out
        )
        report2.events = report.events + ["mesh adapted"] + report2.events
        return corrected2, report2
    return corrected, report
