"""Piecewise-polynomial collocation for periodic and connecting orbits.

Profiles are piecewise polynomials of degree ``d`` on an interval mesh of
``[0, 1]``; inside each interval the polynomial is represented by its values
at ``d + 1`` equidistant representation points.  The profile is continuous
but not continuously differentiable; derivatives at interval points follow
the right-interval convention (the final point uses the last interval).

Collocation conditions are imposed at Gauss-Legendre points; time is scaled
so that the orbit lives on [0, 1] and the period ``T`` is an unknown.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from .model import (
    Multipliers,
    PeriodicOrbit,
    PiecewiseProfile,
    Point,
    StabilityMethod,
    default_stability_method,
)
from .system import ConstantDelays, Problem

__all__ = [
    "gauss_legendre_nodes",
    "interp_profile",
    "ProfileInterpolant",
    "collocation_residual_jacobian",
    "collocation_residual",
    "periodicity_residual_jacobian",
    "phase_residual_jacobian",
    "equidistribute_mesh",
    "remesh",
    "monodromy_operators",
    "floquet_multipliers",
    "delay_on_orbit",
    "detect_negative_delay",
    "refine_delay_zero",
]


def gauss_legendre_nodes(degree: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on (0, 1)."""
    nodes, weights = np.polynomial.legendre.leggauss(degree)
    return (nodes + 1.0) / 2.0, weights / 2.0


def _lagrange_weights(degree: int, sigma: float) -> Tuple[np.ndarray, np.ndarray]:
    """Value and derivative weights of Lagrange basis on nodes q/d, q=0..d.

    The derivative is with respect to the local coordinate ``sigma``.
    """
    nodes = np.arange(degree + 1) / degree
    value = np.ones(degree + 1)
    deriv = np.zeros(degree + 1)
    for q in range(degree + 1):
        for k in range(degree + 1):
            if k == q:
                continue
            value[q] *= (sigma - nodes[k]) / (nodes[q] - nodes[k])
        for k in range(degree + 1):
            if k == q:
                continue
            term = 1.0 / (nodes[q] - nodes[k])
            for l in range(degree + 1):
                if l in (q, k):
                    continue
                term *= (sigma - nodes[l]) / (nodes[q] - nodes[l])
            deriv[q] += term
    return value, deriv


class ProfileInterpolant:
    """Precomputed interpolation helper for one profile."""

    def __init__(self, profile: PiecewiseProfile):
        self.profile = profile
        self.degree = profile.degree
        self.mesh = profile.full_mesh()
        self.coarse = self.mesh[0 :: self.degree]
        self.dt = np.diff(self.coarse)
        self.intervals = self.dt.size
        self.values = profile.values

    def locate(self, s: float) -> Tuple[int, float]:
        """Interval index and local coordinate of ``s`` (right convention)."""
        i = int(np.searchsorted(self.coarse, s, side="right")) - 1
        i = min(max(i, 0), self.intervals - 1)
        sigma = (s - self.coarse[i]) / self.dt[i]
        return i, sigma

    def weights(
        self, s: float, wrap: bool = True
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Column indices, value weights and time-derivative weights at ``s``."""
        if wrap:
            s = s - math.floor(s)
        i, sigma = self.locate(s)
        cols = np.arange(i * self.degree, (i + 1) * self.degree + 1)
        value, deriv = _lagrange_weights(self.degree, sigma)
        return cols, value, deriv / self.dt[i]

    def eval(self, s: float, wrap: bool = True, derivative: bool = False) -> np.ndarray:
        cols, w_val, w_der = self.weights(s, wrap=wrap)
        return self.values[:, cols] @ (w_der if derivative else w_val)


def interp_profile(
    profile: PiecewiseProfile,
    s: Sequence[float],
    derivative: bool = False,
    wrap: bool = True,
) -> np.ndarray:
    """Evaluate a profile (or its derivative) at times ``s``; columns of result."""
    interp = ProfileInterpolant(profile)
    s = np.atleast_1d(np.asarray(s, dtype=float))
    out = np.empty((profile.n, s.size))
    for idx, si in enumerate(s):
        out[:, idx] = interp.eval(si, wrap=wrap, derivative=derivative)
    return out


# ---------------------------------------------------------------------------
# delay evaluation along an orbit
# ---------------------------------------------------------------------------


def _delays_at(
    problem: Problem,
    interp: ProfileInterpolant,
    period: float,
    par: np.ndarray,
    s: float,
    wrap: bool = True,
    tail: Optional[Callable[[float], np.ndarray]] = None,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Delay values, delayed times and state matrix at scaled time ``s``.

    ``tail(c)`` supplies the state for arguments ``c < 0`` when not wrapping
    (connecting orbits).  Returns ``(taus, stimes, states)``.
    """
    n = interp.profile.n
    m = problem.m
    states = np.zeros((n, m + 1))
    stimes = np.zeros(m + 1)
    stimes[0] = s
    states[:, 0] = interp.eval(s, wrap=wrap)
    taus = np.zeros(m)
    for j in range(1, m + 1):
        taus[j - 1] = problem.delay_value(j, states[:, :j], par)
        c = s - taus[j - 1] / period
        stimes[j] = c
        if not wrap and c < 0.0 and tail is not None:
            states[:, j] = tail(c)
        else:
            states[:, j] = interp.eval(c, wrap=wrap)
    return taus, stimes, states


# ---------------------------------------------------------------------------
# periodic-orbit collocation residual and Jacobian
# ---------------------------------------------------------------------------


def _collocation_points(
    interp: ProfileInterpolant, collocation_parameters: Optional[np.ndarray]
) -> Tuple[np.ndarray, np.ndarray]:
    """Collocation abscissae per interval (interval index, absolute time)."""
    degree = interp.degree
    if collocation_parameters is None or len(collocation_parameters) == 0:
        nodes, _ = gauss_legendre_nodes(degree)
    else:
        nodes = np.asarray(collocation_parameters, dtype=float)
    ivs = np.repeat(np.arange(interp.intervals), degree)
    offs = np.tile(nodes, interp.intervals)
    times = interp.coarse[ivs] + offs * interp.dt[ivs]
    return ivs, times


def collocation_residual_jacobian(
    problem: Problem,
    profile: PiecewiseProfile,
    period: float,
    par: np.ndarray,
    free: Sequence[int],
    collocation_parameters: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Residual and Jacobian of the periodic-orbit collocation conditions.

    Residual rows are ``u'(c) - T f(u(c), u(c - tau_1/T mod 1), ...)`` at all
    collocation points; Jacobian columns are ordered [profile values
    (column-major by mesh point), period, free parameters (1-based indices)].
    State-dependent delays are differentiated through the full chain
    (delay -> delayed time -> interpolated state).
    """
    interp = ProfileInterpolant(profile)
    n = profile.n
    n_pts = profile.values.shape[1]
    n_free = len(free)
    col_period = n * n_pts
    n_unknowns = n * n_pts + 1 + n_free
    m = problem.m
    ivs, times = _collocation_points(interp, collocation_parameters)
    res = np.zeros(n * times.size)
    jac = np.zeros((n * times.size, n_unknowns))
    free0 = [q - 1 for q in free]

    constant = isinstance(problem.delays, ConstantDelays)
    for row_block, (iv, c) in enumerate(zip(ivs, times)):
        # present state and its gradient
        cols0 = np.arange(iv * interp.degree, (iv + 1) * interp.degree + 1)
        w_val, w_der = _lagrange_weights(
            interp.degree, (c - interp.coarse[iv]) / interp.dt[iv]
        )
        w_der = w_der / interp.dt[iv]

        states = np.zeros((n, m + 1))
        states[:, 0] = interp.values[:, cols0] @ w_val
        grads = np.zeros((m + 1, n, n_unknowns))
        for i in range(n):
            grads[0, i, cols0 * n + i] = w_val

        taus = np.zeros(m)
        for j in range(1, m + 1):
            taus[j - 1] = problem.delay_value(j, states[:, :j], par)
            # gradient of the delay value
            g_tau = np.zeros(n_unknowns)
            if constant:
                idx = problem.delays.indices[j - 1]
                if idx in free:
                    g_tau[col_period + 1 + free.index(idx)] = 1.0
            else:
                for k in range(j):
                    b_row = np.asarray(
                        problem.delay_jacobian(j, states[:, :j], par, [k], []),
                        dtype=float,
                    )
                    g_tau += b_row @ grads[k]
                for pos, q in enumerate(free):
                    g_tau[col_period + 1 + pos] += float(
                        problem.delay_jacobian(j, states[:, :j], par, [], [q])
                    )
            s_j = c - taus[j - 1] / period
            cols_j, wv_j, wd_j = interp.weights(s_j, wrap=True)
            states[:, j] = interp.values[:, cols_j] @ wv_j
            du = interp.values[:, cols_j] @ wd_j
            # chain: d s_j = -d tau / T + (tau / T^2) dT
            g_s = -g_tau / period
            g_s[col_period] += taus[j - 1] / period**2
            grads[j] = np.outer(du, g_s)
            for i in range(n):
                grads[j, i, cols_j * n + i] += wv_j

        f = np.asarray(problem.rhs(states, par), dtype=float)
        rows = slice(row_block * n, (row_block + 1) * n)
        res[rows] = interp.values[:, cols0] @ w_der - period * f

        jrow = np.zeros((n, n_unknowns))
        for i in range(n):
            jrow[i, cols0 * n + i] = w_der
        for j in range(m + 1):
            a_j = np.asarray(problem.state_jacobian(states, par, [j], []))
            jrow -= period * (a_j @ grads[j].reshape(n, -1)).reshape(n, n_unknowns)
        jrow[:, col_period] -= f
        for pos, q in enumerate(free):
            jrow[:, col_period + 1 + pos] -= period * np.asarray(
                problem.state_jacobian(states, par, [], [q])
            )
        jac[rows] = jrow
    return res, jac


def collocation_residual(
    problem: Problem,
    profile: PiecewiseProfile,
    period: float,
    par: np.ndarray,
    collocation_parameters: Optional[np.ndarray] = None,
    tail: Optional[Callable[[float], np.ndarray]] = None,
) -> np.ndarray:
    """Collocation residual only (no wrap-around; used for connecting orbits).

    Delayed arguments below 0 are evaluated through ``tail``.
    """
    interp = ProfileInterpolant(profile)
    n = profile.n
    ivs, times = _collocation_points(interp, collocation_parameters)
    res = np.zeros(n * times.size)
    for row_block, (iv, c) in enumerate(zip(ivs, times)):
        _, _, states = _delays_at(
            problem, interp, period, par, c, wrap=False, tail=tail
        )
        du = interp.eval(c, wrap=False, derivative=True)
        f = np.asarray(problem.rhs(states, par), dtype=float)
        res[row_block * n : (row_block + 1) * n] = du - period * f
    return res


def periodicity_residual_jacobian(
    profile: PiecewiseProfile, n_extra: int
) -> Tuple[np.ndarray, np.ndarray]:
    """Rows enforcing u(0) = u(1); ``n_extra`` trailing columns (period, params)."""
    n = profile.n
    n_pts = profile.values.shape[1]
    res = profile.values[:, 0] - profile.values[:, -1]
    jac = np.zeros((n, n * n_pts + n_extra))
    for i in range(n):
        jac[i, i] = 1.0
        jac[i, (n_pts - 1) * n + i] = -1.0
    return res, jac


def phase_residual_jacobian(
    profile: PiecewiseProfile,
    reference: PiecewiseProfile,
    n_extra: int,
) -> Tuple[float, np.ndarray]:
    """Integral phase condition int_0^1 u_ref'(s)^T (u(s) - u_ref(s)) ds = 0."""
    interp = ProfileInterpolant(profile)
    ref = ProfileInterpolant(reference)
    n = profile.n
    n_pts = profile.values.shape[1]
    nodes, weights = gauss_legendre_nodes(profile.degree)
    res = 0.0
    jac = np.zeros(n * n_pts + n_extra)
    for iv in range(interp.intervals):
        for node, weight in zip(nodes, weights):
            s = interp.coarse[iv] + node * interp.dt[iv]
            w_quad = weight * interp.dt[iv]
            du_ref = ref.eval(s, derivative=True)
            u = interp.eval(s)
            u_ref = ref.eval(s)
            res += w_quad * float(du_ref @ (u - u_ref))
            cols = np.arange(iv * interp.degree, (iv + 1) * interp.degree + 1)
            w_val, _ = _lagrange_weights(interp.degree, node)
            for i in range(n):
                jac[cols * n + i] += w_quad * du_ref[i] * w_val
    return res, jac


# ---------------------------------------------------------------------------
# mesh adaptation
# ---------------------------------------------------------------------------


def _error_monitor(profile: PiecewiseProfile) -> np.ndarray:
    """Equidistribution density per interval from (d+1)-st divided differences."""
    interp = ProfileInterpolant(profile)
    mesh = interp.mesh
    values = profile.values
    degree = profile.degree
    n_pts = values.shape[1]
    window = degree + 2
    density = np.zeros(interp.intervals)
    for start in range(n_pts - window + 1):
        pts = mesh[start : start + window]
        if pts[-1] - pts[0] <= 0:
            continue
        # divided difference of order d+1, componentwise, max over components
        table = values[:, start : start + window].astype(float).copy()
        xs = pts.copy()
        for order in range(1, window):
            table = (table[:, 1:] - table[:, :-1]) / (xs[order:] - xs[:-order])
        dd = float(np.max(np.abs(table)))
        local = dd ** (1.0 / (degree + 1))
        mid = 0.5 * (pts[0] + pts[-1])
        iv = min(
            int(np.searchsorted(interp.coarse, mid, side="right")) - 1,
            interp.intervals - 1,
        )
        density[iv] = max(density[iv], local)
    floor = 1e-2 * float(np.max(density)) + 1e-12
    return density + floor


def equidistribute_mesh(profile: PiecewiseProfile, intervals: int) -> np.ndarray:
    """New interval points equidistributing the profile's error monitor."""
    interp = ProfileInterpolant(profile)
    density = _error_monitor(profile)
    cumulative = np.concatenate([[0.0], np.cumsum(density * interp.dt)])
    targets = np.linspace(0.0, cumulative[-1], intervals + 1)
    coarse = np.interp(targets, cumulative, interp.coarse)
    coarse[0], coarse[-1] = 0.0, 1.0
    return coarse


def _full_mesh_from_coarse(coarse: np.ndarray, degree: int) -> np.ndarray:
    coarse = np.asarray(coarse, dtype=float)
    pieces = [
        coarse[:-1][:, None] + np.arange(degree)[None, :] / degree * np.diff(coarse)[:, None]
    ]
    mesh = np.concatenate([pieces[0].ravel(), coarse[-1:]])
    return mesh


def remesh(
    point: Point,
    degree: Optional[int] = None,
    intervals: Optional[int] = None,
    adaptive: bool = True,
) -> Point:
    """Re-represent a periodic/connecting orbit on a new mesh.

    With ``adaptive`` the new interval points equidistribute an error monitor
    of the current profile, otherwise they are equidistant.
    """
    if point.kind not in ("psol", "hcli"):
        raise ValueError("remesh applies to periodic/connecting orbits")
    profile = point.profile
    degree = degree if degree is not None else profile.degree
    intervals = intervals if intervals is not None else profile.intervals
    if adaptive:
        coarse = equidistribute_mesh(profile, intervals)
    else:
        coarse = np.linspace(0.0, 1.0, intervals + 1)
    mesh = _full_mesh_from_coarse(coarse, degree)
    values = interp_profile(profile, mesh, wrap=(point.kind == "psol"))
    new_profile = PiecewiseProfile(values=values, degree=degree, mesh=mesh)
    return point.replace(profile=new_profile, stability=None)


# ---------------------------------------------------------------------------
# Floquet multipliers
# ---------------------------------------------------------------------------


def monodromy_operators(
    problem: Problem,
    point: PeriodicOrbit,
    method: Optional[StabilityMethod] = None,
) -> Tuple[np.ndarray, np.ndarray, int, int]:
    """Discretized one-period map of the variational equation.

    The variational equation is collocated on [0, 1] without wrapping delayed
    arguments; the history segment is carried on backward translates of the
    orbit mesh, and the one-period map combines the solved future values with
    a pure shift of the overlapping history.  Returns ``(mono, solve, depth,
    ld)`` where ``mono`` maps history to shifted history, ``solve`` maps
    history values to the future mesh values, ``depth`` is the number of
    history periods and ``ld`` the number of mesh points per period.
    """
    if method is None:
        method = default_stability_method("psol")
    profile = point.profile
    interp = ProfileInterpolant(profile)
    n = profile.n
    degree = profile.degree
    period = point.period
    par = point.parameter
    m = problem.m
    constant = isinstance(problem.delays, ConstantDelays)

    ivs, times = _collocation_points(interp, method.collocation_parameters)

    # pass 1: delay values at all collocation points -> history depth
    all_data = []
    sigma_max = 0.0
    for c in times:
        taus, stimes, states = _delays_at(problem, interp, period, par, c, wrap=True)
        taus = np.maximum(taus, 0.0)
        sigma_max = max(sigma_max, float(np.max(taus / period)) if m else 0.0)
        all_data.append((taus, states))
    depth = max(1, int(math.ceil(sigma_max - 1e-12)))

    ld = interp.intervals * degree  # mesh points per period (minus shared end)
    n_hist = depth * ld + 1
    n_fut = ld
    n_ext = n_hist + n_fut

    def ext_weights(s: float) -> Tuple[np.ndarray, np.ndarray]:
        """Extended-mesh column indices and value weights for s in [-depth, 1]."""
        shift = min(max(int(math.ceil(-s - 1e-12)), 0), depth)
        base = s + shift  # in [0, 1]
        cols, w_val, _ = interp.weights(base, wrap=False)
        return (depth - shift) * ld + cols, w_val

    rows = np.zeros((n * len(times), n * n_ext))
    for block, (iv, c) in enumerate(zip(ivs, times)):
        taus, states = all_data[block]
        # d/ds row for y at the collocation point's interval
        cols0 = np.arange(iv * degree, (iv + 1) * degree + 1)
        sigma0 = (c - interp.coarse[iv]) / interp.dt[iv]
        _, w_der = _lagrange_weights(degree, sigma0)
        w_der = w_der / interp.dt[iv]
        row = np.zeros((n, n * n_ext))
        for i in range(n):
            row[i, (depth * ld + cols0) * n + i] = w_der

        # variational states Y_j as linear maps of the extended unknowns
        y_maps = np.zeros((m + 1, n, n * n_ext))
        ecols, ew = ext_weights(c)
        for i in range(n):
            y_maps[0, i, ecols * n + i] = ew
        for j in range(1, m + 1):
            s_j = c - taus[j - 1] / period
            ecols_j, ew_j = ext_weights(s_j)
            for i in range(n):
                y_maps[j, i, ecols_j * n + i] = ew_j
            if not constant:
                # Y_j -= x*'(t - tau_j) * sum_k B_jk Y_k  (physical derivative)
                du = interp.eval(s_j, wrap=True, derivative=True) / period
                acc = np.zeros(n * n_ext)
                for k in range(j):
                    b_row = np.asarray(
                        problem.delay_jacobian(j, states[:, :j], par, [k], []),
                        dtype=float,
                    )
                    acc += b_row @ y_maps[k].reshape(n, -1)
                y_maps[j] -= np.outer(du, acc)
        for j in range(m + 1):
            a_j = np.asarray(problem.state_jacobian(states, par, [j], []))
            row -= period * (a_j @ y_maps[j].reshape(n, -1)).reshape(n, n * n_ext)
        rows[block * n : (block + 1) * n] = row

    j_hist = rows[:, : n * n_hist]
    j_fut = rows[:, n * n_hist :]
    solve = np.linalg.solve(j_fut, -j_hist)  # future = solve @ history

    # one-period map on the history vector
    mono = np.zeros((n * n_hist, n * n_hist))
    for e in range(n_hist):
        target = e + ld
        if target < n_hist:
            mono[e * n : (e + 1) * n, target * n : (target + 1) * n] = np.eye(n)
        else:
            fut = target - n_hist
            mono[e * n : (e + 1) * n, :] = solve[fut * n : (fut + 1) * n, :]
    return mono, solve, depth, ld


def floquet_multipliers(
    problem: Problem,
    point: PeriodicOrbit,
    method: Optional[StabilityMethod] = None,
) -> Multipliers:
    """Floquet multipliers of a periodic orbit (sorted by decreasing modulus,
    filtered at ``minimal_modulus`` and capped at
    ``max_number_of_eigenvalues``)."""
    if method is None:
        method = default_stability_method("psol")
    mono, _, _, _ = monodromy_operators(problem, point, method)
    mu = scipy.linalg.eigvals(mono)
    mu = mu[np.abs(mu) >= method.minimal_modulus]
    mu = mu[np.argsort(-np.abs(mu))][: method.max_number_of_eigenvalues]
    return Multipliers(mu=mu)


# ---------------------------------------------------------------------------
# delays along an orbit, negative-delay detection
# ---------------------------------------------------------------------------


def delay_on_orbit(
    problem: Problem,
    point: PeriodicOrbit,
    d_nr: int,
    s: Sequence[float],
) -> np.ndarray:
    """Values of delay ``d_nr`` (1-based) at scaled times ``s`` along the orbit."""
    interp = ProfileInterpolant(point.profile)
    s = np.atleast_1d(np.asarray(s, dtype=float))
    out = np.empty(s.size)
    for idx, si in enumerate(s):
        taus, _, _ = _delays_at(problem, interp, point.period, point.parameter, si)
        out[idx] = taus[d_nr - 1]
    return out


def delay_derivative_on_orbit(
    problem: Problem,
    point: PeriodicOrbit,
    d_nr: int,
    s: float,
) -> float:
    """d tau_{d_nr} / ds at scaled time ``s`` (chain through nested delays)."""
    interp = ProfileInterpolant(point.profile)
    period = point.period
    par = point.parameter
    taus, stimes, states = _delays_at(problem, interp, period, par, s)
    # dX_j/ds with X_j = u(s - tau_j/period)
    dx = np.zeros((d_nr + 1, states.shape[0]))
    dtau = np.zeros(d_nr + 1)  # dtau[j] = d tau_j / ds (index 0 unused)
    dx[0] = interp.eval(s, derivative=True)
    for j in range(1, d_nr + 1):
        if isinstance(problem.delays, ConstantDelays):
            dtau[j] = 0.0
        else:
            total = 0.0
            for k in range(j):
                b_row = np.asarray(
                    problem.delay_jacobian(j, states[:, :j], par, [k], []),
                    dtype=float,
                )
                total += float(b_row @ dx[k])
            dtau[j] = total
        if j <= d_nr:
            du = interp.eval(stimes[j], derivative=True)
            dx[j] = du * (1.0 - dtau[j] / period)
    return float(dtau[d_nr])


def delay_value_gradient(
    problem: Problem,
    profile: PiecewiseProfile,
    period: float,
    par: np.ndarray,
    free: Sequence[int],
    s: float,
    d_nr: int,
) -> Tuple[float, np.ndarray]:
    """Delay value tau_{d_nr}(s) and its gradient over [profile, period, free].

    Differentiates through the nested delay chain exactly like the
    collocation assembly; the gradient vector matches the unknown layout of
    ``collocation_residual_jacobian``.
    """
    interp = ProfileInterpolant(profile)
    n = profile.n
    n_pts = profile.values.shape[1]
    col_period = n * n_pts
    n_unknowns = n * n_pts + 1 + len(free)
    constant = isinstance(problem.delays, ConstantDelays)

    states = np.zeros((n, d_nr + 1))
    grads = np.zeros((d_nr + 1, n, n_unknowns))
    cols0, wv0, _ = interp.weights(s, wrap=True)
    states[:, 0] = interp.values[:, cols0] @ wv0
    for i in range(n):
        grads[0, i, cols0 * n + i] = wv0
    tau = 0.0
    g_tau = np.zeros(n_unknowns)
    for j in range(1, d_nr + 1):
        tau = problem.delay_value(j, states[:, :j], par)
        g_tau = np.zeros(n_unknowns)
        if constant:
            idx = problem.delays.indices[j - 1]
            if idx in free:
                g_tau[col_period + 1 + list(free).index(idx)] = 1.0
        else:
            for k in range(j):
                b_row = np.asarray(
                    problem.delay_jacobian(j, states[:, :j], par, [k], []),
                    dtype=float,
                )
                g_tau += b_row @ grads[k]
            for pos, q in enumerate(free):
                g_tau[col_period + 1 + pos] += float(
                    problem.delay_jacobian(j, states[:, :j], par, [], [q])
                )
        if j == d_nr:
            break
        s_j = s - tau / period
        cols_j, wv_j, wd_j = interp.weights(s_j, wrap=True)
        states[:, j] = interp.values[:, cols_j] @ wv_j
        du = interp.values[:, cols_j] @ wd_j
        g_s = -g_tau / period
        g_s[col_period] += tau / period**2
        grads[j] = np.outer(du, g_s)
        for i in range(n):
            grads[j, i, cols_j * n + i] += wv_j
    return float(tau), g_tau


def refine_delay_zero(
    problem: Problem,
    point: PeriodicOrbit,
    d_nr: int,
    bracket: Tuple[float, float],
    tol: float = 1e-10,
) -> float:
    """Golden-section minimizer of tau_{d_nr}(s) on ``bracket``."""
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = bracket
    c = b - phi * (b - a)
    d = a + phi * (b - a)
    fc = delay_on_orbit(problem, point, d_nr, [c])[0]
    fd = delay_on_orbit(problem, point, d_nr, [d])[0]
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = delay_on_orbit(problem, point, d_nr, [c])[0]
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = delay_on_orbit(problem, point, d_nr, [d])[0]
    return 0.5 * (a + b)


def detect_negative_delay(
    problem: Problem,
    point: Point,
    threshold: float = -1e-8,
    refinement: int = 4,
) -> Optional[Tuple[int, Optional[float]]]:
    """First delay (1-based) dipping below ``threshold``; for orbits also the
    scaled time of the minimum (refined by golden-section search)."""
    if point.kind in ("stst", "fold", "hopf"):
        taus = problem.steady_delay_values(point.x, point.parameter)
        for j, tau in enumerate(taus, start=1):
            if tau < threshold:
                return j, None
        return None
    if point.kind != "psol":
        raise ValueError(f"negative-delay detection unsupported for {point.kind}")
    interp = ProfileInterpolant(point.profile)
    coarse = interp.coarse
    grid: List[float] = []
    for iv in range(interp.intervals):
        grid.extend(
            coarse[iv] + np.arange(refinement) / refinement * interp.dt[iv]
        )
    grid.append(1.0)
    grid_arr = np.asarray(grid)
    for j in range(1, problem.m + 1):
        taus = delay_on_orbit(problem, point, j, grid_arr)
        if np.min(taus) < threshold:
            idx = int(np.argmin(taus))
            lo = grid_arr[max(idx - 1, 0)]
            hi = grid_arr[min(idx + 1, grid_arr.size - 1)]
            tz = refine_delay_zero(problem, point, j, (lo, hi))
            return j, tz
    return None
