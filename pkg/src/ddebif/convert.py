"""Conversions between point kinds (branch switching).

* ``to_stst``   fold/Hopf -> steady state
* ``to_fold``   steady state/Hopf -> fold (null vector of Delta(0))
* ``to_hopf``   steady state/fold -> Hopf (root pair closest to the axis)
* ``to_psol``   Hopf -> small-amplitude periodic orbit;
                periodic orbit -> period-doubled orbit;
                connecting orbit -> periodic orbit (period pinned)
* ``to_hcli``   (near-homoclinic) periodic orbit -> connecting orbit

``to_psol``/``to_hcli`` return uncorrected starting data; ``to_psol`` also
returns the steplength condition that keeps the correction from collapsing
back onto the trivial solution.
"""

from __future__ import annotations

import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from . import collocation as cl
from .corrector import correct
from .model import (
    ConnectingOrbit,
    Fold,
    Hopf,
    Multipliers,
    PeriodicOrbit,
    PiecewiseProfile,
    Point,
    Roots,
    StabilityMethod,
    SteadyState,
    default_stability_method,
    point_normalize,
)
from .spectrum import char_matrix, linearize_at_steady_state, stst_stability
from .system import Problem

__all__ = ["to_stst", "to_fold", "to_hopf", "to_psol", "to_hcli"]

EXCLUDE_FREQ_TOL = 1e-6


def to_stst(point: Point) -> SteadyState:
    if point.kind not in ("stst", "fold", "hopf"):
        raise ValueError(f"cannot convert {point.kind} to a steady state")
    return SteadyState(parameter=point.parameter.copy(), x=point.x.copy())


def _null_vector(matrix: np.ndarray) -> np.ndarray:
    """Right singular vector for the smallest singular value."""
    _, _, vh = scipy.linalg.svd(matrix)
    return vh[-1].conj()


def to_fold(problem: Problem, point: Point) -> Fold:
    if point.kind not in ("stst", "fold", "hopf"):
        raise ValueError(f"cannot convert {point.kind} to a fold")
    lin = linearize_at_steady_state(problem, point.x, point.parameter)
    v = np.real(_null_vector(np.real(char_matrix(lin, 0.0))))
    v = v / np.linalg.norm(v)
    return Fold(parameter=point.parameter.copy(), x=point.x.copy(), v=v)


def to_hopf(
    problem: Problem,
    point: Point,
    excludefreqs: Sequence[float] = (),
    method: Optional[StabilityMethod] = None,
) -> Hopf:
    """Hopf point from the root pair closest to the imaginary axis.

    Roots whose frequency matches an entry of ``excludefreqs`` within
    ``1e-6 * (1 + |omega|)`` are skipped (used to find secondary Hopf points).
    """
    if point.kind == "hopf" and not excludefreqs:
        excludefreqs = [point.omega]
    if point.kind not in ("stst", "fold", "hopf"):
        raise ValueError(f"cannot convert {point.kind} to a Hopf point")
    stability = point.stability
    if not isinstance(stability, Roots) or stability.l1.size == 0:
        stability = stst_stability(problem, point, method)
    roots = stability.l1
    candidates = []
    for lam in roots:
        if lam.imag <= 0:
            continue
        if any(
            abs(lam.imag - freq) <= EXCLUDE_FREQ_TOL * (1.0 + abs(freq))
            for freq in excludefreqs
        ):
            continue
        candidates.append(lam)
    if not candidates:
        raise ValueError("no oscillatory root pair available for Hopf conversion")
    lam = min(candidates, key=lambda z: abs(z.real))
    omega = float(lam.imag)
    lin = linearize_at_steady_state(problem, point.x, point.parameter)
    v = _null_vector(char_matrix(lin, 1j * omega))
    hopf = Hopf(parameter=point.parameter.copy(), x=point.x.copy(), v=v, omega=omega)
    return point_normalize(hopf)


# ---------------------------------------------------------------------------
# periodic orbits
# ---------------------------------------------------------------------------


def _equidistant_full_mesh(intervals: int, degree: int) -> np.ndarray:
    return np.linspace(0.0, 1.0, intervals * degree + 1)


def _psol_from_hopf(
    hopf: Hopf, amplitude: float, degree: int, intervals: int
) -> Tuple[PeriodicOrbit, List[Point]]:
    mesh = _equidistant_full_mesh(intervals, degree)
    wave = np.real(np.outer(hopf.v, np.exp(2j * np.pi * mesh)))
    values = hopf.x[:, None] + amplitude * wave
    profile = PiecewiseProfile(values=values, degree=degree, mesh=mesh)
    period = 2.0 * np.pi / hopf.omega
    psol = PeriodicOrbit(parameter=hopf.parameter.copy(), profile=profile, period=period)
    coeff = PeriodicOrbit(
        parameter=np.zeros_like(hopf.parameter),
        profile=PiecewiseProfile(values=wave, degree=degree, mesh=mesh),
        period=0.0,
    )
    return psol, [coeff]


def _floquet_mode(
    problem: Problem,
    psol: PeriodicOrbit,
    target: complex,
    method: StabilityMethod,
) -> np.ndarray:
    """Eigenfunction values on the profile mesh for the multiplier nearest
    ``target``."""
    n = psol.profile.n
    mono, solve, _, ld = cl.monodromy_operators(problem, psol, method)
    evals, evecs = scipy.linalg.eig(mono)
    k = int(np.argmin(np.abs(evals - target)))
    hist = evecs[:, k]
    fut = solve @ hist
    mode = np.zeros((n, ld + 1), dtype=complex)
    mode[:, 0] = hist[-n:]
    mode[:, 1:] = fut.reshape(n, ld, order="F")
    # rotate to a real mode where possible
    pivot = mode.ravel()[int(np.argmax(np.abs(mode)))]
    mode = mode / (pivot / abs(pivot))
    return np.real(mode) / np.max(np.abs(mode))


def _psol_doubled(
    problem: Problem,
    psol: PeriodicOrbit,
    amplitude: float,
    method: Optional[StabilityMethod],
) -> Tuple[PeriodicOrbit, List[Point]]:
    if method is None:
        method = default_stability_method("psol")
    mode = _floquet_mode(problem, psol, -1.0, method)
    profile = psol.profile
    mesh = profile.full_mesh()
    mesh2 = np.concatenate([mesh / 2.0, 0.5 + mesh[1:] / 2.0])
    values2 = np.hstack([profile.values, profile.values[:, 1:]])
    pert = np.hstack([mode, -mode[:, 1:]])
    seed = PeriodicOrbit(
        parameter=psol.parameter.copy(),
        profile=PiecewiseProfile(
            values=values2 + amplitude * pert, degree=profile.degree, mesh=mesh2
        ),
        period=2.0 * psol.period,
    )
    coeff = PeriodicOrbit(
        parameter=np.zeros_like(psol.parameter),
        profile=PiecewiseProfile(values=pert, degree=profile.degree, mesh=mesh2),
        period=0.0,
    )
    return seed, [coeff]


def _psol_from_hcli(hcli: ConnectingOrbit) -> Tuple[PeriodicOrbit, List[Point]]:
    psol = PeriodicOrbit(
        parameter=hcli.parameter.copy(),
        profile=hcli.profile,
        period=hcli.period,
    )
    coeff = PeriodicOrbit(
        parameter=np.zeros_like(hcli.parameter),
        profile=PiecewiseProfile(
            values=np.zeros_like(hcli.profile.values),
            degree=hcli.profile.degree,
            mesh=hcli.profile.mesh,
        ),
        period=1.0,
    )
    return psol, [coeff]


def to_psol(
    problem: Problem,
    point: Point,
    amplitude: float = 1e-2,
    degree: int = 3,
    intervals: int = 20,
    method: Optional[StabilityMethod] = None,
) -> Tuple[PeriodicOrbit, List[Point]]:
    """Periodic-orbit starting data plus steplength condition(s).

    From a Hopf point: harmonic of amplitude ``amplitude`` on an equidistant
    mesh.  From a periodic orbit: period-doubled orbit perturbed along the
    Floquet mode nearest -1.  From a connecting orbit: the orbit reinterpreted
    as periodic with its period pinned by the steplength condition.
    """
    if point.kind == "hopf":
        return _psol_from_hopf(point, amplitude, degree, intervals)
    if point.kind == "psol":
        return _psol_doubled(problem, point, amplitude, method)
    if point.kind == "hcli":
        return _psol_from_hcli(point)
    raise ValueError(f"cannot convert {point.kind} to a periodic orbit")


# ---------------------------------------------------------------------------
# connecting orbits
# ---------------------------------------------------------------------------


def _rotate_profile(
    profile: PiecewiseProfile, interval_index: int
) -> PiecewiseProfile:
    """Rotate a periodic profile so interval point ``interval_index`` maps to 0."""
    degree = profile.degree
    mesh = profile.full_mesh()
    k = interval_index * degree
    if k == 0:
        return profile
    new_mesh = np.concatenate([mesh[k:] - mesh[k], 1.0 - mesh[k] + mesh[1 : k + 1]])
    new_values = np.hstack([profile.values[:, k:], profile.values[:, 1 : k + 1]])
    return PiecewiseProfile(values=new_values, degree=degree, mesh=new_mesh)


def to_hcli(problem: Problem, point: Point) -> ConnectingOrbit:
    """Connecting-orbit starting data from a (near-)homoclinic periodic orbit.

    The saddle is located as the longest plateau of the orbit (refined by a
    steady-state correction), the profile is rotated (periodic input only) and
    trimmed to the excursion, and the eigenvalue data of the saddle's unstable
    spectrum fills the remaining fields.
    """
    if point.kind == "hcli":
        base = PeriodicOrbit(
            parameter=point.parameter.copy(),
            profile=point.profile,
            period=point.period,
        )
        return to_hcli(problem, base)
    if point.kind != "psol":
        raise ValueError(f"cannot convert {point.kind} to a connecting orbit")

    profile = point.profile
    degree = profile.degree
    mesh = profile.full_mesh()
    coarse = mesh[0::degree]
    par = point.parameter

    # plateau candidate: slowest point of the orbit
    speeds = np.linalg.norm(
        cl.interp_profile(profile, coarse[:-1] + 1e-9, derivative=True, wrap=False),
        axis=0,
    )
    x_guess = profile.values[:, int(np.argmin(speeds)) * degree]
    saddle, report = correct(problem, SteadyState(parameter=par.copy(), x=x_guess))
    if not report.success:
        raise ValueError("could not refine the plateau equilibrium")
    x_star = saddle.x

    dist = np.linalg.norm(profile.values - x_star[:, None], axis=0)
    amplitude = float(np.max(dist))
    periodic = bool(np.linalg.norm(profile.values[:, 0] - profile.values[:, -1])
                    <= 1e-8 * (1.0 + amplitude))

    if periodic:
        # longest run of interval points inside the plateau (with wrap)
        inside = dist[0::degree] < 1e-2 * amplitude
        n_iv = coarse.size - 1
        flags = np.concatenate([inside[:-1], inside[:-1]])
        best_len, best_end, run = 0, -1, 0
        for idx, flag in enumerate(flags):
            run = run + 1 if flag else 0
            if run > best_len:
                best_len, best_end = run, idx
        if best_len == 0:
            raise ValueError("orbit has no plateau near the equilibrium")
        # start the window in the middle of the plateau so that both window
        # ends sit deep inside it and the trim below can cut either side
        run_start = best_end - best_len + 1
        start_iv = (run_start + best_len // 2) % n_iv
        profile = _rotate_profile(profile, start_iv)
        mesh = profile.full_mesh()
        coarse = mesh[0::degree]
        dist = np.linalg.norm(profile.values - x_star[:, None], axis=0)

    # trim leading/trailing mesh intervals lying inside a small neighborhood
    dist_iv = dist[0::degree]
    for factor in (1e-3, 1e-2, 5e-2):
        threshold = factor * amplitude
        outside = np.nonzero(dist_iv > threshold)[0]
        if outside.size == 0:
            continue
        start = max(int(outside[0]) - 1, 0)
        end = min(int(outside[-1]) + 1, dist_iv.size - 1)
        if end - start >= 3:
            break
    else:
        raise ValueError("orbit excursion too short for a connecting orbit")

    k0, k1 = start * degree, end * degree
    scale = mesh[k1] - mesh[k0]
    new_mesh = (mesh[k0 : k1 + 1] - mesh[k0]) / scale
    new_mesh[0], new_mesh[-1] = 0.0, 1.0
    new_profile = PiecewiseProfile(
        values=profile.values[:, k0 : k1 + 1].copy(), degree=degree, mesh=new_mesh
    )
    period = point.period * scale

    # unstable eigen-data of the saddle
    stability = stst_stability(problem, saddle)
    unstable = stability.l1[stability.l1.real > 0.0]
    if unstable.size == 0:
        raise ValueError("plateau equilibrium has no unstable eigenvalue")
    if np.max(np.abs(unstable.imag)) > 1e-8:
        raise ValueError("complex unstable eigenvalues are not supported")
    lam = np.real(unstable)
    lin = linearize_at_steady_state(problem, x_star, par)
    v = np.zeros((x_star.size, lam.size))
    w = np.zeros((x_star.size, lam.size))
    for k, lam_k in enumerate(lam):
        delta = np.real(char_matrix(lin, complex(lam_k)))
        v[:, k] = np.real(_null_vector(delta))
        v[:, k] /= np.linalg.norm(v[:, k])
        w[:, k] = np.real(_null_vector(delta.T))
        w[:, k] /= np.linalg.norm(w[:, k])

    residual0 = new_profile.values[:, 0] - x_star
    alpha_tilde, *_ = np.linalg.lstsq(v, residual0, rcond=None)
    epsilon = float(np.linalg.norm(alpha_tilde))
    if epsilon == 0.0:
        alpha = np.zeros(lam.size)
        alpha[0] = 1.0
        epsilon = 1e-8
    else:
        alpha = alpha_tilde / epsilon
        # orient the outgoing direction consistently
    return ConnectingOrbit(
        parameter=par.copy(),
        profile=new_profile,
        period=period,
        x1=x_star.copy(),
        x2=x_star.copy(),
        lambda_v=lam.astype(complex),
        lambda_w=lam.astype(complex),
        v=v.astype(complex),
        w=w.astype(complex),
        alpha=alpha.astype(complex),
        epsilon=epsilon,
    )
