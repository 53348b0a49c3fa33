"""Characteristic roots of steady states.

The rightmost roots of det(Delta(lambda)) = 0 with

    Delta(lambda) = lambda*I - A_0 - sum_i A_i exp(-lambda*tau_i)

are first approximated by the eigenvalues of the discretized time-integration
operator of a linear multistep (LMS) scheme and then corrected by Newton
iteration on the characteristic equation.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from .model import Point, Roots, StabilityMethod, default_stability_method
from .system import Problem, eval_delay_values

__all__ = [
    "Linearization",
    "linearize_at_steady_state",
    "char_matrix",
    "char_matrix_dlambda",
    "choose_timestep",
    "approximate_roots",
    "correct_roots",
    "stst_stability",
]


@dataclass(frozen=True)
class Linearization:
    """Delay values and state-block Jacobians at a steady state."""

    matrices: Tuple[np.ndarray, ...]  # A_0 .. A_m
    taus: np.ndarray  # tau_1 .. tau_m (tau_0 = 0 implicit)

    @property
    def n(self) -> int:
        return self.matrices[0].shape[0]

    @property
    def tau_max(self) -> float:
        return float(np.max(self.taus)) if self.taus.size else 0.0


def linearize_at_steady_state(
    problem: Problem, x: np.ndarray, par: np.ndarray
) -> Linearization:
    x = np.asarray(x, dtype=float).ravel()
    taus, states = eval_delay_values(problem, par, lambda ind, tau: x)
    matrices = tuple(
        np.asarray(problem.state_jacobian(states, par, [j], []), dtype=float)
        for j in range(problem.m + 1)
    )
    return Linearization(matrices=matrices, taus=taus)


def char_matrix(lin: Linearization, lam: complex) -> np.ndarray:
    """Delta(lambda) = lambda*I - A_0 - sum_i A_i exp(-lambda*tau_i)."""
    delta = lam * np.eye(lin.n, dtype=complex) - lin.matrices[0]
    for a_i, tau in zip(lin.matrices[1:], lin.taus):
        delta -= a_i * np.exp(-lam * tau)
    return delta


def char_matrix_dlambda(lin: Linearization, lam: complex) -> np.ndarray:
    """d Delta / d lambda."""
    ddelta = np.eye(lin.n, dtype=complex)
    for a_i, tau in zip(lin.matrices[1:], lin.taus):
        ddelta += tau * a_i * np.exp(-lam * tau)
    return ddelta


def choose_timestep(method: StabilityMethod, tau_max: float) -> float:
    """Heuristic step size for the LMS discretization.

    Targets roots up to magnitude ~2*|minimal_real_part| inside the safety
    disk, then clamps to [minimal_time_step, maximal_time_step] * tau_max
    (the lower clamp warns, the upper is silent).
    """
    if tau_max <= 0.0:
        return 0.0
    r0 = method.minimal_real_part
    if r0 is None:
        r0 = -1.0 / tau_max
    scale = 2.0 * abs(r0)
    h = method.lms_safety_radius / scale if scale > 0 else math.inf
    h_min = method.minimal_time_step * tau_max
    h_max = method.maximal_time_step * tau_max
    if h < h_min:
        warnings.warn(
            f"LMS time step clamped up to {h_min:.3g}; requested accuracy range "
            "may exceed what the discretization resolves"
        )
        h = h_min
    elif h > h_max:
        h = h_max
    return h


def _nordsieck_weights(eps: float, r: int, s: int) -> np.ndarray:
    """Lagrange interpolation weights P_l(eps) on stencil l = -r..s."""
    offsets = np.arange(-r, s + 1)
    weights = np.ones(offsets.size)
    for idx, l in enumerate(offsets):
        for k in offsets:
            if k != l:
                weights[idx] *= (eps - k) / (l - k)
    return weights


def _ode_spectrum(lin: Linearization) -> np.ndarray:
    matrix = lin.matrices[0].copy()
    for a_i, tau in zip(lin.matrices[1:], lin.taus):
        if tau <= 0.0:
            matrix = matrix + a_i
    return scipy.linalg.eigvals(matrix)


def _is_ode_like(lin: Linearization) -> bool:
    return all(
        tau <= 0.0 or not np.any(a_i)
        for a_i, tau in zip(lin.matrices[1:], lin.taus)
    )


def approximate_roots(
    lin: Linearization, method: StabilityMethod
) -> Tuple[float, np.ndarray]:
    """Approximate rightmost characteristic roots.

    Returns ``(h, l0)`` with ``l0`` sorted by decreasing real part.  For
    problems without effective delays the dense spectrum of the (summed)
    state matrix is returned directly with ``h = 0``.
    """
    if _is_ode_like(lin):
        l0 = _ode_spectrum(lin)
        if method.minimal_real_part is not None:
            l0 = l0[l0.real >= method.minimal_real_part]
        order = np.argsort(-l0.real)
        return 0.0, l0[order][: method.max_number_of_eigenvalues]

    tau_max = lin.tau_max
    h = choose_timestep(method, tau_max)
    r0 = method.minimal_real_part
    if r0 is None:
        r0 = -1.0 / tau_max

    alpha = np.asarray(method.lms_alpha, dtype=float)
    beta = np.asarray(method.lms_beta, dtype=float)
    k = alpha.size - 1
    order = method.interpolation_order
    s = order // 2
    r = order - s  # r <= s <= r + 2 with r + s = order
    if r > s:
        r, s = s, r

    n = lin.n
    # coefficient matrices of the recurrence, keyed by relative time offset
    coeff: dict = {}

    def add(offset: int, matrix: np.ndarray) -> None:
        if offset in coeff:
            coeff[offset] = coeff[offset] + matrix
        else:
            coeff[offset] = matrix.copy()

    eye = np.eye(n)
    delays = []
    for a_i, tau in zip(lin.matrices[1:], lin.taus):
        if not np.any(a_i):
            continue
        steps = max(int(math.ceil(tau / h - 1e-12)), 0)
        eps = steps - tau / h
        delays.append((a_i, steps, _nordsieck_weights(eps, r, s)))
    for l in range(k + 1):
        add(l, alpha[l] * eye)
        if beta[l] == 0.0:
            continue
        add(l, -h * beta[l] * lin.matrices[0])
        for a_i, steps, weights in delays:
            for q, w in zip(range(-r, s + 1), weights):
                if w != 0.0:
                    add(l - steps + q, -h * beta[l] * w * a_i)

    offsets = sorted(coeff)
    omin, omax = offsets[0], offsets[-1]
    degree = omax - omin
    blocks = [coeff.get(omin + p, np.zeros((n, n))) for p in range(degree + 1)]

    # companion pencil for the matrix polynomial sum_p C_p mu^p
    dim = n * degree
    a_pen = np.zeros((dim, dim))
    b_pen = np.zeros((dim, dim))
    for p in range(degree - 1):
        a_pen[p * n : (p + 1) * n, (p + 1) * n : (p + 2) * n] = np.eye(n)
        b_pen[p * n : (p + 1) * n, p * n : (p + 1) * n] = np.eye(n)
    for p in range(degree):
        a_pen[(degree - 1) * n :, p * n : (p + 1) * n] = -blocks[p]
    b_pen[(degree - 1) * n :, (degree - 1) * n :] = blocks[degree]
    mu = scipy.linalg.eigvals(a_pen, b_pen)
    mu = mu[np.isfinite(mu)]
    mu = mu[np.abs(mu) > 0.0]

    # mu = exp(lambda*h); imaginary part recovered modulo pi/h via arcsin
    re = np.log(np.abs(mu)) / h
    im = np.arcsin(np.clip(mu.imag / np.abs(mu), -1.0, 1.0)) / h
    lam = re + 1j * im
    keep = (lam.real >= r0) & (np.abs(lam) * h <= method.lms_safety_radius)
    lam = lam[keep]
    lam = lam[np.argsort(-lam.real)][: method.max_number_of_eigenvalues]
    return h, lam


def correct_roots(
    lin: Linearization,
    l0: Sequence[complex],
    method: StabilityMethod,
) -> Tuple[np.ndarray, np.ndarray]:
    """Newton-correct approximate roots on the characteristic equation.

    Solves ``Delta(lambda) v = 0`` with normalization ``c^T v = 1`` starting
    from the eigenvector of ``Delta(lambda_0)`` associated with its
    smallest-modulus eigenvalue.  Returns ``(l1, n1)``; with
    ``remove_unconverged_roots`` the failures are dropped, duplicates merged
    and roots sorted by decreasing real part (``n1`` empty), otherwise ``l1``
    aligns with ``l0`` and ``n1`` holds -1 for failures.
    """
    n = lin.n
    l1: List[complex] = []
    n1: List[int] = []
    for lam0 in l0:
        lam = complex(lam0)
        evals, evecs = scipy.linalg.eig(char_matrix(lin, lam))
        v = evecs[:, int(np.argmin(np.abs(evals)))]
        c = v.conj() / (v.conj() @ v)
        iterations = -1
        for it in range(1, method.max_newton_iterations + 1):
            delta = char_matrix(lin, lam)
            res = np.concatenate([delta @ v, [c @ v - 1.0]])
            if np.max(np.abs(res)) <= method.root_accuracy:
                iterations = it - 1
                break
            jac = np.zeros((n + 1, n + 1), dtype=complex)
            jac[:n, :n] = delta
            jac[:n, n] = char_matrix_dlambda(lin, lam) @ v
            jac[n, :n] = c
            try:
                step = np.linalg.solve(jac, -res)
            except np.linalg.LinAlgError:
                break
            v = v + step[:n]
            lam = lam + step[n]
        else:
            delta = char_matrix(lin, lam)
            res = np.concatenate([delta @ v, [c @ v - 1.0]])
            if np.max(np.abs(res)) <= method.root_accuracy:
                iterations = method.max_newton_iterations
        l1.append(lam)
        n1.append(iterations)

    l1_arr = np.asarray(l1, dtype=complex)
    n1_arr = np.asarray(n1, dtype=int)
    if method.remove_unconverged_roots:
        converged = l1_arr[n1_arr >= 0]
        unique: List[complex] = []
        for lam in converged:
            if all(abs(lam - other) > method.root_accuracy for other in unique):
                unique.append(lam)
        l1_arr = np.asarray(unique, dtype=complex)
        l1_arr = l1_arr[np.argsort(-l1_arr.real)]
        n1_arr = np.zeros(0, dtype=int)
    return l1_arr, n1_arr


def stst_stability(
    problem: Problem,
    point: Point,
    method: Optional[StabilityMethod] = None,
) -> Roots:
    """Characteristic-root stability of a steady-state-like point."""
    if point.kind not in ("stst", "fold", "hopf"):
        raise ValueError(f"cannot compute characteristic roots for {point.kind}")
    if method is None:
        method = default_stability_method(point.kind)
    lin = linearize_at_steady_state(problem, point.x, point.parameter)
    if np.any(lin.taus < method.delay_accuracy):
        raise ValueError(
            f"negative delay(s) {lin.taus[lin.taus < method.delay_accuracy]} "
            "at steady state"
        )
    if np.any(lin.taus < 0.0):
        lin = Linearization(
            matrices=lin.matrices, taus=np.maximum(lin.taus, 0.0)
        )
    h, l0 = approximate_roots(lin, method)
    l1, n1 = correct_roots(lin, l0, method)
    return Roots(h=h, l0=l0, l1=l1, n1=n1)
