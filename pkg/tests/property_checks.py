"""Property checks shared by the per-module tests and the acceptance suite.

Each ``check_*`` function raises ``AssertionError`` on failure; ``run_all``
executes every check and returns the names of the failing ones.
"""

import dataclasses
import json
from dataclasses import replace

import numpy as np

from ddebif import convert, serialize
from ddebif.collocation import interp_profile, remesh
from ddebif.continuation import (
    continue_branch,
    point_norm,
    point_axpy,
    recompute_branch,
    reverse_branch,
)
from ddebif.corrector import build_system, correct, pack_point, unpack_point
from ddebif.corrector import _entry_context
from ddebif.model import (
    ContinuationMethod,
    Hopf,
    Multipliers,
    PeriodicOrbit,
    PiecewiseProfile,
    Roots,
    SteadyState,
    default_branch,
    default_point_method,
    default_stability_method,
)
from ddebif.spectrum import stst_stability
from ddebif.system import ConstantDelays, assemble_problem
from ddebif.systems import builtin_problem


# ---------------------------------------------------------------------------
# system: analytic derivative callbacks against a finite-difference twin
# ---------------------------------------------------------------------------


def _fd_twin(problem):
    delays = problem.delays
    if hasattr(delays, "tau_jacobian"):
        delays = replace(delays, tau_jacobian=None)
    return assemble_problem(rhs=problem.rhs, delays=delays, n=problem.n)


def _derivative_requests(n, m, n_par, rng):
    v = rng.standard_normal(n)
    requests = [((i,), ()) for i in range(m + 1)]
    requests += [((), (j,)) for j in (1, n_par)]
    requests += [((0,), (1,)), ((0, m), ()), ((m, m), ())]
    return requests, v


def check_system_fd_vs_analytic():
    rng = np.random.default_rng(7)
    cases = {
        "neuron": np.array([0.5, -1.0, 1.0, 2.34, 0.2, 0.2, 1.5]),
        "sd_demo": np.array([4.5, 0.04, -1.4, 6.0, -0.45, -0.01,
                             3.0, 0.3, 0.1, 1.0, 0.2]),
        "hom_neural": np.array([2.6, 1.3428, 1.0, -1.34, -0.5, 1.0]),
    }
    for name, par in cases.items():
        problem = builtin_problem(name)
        twin = _fd_twin(problem)
        states = 0.5 * rng.standard_normal((problem.n, problem.m + 1))
        requests, v = _derivative_requests(problem.n, problem.m, par.size, rng)
        for nx, np_ in requests:
            use_v = v if len(nx) == 2 else None
            analytic = problem.state_jacobian(states, par, nx, np_, use_v)
            numeric = twin.state_jacobian(states, par, nx, np_, use_v)
            scale = 1.0 + np.max(np.abs(numeric))
            tol = 1e-4 if len(nx) + len(np_) > 1 else 1e-5
            assert np.max(np.abs(analytic - numeric)) < tol * scale, (
                f"{name}: state derivative mismatch for nx={nx}, np={np_}")
        if problem.delay_jacobian is not None:
            for ind in range(1, problem.m + 1):
                for nx, np_ in [((0,), ()), ((), (2,)), ((0, 0), ())]:
                    use_v = v if len(nx) == 2 else None
                    analytic = problem.delay_jacobian(ind, states, par,
                                                      nx, np_, use_v)
                    numeric = twin.delay_jacobian(ind, states, par,
                                                  nx, np_, use_v)
                    scale = 1.0 + np.max(np.abs(numeric))
                    tol = 1e-4 if len(nx) + len(np_) > 1 else 1e-5
                    assert np.max(np.abs(analytic - numeric)) < tol * scale, (
                        f"{name}: delay derivative mismatch, ind={ind}, "
                        f"nx={nx}, np={np_}")


# ---------------------------------------------------------------------------
# corrector: assembled Jacobians against finite differences of the residual
# ---------------------------------------------------------------------------


def _packed_residual(problem, point, free, method, seed, step_conds, context):
    def residual(vector):
        candidate, _ = unpack_point(vector, point, free)
        res, _ = build_system(problem, candidate, free, method, seed,
                              step_conds, point, None, None, context)
        return res

    return residual


def _jacobian_fd_error(problem, point, free, step_conds=(), h=1e-6):
    method = default_point_method(point.kind)
    context = _entry_context(point)
    residual = _packed_residual(problem, point, free, method, point,
                                step_conds, context)
    _, jac = build_system(problem, point, free, method, point, step_conds,
                          point, None, None, context)
    vector = pack_point(point, free)
    fd = np.empty_like(jac)
    for j in range(vector.size):
        up, dn = vector.copy(), vector.copy()
        up[j] += h
        dn[j] -= h
        fd[:, j] = (residual(up) - residual(dn)) / (2.0 * h)
    scale = 1.0 + np.max(np.abs(fd))
    return float(np.max(np.abs(jac - fd))) / scale


def _neuron_points():
    neuron = builtin_problem("neuron")
    par = np.array([0.5, -1.0, 1.0, 0.9, 0.2, 0.2, 1.5])
    stst, report = correct(neuron, SteadyState(parameter=par, x=np.zeros(2)))
    assert report.success
    stst = stst.replace(stability=stst_stability(neuron, stst))
    hopf = convert.to_hopf(neuron, stst)
    fold = convert.to_fold(neuron, stst)
    psol, _ = convert.to_psol(neuron, hopf, amplitude=0.05,
                              degree=3, intervals=8)
    return neuron, stst, fold, hopf, psol


def _synthetic_hcli():
    """Structurally valid connecting orbit at the neuron saddle."""
    import scipy.linalg

    from ddebif.spectrum import char_matrix, linearize_at_steady_state

    neuron = builtin_problem("neuron")
    par = np.array([0.5, -1.0, 1.0, 2.35, 0.2, 0.2, 1.5])
    saddle, report = correct(neuron, SteadyState(parameter=par, x=np.zeros(2)))
    assert report.success
    stability = stst_stability(neuron, saddle,
                               replace(default_stability_method("stst"),
                                       minimal_real_part=-2.0))
    lam = np.real(stability.l1[stability.l1.real > 0.0])
    lin = linearize_at_steady_state(neuron, saddle.x, par)
    v = np.zeros((2, lam.size))
    w = np.zeros((2, lam.size))
    for k, lam_k in enumerate(lam):
        delta = np.real(char_matrix(lin, complex(lam_k)))
        v[:, k] = scipy.linalg.svd(delta)[2][-1]
        v[:, k] /= np.linalg.norm(v[:, k])
        w[:, k] = scipy.linalg.svd(delta.T)[2][-1]
        w[:, k] /= np.linalg.norm(w[:, k])
    mesh = np.linspace(0.0, 1.0, 8 * 3 + 1)
    bump = np.sin(np.pi * mesh) ** 2
    values = saddle.x[:, None] + 0.8 * np.outer(v[:, 0], bump)
    values[:, 0] = saddle.x + 1e-3 * v[:, 0]
    from ddebif.model import ConnectingOrbit

    return neuron, ConnectingOrbit(
        parameter=par.copy(),
        profile=PiecewiseProfile(values=values, degree=3, mesh=mesh),
        period=40.0,
        x1=saddle.x.copy(),
        x2=saddle.x.copy(),
        lambda_v=lam.astype(complex),
        lambda_w=lam.astype(complex),
        v=v.astype(complex),
        w=w.astype(complex),
        alpha=np.ones(lam.size, dtype=complex),
        epsilon=1e-3,
    )


def check_corrector_jacobian_stst():
    neuron, stst, _, _, _ = _neuron_points()
    assert _jacobian_fd_error(neuron, stst, free=(4,)) < 1e-6


def check_corrector_jacobian_fold():
    neuron, _, fold, _, _ = _neuron_points()
    assert _jacobian_fd_error(neuron, fold, free=(4,)) < 1e-6


def check_corrector_jacobian_hopf():
    neuron, _, _, hopf, _ = _neuron_points()
    assert _jacobian_fd_error(neuron, hopf, free=(4,)) < 1e-6


def check_corrector_jacobian_psol():
    neuron, _, _, _, psol = _neuron_points()
    assert _jacobian_fd_error(neuron, psol, free=(4,)) < 1e-5


def check_corrector_jacobian_hcli():
    # the connecting-orbit Jacobian is itself finite-difference based, so the
    # check is directional consistency at a step the assembly does not use
    neuron, hcli = _synthetic_hcli()
    method = default_point_method("hcli")
    context = _entry_context(hcli)
    residual = _packed_residual(neuron, hcli, (4,), method, hcli, (), context)
    _, jac = build_system(neuron, hcli, (4,), method, hcli, (), hcli, None,
                          None, context)
    vector = pack_point(hcli, (4,))
    rng = np.random.default_rng(11)
    for _ in range(3):
        direction = rng.standard_normal(vector.size)
        direction /= np.linalg.norm(direction)
        h = 3e-6
        fd = (residual(vector + h * direction)
              - residual(vector - h * direction)) / (2.0 * h)
        scale = 1.0 + np.max(np.abs(fd))
        assert np.max(np.abs(jac @ direction - fd)) < 1e-4 * scale


# ---------------------------------------------------------------------------
# collocation: polynomial reproduction and mesh validity
# ---------------------------------------------------------------------------


def check_polynomial_reproduction():
    rng = np.random.default_rng(3)
    for degree in (3, 4):
        coarse = np.sort(np.concatenate([[0.0, 1.0],
                                         rng.uniform(0.05, 0.95, 6)]))
        full = []
        for a, b in zip(coarse[:-1], coarse[1:]):
            full.append(np.linspace(a, b, degree + 1)[:-1])
        mesh = np.concatenate(full + [[1.0]])
        coeffs = rng.standard_normal((2, degree + 1))
        poly = np.polynomial.Polynomial
        polys = [poly(c) for c in coeffs]
        values = np.vstack([p(mesh) for p in polys])
        profile = PiecewiseProfile(values=values, degree=degree, mesh=mesh)
        s = rng.uniform(0.0, 1.0, 40)
        exact = np.vstack([p(s) for p in polys])
        exact_d = np.vstack([p.deriv()(s) for p in polys])
        got = interp_profile(profile, s, wrap=False)
        got_d = interp_profile(profile, s, derivative=True, wrap=False)
        assert np.max(np.abs(got - exact)) < 1e-10, "interpolation not exact"
        assert np.max(np.abs(got_d - exact_d)) < 1e-8, "derivative not exact"


def check_mesh_validity():
    mesh = np.linspace(0.0, 1.0, 12 * 4 + 1)
    sharp = np.vstack([np.tanh(25.0 * (mesh - 0.3)),
                       np.tanh(25.0 * (mesh - 0.7))])
    orbit = PeriodicOrbit(parameter=np.zeros(1), period=5.0,
                          profile=PiecewiseProfile(values=sharp, degree=4,
                                                   mesh=mesh))
    for degree, intervals in ((3, 20), (4, 16), (4, 12)):
        new = remesh(orbit, degree=degree, intervals=intervals, adaptive=True)
        new_mesh = new.profile.full_mesh()
        assert new_mesh.size == intervals * degree + 1
        assert new_mesh[0] == 0.0 and new_mesh[-1] == 1.0
        assert np.all(np.diff(new_mesh) > 0.0), "mesh not strictly increasing"
        reproduced = interp_profile(orbit.profile, new_mesh, wrap=True)
        assert np.max(np.abs(new.profile.values - reproduced)) < 1e-12, (
            "remesh is not a reinterpolation of the original profile")


# ---------------------------------------------------------------------------
# continuation: invariants on a synthetic quadratic fold
# ---------------------------------------------------------------------------


def _fold_problem():
    return assemble_problem(
        rhs=lambda xx, par: np.array([par[0] - xx[0, 0] ** 2 + 0.0 * xx[0, 1]]),
        delays=ConstantDelays(indices=(2,)),
        n=1,
    )


def _fold_seed_branch(problem, p0=1.0, p1=0.95, **control):
    a, _ = correct(problem, SteadyState(parameter=np.array([p0, 1.0]),
                                        x=np.array([np.sqrt(p0)])))
    b, _ = correct(problem, SteadyState(parameter=np.array([p1, 1.0]),
                                        x=np.array([np.sqrt(p1)])))
    branch = default_branch("stst", free=(1,))
    branch.parameter = replace(branch.parameter, **control)
    branch.points = [a, b]
    return branch


def check_continuation_fold_invariants():
    problem = _fold_problem()
    branch = _fold_seed_branch(problem, min_bound=((1, -0.5),),
                               max_bound=((1, 1.0),), max_step=((1, 0.2),))
    outcome = continue_branch(problem, branch, 40)
    points = outcome.branch.points
    assert outcome.success_count > 5
    # the branch rounds the fold: both signs of x are present
    assert min(p.x[0] for p in points) < -0.3 < 0.3 < max(p.x[0] for p in points)
    for point in points:
        assert -0.5 - 1e-12 <= point.parameter[0] <= 1.0 + 1e-12, (
            "bound violated")
    for prev, cur in zip(points[:-1], points[1:]):
        assert point_norm(point_axpy(-1.0, prev, cur)) > 0.0, (
            "consecutive points identical")
    assert any(e.kind == "boundary" for e in outcome.events)
    # accepted points are genuine solutions: recomputing changes nothing
    recomputed = recompute_branch(problem, outcome.branch)
    for old, new in zip(points, recomputed.points):
        assert point_norm(point_axpy(-1.0, old, new)) < 1e-8


def check_continuation_insertion_halving():
    problem = _fold_problem()
    branch = _fold_seed_branch(problem, 1.0, 0.5, min_bound=((1, -2.0),),
                               max_bound=((1, 2.0),))
    # a two-iteration Newton budget makes long secant steps fail while the
    # halved midpoint steps still converge, forcing the insert path
    branch.method.point = replace(branch.method.point,
                                  newton_max_iterations=2,
                                  minimal_accuracy=1e-8)
    outcome = continue_branch(problem, branch, 30)
    inserted = [e for e in outcome.events if e.kind == "insert"]
    assert inserted, "no insertion event was triggered"
    # earlier insert positions shift under later insertions; the last one
    # still has its original neighbors
    points = outcome.branch.points
    i = max(e.point_index for e in inserted)
    assert 1 <= i < len(points) - 1
    gap = point_norm(point_axpy(-1.0, points[i - 1], points[i]))
    prior = point_norm(point_axpy(-1.0, points[i - 1], points[i + 1]))
    assert gap <= 0.6 * prior + 1e-12, "insertion did not halve the gap"


def check_continuation_halt_before_reject():
    problem = _fold_problem()
    branch = _fold_seed_branch(problem, min_bound=((1, -2.0),),
                               max_bound=((1, 2.0),))
    branch.method.point = replace(branch.method.point,
                                  newton_max_iterations=1,
                                  minimal_accuracy=1e-14)
    branch.method.continuation = replace(branch.method.continuation,
                                         halt_before_reject=True)
    seeds = [p.parameter[0] for p in branch.points]
    outcome = continue_branch(problem, branch, 30)
    kept = [p.parameter[0] for p in outcome.branch.points[:2]]
    assert kept == seeds, "a previously accepted point was removed"
    assert not any(e.kind == "reject" for e in outcome.events)


def check_continuation_reverse_and_secant():
    problem = _fold_problem()
    branch = _fold_seed_branch(problem, max_step=((1, 0.2),))
    outcome = continue_branch(problem, branch, 5)
    twice = reverse_branch(reverse_branch(outcome.branch))
    assert twice.method is outcome.branch.method
    for old, new in zip(outcome.branch.points, twice.points):
        assert point_norm(point_axpy(-1.0, old, new)) == 0.0
    single = reverse_branch(outcome.branch)
    assert single.points[0] is outcome.branch.points[-1]

    degenerate = _fold_seed_branch(problem)
    degenerate.points = [degenerate.points[0], degenerate.points[0]]
    outcome = continue_branch(problem, degenerate, 5)
    assert outcome.halted == "degenerate secant"
    assert outcome.success_count == 0 and len(outcome.branch.points) == 2


# ---------------------------------------------------------------------------
# model / cli: serialization round-trips
# ---------------------------------------------------------------------------


def _sample_branch():
    rng = np.random.default_rng(17)
    branch = default_branch("psol", free=(4,),)
    branch.parameter = replace(branch.parameter, max_step=((4, 0.1),),
                               min_bound=((4, 0.0),), max_bound=((4, 5.0),))
    mesh = np.linspace(0.0, 1.0, 13)
    for _ in range(2):
        orbit = PeriodicOrbit(
            parameter=rng.standard_normal(7),
            period=float(rng.uniform(1.0, 10.0)),
            profile=PiecewiseProfile(values=rng.standard_normal((2, 13)),
                                     degree=3, mesh=mesh),
            stability=Multipliers(mu=rng.standard_normal(5)
                                  + 1j * rng.standard_normal(5)),
        )
        branch.points.append(orbit)
    return branch


def check_serialization_roundtrip():
    # point kinds round-trip exactly
    rng = np.random.default_rng(23)
    hopf = Hopf(parameter=rng.standard_normal(7),
                x=rng.standard_normal(2),
                v=rng.standard_normal(2) + 1j * rng.standard_normal(2),
                omega=0.78,
                stability=Roots(h=0.1,
                                l0=rng.standard_normal(3) * (1 + 1j),
                                l1=rng.standard_normal(2) * (1 - 0.5j),
                                n1=np.array([2, 2])))
    back = serialize.point_from_dict(serialize.point_to_dict(hopf))
    assert back.kind == "hopf" and back.omega == hopf.omega
    assert np.array_equal(back.parameter, hopf.parameter)
    assert np.array_equal(back.v, hopf.v)
    assert np.array_equal(back.stability.l0, hopf.stability.l0)

    branch = _sample_branch()
    text = serialize.branch_to_json(branch)
    restored = serialize.branch_from_json(text)
    assert serialize.branch_to_json(restored) == text, "round-trip not stable"
    assert restored.parameter.max_step == branch.parameter.max_step
    for old, new in zip(branch.points, restored.points):
        assert np.array_equal(old.profile.values, new.profile.values)
        assert np.array_equal(old.stability.mu, new.stability.mu)
        assert old.period == new.period
    # the payload is genuine JSON
    json.loads(text)


ALL_CHECKS = [
    check_system_fd_vs_analytic,
    check_corrector_jacobian_stst,
    check_corrector_jacobian_fold,
    check_corrector_jacobian_hopf,
    check_corrector_jacobian_psol,
    check_corrector_jacobian_hcli,
    check_polynomial_reproduction,
    check_mesh_validity,
    check_continuation_fold_invariants,
    check_continuation_insertion_halving,
    check_continuation_halt_before_reject,
    check_continuation_reverse_and_secant,
    check_serialization_roundtrip,
]


def run_all():
    failures = []
    for check in ALL_CHECKS:
        try:
            check()
        except Exception as exc:  # noqa: BLE001 - report, do not mask
            failures.append(f"{check.__name__}: {exc}")
    return failures
