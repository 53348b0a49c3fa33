"""Acceptance suite: ten end-to-end checks, one test per criterion.

Heavy pipelines (steady-state/periodic-orbit branches) are shared through
module-scoped fixtures so each criterion stays close to interactive runtimes.
"""

import numpy as np
import pytest
from dataclasses import replace

from ddebif import convert
from ddebif.collocation import (
    delay_derivative_on_orbit,
    delay_on_orbit,
    floquet_multipliers,
    remesh,
)
from ddebif.continuation import continue_branch
from ddebif.corrector import correct
from ddebif.model import (
    PeriodicOrbit,
    PiecewiseProfile,
    SteadyState,
    default_branch,
    default_point_method,
    default_stability_method,
    point_normalize,
)
from ddebif.spectrum import stst_stability
from ddebif.system import ConstantDelays, assemble_problem
from ddebif.systems import builtin_problem


# ---------------------------------------------------------------------------
# shared fixtures
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def neuron():
    return builtin_problem("neuron")


@pytest.fixture(scope="module")
def sd():
    return builtin_problem("sd_demo")


@pytest.fixture(scope="module")
def hom():
    return builtin_problem("hom_neural")


@pytest.fixture(scope="module")
def neuron_hopf1(neuron):
    """First neuron Hopf point from a steady-state continuation run."""
    par = np.array([0.5, -1.0, 1.0, 2.34, 0.2, 0.2, 1.5])
    p0, rep = correct(neuron, SteadyState(parameter=par, x=np.zeros(2)))
    assert rep.success
    p1, rep = correct(neuron, p0.with_parameter(4, 2.24))
    assert rep.success
    branch = default_branch("stst", free=(4,))
    branch.parameter = replace(branch.parameter,
                               min_bound=((4, 0.0),), max_bound=((4, 5.0),))
    branch.points = [p0, p1]
    outcome = continue_branch(neuron, branch, 100)
    assert outcome.success_count >= 8
    # branch point just past the instability threshold near a21 = 0.95
    start = min(outcome.branch.points, key=lambda p: abs(p.parameter[3] - 0.95))
    hopf, rep = correct(neuron, convert.to_hopf(neuron, start), free=(4,))
    assert rep.success
    return point_normalize(hopf)


@pytest.fixture(scope="module")
def neuron_branch4(neuron, neuron_hopf1):
    """Periodic-orbit branch from the first Hopf point up the period ramp."""
    seed, conds = convert.to_psol(neuron, neuron_hopf1, amplitude=1e-2,
                                  degree=3, intervals=18)
    psol, rep = correct(neuron, seed, free=(4,), step_conds=conds)
    assert rep.success
    degenerate, _ = convert.to_psol(neuron, neuron_hopf1, amplitude=0.0,
                                    degree=3, intervals=18)
    branch = default_branch("psol", free=(4,))
    branch.parameter = replace(branch.parameter, min_bound=((4, 0.0),),
                               max_bound=((4, 5.0),), max_step=((4, 0.1),))
    branch.points = [degenerate, psol]
    outcome = continue_branch(neuron, branch, 50)
    assert outcome.success_count >= 40
    return outcome.branch


@pytest.fixture(scope="module")
def sd_start_branch(sd):
    """Steady-state branch of the state-dependent demo in p5."""
    par = np.array([4.5, 0.04, -1.4, 6.0, -0.45, -0.01, 3.0, 0.3, 0.1, 1.0, 0.2])
    guess = np.array([1.4, 1.5, -25.0, 0.6, 1.4])
    p0, rep = correct(sd, SteadyState(parameter=par, x=guess))
    assert rep.success
    p1, rep = correct(sd, p0.with_parameter(5, -0.46))
    assert rep.success
    branch = default_branch("stst", free=(5,))
    branch.parameter = replace(branch.parameter,
                               min_bound=((5, -1.0),), max_bound=((5, 1.0),),
                               max_step=((5, 0.1),))
    branch.points = [p0, p1]
    outcome = continue_branch(sd, branch, 20)
    return p0, outcome


@pytest.fixture(scope="module")
def sd_hopf(sd, sd_start_branch):
    _, outcome = sd_start_branch
    method = replace(default_stability_method("stst"), minimal_real_part=-1.0)
    point = outcome.branch.points[4]
    point = point.replace(stability=stst_stability(sd, point, method))
    hopf, rep = correct(sd, convert.to_hopf(sd, point), free=(5,))
    assert rep.success
    return point_normalize(hopf)


# ---------------------------------------------------------------------------
# 1. Hayes equation: rightmost roots of x'(t) = -(pi/2) x(t-1)
# ---------------------------------------------------------------------------


def _hayes_oracle(start: complex, max_iterations: int = 60) -> complex:
    """Scalar Newton iteration on g(z) = z + (pi/2) exp(-z)."""
    z = complex(start)
    for _ in range(max_iterations):
        g = z + (np.pi / 2) * np.exp(-z)
        dg = 1.0 - (np.pi / 2) * np.exp(-z)
        step = g / dg
        z = z - step
        if abs(step) < 1e-14:
            break
    return z


def test_acceptance_01_hayes_spectrum():
    problem = assemble_problem(
        rhs=lambda xx, par: np.array([-(np.pi / 2) * xx[0, 1]]),
        delays=ConstantDelays(indices=(1,)),
        n=1,
    )
    point = SteadyState(parameter=np.array([1.0]), x=np.zeros(1))
    method = replace(default_stability_method("stst"), minimal_real_part=-0.5)
    stability = stst_stability(problem, point, method)
    lead0 = stability.l0[np.argsort(-stability.l0.real)][:2]
    lead1 = stability.l1[np.argsort(-stability.l1.real)][:2]
    targets = np.array([1j * np.pi / 2, -1j * np.pi / 2])
    for target in targets:
        assert np.min(np.abs(lead0 - target)) < 1e-2, "approximation off"
        assert np.min(np.abs(lead1 - target)) < 1e-6, "corrected root off"
        oracle = _hayes_oracle(lead0[np.argmin(np.abs(lead0 - target))])
        assert np.min(np.abs(lead1 - oracle)) < 1e-6, "oracle mismatch"
    print("PASS acceptance 1: Hayes rightmost roots +-i*pi/2 within 1e-6")


# ---------------------------------------------------------------------------
# 2. ODE reduction: zero delay matrices reproduce dense eigenvalues
# ---------------------------------------------------------------------------


def test_acceptance_02_ode_reduction():
    rng = np.random.default_rng(20260826)
    for trial in range(10):
        a0 = rng.standard_normal((5, 5)) / np.sqrt(5.0)
        problem = assemble_problem(
            rhs=lambda xx, par, a0=a0: a0 @ xx[:, 0] + 0.0 * xx[:, 1],
            delays=ConstantDelays(indices=(1,)),
            n=5,
        )
        dense = np.linalg.eigvals(a0)
        method = replace(default_stability_method("stst"),
                         minimal_real_part=float(np.min(dense.real)) - 1.0)
        point = SteadyState(parameter=np.array([1.0]), x=np.zeros(5))
        stability = stst_stability(problem, point, method)
        for target in dense:
            assert np.min(np.abs(stability.l1 - target)) < 1e-8, (
                f"trial {trial}: eigenvalue {target} missing")
    print("PASS acceptance 2: l1 matches dense eigenvalues on 10 random systems")


# ---------------------------------------------------------------------------
# 3. first neuron Hopf point
# ---------------------------------------------------------------------------


def test_acceptance_03_neuron_hopf(neuron_hopf1):
    a21 = neuron_hopf1.parameter[3]
    omega = neuron_hopf1.omega
    assert abs(a21 - 0.807123) < 1e-4, f"a21 = {a21}"
    assert abs(omega - 0.781965) < 1e-4, f"omega = {omega}"
    print(f"PASS acceptance 3: Hopf at a21={a21:.6f}, omega={omega:.6f}")


# ---------------------------------------------------------------------------
# 4. second Hopf via excludefreqs / free-parameter switch
# ---------------------------------------------------------------------------


def test_acceptance_04_second_hopf(neuron, neuron_hopf1):
    method = replace(default_stability_method("stst"), minimal_real_part=-1.0)

    # seed the tau_s-shifted Hopf curve (tau_s -> tau_s + 2*pi/omega)
    upper = neuron_hopf1.with_parameter(
        7, neuron_hopf1.parameter[6] + 2 * np.pi / neuron_hopf1.omega)
    upper, rep = correct(neuron, upper, free=(4,))
    assert rep.success
    upper = point_normalize(upper)
    second, rep = correct(neuron, upper.with_parameter(7, upper.parameter[6] - 0.1),
                          free=(4,))
    assert rep.success
    branch = default_branch("hopf", free=(4, 7))
    branch.parameter = replace(branch.parameter,
                               min_bound=((4, 0.0), (7, 0.0)),
                               max_bound=((4, 4.0), (7, 10.0)),
                               max_step=((4, 0.05), (7, 0.5)))
    branch.points = [upper, point_normalize(second)]
    outcome = continue_branch(neuron, branch, 60)
    assert outcome.success_count > 10

    def second_pair_re(point):
        stability = stst_stability(neuron, point, method)
        roots = stability.l1[stability.l1.imag > 0]
        return roots[np.argmin(np.abs(roots.imag - 0.33))].real

    # locate the sign change of the second root pair along the curve
    points = outcome.branch.points
    values = [second_pair_re(p) for p in points]
    index = next(i for i in range(len(values) - 1)
                 if np.sign(values[i]) != np.sign(values[i + 1]))
    hi, lo = points[index], points[index + 1]
    a_hi, a_lo = hi.parameter[3], lo.parameter[3]
    f_hi = values[index]
    current = hi
    for _ in range(50):
        mid = 0.5 * (a_lo + a_hi)
        refined, rep = correct(neuron, current.with_parameter(4, mid), free=(7,))
        assert rep.success
        refined = point_normalize(refined)
        if np.sign(second_pair_re(refined)) == np.sign(f_hi):
            a_hi = mid
        else:
            a_lo = mid
        current = refined
        if abs(a_hi - a_lo) < 1e-8:
            break

    # switch to the second root-pair family at the double-Hopf point
    current = current.replace(stability=stst_stability(neuron, current, method))
    candidate, rep = correct(neuron, convert.to_hopf(neuron, current), free=(7,))
    assert rep.success
    candidate = point_normalize(candidate)
    candidate = candidate.replace(stability=stst_stability(neuron, candidate, method))
    hopf2_seed = convert.to_hopf(neuron, candidate)
    hopf2, rep = correct(neuron, hopf2_seed, free=(7,))
    assert rep.success
    tau_s, omega = hopf2.parameter[6], hopf2.omega
    assert abs(tau_s - 8.634) < 5e-3, f"tau_s = {tau_s}"
    assert abs(omega - 0.9158) < 1e-3, f"omega = {omega}"
    print(f"PASS acceptance 4: second Hopf at tau_s={tau_s:.4f}, omega={omega:.4f}")


# ---------------------------------------------------------------------------
# 5. periodic branch start
# ---------------------------------------------------------------------------


def test_acceptance_05_psol_start(neuron, neuron_hopf1):
    seed, conds = convert.to_psol(neuron, neuron_hopf1, amplitude=1e-2,
                                  degree=3, intervals=18)
    psol, rep = correct(neuron, seed, free=(4,), step_conds=conds)
    assert rep.success
    assert abs(psol.period - 8.035) < 2e-2, f"period = {psol.period}"
    print(f"PASS acceptance 5: corrected periodic orbit, period={psol.period:.4f}")


# ---------------------------------------------------------------------------
# 6. trivial Floquet multiplier / sd multipliers
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def sd_pinned_psol_branch(sd, sd_hopf):
    """Hopf curve in (p2, p9), endpoint pinned by the implied period, then the
    periodic branch in p1 up to the tau_6 = 0 boundary."""
    second, rep = correct(sd, sd_hopf.with_parameter(9, sd_hopf.parameter[8] + 0.1),
                          free=(2,))
    assert rep.success
    branch = default_branch("hopf", free=(2, 9))
    branch.parameter = replace(branch.parameter,
                               min_bound=((2, -1.0), (9, -1.0)),
                               max_bound=((2, 10.0), (9, 10.0)),
                               max_step=((2, 1.0), (9, 1.0)))
    branch.points = [point_normalize(sd_hopf), point_normalize(second)]
    outcome = continue_branch(sd, branch, 20)
    points = outcome.branch.points
    assert len(points) >= 18

    # pin the endpoint to the documented period 12.661 by bisection in p2
    target = 2 * np.pi / 12.661031484468
    values = [p.omega - target for p in points]
    index = next(i for i in range(len(values) - 1)
                 if np.sign(values[i]) != np.sign(values[i + 1]))
    a, b = points[index].parameter[1], points[index + 1].parameter[1]
    f_a = values[index]
    current = points[index]
    for _ in range(40):
        mid = 0.5 * (a + b)
        refined, rep = correct(sd, current.with_parameter(2, mid), free=(9,))
        assert rep.success
        refined = point_normalize(refined)
        if np.sign(refined.omega - target) == np.sign(f_a):
            a = mid
        else:
            b = mid
        current = refined
        if abs(b - a) < 1e-10:
            break

    seed, conds = convert.to_psol(sd, current, amplitude=0.1, degree=3,
                                  intervals=15)
    psol, rep = correct(sd, seed, free=(1,), step_conds=conds)
    assert rep.success
    degenerate, _ = convert.to_psol(sd, current, amplitude=0.0, degree=3,
                                    intervals=15)
    branch = default_branch("psol", free=(1,))
    branch.parameter = replace(branch.parameter, min_bound=((1, 0.0),),
                               max_bound=((1, 10.0),), max_step=((1, 0.01),))
    branch.points = [degenerate, psol]
    return continue_branch(sd, branch, 20)


def test_acceptance_06_trivial_floquet(neuron, sd, neuron_branch4,
                                       sd_pinned_psol_branch):
    # neuron: fine mesh away from the homoclinic regime
    point = next(p for p in neuron_branch4.points if p.period > 20.0)
    fine = remesh(point, degree=4, intervals=40, adaptive=True)
    fine, rep = correct(neuron, fine, free=(4,))
    assert rep.success
    multipliers = floquet_multipliers(neuron, fine,
                                      default_stability_method("psol"))
    trivial_error = float(np.min(np.abs(multipliers.mu - 1.0)))
    assert trivial_error <= 5e-3, f"min |mu - 1| = {trivial_error}"

    # sd endpoint orbit: leading multipliers
    outcome = sd_pinned_psol_branch
    last = outcome.branch.points[-1]
    multipliers = floquet_multipliers(sd, last, default_stability_method("psol"))
    leading = multipliers.mu[:3]
    targets = np.array([1.325, 1.000, 0.096])
    errors = np.abs(leading - targets)
    assert np.all(errors < 2e-2), f"leading multipliers {leading}"
    print(f"PASS acceptance 6: min|mu-1|={trivial_error:.2e}; "
          f"sd multipliers {np.round(leading.real, 4)}")


# ---------------------------------------------------------------------------
# 7. sd steady state and Hopf
# ---------------------------------------------------------------------------


def test_acceptance_07_sd_stst_hopf(sd_start_branch, sd_hopf):
    stst, _ = sd_start_branch
    assert abs(stst.x[0] - 1.413385) < 1e-5, f"x1 = {stst.x[0]}"
    p5, omega = sd_hopf.parameter[4], sd_hopf.omega
    assert abs(p5 - (-0.509659)) < 1e-4, f"p5 = {p5}"
    assert abs(omega - 0.549692) < 1e-4, f"omega = {omega}"
    print(f"PASS acceptance 7: sd stst x1={stst.x[0]:.6f}, Hopf p5={p5:.6f}, "
          f"omega={omega:.6f}")


# ---------------------------------------------------------------------------
# 8. negative-delay boundary
# ---------------------------------------------------------------------------


def test_acceptance_08_negative_delay(sd, sd_start_branch, sd_hopf):
    # steady-state branch halts on tau_3 = 0
    _, outcome = sd_start_branch
    assert outcome.halted is not None and "delay number_3" in outcome.halted
    assert any(e.kind == "negative-delay" for e in outcome.events)
    last = outcome.branch.points[-1]
    states = np.column_stack([last.x] * (sd.m + 1))
    tau3 = sd.delay_value(3, states, last.parameter)
    assert abs(tau3) <= 1e-10, f"tau_3 = {tau3}"

    # periodic branch in p10 halts with tau_3(tz) = 0 and d tau_3/dt(tz) = 0
    seed, conds = convert.to_psol(sd, sd_hopf, amplitude=0.1, degree=3,
                                  intervals=15)
    psol, rep = correct(sd, seed, free=(10,), step_conds=conds)
    assert rep.success
    degenerate, _ = convert.to_psol(sd, sd_hopf, amplitude=0.0, degree=3,
                                    intervals=15)
    branch = default_branch("psol", free=(10,))
    branch.parameter = replace(branch.parameter, min_bound=((10, 0.0),),
                               max_bound=((10, 10.0),), max_step=((10, 0.01),))
    branch.points = [degenerate, psol]
    outcome = continue_branch(sd, branch, 10)
    assert outcome.halted is not None and "delay number_3" in outcome.halted
    boundary = outcome.branch.points[-1]
    mesh = np.linspace(0.0, 1.0, 601)
    tau3 = delay_on_orbit(sd, boundary, 3, mesh)
    tz = mesh[int(np.argmin(tau3))]
    from scipy.optimize import minimize_scalar
    res = minimize_scalar(
        lambda s: float(delay_on_orbit(sd, boundary, 3, [s % 1.0])[0]),
        bounds=(max(tz - 0.05, 0.0), min(tz + 0.05, 1.0)),
        method="bounded", options={"xatol": 1e-13})
    tz = float(res.x)
    value = float(delay_on_orbit(sd, boundary, 3, [tz])[0])
    slope = float(delay_derivative_on_orbit(sd, boundary, 3, tz))
    assert abs(value) < 1e-8, f"tau_3(tz) = {value}"
    assert abs(slope) < 1e-8, f"dtau_3/dt(tz) = {slope}"
    print(f"PASS acceptance 8: branches halt on the delay boundary; "
          f"psol boundary tau_3(tz)={value:.1e}, slope={slope:.1e}")


# ---------------------------------------------------------------------------
# 9. homoclinic corrections
# ---------------------------------------------------------------------------


def test_acceptance_09_homoclinic(neuron, hom, neuron_branch4):
    # (a) neural-activity model: psol -> hcli -> correct
    par = np.array([2.6, 1.3428, 1.0, -1.34, -0.5, 1.0])
    stst, rep = correct(hom, SteadyState(parameter=par, x=np.array([0.35, 0.3])))
    assert rep.success
    stst = stst.replace(stability=stst_stability(hom, stst,
                                                 default_stability_method("stst")))
    hopf, rep = correct(hom, convert.to_hopf(hom, stst), free=(4,))
    assert rep.success
    hopf = point_normalize(hopf)
    points = []
    for amplitude in (1e-2, 2e-2):
        seed, conds = convert.to_psol(hom, hopf, amplitude=amplitude,
                                      degree=3, intervals=27)
        psol, rep = correct(hom, seed, free=(4,), step_conds=conds)
        assert rep.success
        points.append(psol)
    branch = default_branch("psol", free=(4,))
    branch.points = points
    outcome = continue_branch(hom, branch, 22)
    psol = outcome.branch.points[-1]
    assert psol.period > 150.0
    hcli, rep = correct(hom, convert.to_hcli(hom, psol), free=(4,),
                        method=default_point_method("hcli"))
    assert rep.success
    lambda_v = float(np.real(hcli.lambda_v[0]))
    assert abs(lambda_v - 0.1691) < 1e-3, f"lambda_v = {lambda_v}"

    # (b) neuron double homoclinic: slice one loop, relax the plateau to the
    # documented half period 389.6531/2, trim, and correct
    point = neuron_branch4.points[-1]
    orbit = remesh(point, degree=4, intervals=40, adaptive=True)
    profile = orbit.profile
    mesh = profile.full_mesh()
    distance = np.linalg.norm(profile.values, axis=0)
    interval_idx = np.arange(0, mesh.size, profile.degree)
    order = interval_idx[np.argsort(distance[interval_idx])]
    i0 = order[0]
    i1 = next(i for i in order[1:] if abs(mesh[i] - mesh[i0]) > 0.25)
    i0, i1 = min(i0, i1), max(i0, i1)
    width = orbit.period * (mesh[i1] - mesh[i0])
    loop_mesh = (mesh[i0:i1 + 1] - mesh[i0]) / (mesh[i1] - mesh[i0])
    loop_values = profile.values[:, i0:i1 + 1]

    saddle, _ = correct(neuron, SteadyState(parameter=orbit.parameter.copy(),
                                            x=np.zeros(2)))
    spectrum = stst_stability(neuron, saddle,
                              replace(default_stability_method("stst"),
                                      minimal_real_part=-2.0))
    rate_out = float(spectrum.l1[spectrum.l1.real > 0][0].real)
    stable = spectrum.l1[spectrum.l1.real < -1e-6]
    rate_in = -float(stable[np.argmax(stable.real)].real)

    half_period = 389.6531 / 2.0
    current_mesh, current_values, current_period = loop_mesh * width, loop_values, width
    parameter = orbit.parameter.copy()
    method = replace(default_point_method("psol"), newton_max_iterations=8)
    for target in (80.0, 120.0, 160.0, half_period):
        u0, u1 = current_values[:, 0], current_values[:, -1]
        extra = 4 * max(2, int(round((target - current_period) / 16.0)))
        plateau_t = np.linspace(current_period, target, extra + 1)[1:]
        plateau = (u1[:, None] * np.exp(-rate_in * (plateau_t - current_period))
                   + u0[:, None] * np.exp(rate_out * (plateau_t - target)))
        seed = PeriodicOrbit(
            parameter=parameter.copy(), period=target,
            profile=PiecewiseProfile(
                values=np.concatenate([current_values, plateau], axis=1),
                degree=4, mesh=np.concatenate([current_mesh, plateau_t]) / target))
        pin = PeriodicOrbit(
            parameter=np.zeros_like(parameter), period=1.0,
            profile=PiecewiseProfile(values=np.zeros_like(seed.profile.values),
                                     degree=4, mesh=seed.profile.mesh))
        orbit_long, rep = correct(neuron, seed, free=(4,), step_conds=[pin],
                                  method=method)
        assert rep.success, f"plateau relaxation failed at period {target}"
        current_mesh = orbit_long.profile.full_mesh() * orbit_long.period
        current_values = orbit_long.profile.values
        current_period = orbit_long.period
        parameter = orbit_long.parameter.copy()

    trimmed = convert.to_hcli(neuron, remesh(orbit_long, degree=4, intervals=16,
                                             adaptive=True))
    hcli1, rep = correct(neuron, trimmed, free=(4,),
                         method=default_point_method("hcli"))
    assert rep.success
    period = float(hcli1.period)
    assert abs(period - 111.68) < 0.5, f"homoclinic period = {period}"
    print(f"PASS acceptance 9: lambda_v={lambda_v:.4f}; "
          f"homoclinic period={period:.4f} at a21={hcli1.parameter[3]:.6f}")


# ---------------------------------------------------------------------------
# 10. property suites
# ---------------------------------------------------------------------------


def test_acceptance_10_property_suites():
    from property_checks import run_all

    failures = run_all()
    assert not failures, f"property suites failed: {failures}"
    print("PASS acceptance 10: all property suites green")
