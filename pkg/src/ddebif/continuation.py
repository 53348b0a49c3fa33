"""Secant-predictor continuation of branches.

``continue_branch`` extends a branch (seeded with at least two points) by
secant prediction and Newton correction orthogonal to the secant.  The
steplength grows by ``steplength_growth_factor`` after each success; after a
failure the method retries from the point halfway between the last two
accepted points (inserting a success *before* the previously last point), and
after a second consecutive failure it rejects the last accepted point, out of
fear of having switched branches (unless ``halt_before_reject`` is set).

Parameter bounds clamp the prediction onto the bound and correct with that
parameter fixed (a boundary-hit event, continuation stops).  For systems with
state-dependent delays every accepted point is screened for negative delays;
on a hit the point is rejected and the delay-zero boundary point is computed
instead (steady state: tau_d = 0; orbit: tau_d(t_z) = 0, tau_d'(t_z) = 0).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .collocation import detect_negative_delay, floquet_multipliers
from .corrector import correct
from .model import (
    Branch,
    Measure,
    Point,
    point_axpy,
    point_norm,
    point_normalize,
)
from .spectrum import stst_stability
from .system import Problem

__all__ = [
    "Event",
    "ContinuationOutcome",
    "continue_branch",
    "reverse_branch",
    "branch_stability",
    "recompute_branch",
    "default_measures",
]


@dataclass
class Event:
    kind: str
    message: str
    point_index: int = -1


@dataclass
class ContinuationOutcome:
    branch: Branch
    success_count: int = 0
    failure_count: int = 0
    reject_count: int = 0
    events: List[Event] = field(default_factory=list)
    halted: Optional[str] = None


def _scale(point: Point, factor: float) -> Point:
    return point_axpy(factor - 1.0, point, point)


def _bound_hit(
    parameter: np.ndarray,
    bounds: Sequence[Tuple[int, float]],
    upper: bool,
) -> Optional[Tuple[int, float]]:
    for q, value in bounds:
        p = parameter[q - 1]
        if (upper and p > value) or (not upper and p < value):
            return q, value
    return None


def continue_branch(
    problem: Problem,
    branch: Branch,
    max_tries: int,
) -> ContinuationOutcome:
    """Extend ``branch`` by at most ``max_tries`` correction attempts.

    Returns a new branch (the input is not modified) along with counts of
    successes, failures and rejections and the recorded events.
    """
    if len(branch.points) < 2:
        raise ValueError("continuation needs at least two starting points")
    free = list(branch.parameter.free)
    if not free:
        raise ValueError("continuation needs at least one free parameter")
    cm = branch.method.continuation
    pm = branch.method.point
    sm = branch.method.stability
    points: List[Point] = list(branch.points)
    outcome = ContinuationOutcome(branch=replace(branch, points=points))

    tries_left = max_tries
    steplength: Optional[float] = None
    sd = problem.sd_delays

    while tries_left > 0:
        last, prev = points[-1], points[-2]
        secant = point_axpy(-1.0, prev, last)
        norm = point_norm(secant)
        if norm == 0.0:
            outcome.halted = "degenerate secant"
            outcome.events.append(Event("halt", "secant has zero norm", len(points)))
            break
        unit = _scale(secant, 1.0 / norm)
        if steplength is None:
            steplength = norm
        # per-parameter steplength caps
        for q, cap in branch.parameter.max_step:
            rate = abs(unit.parameter[q - 1])
            if rate > 0 and steplength * rate > cap:
                steplength = cap / rate
        prediction = point_axpy(steplength, unit, last)

        hit = _bound_hit(prediction.parameter, branch.parameter.max_bound, True)
        if hit is None:
            hit = _bound_hit(prediction.parameter, branch.parameter.min_bound, False)
        if hit is not None:
            q, value = hit
            clamped = prediction.with_parameter(q, value)
            free_fixed = [p for p in free if p != q]
            corrected, report = correct(
                problem, clamped, free_fixed, pm, previous=last
            )
            tries_left -= 1
            if report.success:
                points.append(point_normalize(corrected))
                outcome.success_count += 1
                outcome.events.append(
                    Event(
                        "boundary",
                        f"parameter {q} hit bound {value:g}",
                        len(points) - 1,
                    )
                )
                outcome.halted = "parameter bound reached"
            else:
                outcome.failure_count += 1
                outcome.events.append(
                    Event(
                        "boundary-failure",
                        f"correction on bound of parameter {q} failed",
                        len(points),
                    )
                )
                outcome.halted = "correction on parameter bound failed"
            break

        step_conds = [unit] if cm.steplength_condition else []
        adapt_now = (
            pm.adapt_mesh_after_correct > 0
            and last.kind in ("psol", "hcli")
            and last.profile.mesh is not None
            and (outcome.success_count + 1) % pm.adapt_mesh_after_correct == 0
        )
        corrected, report = correct(
            problem,
            prediction,
            free,
            pm,
            step_conds=step_conds,
            previous=last,
            adapt=adapt_now,
        )
        tries_left -= 1
        if report.success:
            if sd:
                detection = detect_negative_delay(
                    problem, corrected, threshold=sm.delay_accuracy
                )
            else:
                detection = None
            if detection is not None:
                d_nr, tz = detection
                outcome.events.append(
                    Event(
                        "negative-delay",
                        f"delay number_{d_nr} becomes negative",
                        len(points),
                    )
                )
                boundary, brep = correct(
                    problem,
                    corrected,
                    free,
                    pm,
                    previous=last,
                    d_nr=d_nr,
                    tz=tz,
                )
                if brep.success:
                    points.append(point_normalize(boundary))
                    outcome.success_count += 1
                    outcome.events.append(
                        Event(
                            "delay-boundary",
                            f"boundary point with delay {d_nr} = 0 computed",
                            len(points) - 1,
                        )
                    )
                    outcome.halted = f"delay number_{d_nr} becomes negative"
                else:
                    outcome.failure_count += 1
                    outcome.events.append(
                        Event(
                            "delay-boundary-failure",
                            f"correction of delay-{d_nr} boundary point failed",
                            len(points),
                        )
                    )
                    outcome.halted = "delay boundary correction failed"
                break
            points.append(point_normalize(corrected))
            outcome.success_count += 1
            steplength *= cm.steplength_growth_factor
            continue

        # failure: retry halfway between the last two accepted points
        outcome.failure_count += 1
        if tries_left <= 0:
            break
        midpoint = point_axpy(0.5, secant, prev)
        corrected, report = correct(
            problem,
            midpoint,
            free,
            pm,
            step_conds=step_conds,
            previous=prev,
        )
        tries_left -= 1
        if report.success:
            points.insert(len(points) - 1, point_normalize(corrected))
            outcome.success_count += 1
            outcome.events.append(
                Event(
                    "insert",
                    "inserted midpoint after failed prediction",
                    len(points) - 2,
                )
            )
            steplength = None
            continue
        outcome.failure_count += 1
        if cm.halt_before_reject:
            outcome.halted = "halted before rejecting last point"
            outcome.events.append(
                Event("halt", "second failure; halt_before_reject set", len(points))
            )
            break
        points.pop()
        outcome.reject_count += 1
        outcome.events.append(
            Event("reject", "rejected last point (fear of branch switch)", len(points))
        )
        steplength = None
        if len(points) < 2:
            outcome.halted = "too few points left after rejection"
            break
    return outcome


def reverse_branch(branch: Branch) -> Branch:
    """Reverse the point order (to continue in the other direction)."""
    return replace(branch, points=list(reversed(branch.points)))


def branch_stability(
    problem: Problem,
    branch: Branch,
    skip: int = 0,
    recompute: bool = False,
) -> Branch:
    """Fill stability information for every ``skip + 1``-th point."""
    points = list(branch.points)
    for i in range(0, len(points), skip + 1):
        point = points[i]
        if point.stability is not None and not recompute:
            continue
        if point.kind == "psol":
            stability = floquet_multipliers(problem, point, branch.method.stability)
        elif point.kind in ("stst", "fold", "hopf"):
            stability = stst_stability(problem, point, branch.method.stability)
        else:
            continue
        points[i] = point.replace(stability=stability)
    return replace(branch, points=points)


def recompute_branch(problem: Problem, branch: Branch) -> Branch:
    """Re-correct all branch points with the branch's current method.

    Interior points are corrected orthogonally to the secant of their
    neighbors; the endpoints are corrected with the free parameters fixed.
    """
    points = list(branch.points)
    free = list(branch.parameter.free)
    pm = branch.method.point
    for i, point in enumerate(points):
        if 0 < i < len(points) - 1:
            secant = point_axpy(-1.0, points[i - 1], points[i + 1])
            norm = point_norm(secant)
            conds = [_scale(secant, 1.0 / norm)] if norm > 0 else []
            corrected, report = correct(
                problem, point, free, pm, step_conds=conds, previous=point
            )
        else:
            corrected, report = correct(problem, point, [], pm, previous=point)
        if report.success:
            points[i] = corrected
    return replace(branch, points=points)


def _varying_component(branch: Branch) -> int:
    """1-based index of the state/profile component varying most on the branch."""
    arrays = []
    for point in branch.points:
        if point.kind in ("stst", "fold", "hopf"):
            arrays.append(point.x)
        else:
            arrays.append(point.profile.values.mean(axis=1))
    if not arrays:
        return 1
    stacked = np.vstack(arrays)
    spread = stacked.max(axis=0) - stacked.min(axis=0)
    return int(np.argmax(spread)) + 1


def default_measures(branch: Branch, stability: bool = False) -> Tuple[Measure, Measure]:
    """Default (x, y) measures for plotting/reporting a branch.

    ``x`` is the first free parameter.  Without the stability flag ``y`` is
    the most-varying state component (steady states), the second free
    parameter (fold/Hopf, if any), or the amplitude of the most-varying
    profile component (orbits); with the flag ``y`` is the real part of the
    characteristic roots or the modulus of the Floquet multipliers.
    """
    free = branch.parameter.free
    x_measure = Measure(field="parameter", row=1, col=free[0] if free else 1)
    kind = branch.points[0].kind if branch.points else "stst"
    if stability:
        if kind == "psol":
            y_measure = Measure(field="stability", subfield="mu", row="all", col=1, func="abs")
        else:
            y_measure = Measure(field="stability", subfield="l1", row="all", col=1, func="real")
        return x_measure, y_measure
    if kind == "stst":
        y_measure = Measure(field="x", row=_varying_component(branch), col=1)
    elif kind in ("fold", "hopf"):
        if len(free) > 1:
            y_measure = Measure(field="parameter", row=1, col=free[1])
        else:
            y_measure = Measure(field="x", row=_varying_component(branch), col=1)
    elif kind == "psol":
        y_measure = Measure(field="profile", row=_varying_component(branch), col="ampl")
    else:
        y_measure = Measure(field="period", row=1, col=1)
    return x_measure, y_measure
