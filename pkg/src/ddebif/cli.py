"""Command-line harness: built-in demo systems and declarative run plans.

Plans are JSON documents::

    {
      "system": "neuron",
      "stages": [
        {"name": "branch1", "kind": "stst_branch", "x": [0, 0],
         "free": [4], "seeds": [2.34, 2.44], "steps": 100,
         "bounds": {"min": [[4, 0]], "max": [[4, 5]]}},
        {"name": "hopf1", "kind": "to_hopf", "source": "branch1",
         "point": "last", "free": [4]},
        ...
      ]
    }

Each stage writes its artifacts (branch JSON, measures CSV, plot CSV) into
the output directory; a run-wide ``events.jsonl`` collects machine-readable
event records and ``manifest.json`` summarizes the run.  Exit codes: 0 on
success, 1 on numerical failure, 2 on validation errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from . import continuation as cont
from . import convert
from .corrector import correct
from .model import (
    Branch,
    Measure,
    Point,
    default_branch,
    default_point_method,
    eval_measure,
)
from .serialize import branch_to_dict, point_to_dict
from .system import Problem
from .systems import BUILTIN_SYSTEMS, builtin_info, builtin_problem

__all__ = ["main", "run_plan", "PlanError", "StageFailure", "emit_branch",
           "emit_measures"]


class PlanError(Exception):
    """Plan validation failure (exit code 2)."""


class StageFailure(Exception):
    """Numerical failure while executing a stage (exit code 1)."""


# ---------------------------------------------------------------------------
# emission helpers
# ---------------------------------------------------------------------------


def emit_branch(branch: Branch, path: Path, parameter_names=None) -> None:
    path.write_text(json.dumps(branch_to_dict(branch, parameter_names), indent=2)
                    + "\n", encoding="utf-8")


def emit_measures(branch: Branch, measures: Tuple[Measure, Measure],
                  path: Path) -> None:
    mx, my = measures
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow([_measure_label(mx), _measure_label(my)])
        for point in branch.points:
            writer.writerow([_measure_cell(point, mx), _measure_cell(point, my)])


def _measure_label(measure: Measure) -> str:
    parts = [measure.field]
    if measure.subfield:
        parts.append(measure.subfield)
    parts.append(f"{measure.row},{measure.col}")
    if measure.func:
        parts.append(str(measure.func))
    return ":".join(parts)


def _measure_cell(point: Point, measure: Measure) -> str:
    try:
        value = eval_measure(measure, point)
    except ValueError:
        return ""
    value = np.asarray(value)
    if value.size == 1:
        return repr(complex(value.ravel()[0]).real
                    if np.isrealobj(value) else complex(value.ravel()[0]))
    return ";".join(repr(v) for v in np.atleast_1d(value).ravel().tolist())


class EventLog:
    def __init__(self, path: Path, verbose: int = 0) -> None:
        self.path = path
        self.verbose = verbose
        self.path.write_text("", encoding="utf-8")

    def record(self, kind: str, message: str, **payload: Any) -> None:
        entry = {"kind": kind, "message": message, "payload": payload}
        with open(self.path, "a", encoding="utf-8") as handle:
            handle.write(json.dumps(entry) + "\n")
        if self.verbose:
            print(f"[{kind}] {message}", file=sys.stderr)


# ---------------------------------------------------------------------------
# plan execution
# ---------------------------------------------------------------------------


def _require(stage: Dict[str, Any], key: str) -> Any:
    try:
        return stage[key]
    except KeyError:
        raise PlanError(f"stage {stage.get('name', '?')!r} misses field {key!r}")


def _apply_bounds(branch: Branch, stage: Dict[str, Any]) -> None:
    bounds = stage.get("bounds", {})
    pairs = lambda key: tuple((int(i), float(v)) for i, v in bounds.get(key, []))
    branch.parameter = branch.parameter.__class__(
        free=branch.parameter.free,
        min_bound=pairs("min") or branch.parameter.min_bound,
        max_bound=pairs("max") or branch.parameter.max_bound,
        max_step=pairs("max_step"),
    )


def _apply_method_overrides(branch: Branch, stage: Dict[str, Any]) -> None:
    for section, overrides in stage.get("method", {}).items():
        target = getattr(branch.method, section, None)
        if target is None:
            raise PlanError(f"unknown method section {section!r}")
        for key, value in overrides.items():
            if not hasattr(target, key):
                raise PlanError(f"unknown method field {section}.{key}")
            setattr(target, key, value)


def _source_branch(stage: Dict[str, Any], results: Dict[str, Any]) -> Branch:
    name = _require(stage, "source")
    if name not in results:
        raise PlanError(f"stage {stage.get('name')!r} references unknown stage "
                        f"{name!r}")
    value = results[name]
    if not isinstance(value, Branch):
        raise PlanError(f"stage {name!r} did not produce a branch")
    return value


def _source_point(stage: Dict[str, Any], results: Dict[str, Any]) -> Point:
    name = _require(stage, "source")
    if name not in results:
        raise PlanError(f"stage {stage.get('name')!r} references unknown stage "
                        f"{name!r}")
    value = results[name]
    if isinstance(value, Branch):
        selector = stage.get("point", "last")
        if selector == "last":
            index = len(value.points) - 1
        else:
            index = int(selector) - 1
        if not (0 <= index < len(value.points)):
            raise PlanError(f"point #{selector} out of range in stage {name!r}")
        return value.points[index]
    return value


def _corrected(problem: Problem, point: Point, free, method=None, step_conds=()):
    corrected, report = correct(problem, point, free=tuple(free), method=method,
                                step_conds=step_conds)
    if not report.success:
        raise StageFailure(
            f"correction failed (residual {report.residual:.3e} after "
            f"{report.iterations} iterations)")
    return corrected


def _seed_branch(problem: Problem, kind: str, stage: Dict[str, Any],
                 first: Point, second: Point) -> Branch:
    free = tuple(int(i) for i in stage.get("free", ()))
    delays = problem.constant_delay_parameters()
    branch = default_branch(kind, free, delay_parameter_indices=delays)
    _apply_bounds(branch, stage)
    _apply_method_overrides(branch, stage)
    branch.points = [first, second]
    return branch


def _run_branch_stage(problem: Problem, branch: Branch, stage: Dict[str, Any],
                      log: EventLog, name: str) -> Branch:
    steps = int(stage.get("steps", 20))
    outcome = cont.continue_branch(problem, branch, steps)
    for event in outcome.events:
        log.record(event.kind, event.message, stage=name,
                   point_index=event.point_index)
    log.record("continuation", f"stage {name}: {outcome.success_count} successes, "
               f"{outcome.failure_count} failures, {outcome.reject_count} rejects",
               stage=name, halted=outcome.halted)
    return outcome.branch


def _execute_stage(problem: Problem, stage: Dict[str, Any],
                   results: Dict[str, Any], log: EventLog) -> Any:
    kind = _require(stage, "kind")
    name = _require(stage, "name")

    if kind == "stst_branch":
        from .model import SteadyState

        parameter = np.asarray(
            stage.get("parameters", builtin_info(problem.name).start_parameter),
            dtype=float)
        x = np.asarray(stage.get("x", builtin_info(problem.name).start_x),
                       dtype=float)
        free = tuple(int(i) for i in _require(stage, "free"))
        seeds = _require(stage, "seeds")
        if len(seeds) != 2:
            raise PlanError("stst_branch needs exactly two seed values")
        points = []
        for value in seeds:
            seed = SteadyState(parameter=parameter.copy(), x=x.copy())
            seed = seed.with_parameter(free[0], float(value))
            points.append(_corrected(problem, seed, ()))
        branch = _seed_branch(problem, "stst", stage, *points)
        return _run_branch_stage(problem, branch, stage, log, name)

    if kind == "stability":
        branch = _source_branch(stage, results)
        return cont.branch_stability(problem, branch,
                                     skip=int(stage.get("skip", 0)),
                                     recompute=bool(stage.get("recompute", False)))

    if kind == "to_hopf":
        point = _source_point(stage, results)
        excludefreqs = tuple(float(f) for f in stage.get("excludefreqs", ()))
        hopf = convert.to_hopf(problem, point, excludefreqs=excludefreqs)
        return _corrected(problem, hopf, stage.get("free", ()))

    if kind in ("hopf_branch", "hcli_branch"):
        point_kind = kind.split("_")[0]
        first = _source_point(stage, results)
        index, value = _require(stage, "perturb")
        second = first.with_parameter(int(index), float(value))
        second = _corrected(problem, second, stage.get("free", ())[:1])
        branch = _seed_branch(problem, point_kind, stage, first, second)
        return _run_branch_stage(problem, branch, stage, log, name)

    if kind == "to_psol":
        point = _source_point(stage, results)
        seed, step_conds = convert.to_psol(
            problem, point,
            amplitude=float(stage.get("amplitude", 1e-2)),
            degree=int(stage.get("degree", 3)),
            intervals=int(stage.get("intervals", 20)))
        return _corrected(problem, seed, stage.get("free", ()),
                          step_conds=step_conds)

    if kind == "psol_branch":
        point = _source_point(stage, results)
        degree = int(stage.get("degree", 3))
        intervals = int(stage.get("intervals", 20))
        amplitudes = stage.get("amplitudes", [1e-2, 1e-1])
        if len(amplitudes) != 2:
            raise PlanError("psol_branch needs exactly two amplitudes")
        points = []
        for amplitude in amplitudes:
            seed, step_conds = convert.to_psol(problem, point,
                                               amplitude=float(amplitude),
                                               degree=degree,
                                               intervals=intervals)
            points.append(_corrected(problem, seed, stage.get("free", ()),
                                     step_conds=step_conds))
        branch = _seed_branch(problem, "psol", stage, *points)
        return _run_branch_stage(problem, branch, stage, log, name)

    if kind == "to_hcli":
        point = _source_point(stage, results)
        hcli = convert.to_hcli(problem, point)
        method = default_point_method("hcli")
        return _corrected(problem, hcli, stage.get("free", ()), method=method)

    raise PlanError(f"unknown stage kind {kind!r}")


def run_plan(plan: Dict[str, Any], out_dir: Path, verbose: int = 0) -> int:
    if not isinstance(plan, dict):
        raise PlanError("plan must be a JSON object")
    system = plan.get("system")
    stages = plan.get("stages", [])
    if system is not None and system not in BUILTIN_SYSTEMS:
        raise PlanError(f"unknown system {system!r}; available: "
                        f"{sorted(BUILTIN_SYSTEMS)}")
    if stages and system is None:
        raise PlanError("plan with stages needs a 'system' field")
    out_dir.mkdir(parents=True, exist_ok=True)
    log = EventLog(out_dir / "events.jsonl", verbose=verbose)
    manifest: Dict[str, Any] = {"system": system, "stages": [], "status": "ok"}
    results: Dict[str, Any] = {}
    problem = builtin_problem(system) if stages else None
    names = builtin_info(system).parameter_names if stages else ()

    seen = set()
    for stage in stages:
        name = stage.get("name")
        if not name or name in seen:
            raise PlanError(f"stages need unique 'name' fields (got {name!r})")
        seen.add(name)

    status = 0
    for stage in stages:
        name = stage["name"]
        try:
            result = _execute_stage(problem, stage, results, log)
        except StageFailure as exc:
            log.record("error", f"stage {name}: {exc}", stage=name)
            manifest["stages"].append({"name": name, "status": "failed",
                                       "error": str(exc)})
            manifest["status"] = "failed"
            status = 1
            break
        results[name] = result
        files = []
        if isinstance(result, Branch):
            branch_path = out_dir / f"{name}.branch.json"
            emit_branch(result, branch_path, names)
            files.append(branch_path.name)
            stability = any(p.stability is not None for p in result.points)
            measures = cont.default_measures(result, stability=stability)
            csv_path = out_dir / f"{name}.measures.csv"
            emit_measures(result, measures, csv_path)
            files.append(csv_path.name)
        else:
            point_path = out_dir / f"{name}.point.json"
            point_path.write_text(json.dumps(point_to_dict(result), indent=2)
                                  + "\n", encoding="utf-8")
            files.append(point_path.name)
        manifest["stages"].append({"name": name, "status": "ok", "files": files})
        log.record("stage", f"stage {name} complete", stage=name)

    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n",
                                           encoding="utf-8")
    return status


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def _describe(name: str) -> str:
    info = builtin_info(name)
    lines = [f"{info.name}: {info.description}",
             f"  states: {info.n}",
             f"  parameters ({len(info.parameter_names)}):"]
    for index, (pname, value) in enumerate(
            zip(info.parameter_names, info.start_parameter), start=1):
        lines.append(f"    {index:2d}  {pname:8s} = {value}")
    lines.append(f"  start state: {list(info.start_x)}")
    return "\n".join(lines)


def main(argv: Optional[List[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="ddebif",
        description="Bifurcation analysis of delay differential equations.")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--verbose", type=int, default=0,
                        help="event verbosity (0 silent, >0 progress)")
    parser.add_argument("--seed-tolerance", type=float, default=None,
                        help="override the minimal correction accuracy")
    sub = parser.add_subparsers(dest="command", required=True)
    run_parser = sub.add_parser("run", help="execute a JSON run plan")
    run_parser.add_argument("plan", help="path to the plan file")
    sub.add_parser("list-systems", help="list built-in demo systems")
    describe_parser = sub.add_parser("describe", help="describe a demo system")
    describe_parser.add_argument("system")

    args = parser.parse_args(argv)

    if args.command == "list-systems":
        for name in sorted(BUILTIN_SYSTEMS):
            print(f"{name:12s} {builtin_info(name).description}")
        return 0

    if args.command == "describe":
        try:
            print(_describe(args.system))
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        return 0

    plan_path = Path(args.plan)
    try:
        plan = json.loads(plan_path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        print(f"error: plan file {plan_path} not found", file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(f"error: plan file is not valid JSON: {exc}", file=sys.stderr)
        return 2

    if args.seed_tolerance is not None:
        for stage in plan.get("stages", []):
            overrides = stage.setdefault("method", {}).setdefault("point", {})
            overrides.setdefault("minimal_accuracy", args.seed_tolerance)

    try:
        return run_plan(plan, Path(args.out), verbose=args.verbose)
    except PlanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
