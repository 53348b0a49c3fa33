"""Data model: points, profiles, stability records, methods, branches, measures.

All point records are value-semantic: operations never mutate their inputs,
they return fresh records.  Parameter indices appearing in public structures
(free parameter lists, bounds, measure columns, delay parameter indices) are
1-based; state component indices used as matrix rows are 1-based as well.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

__all__ = [
    "PiecewiseProfile",
    "Roots",
    "Multipliers",
    "Stability",
    "SteadyState",
    "Fold",
    "Hopf",
    "PeriodicOrbit",
    "ConnectingOrbit",
    "Point",
    "PointMethod",
    "StabilityMethod",
    "ContinuationMethod",
    "BranchMethod",
    "ParameterControl",
    "Branch",
    "Measure",
    "default_point_method",
    "default_stability_method",
    "default_continuation_method",
    "default_branch_method",
    "default_branch",
    "point_axpy",
    "point_norm",
    "point_normalize",
    "eval_measure",
    "branch_measure",
]

_MESH_TOL = 1e-12


# ---------------------------------------------------------------------------
# profiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PiecewiseProfile:
    """Piecewise-polynomial profile on [0, 1].

    ``mesh`` is the full mesh of length ``L*degree + 1`` containing the
    interval points ``mesh[0::degree]`` and, between consecutive interval
    points, ``degree - 1`` equidistant representation points.  ``mesh=None``
    denotes the equidistant mesh.  ``values`` has one column per mesh point
    (shape ``n x (L*degree + 1)``).
    """

    values: np.ndarray
    degree: int
    mesh: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        values = np.atleast_2d(np.asarray(self.values, dtype=float))
        object.__setattr__(self, "values", values)
        if self.mesh is not None:
            mesh = np.asarray(self.mesh, dtype=float)
            object.__setattr__(self, "mesh", mesh)
            _validate_mesh(mesh, self.degree)
            if values.shape[1] != mesh.size:
                raise ValueError(
                    f"profile has {values.shape[1]} columns but mesh has "
                    f"{mesh.size} points"
                )
        else:
            if (values.shape[1] - 1) % self.degree != 0:
                raise ValueError("column count incompatible with degree")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def intervals(self) -> int:
        return (self.values.shape[1] - 1) // self.degree

    def full_mesh(self) -> np.ndarray:
        """The mesh, materialized to equidistant points when stored empty."""
        if self.mesh is not None:
            return self.mesh
        return np.linspace(0.0, 1.0, self.values.shape[1])

    def interval_points(self) -> np.ndarray:
        return self.full_mesh()[0 :: self.degree]


def _validate_mesh(mesh: np.ndarray, degree: int) -> None:
    if mesh.ndim != 1 or mesh.size < degree + 1:
        raise ValueError("mesh must be a 1-d array with at least one interval")
    if (mesh.size - 1) % degree != 0:
        raise ValueError("mesh length must be L*degree + 1")
    if abs(mesh[0]) > _MESH_TOL or abs(mesh[-1] - 1.0) > _MESH_TOL:
        raise ValueError("mesh must span [0, 1]")
    t = mesh[0::degree]
    if np.any(np.diff(t) <= 0):
        raise ValueError("interval points must be strictly increasing")
    for j in range(1, degree):
        expected = t[:-1] + (j / degree) * np.diff(t)
        actual = mesh[j::degree]
        scale = 1.0 + np.abs(expected)
        if np.any(np.abs(actual - expected) > _MESH_TOL * scale):
            raise ValueError(
                "representation points must be equidistant inside each interval"
            )


# ---------------------------------------------------------------------------
# stability payloads
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Roots:
    """Characteristic roots of a steady-state-like point.

    ``l0`` holds approximate roots (sorted by decreasing real part), ``l1``
    corrected roots and ``n1`` the Newton iteration counts (-1 marks a root
    that failed to converge; empty when unconverged roots were removed).
    """

    h: float
    l0: np.ndarray
    l1: np.ndarray
    n1: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "l0", np.asarray(self.l0, dtype=complex))
        object.__setattr__(self, "l1", np.asarray(self.l1, dtype=complex))
        object.__setattr__(self, "n1", np.asarray(self.n1, dtype=int))


@dataclass(frozen=True)
class Multipliers:
    """Floquet multipliers of a periodic orbit, sorted by decreasing modulus."""

    mu: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "mu", np.asarray(self.mu, dtype=complex))


Stability = Union[Roots, Multipliers]


# ---------------------------------------------------------------------------
# points
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _PointBase:
    parameter: np.ndarray
    stability: Optional[Stability] = None

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "parameter", np.asarray(self.parameter, dtype=float).ravel()
        )

    def replace(self, **kw) -> "Point":
        return replace(self, **kw)

    def with_parameter(self, index: int, value: float) -> "Point":
        """Return a copy with 1-based parameter ``index`` set to ``value``."""
        parameter = self.parameter.copy()
        parameter[index - 1] = value
        return replace(self, parameter=parameter)


@dataclass(frozen=True)
class SteadyState(_PointBase):
    x: np.ndarray = field(default_factory=lambda: np.zeros(0))
    kind = "stst"

    def __post_init__(self) -> None:
        super().__post_init__()
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float).ravel())


@dataclass(frozen=True)
class Fold(_PointBase):
    x: np.ndarray = field(default_factory=lambda: np.zeros(0))
    v: np.ndarray = field(default_factory=lambda: np.zeros(0))
    kind = "fold"

    def __post_init__(self) -> None:
        super().__post_init__()
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float).ravel())
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float).ravel())


@dataclass(frozen=True)
class Hopf(_PointBase):
    x: np.ndarray = field(default_factory=lambda: np.zeros(0))
    v: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))
    omega: float = 0.0
    kind = "hopf"

    def __post_init__(self) -> None:
        super().__post_init__()
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float).ravel())
        object.__setattr__(self, "v", np.asarray(self.v, dtype=complex).ravel())


@dataclass(frozen=True)
class PeriodicOrbit(_PointBase):
    profile: PiecewiseProfile = None  # type: ignore[assignment]
    period: float = 0.0
    kind = "psol"


@dataclass(frozen=True)
class ConnectingOrbit(_PointBase):
    """Connecting (homoclinic/heteroclinic) orbit.

    ``x1``/``x2`` are the equilibria at the tail/head, ``lambda_v``/``v`` the
    unstable eigenvalues/eigenvectors of ``x1``, ``lambda_w``/``w`` the
    unstable eigenvalues/left eigenvectors of ``x2``, ``alpha`` the
    coefficients of the outgoing direction and ``epsilon`` the distance of the
    profile start from ``x1``.
    """

    profile: PiecewiseProfile = None  # type: ignore[assignment]
    period: float = 0.0
    x1: np.ndarray = field(default_factory=lambda: np.zeros(0))
    x2: np.ndarray = field(default_factory=lambda: np.zeros(0))
    lambda_v: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))
    lambda_w: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))
    v: np.ndarray = field(default_factory=lambda: np.zeros((0, 0), dtype=complex))
    w: np.ndarray = field(default_factory=lambda: np.zeros((0, 0), dtype=complex))
    alpha: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))
    epsilon: float = 0.0
    kind = "hcli"

    def __post_init__(self) -> None:
        super().__post_init__()
        object.__setattr__(self, "x1", np.asarray(self.x1, dtype=float).ravel())
        object.__setattr__(self, "x2", np.asarray(self.x2, dtype=float).ravel())
        object.__setattr__(
            self, "lambda_v", np.asarray(self.lambda_v, dtype=complex).ravel()
        )
        object.__setattr__(
            self, "lambda_w", np.asarray(self.lambda_w, dtype=complex).ravel()
        )
        object.__setattr__(self, "v", np.atleast_2d(np.asarray(self.v, dtype=complex)))
        object.__setattr__(self, "w", np.atleast_2d(np.asarray(self.w, dtype=complex)))
        object.__setattr__(
            self, "alpha", np.asarray(self.alpha, dtype=complex).ravel()
        )


Point = Union[SteadyState, Fold, Hopf, PeriodicOrbit, ConnectingOrbit]

KINDS = ("stst", "fold", "hopf", "psol", "hcli")


# ---------------------------------------------------------------------------
# method records
# ---------------------------------------------------------------------------


@dataclass
class PointMethod:
    """Newton correction settings; collocation fields apply to psol/hcli only."""

    newton_max_iterations: int = 5
    newton_nmon_iterations: int = 1
    halting_accuracy: float = 1e-10
    minimal_accuracy: float = 1e-8
    extra_condition: bool = False
    print_residual_info: bool = False
    phase_condition: bool = True
    collocation_parameters: Optional[np.ndarray] = None
    adapt_mesh_before_correct: int = 0
    adapt_mesh_after_correct: int = 0


# BDF4 linear multistep scheme; coefficients ordered past -> present with the
# oldest alpha coefficient scaled to 1.  The safety radius is the output of
# scripts/lms_safety_scan.py (largest disk on which the principal root of the
# scheme tracks exp(z) to within 1%).
BDF4_ALPHA = (1.0, -16.0 / 3.0, 12.0, -16.0, 25.0 / 3.0)
BDF4_BETA = (0.0, 0.0, 0.0, 0.0, 4.0)
BDF4_SAFETY_RADIUS = 0.457186782035


@dataclass
class StabilityMethod:
    """Settings for characteristic-root / Floquet-multiplier computation."""

    lms_alpha: Tuple[float, ...] = BDF4_ALPHA
    lms_beta: Tuple[float, ...] = BDF4_BETA
    lms_safety_radius: float = BDF4_SAFETY_RADIUS
    interpolation_order: int = 4
    minimal_time_step: float = 0.01
    maximal_time_step: float = 0.1
    max_number_of_eigenvalues: int = 100
    minimal_real_part: Optional[float] = None
    max_newton_iterations: int = 6
    root_accuracy: float = 1e-6
    remove_unconverged_roots: bool = True
    delay_accuracy: float = -1e-8
    collocation_parameters: Optional[np.ndarray] = None
    minimal_modulus: float = 0.01


@dataclass
class ContinuationMethod:
    steplength_condition: bool = True
    plot: bool = True
    prediction: bool = True
    steplength_growth_factor: float = 1.2
    plot_progress: bool = True
    plot_measure: Optional[Tuple["Measure", "Measure"]] = None
    halt_before_reject: bool = False


@dataclass
class BranchMethod:
    point: PointMethod
    stability: StabilityMethod
    continuation: ContinuationMethod


@dataclass
class ParameterControl:
    """Free parameters and continuation bounds (all indices 1-based).

    ``min_bound``/``max_bound``/``max_step`` are sequences of
    ``(parameter_index, value)`` pairs.
    """

    free: Tuple[int, ...] = ()
    min_bound: Tuple[Tuple[int, float], ...] = ()
    max_bound: Tuple[Tuple[int, float], ...] = ()
    max_step: Tuple[Tuple[int, float], ...] = ()


@dataclass
class Branch:
    method: BranchMethod
    parameter: ParameterControl
    points: List[Point] = field(default_factory=list)


def default_point_method(kind: str) -> PointMethod:
    if kind not in KINDS:
        raise ValueError(f"unknown point kind {kind!r}")
    idx = KINDS.index(kind)
    method = PointMethod(
        newton_max_iterations=(5, 5, 5, 5, 10)[idx],
        newton_nmon_iterations=1,
        halting_accuracy=(1e-10, 1e-9, 1e-9, 1e-8, 1e-8)[idx],
        minimal_accuracy=(1e-8, 1e-7, 1e-7, 1e-6, 1e-6)[idx],
        extra_condition=False,
        print_residual_info=False,
    )
    if kind in ("psol", "hcli"):
        method.phase_condition = True
        method.adapt_mesh_before_correct = 0
        method.adapt_mesh_after_correct = 3
    return method


def default_stability_method(kind: str) -> StabilityMethod:
    if kind not in KINDS:
        raise ValueError(f"unknown point kind {kind!r}")
    return StabilityMethod()


def default_continuation_method() -> ContinuationMethod:
    return ContinuationMethod()


def default_branch_method(kind: str) -> BranchMethod:
    return BranchMethod(
        point=default_point_method(kind),
        stability=default_stability_method(kind),
        continuation=default_continuation_method(),
    )


def default_branch(
    kind: str,
    free: Sequence[int],
    delay_parameter_indices: Sequence[int] = (),
) -> Branch:
    """Branch skeleton with default methods.

    For systems with constant delays, ``delay_parameter_indices`` (1-based)
    installs a lower bound of 0 on every delay parameter.
    """
    min_bound = tuple((int(i), 0.0) for i in delay_parameter_indices)
    return Branch(
        method=default_branch_method(kind),
        parameter=ParameterControl(free=tuple(int(i) for i in free), min_bound=min_bound),
        points=[],
    )


# ---------------------------------------------------------------------------
# point algebra
# ---------------------------------------------------------------------------


def _resample_profile(profile: PiecewiseProfile, target: PiecewiseProfile) -> np.ndarray:
    """Values of ``profile`` interpolated on the mesh of ``target``."""
    from .collocation import interp_profile

    return interp_profile(profile, target.full_mesh())


def point_axpy(a: float, x: Point, y: Point) -> Point:
    """Return ``a*x + y``; both points must have the same kind and sizes.

    For profiles on different meshes, ``y`` is interpolated onto the mesh of
    ``x``; the result lives on the mesh of ``x``.
    """
    if x.kind != y.kind:
        raise ValueError(f"kind mismatch: {x.kind} vs {y.kind}")
    parameter = a * x.parameter + y.parameter
    if x.kind == "stst":
        return SteadyState(parameter=parameter, x=a * x.x + y.x)
    if x.kind == "fold":
        return Fold(parameter=parameter, x=a * x.x + y.x, v=a * x.v + y.v)
    if x.kind == "hopf":
        return Hopf(
            parameter=parameter,
            x=a * x.x + y.x,
            v=a * x.v + y.v,
            omega=a * x.omega + y.omega,
        )
    xm, ym = x.profile, y.profile
    same_mesh = (
        xm.degree == ym.degree
        and xm.values.shape == ym.values.shape
        and np.array_equal(xm.full_mesh(), ym.full_mesh())
    )
    y_values = ym.values if same_mesh else _resample_profile(ym, xm)
    profile = PiecewiseProfile(
        values=a * xm.values + y_values, degree=xm.degree, mesh=xm.mesh
    )
    if x.kind == "psol":
        return PeriodicOrbit(
            parameter=parameter, profile=profile, period=a * x.period + y.period
        )
    return ConnectingOrbit(
        parameter=parameter,
        profile=profile,
        period=a * x.period + y.period,
        x1=a * x.x1 + y.x1,
        x2=a * x.x2 + y.x2,
        lambda_v=a * x.lambda_v + y.lambda_v,
        lambda_w=a * x.lambda_w + y.lambda_w,
        v=a * x.v + y.v,
        w=a * x.w + y.w,
        alpha=a * x.alpha + y.alpha,
        epsilon=a * x.epsilon + y.epsilon,
    )


def _profile_norm(profile: PiecewiseProfile) -> float:
    if profile is None or profile.values.size == 0:
        return 0.0
    return float(np.max(np.linalg.norm(profile.values, axis=0)))


def point_norm(point: Point) -> float:
    """Norm of a point: the maximum of the 2-norms of its numeric fields.

    The profile contributes the maximum over representation points of the
    componentwise 2-norm.  The norm is absolutely homogeneous and satisfies
    the triangle inequality field by field.
    """
    norms = [float(np.linalg.norm(point.parameter))]
    if point.kind in ("stst", "fold", "hopf"):
        norms.append(float(np.linalg.norm(point.x)))
    if point.kind in ("fold", "hopf"):
        norms.append(float(np.linalg.norm(point.v)))
    if point.kind == "hopf":
        norms.append(abs(point.omega))
    if point.kind in ("psol", "hcli"):
        norms.append(_profile_norm(point.profile))
        norms.append(abs(point.period))
    if point.kind == "hcli":
        norms.extend(
            [
                float(np.linalg.norm(point.x1)),
                float(np.linalg.norm(point.x2)),
                float(np.linalg.norm(point.lambda_v)),
                float(np.linalg.norm(point.lambda_w)),
                float(np.linalg.norm(point.v)),
                float(np.linalg.norm(point.w)),
                float(np.linalg.norm(point.alpha)),
                abs(point.epsilon),
            ]
        )
    return max(norms)


def _fix_phase(v: np.ndarray) -> Tuple[np.ndarray, complex]:
    """Rotate ``v`` so the largest-modulus entry is real and positive.

    Returns the rotated vector and the scalar ``s`` with ``v = s * v_new``.
    """
    k = int(np.argmax(np.abs(v)))
    if v[k] == 0:
        return v, 1.0
    s = v[k] / abs(v[k])
    return v / s, s


def point_normalize(point: Point) -> Point:
    """Normalize the auxiliary quantities of a point.

    Fold/Hopf null vectors are scaled to unit norm (Hopf vectors additionally
    rotated so the largest entry is real positive).  For connecting orbits the
    eigenvector columns are scaled to unit norm with ``alpha``/``epsilon``
    compensated so that ``epsilon * v @ alpha`` is unchanged, and ``alpha`` is
    rescaled to unit norm.  Steady states and periodic orbits are returned
    unchanged (apart from dropping carried-over stability, which normalization
    never preserves).
    """
    if point.kind == "stst":
        return point.replace(stability=None) if point.stability else point
    if point.kind == "fold":
        nv = float(np.linalg.norm(point.v))
        v = point.v / nv if nv > 0 else point.v
        return point.replace(v=v, stability=None)
    if point.kind == "hopf":
        nv = float(np.linalg.norm(point.v))
        v = point.v / nv if nv > 0 else point.v
        v, _ = _fix_phase(v)
        return point.replace(v=v, stability=None)
    if point.kind == "psol":
        return point.replace(stability=None) if point.stability else point
    # hcli
    v = point.v.copy()
    alpha = point.alpha.copy()
    for k in range(v.shape[1]):
        nv = float(np.linalg.norm(v[:, k]))
        if nv == 0:
            continue
        col, s = _fix_phase(v[:, k] / nv)
        v[:, k] = col
        alpha[k] = alpha[k] * nv * s
    na = float(np.linalg.norm(alpha))
    epsilon = point.epsilon
    if na > 0:
        epsilon = epsilon * na
        alpha = alpha / na
    w = point.w.copy()
    for k in range(w.shape[1]):
        nw = float(np.linalg.norm(w[:, k]))
        if nw > 0:
            w[:, k], _ = _fix_phase(w[:, k] / nw)
    return point.replace(v=v, w=w, alpha=alpha, epsilon=epsilon, stability=None)


# ---------------------------------------------------------------------------
# measures
# ---------------------------------------------------------------------------

_SELECTORS = ("min", "max", "mean", "ampl", "all")

_FUNCS: dict = {
    "": lambda a: a,
    "identity": lambda a: a,
    "real": np.real,
    "imag": np.imag,
    "abs": np.abs,
    "log10": np.log10,
}

Selector = Union[int, str]


@dataclass(frozen=True)
class Measure:
    """Scalar measure ``func(point.field.subfield(row, col))``.

    ``row``/``col`` are 1-based indices or one of the selectors
    ``'min'|'max'|'mean'|'ampl'|'all'`` (``'ampl'`` is max - min); at most one
    of them may be a selector, except for ``('all', 'all')``.  ``func`` is one
    of ``''|'real'|'imag'|'abs'|'log10'`` or a callable.
    """

    field: str
    subfield: str = ""
    row: Selector = 1
    col: Selector = 1
    func: Union[str, Callable] = ""

    def __post_init__(self) -> None:
        r_sel = isinstance(self.row, str) and self.row != "all"
        c_sel = isinstance(self.col, str) and self.col != "all"
        if r_sel and c_sel:
            raise ValueError("at most one of row/col may be a selector")
        for sel in (self.row, self.col):
            if isinstance(sel, str) and sel not in _SELECTORS:
                raise ValueError(f"unknown selector {sel!r}")


def _field_as_matrix(point: Point, fieldname: str, subfield: str) -> np.ndarray:
    if fieldname == "stability":
        stability = point.stability
        if stability is None:
            raise ValueError("point carries no stability information")
        value = getattr(stability, subfield or ("mu" if isinstance(stability, Multipliers) else "l1"))
        return np.asarray(value).reshape(-1, 1)
    value = getattr(point, fieldname)
    if fieldname == "profile":
        return value.values
    value = np.asarray(value)
    if value.ndim == 0:
        return value.reshape(1, 1)
    if fieldname == "parameter":
        return value.reshape(1, -1)
    if value.ndim == 1:
        return value.reshape(-1, 1)
    return value


def _apply_selector(matrix: np.ndarray, sel: Selector, axis: int) -> np.ndarray:
    if isinstance(sel, int):
        return np.take(matrix, [sel - 1], axis=axis)
    if sel == "all":
        return matrix
    if sel == "min":
        return np.min(matrix, axis=axis, keepdims=True)
    if sel == "max":
        return np.max(matrix, axis=axis, keepdims=True)
    if sel == "mean":
        return np.mean(matrix, axis=axis, keepdims=True)
    if sel == "ampl":
        return np.max(matrix, axis=axis, keepdims=True) - np.min(
            matrix, axis=axis, keepdims=True
        )
    raise ValueError(f"unknown selector {sel!r}")


def eval_measure(measure: Measure, point: Point):
    """Evaluate a measure on a point (scalar, or 1-d array for 'all')."""
    matrix = _field_as_matrix(point, measure.field, measure.subfield)
    matrix = _apply_selector(matrix, measure.row, axis=0)
    matrix = _apply_selector(matrix, measure.col, axis=1)
    func = measure.func if callable(measure.func) else _FUNCS[measure.func]
    matrix = func(matrix)
    if matrix.size == 1:
        return matrix.reshape(-1)[0]
    return matrix.ravel()


def branch_measure(measure: Measure, branch: Branch) -> Tuple[np.ndarray, np.ndarray]:
    """Evaluate a measure along a branch.

    Returns ``(values, lengths)`` where ``values`` is an
    ``(n_points, max_len)`` array padded with NaN for points yielding fewer
    entries (e.g. ragged stability spectra) and ``lengths`` the per-point
    entry counts.  Points where the measure cannot be evaluated (e.g. missing
    stability) yield length 0.
    """
    rows: List[np.ndarray] = []
    for point in branch.points:
        try:
            value = np.atleast_1d(np.asarray(eval_measure(measure, point)))
        except (ValueError, AttributeError, IndexError):
            value = np.zeros(0)
        rows.append(value)
    lengths = np.array([row.size for row in rows], dtype=int)
    width = int(lengths.max()) if rows else 0
    is_complex = any(np.iscomplexobj(row) for row in rows)
    values = np.full((len(rows), width), np.nan, dtype=complex if is_complex else float)
    for i, row in enumerate(rows):
        values[i, : row.size] = row
    return values, lengths
