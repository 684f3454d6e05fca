"""Antenna-position optimization.

Maximizes the Monte-Carlo expected minimum rate over one coordinate axis
at a time with a feasible-direction scheme (linearize the nonconvex
sensing-accuracy and spacing constraints at the incumbent, maximize the
linearized objective over the convexified set, then line-search along the
segment), alternating between the horizontal and vertical position
vectors until the outer objective stalls.  A variance-maximin pass over
the same machinery produces sensing-feasible starting layouts.

Both linearizations minorize their exact constraints, so every point of
the segment from the incumbent to the direction point is feasible for the
original problem; monotone ascent follows from the line search always
containing the incumbent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .comm import CommScenario, min_rate_per_realization, sample_batch
from .errors import (
    DegenerateAxisError,
    InfeasibleLayoutError,
    InfeasibleThresholdError,
    LinearizationError,
)
from .geometry import (
    ArrayLayout,
    MovementRegion,
    DiskRegion,
    RectRegion,
    build_upa,
    centering_matrix,
    min_pairwise_distance,
    var_terms,
)
from .qcqp import ConvexProgram, QuadConstraint, solve, strictly_feasible_point
from .sensing import SensingSpec, eta_lower_bound


@dataclass(frozen=True)
class OptimizerConfig:
    """Thresholds and iteration budgets for the alternating optimization.

    `fd_step` is the forward-difference step in meters; None resolves to
    1e-4 times the wavelength at use, balancing truncation against
    floating-point cancellation.
    """

    eps1: float = 1e-3
    eps2: float = 1e-3
    fd_step: float | None = None
    line_search_points: int = 51
    max_inner_y: int = 20
    max_inner_z: int = 20
    max_outer: int = 10
    feasibility_tolerance: float = 1e-9

    def __post_init__(self):
        if self.eps1 <= 0 or self.eps2 <= 0:
            raise ValueError("convergence thresholds must be positive")
        if self.line_search_points < 2:
            raise ValueError("need at least two line-search points")

    def max_inner(self, axis: str) -> int:
        return self.max_inner_y if axis == "y" else self.max_inner_z

    def step_for(self, wavelength: float) -> float:
        return self.fd_step if self.fd_step is not None else 1e-4 * wavelength


@dataclass
class OptimizerReport:
    """Iteration-by-iteration record of one optimization run.

    `crb_slack` holds (var-term - threshold) pairs, so nonnegative values
    certify the sensing constraints; `objective_trace` is non-decreasing
    by construction.
    """

    objective_trace: list[float] = field(default_factory=list)
    iterate_trace: list[ArrayLayout] = field(default_factory=list)
    crb_slack: list[tuple[float, float]] = field(default_factory=list)
    min_distance_trace: list[float] = field(default_factory=list)
    termination: str = "max_iter"
    outer_objectives: list[float] = field(default_factory=list)

    def record(self, layout: ArrayLayout, objective: float, eta_bar: float):
        term_u, term_v = var_terms(layout.y, layout.z)
        self.objective_trace.append(objective)
        self.iterate_trace.append(layout)
        self.crb_slack.append((term_u - eta_bar, term_v - eta_bar))
        self.min_distance_trace.append(min_pairwise_distance(layout))

    def extend(self, other: "OptimizerReport"):
        self.objective_trace.extend(other.objective_trace)
        self.iterate_trace.extend(other.iterate_trace)
        self.crb_slack.extend(other.crb_slack)
        self.min_distance_trace.extend(other.min_distance_trace)


class RateObjective:
    """Expected-min-rate evaluator over one fixed batch of user samples.

    The batch is drawn once and reused for every evaluation (gradients,
    line searches, traces), which keeps the Monte-Carlo surrogate a fixed
    deterministic function during a whole optimization run.
    """

    def __init__(self, scenario: CommScenario, batch: np.ndarray | None = None):
        self.scenario = scenario
        self.batch = sample_batch(scenario) if batch is None else np.asarray(batch)

    def value(self, y: np.ndarray, z: np.ndarray) -> float:
        per_q = min_rate_per_realization(
            np.asarray(y, float),
            np.asarray(z, float),
            self.scenario.wavelength,
            self.batch,
            self.scenario.power_mw,
            self.scenario.noise_mw,
        )
        return float(per_q.mean())

    def value_layout(self, layout: ArrayLayout) -> float:
        return self.value(layout.y, layout.z)


def linearized_crb_constraints(
    x_p: np.ndarray, fixed: np.ndarray, eta_bar: float
) -> tuple[QuadConstraint, QuadConstraint]:
    """Convexified sensing-accuracy constraints in the moving axis d.

    With B the centering matrix, b = B*fixed, vf = fixed'B*fixed, the exact
    pair  var(d)*vf - cov^2 >= eta_bar*vf  and  >= eta_bar*var(d)  is
    relaxed by lower-bounding d'Bd with its tangent at x_p.  At d = x_p
    both relaxations coincide with the exact constraints, and satisfying
    them implies the exact ones (the tangent minorizes the quadratic).
    """
    x_p = np.asarray(x_p, dtype=float)
    fixed = np.asarray(fixed, dtype=float)
    n = x_p.size
    b_mat = centering_matrix(n)
    b_fixed = b_mat @ fixed
    v_fixed = float(fixed @ b_fixed)
    if v_fixed <= 0.0:
        raise DegenerateAxisError("fixed axis has zero variance")
    b_anchor = b_mat @ x_p
    c_anchor = float(x_p @ b_anchor)
    rank1 = np.outer(b_fixed, b_fixed)
    q_vec = -2.0 * v_fixed * b_anchor
    first = QuadConstraint(rank1, q_vec, v_fixed * (c_anchor + eta_bar))
    second = QuadConstraint(rank1 + eta_bar * b_mat, q_vec, v_fixed * c_anchor)
    return first, second


def pair_row_index(n: int, i: int, j: int) -> int:
    """Row of the (i, j) pair, i < j zero-based, in the stacked pair order
    (0,1), (0,2), ..., (0,N-1), (1,2), ...  Matches
    rho(m, n) = (2N - n)(n - 1)/2 + m - n for one-based n < m."""
    return (2 * n - i - 1) * i // 2 + j - i - 1


def min_distance_linearization(
    layout_p: ArrayLayout, axis: str, min_spacing: float
) -> tuple[np.ndarray, np.ndarray]:
    """Linear spacing constraints D d >= g in the moving axis.

    Row (i, j) encodes the inner-product minorant of the pair distance at
    the anchor: any d satisfying it keeps antennas i and j at least
    `min_spacing` apart (Cauchy-Schwarz).  Anchors with coincident
    antennas have no defined linearization.
    """
    moving = layout_p.axis(axis)
    other = layout_p.axis("z" if axis == "y" else "y")
    n = layout_p.n
    rows = n * (n - 1) // 2
    d_mat = np.zeros((rows, n))
    g_vec = np.empty(rows)
    for i in range(n - 1):
        for j in range(i + 1, n):
            row = pair_row_index(n, i, j)
            dm = moving[i] - moving[j]
            df = other[i] - other[j]
            dist = math.hypot(dm, df)
            if dist == 0.0:
                raise LinearizationError(f"antennas {i} and {j} coincide")
            d_mat[row, i] = dm
            d_mat[row, j] = -dm
            g_vec[row] = min_spacing * dist - df * df
    return d_mat, g_vec


def objective_gradient_fd(
    layout: ArrayLayout,
    scenario: CommScenario,
    axis: str,
    step: float | None = None,
    batch: np.ndarray | None = None,
) -> np.ndarray:
    """Forward-difference gradient of the expected minimum rate w.r.t. one
    coordinate axis, using common random numbers across all evaluations."""
    evaluator = RateObjective(scenario, batch)
    if step is None:
        step = 1e-4 * layout.wavelength
    return _gradient(evaluator, layout, axis, step)


def _gradient(
    evaluator: RateObjective, layout: ArrayLayout, axis: str, step: float
) -> np.ndarray:
    x = layout.axis(axis).copy()
    base = evaluator.value_layout(layout)
    grad = np.empty_like(x)
    for i in range(x.size):
        bumped = x.copy()
        bumped[i] += step
        if axis == "y":
            grad[i] = (evaluator.value(bumped, layout.z) - base) / step
        else:
            grad[i] = (evaluator.value(layout.y, bumped) - base) / step
    return grad


def _normalized_quad(qc: QuadConstraint) -> QuadConstraint:
    scale = max(
        np.linalg.norm(qc.p_matrix), np.linalg.norm(qc.q_vector), abs(qc.r_scalar), 1e-300
    )
    return QuadConstraint(qc.p_matrix / scale, qc.q_vector / scale, qc.r_scalar / scale)


def _region_pieces(
    region: MovementRegion, axis: str, fixed: np.ndarray
) -> tuple[np.ndarray, np.ndarray, list[QuadConstraint]]:
    """Box bounds plus (for disks) per-antenna quadratic membership rows."""
    n = fixed.size
    if isinstance(region, RectRegion):
        lo, hi = (region.y_min, region.y_max) if axis == "y" else (region.z_min, region.z_max)
        return np.full(n, lo), np.full(n, hi), []
    if isinstance(region, DiskRegion):
        c_move = region.center_y if axis == "y" else region.center_z
        c_fix = region.center_z if axis == "y" else region.center_y
        quads = []
        for i in range(n):
            p = np.zeros((n, n))
            p[i, i] = 1.0
            q = np.zeros(n)
            q[i] = -2.0 * c_move
            r = c_move**2 + (fixed[i] - c_fix) ** 2 - region.radius**2
            quads.append(QuadConstraint(p, q, r))
        lo = np.full(n, c_move - region.radius)
        hi = np.full(n, c_move + region.radius)
        return lo, hi, quads
    raise TypeError(f"unsupported region type {type(region).__name__}")


def _direction_program(
    objective: np.ndarray,
    layout_p: ArrayLayout,
    axis: str,
    eta_bar: float,
    min_spacing: float,
) -> ConvexProgram:
    fixed = layout_p.axis("z" if axis == "y" else "y")
    quads = [
        _normalized_quad(qc)
        for qc in linearized_crb_constraints(layout_p.axis(axis), fixed, eta_bar)
    ]
    lo, hi, region_quads = _region_pieces(layout_p.region, axis, fixed)
    quads.extend(_normalized_quad(qc) for qc in region_quads)
    d_mat, g_vec = min_distance_linearization(layout_p, axis, min_spacing)
    row_scale = np.maximum(np.abs(d_mat).max(axis=1), np.abs(g_vec))
    row_scale = np.maximum(row_scale, 1e-300)
    return ConvexProgram(
        c=objective,
        quad_constraints=tuple(quads),
        a_ub=-d_mat / row_scale[:, None],
        b_ub=-g_vec / row_scale,
        lower=lo,
        upper=hi,
    )


def direction_subproblem(
    grad: np.ndarray,
    layout_p: ArrayLayout,
    axis: str,
    eta_bar: float,
    min_spacing: float,
    feasibility_tolerance: float = 1e-9,
) -> tuple[np.ndarray, str]:
    """Ascent direction point: maximize grad'd over the convexified set.

    Returns (d, status); on an infeasible subproblem the anchor itself is
    returned with status "infeasible" (a null step the caller treats as
    axis convergence).
    """
    anchor = layout_p.axis(axis).copy()
    try:
        program = _direction_program(np.asarray(grad, float), layout_p, axis, eta_bar, min_spacing)
    except (DegenerateAxisError, LinearizationError):
        return anchor, "infeasible"
    start = strictly_feasible_point(program, anchor, margin=1e-12)
    if start is None:
        return anchor, "infeasible"
    result = solve(program, start, gap_tol=1e-9)
    if result.status == "infeasible":
        return anchor, "infeasible"
    return result.d, result.status


def line_search(
    layout_p: ArrayLayout,
    direction: np.ndarray,
    scenario: CommScenario,
    m_tau: int,
    axis: str = "y",
    batch: np.ndarray | None = None,
) -> float:
    """Exhaustive step-size search over m_tau equispaced points of [0, 1].

    Maximizes the expected minimum rate along the segment from the anchor
    to the direction point; ties resolve to the smallest step.
    """
    evaluator = RateObjective(scenario, batch)
    taus, values = _line_search_values(evaluator, layout_p, direction, m_tau, axis)
    return float(taus[int(np.argmax(values))])


def _line_search_values(
    evaluator: RateObjective,
    layout_p: ArrayLayout,
    direction: np.ndarray,
    m_tau: int,
    axis: str,
) -> tuple[np.ndarray, np.ndarray]:
    anchor = layout_p.axis(axis)
    taus = np.linspace(0.0, 1.0, m_tau)
    values = np.empty(m_tau)
    for i, tau in enumerate(taus):
        candidate = anchor + tau * (direction - anchor)
        if axis == "y":
            values[i] = evaluator.value(candidate, layout_p.z)
        else:
            values[i] = evaluator.value(layout_p.y, candidate)
    return taus, values


def _audit(layout: ArrayLayout, eta_bar: float, min_spacing: float, tol: float) -> bool:
    term_u, term_v = var_terms(layout.y, layout.z)
    in_region = bool(np.all(layout.region.contains(layout.y, layout.z, tol=tol)))
    return (
        in_region
        and min_pairwise_distance(layout) >= min_spacing - tol
        and term_u >= eta_bar - tol * eta_bar
        and term_v >= eta_bar - tol * eta_bar
    )


def _restore_strict_spacing(
    layout: ArrayLayout, min_spacing: float, nudge: float = 1e-9
) -> ArrayLayout:
    """Push pairs sitting exactly at the minimum spacing slightly apart so
    the distance linearization has a strictly feasible anchor."""
    dist = min_pairwise_distance(layout)
    if dist > min_spacing + nudge or dist < min_spacing - nudge:
        return layout
    y = layout.y.copy()
    z = layout.z.copy()
    n = layout.n
    for i in range(n - 1):
        for j in range(i + 1, n):
            delta = np.array([y[i] - y[j], z[i] - z[j]])
            norm = np.linalg.norm(delta)
            if abs(norm - min_spacing) <= nudge and norm > 0:
                push = 0.5 * nudge * delta / norm
                y[i] += push[0]
                z[i] += push[1]
                y[j] -= push[0]
                z[j] -= push[1]
    y = np.clip(y, *_axis_clip(layout.region, "y"))
    z = np.clip(z, *_axis_clip(layout.region, "z"))
    candidate = ArrayLayout(y, z, layout.region, layout.wavelength, _validate_region=False)
    if isinstance(layout.region, DiskRegion):
        candidate = _project_into_disk(candidate, layout.region)
    if min_pairwise_distance(candidate) >= dist:
        return candidate
    return layout


def _axis_clip(region: MovementRegion, axis: str) -> tuple[float, float]:
    lo_y, hi_y, lo_z, hi_z = region.bounding_box()
    return (lo_y, hi_y) if axis == "y" else (lo_z, hi_z)


def _project_into_disk(layout: ArrayLayout, region: DiskRegion) -> ArrayLayout:
    y = layout.y.copy()
    z = layout.z.copy()
    dy = y - region.center_y
    dz = z - region.center_z
    r = np.hypot(dy, dz)
    over = r > region.radius
    if np.any(over):
        scale = region.radius / r[over]
        y[over] = region.center_y + dy[over] * scale
        z[over] = region.center_z + dz[over] * scale
    return ArrayLayout(y, z, region, layout.wavelength)


def optimize_axis(
    layout: ArrayLayout,
    scenario: CommScenario,
    sensing: SensingSpec,
    config: OptimizerConfig,
    axis: str,
    min_spacing: float,
    evaluator: RateObjective | None = None,
) -> tuple[ArrayLayout, OptimizerReport]:
    """Successive optimization of one coordinate axis with the other fixed.

    Repeats gradient, direction finding, and line search until the rate
    gain drops below eps2 or the iteration budget runs out.  Every iterate
    stays feasible and the recorded objective never decreases.
    """
    if evaluator is None:
        evaluator = RateObjective(scenario)
    eta_bar = sensing.eta_bar(layout.n)
    report = OptimizerReport()
    tol = config.feasibility_tolerance
    if not _audit(layout, eta_bar, min_spacing, tol):
        report.termination = "infeasible_start"
        return layout, report

    step = config.step_for(layout.wavelength)
    current = evaluator.value_layout(layout)
    report.termination = "max_iter"
    for _ in range(config.max_inner(axis)):
        layout = _restore_strict_spacing(layout, min_spacing)
        grad = _gradient(evaluator, layout, axis, step)
        d_point, status = direction_subproblem(
            grad, layout, axis, eta_bar, min_spacing, tol
        )
        anchor = layout.axis(axis)
        if status == "infeasible" or float(grad @ (d_point - anchor)) <= 0.0:
            report.termination = "converged"
            break
        taus, values = _line_search_values(
            evaluator, layout, d_point, config.line_search_points, axis
        )
        best = int(np.argmax(values))
        new_value = float(values[best])
        if new_value > current:
            new_axis = anchor + taus[best] * (d_point - anchor)
            layout = layout.with_axis(axis, new_axis)
        gain = new_value - current
        current = max(new_value, current)
        report.record(layout, current, eta_bar)
        if gain < config.eps2:
            report.termination = "converged"
            break
    return layout, report


def optimize(
    layout0: ArrayLayout,
    scenario: CommScenario,
    sensing: SensingSpec,
    config: OptimizerConfig,
    min_spacing: float,
) -> tuple[ArrayLayout, OptimizerReport]:
    """Alternating optimization of the horizontal and vertical position
    vectors (one fixed while the other is improved) until the outer rate
    gain drops below eps1.

    One batch of user samples is drawn up front and shared by every
    evaluation, so the surrogate objective is a fixed function and the
    trace is monotone.
    """
    if abs(layout0.wavelength - scenario.wavelength) > 1e-15:
        raise ValueError("layout and scenario wavelengths disagree")
    evaluator = RateObjective(scenario)
    eta_bar = sensing.eta_bar(layout0.n)
    report = OptimizerReport()
    if not _audit(layout0, eta_bar, min_spacing, config.feasibility_tolerance):
        report.termination = "infeasible_start"
        return layout0, report

    layout = layout0
    current = evaluator.value_layout(layout)
    report.record(layout, current, eta_bar)
    report.outer_objectives.append(current)
    report.termination = "max_iter"
    for _ in range(config.max_outer):
        layout, rep_y = optimize_axis(
            layout, scenario, sensing, config, "y", min_spacing, evaluator
        )
        report.extend(rep_y)
        layout, rep_z = optimize_axis(
            layout, scenario, sensing, config, "z", min_spacing, evaluator
        )
        report.extend(rep_z)
        new_value = report.objective_trace[-1] if report.objective_trace else current
        new_value = max(new_value, current)
        report.outer_objectives.append(new_value)
        if new_value - current < config.eps1:
            report.termination = "converged"
            break
        current = new_value
    return layout, report


def _own_term_gradient(x: np.ndarray, fixed: np.ndarray) -> np.ndarray:
    """Gradient of var(x) - cov(x, fixed)^2 / var(fixed) w.r.t. x."""
    n = x.size
    b_mat = centering_matrix(n)
    b_fixed = b_mat @ fixed
    v_fixed = float(fixed @ b_fixed)
    grad = 2.0 * b_mat @ x
    if v_fixed > 0.0:
        grad -= (2.0 * float(x @ b_fixed) / v_fixed) * b_fixed
    return grad


def _min_var_term(layout: ArrayLayout) -> float:
    term_u, term_v = var_terms(layout.y, layout.z)
    return min(term_u, term_v)


def initialize_crb_maximin(
    n: int,
    region: MovementRegion,
    min_spacing: float,
    wavelength: float,
    sensing: SensingSpec | None = None,
    rounds: int = 8,
    max_inner: int = 30,
    m_tau: int = 33,
) -> ArrayLayout:
    """Sensing-optimal starting layout: maximize the smaller of the two
    variance terms subject to region membership and minimum spacing.

    Runs the same feasible-direction machinery with the variance-maximin
    objective, alternating axes.  When a sensing spec is supplied, a
    threshold below the region's attainable floor raises before any
    iteration, and the final layout must meet the spec's variance
    threshold.
    """
    if sensing is not None:
        floor = eta_lower_bound(region, sensing, n)
        if sensing.eta < floor * (1.0 - 1e-12):
            raise InfeasibleThresholdError(
                f"threshold {sensing.eta:g} below the attainable floor {floor:g}"
            )

    layout = _max_aperture_grid(n, region, min_spacing, wavelength)
    incumbent = _min_var_term(layout)
    scale = region.circumradius**2
    for _ in range(rounds):
        round_start = incumbent
        for axis in ("y", "z"):
            layout, incumbent = _maximin_axis_pass(
                layout, axis, min_spacing, incumbent, max_inner, m_tau
            )
        if incumbent - round_start < 1e-9 * scale:
            break

    if sensing is not None:
        required = sensing.eta_bar(n)
        if incumbent < required * (1.0 - 1e-9):
            raise InfeasibleThresholdError(
                f"achieved variance term {incumbent:g} below required {required:g}"
            )
    return layout


def _max_aperture_grid(
    n: int, region: MovementRegion, min_spacing: float, wavelength: float
) -> ArrayLayout:
    g = math.isqrt(n)
    if g * g < n:
        g += 1
    if isinstance(region, RectRegion):
        spacing = min(region.y_max - region.y_min, region.z_max - region.z_min) / (g - 1)
    else:
        spacing = region.radius * math.sqrt(2.0) / (g - 1) if g > 1 else region.radius
    if spacing < min_spacing:
        raise InfeasibleLayoutError(
            f"cannot place a {g}x{g} grid at spacing >= {min_spacing:g} m in the region"
        )
    return build_upa(n, spacing, region, wavelength)


def _maximin_axis_pass(
    layout: ArrayLayout,
    axis: str,
    min_spacing: float,
    incumbent: float,
    max_inner: int,
    m_tau: int,
) -> tuple[ArrayLayout, float]:
    fixed_axis = "z" if axis == "y" else "y"
    for _ in range(max_inner):
        layout = _restore_strict_spacing(layout, min_spacing)
        x = layout.axis(axis)
        fixed = layout.axis(fixed_axis)
        grad = _own_term_gradient(x, fixed)
        # keep both variance terms at (slightly under) the incumbent along
        # the whole segment, so accepted steps never lose sensing margin
        guard = max(incumbent * (1.0 - 1e-6) - 1e-18, 0.0)
        d_point, status = direction_subproblem(grad, layout, axis, guard, min_spacing)
        anchor = layout.axis(axis)
        if status == "infeasible" or float(grad @ (d_point - anchor)) <= 1e-15:
            break
        taus = np.linspace(0.0, 1.0, m_tau)
        mins = np.empty(m_tau)
        owns = np.empty(m_tau)
        for i, tau in enumerate(taus):
            candidate = anchor + tau * (d_point - anchor)
            trial = layout.with_axis(axis, candidate)
            term_u, term_v = var_terms(trial.y, trial.z)
            mins[i] = min(term_u, term_v)
            owns[i] = term_u if axis == "y" else term_v
        best_min = mins.max()
        eligible = mins >= best_min - 1e-15 * max(1.0, abs(best_min))
        owns_masked = np.where(eligible, owns, -np.inf)
        best = int(np.argmax(owns_masked))
        gained_min = mins[best] - incumbent
        gained_own = owns[best] - owns[0]
        if gained_min <= 0.0 and gained_own <= 1e-15:
            break
        layout = layout.with_axis(axis, anchor + taus[best] * (d_point - anchor))
        incumbent = max(incumbent, float(mins[best]))
        if gained_min <= 1e-12 * max(1.0, incumbent) and gained_own <= 1e-12:
            break
    return layout, incumbent


