"""Small dense convex QCQP solver.

Maximizes a linear objective subject to convex quadratic inequalities,
linear inequalities, and finite box bounds, via a logarithmic-barrier
interior-point method with damped Newton steps.  Problem sizes here are
tiny (a few dozen variables at most), so everything is dense.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Eigenvalue floor (relative to matrix norm) below which a quadratic
# constraint matrix is rejected as non-PSD.
PSD_FLOOR = -1e-10


@dataclass(frozen=True)
class QuadConstraint:
    """Convex quadratic inequality d^T P d + q^T d + r <= 0 with P PSD."""

    p_matrix: np.ndarray
    q_vector: np.ndarray
    r_scalar: float

    def __post_init__(self):
        p = np.asarray(self.p_matrix, dtype=float)
        q = np.asarray(self.q_vector, dtype=float)
        if p.shape != (q.size, q.size):
            raise ValueError("P must be square and conformable with q")
        sym_err = np.abs(p - p.T).max() if p.size else 0.0
        scale = max(np.abs(p).max(), 1.0)
        if sym_err > 1e-9 * scale:
            raise ValueError("P must be symmetric")
        eig_min = np.linalg.eigvalsh(p)[0] if p.size else 0.0
        if eig_min < PSD_FLOOR * max(np.linalg.norm(p), 1.0):
            raise ValueError("P must be positive semi-definite")
        object.__setattr__(self, "p_matrix", p)
        object.__setattr__(self, "q_vector", q)

    def value(self, d: np.ndarray) -> float:
        return float(d @ self.p_matrix @ d + self.q_vector @ d + self.r_scalar)

    def grad(self, d: np.ndarray) -> np.ndarray:
        return 2.0 * self.p_matrix @ d + self.q_vector


@dataclass(frozen=True)
class ConvexProgram:
    """maximize c^T d  s.t. quadratic constraints, A d <= b, lower <= d <= upper.

    Finite bounds are mandatory so the feasible set is compact.
    """

    c: np.ndarray
    quad_constraints: tuple[QuadConstraint, ...] = ()
    a_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        n = c.size
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "quad_constraints", tuple(self.quad_constraints))
        lower = np.full(n, -np.inf) if self.lower is None else np.asarray(self.lower, float)
        upper = np.full(n, np.inf) if self.upper is None else np.asarray(self.upper, float)
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise ValueError("bounds must be finite (compact feasible set)")
        if np.any(lower >= upper):
            raise ValueError("lower bounds must be strictly below upper bounds")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if self.a_ub is not None:
            a = np.atleast_2d(np.asarray(self.a_ub, dtype=float))
            b = np.atleast_1d(np.asarray(self.b_ub, dtype=float))
            if a.shape != (b.size, n):
                raise ValueError("A and b have inconsistent shapes")
            object.__setattr__(self, "a_ub", a)
            object.__setattr__(self, "b_ub", b)

    @property
    def n(self) -> int:
        return self.c.size

    def linear_rows(self) -> tuple[np.ndarray, np.ndarray]:
        """All linear inequalities (user rows plus box rows) as A d <= b."""
        n = self.n
        blocks_a = [np.eye(n), -np.eye(n)]
        blocks_b = [self.upper, -self.lower]
        if self.a_ub is not None:
            blocks_a.insert(0, self.a_ub)
            blocks_b.insert(0, self.b_ub)
        return np.vstack(blocks_a), np.concatenate(blocks_b)

    @property
    def n_constraints(self) -> int:
        m = 2 * self.n + len(self.quad_constraints)
        if self.a_ub is not None:
            m += self.b_ub.size
        return m


@dataclass(frozen=True)
class FeasibilityReport:
    """Signed residuals per constraint family (<= 0 means satisfied)."""

    quad: np.ndarray
    lin: np.ndarray
    box: np.ndarray
    max_violation: float
    worst: tuple[str, int]

    def ok(self, tol: float) -> bool:
        return self.max_violation <= tol


def feasibility_check(program: ConvexProgram, d, tol: float = 0.0) -> FeasibilityReport:
    """Evaluate all constraint residuals at d; used by optimizer audits."""
    d = np.asarray(d, dtype=float)
    quad = np.array([qc.value(d) for qc in program.quad_constraints])
    if program.a_ub is not None:
        lin = program.a_ub @ d - program.b_ub
    else:
        lin = np.empty(0)
    box = np.concatenate([program.lower - d, d - program.upper])
    worst = ("none", -1)
    max_violation = -np.inf
    for name, res in (("quad", quad), ("lin", lin), ("box", box)):
        if res.size and res.max() > max_violation:
            max_violation = float(res.max())
            worst = (name, int(np.argmax(res)))
    return FeasibilityReport(
        quad=quad, lin=lin, box=box, max_violation=max_violation, worst=worst
    )


@dataclass(frozen=True)
class SolveResult:
    d: np.ndarray
    status: str  # optimal | max_iter | infeasible
    objective: float
    gap: float
    stage_objectives: tuple[float, ...] = field(default_factory=tuple)


def _barrier_state(program: ConvexProgram, a_all, b_all, d):
    """Slacks and quadratic residuals; None when d is not strictly interior."""
    slack = b_all - a_all @ d
    if np.any(slack <= 0.0):
        return None
    gq = np.array([qc.value(d) for qc in program.quad_constraints])
    if gq.size and np.any(gq >= 0.0):
        return None
    return slack, gq


def solve(
    program: ConvexProgram,
    start,
    gap_tol: float = 1e-9,
    mu: float = 10.0,
    max_newton: int = 60,
) -> SolveResult:
    """Barrier interior-point solve from a strictly feasible start.

    Runs centering at barrier parameters t = 1, mu, mu^2, ... until
    m/t < gap_tol (m = number of constraints), which bounds the duality
    gap of the returned point.  Newton steps are damped by backtracking
    (Armijo 0.25, shrink 0.5).
    """
    d = np.asarray(start, dtype=float).copy()
    a_all, b_all = program.linear_rows()
    state = _barrier_state(program, a_all, b_all, d)
    if state is None:
        return SolveResult(
            d=d, status="infeasible", objective=float(program.c @ d), gap=np.inf
        )

    m = program.n_constraints
    quads = program.quad_constraints
    c = program.c
    t = 1.0
    stage_converged = True
    stage_objs: list[float] = []

    def barrier_value(d_vec, slack, gq, t_now):
        val = -t_now * (c @ d_vec) - np.log(slack).sum()
        if gq.size:
            val -= np.log(-gq).sum()
        return val

    while True:
        stage_converged = False
        for _ in range(max_newton):
            slack, gq = _barrier_state(program, a_all, b_all, d)
            inv_slack = 1.0 / slack
            grad = -t * c + a_all.T @ inv_slack
            hess = (a_all * inv_slack[:, None] ** 2).T @ a_all
            for qc, g in zip(quads, gq):
                gg = qc.grad(d)
                grad += gg / (-g)
                hess += np.outer(gg, gg) / g**2 + 2.0 * qc.p_matrix / (-g)
            try:
                step = np.linalg.solve(hess, -grad)
            except np.linalg.LinAlgError:
                step = np.linalg.solve(
                    hess + 1e-10 * np.trace(hess) * np.eye(program.n), -grad
                )
            # Newton decrement is affine invariant; lambda^2/2 below 1e-10
            # leaves the m/t duality-gap bound intact (lambda << 1/4)
            decrement = float(-grad @ step)
            if decrement / 2.0 < 1e-10:
                stage_converged = True
                break
            # backtracking: first into the interior, then Armijo
            size = 1.0
            current = barrier_value(d, slack, gq, t)
            while size > 1e-14:
                trial = d + size * step
                trial_state = _barrier_state(program, a_all, b_all, trial)
                if trial_state is not None:
                    t_slack, t_gq = trial_state
                    if barrier_value(trial, t_slack, t_gq, t) <= (
                        current - 0.25 * size * decrement
                    ):
                        break
                size *= 0.5
            else:
                # no float-representable step improves the barrier
                stage_converged = True
                break
            d = d + size * step
        stage_objs.append(float(c @ d))
        if m / t < gap_tol:
            break
        t *= mu

    status = "optimal" if stage_converged else "max_iter"

    return SolveResult(
        d=d,
        status=status,
        objective=float(c @ d),
        gap=m / t,
        stage_objectives=tuple(stage_objs),
    )


def strictly_feasible_point(
    program: ConvexProgram,
    anchor,
    margin: float = 1e-9,
    gap_tol: float = 1e-10,
) -> np.ndarray | None:
    """Point with strictly negative residuals for every constraint, or None.

    Solves the slack-maximization problem max s subject to g_i(d) + s <= 0
    for all constraints of `program`, starting from the always-strictly-
    feasible pair (anchor, -max residual - 1).  Needed because optimizer
    anchors routinely sit exactly on region or spacing boundaries.
    """
    anchor = np.asarray(anchor, dtype=float)
    n = program.n
    report = feasibility_check(program, anchor)
    if report.max_violation < -margin:
        return anchor.copy()

    a_rows, b_rows = program.linear_rows()
    aug_a = np.hstack([a_rows, np.ones((a_rows.shape[0], 1))])
    aug_quads = []
    for qc in program.quad_constraints:
        p_aug = np.zeros((n + 1, n + 1))
        p_aug[:n, :n] = qc.p_matrix
        q_aug = np.concatenate([qc.q_vector, [1.0]])
        aug_quads.append(QuadConstraint(p_aug, q_aug, qc.r_scalar))
    span = float(np.max(program.upper - program.lower))
    s_cap = max(1.0, span)
    aug = ConvexProgram(
        c=np.concatenate([np.zeros(n), [1.0]]),
        quad_constraints=tuple(aug_quads),
        a_ub=aug_a,
        b_ub=b_rows,
        lower=np.concatenate([program.lower - span, [-report.max_violation - 2.0 - s_cap]]),
        upper=np.concatenate([program.upper + span, [s_cap]]),
    )
    start = np.concatenate([anchor, [-report.max_violation - 1.0]])
    result = solve(aug, start, gap_tol=gap_tol)
    if result.status == "infeasible" or result.d[n] <= margin:
        return None
    candidate = result.d[:n]
    if feasibility_check(program, candidate).max_violation < -margin / 2.0:
        return candidate
    return None
