"""Per-query program: slack-penalty QP plus PDE equalities, with the query's
nonlinear PDE residual handled by successive linearisation."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .constraints import ConstraintSystem
from .physics import PdeModel
from .points import EPS_G, EPS_Q, OMEGA, AxisScaling, ThetaLayout
from .qp import MAX_ITER, OPTIMAL, QpProblem, SolveReport, kkt_residuals, solve_qp


@dataclass(frozen=True)
class SolverConfig:
    rho: float = 1e-9
    tol: float = 1e-8
    max_iter: int = 200
    outer_max_iter: int = 30
    outer_tol: float = 1e-9
    physics: bool = True

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def slack_penalty_hessian(layout: ThetaLayout, rho: float) -> np.ndarray:
    """Diagonal of ``2 * (sum of squared slacks + rho |theta|^2)``."""
    P = np.full(layout.dim, 2.0 * rho)
    P[layout.slack_indices()] += 2.0
    return P


def slack_lower_bounds(layout: ThetaLayout) -> np.ndarray:
    lo = np.full(layout.dim, -np.inf)
    lo[layout.slack_indices()] = 0.0
    return lo


def base_problem(system: ConstraintSystem, rho: float, pde: PdeModel | None = None,
                 u_neighbors: Sequence[float] = (), scaling: AxisScaling | None = None) -> QpProblem:
    """QP with the Taylor inequalities and, if ``pde`` is given, one linear
    PDE row per neighbor."""
    layout = system.layout
    rows, rhs = [], []
    if pde is not None:
        dfac = (scaling or AxisScaling()).derivative_factors()
        for i, u in enumerate(u_neighbors):
            c, d = pde.sample_equality(float(u))
            row = np.zeros(layout.dim)
            row[layout.neighbor(i)][OMEGA] = c * dfac
            rows.append(row)
            rhs.append(d)
    A_eq = np.array(rows).reshape(-1, layout.dim)
    return QpProblem(
        slack_penalty_hessian(layout, rho), system.A, system.b,
        A_eq=A_eq, b_eq=np.array(rhs), lower=slack_lower_bounds(layout),
        row_blocks=system.row_blocks,
    )


def _query_residual(pde, theta, layout, dfac):
    omega = theta[layout.query][OMEGA] * dfac
    res, grad = pde.query_residual(float(theta[0]), omega)
    row = np.zeros(layout.dim)
    row[0] = grad[0]
    row[layout.query][OMEGA] = grad[1:] * dfac
    return res, row


def _with_row(p: QpProblem, row, rhs) -> QpProblem:
    return QpProblem(p.hess_diag, p.A, p.b, q=p.q,
                     A_eq=np.vstack([p.A_eq, row]), b_eq=np.append(p.b_eq, rhs), lower=p.lower,
                     row_blocks=p.row_blocks)


def solve_sqp(system: ConstraintSystem, pde: PdeModel | None, u_neighbors: Sequence[float],
              init, cfg: SolverConfig | None = None, scaling: AxisScaling | None = None) -> SolveReport:
    """Solve the per-query program.

    Without physics (``pde is None`` or ``cfg.physics`` false) this is a
    single QP.  Otherwise the query's PDE residual is linearised at the
    current iterate and appended as an equality; steps after the first are
    damped by backtracking on ``objective + penalty * |residual|``.
    ``init`` supplies the first linearisation point and the QP start.
    """
    cfg = cfg or SolverConfig()
    layout = system.layout
    scaling = scaling or AxisScaling()
    physics = pde is not None and cfg.physics
    base = base_problem(system, cfg.rho, pde if physics else None, u_neighbors, scaling)
    theta = np.asarray(init, dtype=float)
    if not physics:
        rep = solve_qp(base, cfg.tol, cfg.max_iter, x0=theta)
        rep.outer_iterations = 1
        return rep

    dfac = scaling.derivative_factors()
    history = []
    penalty = 1.0
    merit = None
    rep = None
    inner = 0
    for outer in range(1, cfg.outer_max_iter + 1):
        res, row = _query_residual(pde, theta, layout, dfac)
        # linearisation: res + row.(x - theta) = 0
        qp = _with_row(base, row, row @ theta - res)
        cand = solve_qp(qp, cfg.tol, cfg.max_iter, x0=theta)
        inner += cand.iterations
        if cand.status != OPTIMAL:
            cand.outer_iterations = outer
            cand.iterations = inner
            cand.history = history
            return cand if rep is None else _finish(rep, cand.status, outer, inner, history)
        penalty = max(penalty, 2.0 * abs(cand.multipliers["eq"][-1]))

        def phi(x):
            return base.objective(x) + penalty * abs(pde_residual(pde, x, layout, dfac))

        step = cand.theta - theta
        if rep is None:
            gamma = 1.0
        else:
            merit = phi(theta)
            # both QP solutions are optimal only up to their duality gaps
            slack = rep.gap + cand.gap + 1e-15 * max(1.0, abs(merit))
            gamma = 1.0
            while phi(theta + gamma * step) > merit + slack and gamma > 1e-6:
                gamma *= 0.5
            if gamma <= 1e-6:
                return _finish(rep, MAX_ITER, outer, inner, history)
        theta = theta + gamma * step
        rep = cand
        if gamma < 1.0:
            # report residuals at the damped point, not at the QP optimum
            m = rep.multipliers
            rep.theta = theta
            rep.objective = base.objective(theta)
            rep.kkt_stationarity, rep.kkt_feasibility, rep.kkt_complementarity = kkt_residuals(
                qp, theta, m["ineq"], m["eq"], m["lower"])
        res_new = pde_residual(pde, theta, layout, dfac)
        history.append({"gamma": gamma, "residual": res_new, "merit": phi(theta),
                        "step": float(np.abs(gamma * step).max())})
        if abs(res_new) <= cfg.outer_tol or (outer > 1 and gamma * np.abs(step).max() <= cfg.outer_tol):
            return _finish(rep, OPTIMAL, outer, inner, history)
    return _finish(rep, MAX_ITER, cfg.outer_max_iter, inner, history)


def pde_residual(pde, theta, layout, dfac) -> float:
    omega = theta[layout.query][OMEGA] * dfac
    return pde.query_residual(float(theta[0]), omega)[0]


def _finish(rep: SolveReport, status, outer, inner, history) -> SolveReport:
    rep.status = status
    rep.outer_iterations = outer
    rep.iterations = inner
    rep.history = history
    return rep


def slack_summary(theta, layout: ThetaLayout) -> tuple[float, float]:
    blocks = [theta[layout.block(j)] for j in range(layout.k + 1)]
    return max(b[EPS_G] for b in blocks), max(b[EPS_Q] for b in blocks)
