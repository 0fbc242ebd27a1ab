"""Dense convex QP with a diagonal Hessian, solved by a primal-dual
interior-point method (Mehrotra predictor-corrector).

    minimise    1/2 x^T diag(P) x + q^T x
    subject to  A x <= b,  E x = d,  x >= lower
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

OPTIMAL = "optimal"
MAX_ITER = "max_iter"
INFEASIBLE = "infeasible"
NUMERICAL_FAILURE = "numerical_failure"


@dataclass
class QpProblem:
    hess_diag: np.ndarray
    A: np.ndarray
    b: np.ndarray
    q: np.ndarray | None = None
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    lower: np.ndarray | None = None
    # optional sparsity hint: pairs (rows (g, r), cols (g, c)) such that every
    # row of A is in exactly one group and its nonzeros lie in that group's cols
    row_blocks: tuple | None = None

    def __post_init__(self):
        self.hess_diag = np.asarray(self.hess_diag, float)
        n = self.hess_diag.size
        if np.any(self.hess_diag <= 0):
            raise ValueError("objective Hessian must be positive definite")
        self.A = np.asarray(self.A, float).reshape(-1, n)
        self.b = np.asarray(self.b, float).reshape(-1)
        self.q = np.zeros(n) if self.q is None else np.asarray(self.q, float)
        if self.A_eq is None:
            self.A_eq = np.zeros((0, n))
            self.b_eq = np.zeros(0)
        self.A_eq = np.asarray(self.A_eq, float).reshape(-1, n)
        self.b_eq = np.asarray(self.b_eq, float).reshape(-1)
        if self.lower is None:
            self.lower = np.full(n, -np.inf)
        self.lower = np.asarray(self.lower, float)
        self._gathered = None
        if self.row_blocks is not None:
            self._check_row_blocks()

    def _check_row_blocks(self):
        seen = np.zeros(self.A.shape[0], int)
        covered = np.zeros(self.A.shape, bool)
        for rows, cols in self.row_blocks:
            if len(rows) != len(cols):
                raise ValueError("row_blocks: row and column groups differ in count")
            np.add.at(seen, rows.ravel(), 1)
            covered[rows[:, :, None], cols[:, None, :]] = True
        if np.any(seen != 1):
            raise ValueError("row_blocks must cover every row of A exactly once")
        if np.any(self.A[~covered] != 0):
            raise ValueError("row_blocks miss nonzero entries of A")

    def normal_matrix(self, w) -> np.ndarray:
        """``A^T diag(w) A``, blockwise when ``row_blocks`` is set."""
        if self.row_blocks is None:
            return (self.A.T * w) @ self.A
        n = self.n
        if self._gathered is None:
            self._gathered = [(rows, self.A[rows[:, :, None], cols[:, None, :]],
                               (cols[:, :, None] * n + cols[:, None, :]).ravel())
                              for rows, cols in self.row_blocks]
        out = np.zeros(n * n)
        for rows, L, flat in self._gathered:
            B = np.matmul((L * w[rows][:, :, None]).transpose(0, 2, 1), L)
            out += np.bincount(flat, B.ravel(), n * n)
        return out.reshape(n, n)

    @property
    def n(self) -> int:
        return self.hess_diag.size

    def objective(self, x) -> float:
        return float(0.5 * x @ (self.hess_diag * x) + self.q @ x)


@dataclass
class SolveReport:
    theta: np.ndarray
    objective: float
    kkt_stationarity: float
    kkt_feasibility: float
    kkt_complementarity: float
    status: str
    iterations: int = 0
    outer_iterations: int = 0
    multipliers: dict = field(default_factory=dict)
    certificate: float | None = None
    gap: float = 0.0
    history: list = field(default_factory=list)

    @property
    def kkt_max(self) -> float:
        return max(self.kkt_stationarity, self.kkt_feasibility, self.kkt_complementarity)

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL

    def summary(self) -> dict:
        return {
            "status": self.status,
            "objective": self.objective,
            "kkt_stationarity": self.kkt_stationarity,
            "kkt_feasibility": self.kkt_feasibility,
            "kkt_complementarity": self.kkt_complementarity,
            "iterations": self.iterations,
            "outer_iterations": self.outer_iterations,
        }


def kkt_residuals(p: QpProblem, x, mu, nu, zb) -> tuple[float, float, float]:
    """Stationarity, primal feasibility and complementarity (all inf-norms).

    ``mu`` are the inequality multipliers, ``nu`` the equality ones and
    ``zb`` those of the lower bounds (one per finite bound).
    """
    bnd = np.isfinite(p.lower)
    grad = p.hess_diag * x + p.q + p.A.T @ mu + p.A_eq.T @ nu
    grad[bnd] -= zb
    ax = p.A @ x - p.b
    viol = [0.0]
    if ax.size:
        viol.append(ax.max())
    if p.b_eq.size:
        viol.append(np.abs(p.A_eq @ x - p.b_eq).max())
    if bnd.any():
        viol.append((p.lower[bnd] - x[bnd]).max())
    comp = [0.0]
    if ax.size:
        comp.append(np.abs(mu * ax).max())
    if bnd.any():
        comp.append(np.abs(zb * (x[bnd] - p.lower[bnd])).max())
    return float(np.abs(grad).max()), float(max(viol)), float(max(comp))


def _max_step(v, dv):
    neg = dv < 0
    if not neg.any():
        return 1.0
    return min(1.0, float(np.min(-v[neg] / dv[neg])))


def solve_qp(p: QpProblem, tol: float = 1e-8, max_iter: int = 200, x0=None,
             gap_rel: float = 1e-12, gap_abs: float = 1e-24) -> SolveReport:
    """Interior-point solve.

    ``status == "optimal"`` means the stationarity, feasibility and
    complementarity residuals are all below ``tol``.  Once they are, the
    iteration continues until the duality gap ``s.z`` is below
    ``max(gap_rel * |objective|, gap_abs)`` or stops improving.  Directions
    held only by a tiny diagonal weight are invisible to the residuals, so
    the gap is what pins them; iterating further than about 1e-13 relative
    loses them to rounding, which shows up as a sudden tenfold growth of the step.
    That growth also ends the iteration.
    """
    n = p.n
    bnd = np.flatnonzero(np.isfinite(p.lower))
    m_a, n_b, n_e = p.A.shape[0], bnd.size, p.A_eq.shape[0]
    m = m_a + n_b
    # inequalities G x <= h: dense rows first, then -x_j <= -l_j
    h = np.concatenate([p.b, -p.lower[bnd]])

    def G(x):
        return np.concatenate([p.A @ x, -x[bnd]])

    def GT(z):
        out = p.A.T @ z[:m_a]
        out[bnd] -= z[m_a:]
        return out

    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    y = np.zeros(n_e)
    if m:
        s = np.maximum(h - G(x), 1.0)
        z = np.ones(m)
    else:
        s = z = np.zeros(0)

    scale = max(1.0, np.abs(h).max() if m else 0.0, np.abs(p.b_eq).max() if n_e else 0.0)

    best = None  # (key, x, z, y, gap)
    status = MAX_ITER
    it = 0
    certificate = None
    stalled = 0
    prev_step = None
    kkt = np.zeros((n + n_e, n + n_e))
    for it in range(1, max_iter + 1):
        rd = p.hess_diag * x + p.q + GT(z) + (p.A_eq.T @ y if n_e else 0.0)
        re = p.A_eq @ x - p.b_eq
        viol = G(x) - h
        ri = viol + s
        gap = float(s @ z)
        mu = gap / m if m else 0.0

        # same quantities as kkt_residuals, from vectors already at hand
        worst = np.abs(rd).max()
        if n_e:
            worst = max(worst, np.abs(re).max())
        if m:
            worst = max(worst, viol.max(), np.abs(z * viol).max())
        # the first iterate is the caller's start point; always take a step
        done = worst <= tol and it > 1
        # within tolerance, rank by duality gap; otherwise by the worst residual
        key = (not done, gap if done else worst)
        if best is None or key < best[0]:
            if done:
                stalled = 0 if best is None or best[0][0] or gap < 0.5 * best[4] else stalled + 1
            best = (key, x.copy(), z.copy(), y.copy(), gap)
        elif done:
            stalled += 1
        if done and (gap <= max(gap_rel * abs(p.objective(x)), gap_abs) or stalled >= 3):
            status = OPTIMAL
            break

        # primal infeasibility: multipliers blow up along a Farkas direction
        if m:
            nz = np.hypot(np.linalg.norm(z), np.linalg.norm(y))
            if nz > 1e10 * scale:
                zt, yt = z / nz, y / nz
                ray = np.abs(GT(zt) + (p.A_eq.T @ yt if n_e else 0.0)).max()
                farkas = float(h @ zt + (p.b_eq @ yt if n_e else 0.0))
                if ray < 1e-7 and farkas < -1e-9:
                    status = INFEASIBLE
                    certificate = farkas
                    break

        w = z / s if m else z
        K = kkt[:n, :n]
        K[...] = p.normal_matrix(w[:m_a])
        K[np.diag_indices(n)] += p.hess_diag
        if n_b:
            K[bnd, bnd] += w[m_a:]
        if n_e:
            kkt[:n, n:] = p.A_eq.T
            kkt[n:, :n] = p.A_eq
            kkt[n:, n:] = 0.0
            kkt[n:, n:][np.diag_indices(n_e)] = -1e-14 * scale
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("error", sla.LinAlgWarning)
                kkt_copy = kkt.copy()
                lu = sla.lu_factor(kkt, check_finite=False)
        except (sla.LinAlgWarning, ValueError, np.linalg.LinAlgError):
            status = NUMERICAL_FAILURE
            break

        def newton(rc):
            # eliminate ds = -ri - G dx and dz = (-rc - z*ds)/s
            rhs_x = -rd - GT((-rc + z * ri) / s) if m else -rd
            rhs = np.concatenate([rhs_x, -re])
            sol = sla.lu_solve(lu, rhs, check_finite=False)
            # one round of iterative refinement; w = z/s spans many decades near the end
            sol += sla.lu_solve(lu, rhs - kkt_copy @ sol, check_finite=False)
            dx, dy = sol[:n], sol[n:]
            ds = -ri - G(dx)
            dz = (-rc - z * ds) / s if m else z
            return dx, dy, ds, dz

        if m:
            dx, dy, ds, dz = newton(s * z)
            a_aff = min(_max_step(s, ds), _max_step(z, dz))
            mu_aff = float((s + a_aff * ds) @ (z + a_aff * dz)) / m
            sigma = (mu_aff / mu) ** 3 if mu > 0 else 0.0
            dx, dy, ds, dz = newton(s * z + ds * dz - sigma * mu)
            alpha = min(1.0, 0.995 * min(_max_step(s, ds), _max_step(z, dz)))
        else:
            dx, dy, ds, dz = newton(np.zeros(0))
            alpha = 1.0
        if not (np.all(np.isfinite(dx)) and np.all(np.isfinite(dz))):
            status = NUMERICAL_FAILURE
            break
        step = alpha * float(np.abs(dx).max())
        if done and prev_step is not None and step > 10.0 * prev_step \
                and gap <= 1e-11 * max(abs(p.objective(x)), gap_abs):
            # rounding has taken over; keep the current iterate
            status = OPTIMAL
            best = ((False, gap), x.copy(), z.copy(), y.copy(), gap)
            break
        prev_step = step
        x = x + alpha * dx
        y = y + alpha * dy
        if m:
            s = s + alpha * ds
            z = z + alpha * dz
            np.maximum(s, 1e-300, out=s)
            np.maximum(z, 1e-300, out=z)

    gap = float(s @ z) if m else 0.0
    if best is not None:
        if status != INFEASIBLE and not best[0][0]:
            status = OPTIMAL
        _, x, z, y, gap = best
    stat, feas, comp = kkt_residuals(p, x, z[:m_a], y, z[m_a:])
    return SolveReport(
        theta=x,
        objective=p.objective(x),
        kkt_stationarity=stat,
        kkt_feasibility=feas,
        kkt_complementarity=comp,
        status=status,
        iterations=it,
        multipliers={"ineq": z[:m_a].copy(), "eq": y.copy(), "lower": z[m_a:].copy()},
        certificate=certificate,
        gap=gap,
    )
