"""Taylor-consistency inequalities between a query and samples.

Every block has four rows.  Rows 1-2 bound the expansion taken *about the
right-hand point* toward the left-hand point, rows 3-4 the reverse
expansion.  Both use the Hessian-corrected trapezoid relation

    u_l - u_r = 1/2 xi^T (g_l + g_r) + 1/12 lam^T (h_r - h_l) + remainder,
    xi = x_l - x_r,

with ``|remainder| <= (eps_g_l + eps_g_r) r^5 + eps_Q r^4`` where the
quartic term is charged to the point the expansion is taken about.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Sequence

import numpy as np

from .points import (
    BLOCK,
    EPS_G,
    EPS_Q,
    AxisScaling,
    Sample,
    SpatioTemporalPoint,
    ThetaLayout,
    quad_form_vector,
    stack_points,
)

_SIGNS = np.array([1.0, -1.0, -1.0, 1.0])


class DuplicatePointError(ValueError):
    pass


@dataclass(frozen=True)
class ConstraintBlock:
    """4-row block ``rows @ theta[targets] <= rhs``.

    ``targets`` lists the theta index ranges the columns address, in order.
    """

    rows: np.ndarray
    rhs: np.ndarray
    targets: tuple[slice, ...]


@dataclass(frozen=True)
class ConstraintSystem:
    A: np.ndarray
    b: np.ndarray
    layout: ThetaLayout

    @property
    def m(self) -> int:
        return self.A.shape[0]

    def residual(self, theta) -> np.ndarray:
        return self.A @ theta - self.b

    @property
    def row_blocks(self) -> tuple[tuple[np.ndarray, np.ndarray], ...]:
        """Row groups and the columns their nonzeros live in (see ``QpProblem``)."""
        return row_blocks(self.layout.k)

    def to_csv(self, path) -> None:
        """Dump ``[A | b]`` with full precision for cross-checking."""
        header = ",".join([f"theta{j}" for j in range(self.layout.dim)] + ["b"])
        np.savetxt(path, np.column_stack([self.A, self.b]), delimiter=",",
                   header=header, comments="", fmt="%.17g")


def pair_rows(x_left, x_right) -> tuple[np.ndarray, np.ndarray]:
    """Coefficients of the left (11) and right (11) field-variable blocks.

    The left point plays the role of the query.  Returns ``(L, R)`` of shape
    (4, 11) each; the state-value column is ``[1, -1, -1, 1]`` on the left.
    """
    xi = np.asarray(x_left, float) - np.asarray(x_right, float)
    r = float(np.sqrt(xi @ xi))
    lam = quad_form_vector(xi) / 12.0
    half = 0.5 * xi
    r4 = r ** 4
    r5 = r4 * r
    L = np.zeros((4, BLOCK))
    R = np.zeros((4, BLOCK))
    # expansion about the right point
    L[0, :3], L[0, 3:9] = -half, lam
    R[0, :3], R[0, 3:9] = -half, -lam
    # reverse expansion: xi' = -xi, lam' = lam
    L[2, :3], L[2, 3:9] = half, -lam
    R[2, :3], R[2, 3:9] = half, lam
    L[1, :9], R[1, :9] = -L[0, :9], -R[0, :9]
    L[3, :9], R[3, :9] = -L[2, :9], -R[2, :9]
    L[:, EPS_G] = -r5
    R[:, EPS_G] = -r5
    R[:2, EPS_Q] = -r4
    L[2:, EPS_Q] = -r4
    return L, R


def _coords(obj, scaling: AxisScaling) -> np.ndarray:
    if isinstance(obj, Sample):
        obj = obj.point
    if isinstance(obj, SpatioTemporalPoint):
        obj = obj.as_array()
    return scaling.scale(obj)


def query_sample_block(query, sample: Sample, scaling: AxisScaling | None = None,
                       layout: ThetaLayout | None = None, index: int = 0) -> ConstraintBlock:
    """Block over ``(u', kappa', kappa_i)`` relating the query to one sample."""
    scaling = scaling or AxisScaling()
    L, R = pair_rows(_coords(query, scaling), _coords(sample, scaling))
    rows = np.column_stack([_SIGNS, L, R])
    layout = layout or ThetaLayout(index + 1)
    targets = (slice(0, 1), layout.query, layout.neighbor(index))
    return ConstraintBlock(rows, _SIGNS * sample.u, targets)


def sample_pair_block(a: Sample, b: Sample, scaling: AxisScaling | None = None,
                      layout: ThetaLayout | None = None, ia: int = 0, ib: int = 1) -> ConstraintBlock:
    """Block over ``(kappa_a, kappa_b)``; ``a`` stands in for the query."""
    scaling = scaling or AxisScaling()
    L, R = pair_rows(_coords(a, scaling), _coords(b, scaling))
    layout = layout or ThetaLayout(max(ia, ib) + 1)
    targets = (layout.neighbor(ia), layout.neighbor(ib))
    return ConstraintBlock(np.hstack([L, R]), _SIGNS * (b.u - a.u), targets)


def system_size(k: int) -> tuple[int, int]:
    """Rows and columns of the assembled system for ``k`` neighbors."""
    return 4 * k + 2 * k * (k - 1), 1 + BLOCK * (k + 1)


@lru_cache(maxsize=64)
def row_blocks(k: int) -> tuple[tuple[np.ndarray, np.ndarray], ...]:
    """Sparsity groups of the assembled system: each 4-row block touches only
    ``u'`` and the query block (query pairs) or two neighbor blocks."""
    layout = ThetaLayout(k)
    cols = np.arange(layout.dim)
    q_cols = np.concatenate([[0], cols[layout.query]])
    q_blocks = (np.arange(4 * k).reshape(k, 4),
                np.array([np.concatenate([q_cols, cols[layout.neighbor(i)]]) for i in range(k)]))
    blocks = [q_blocks]
    pairs = list(combinations(range(k), 2))
    if pairs:
        blocks.append((4 * k + np.arange(4 * len(pairs)).reshape(-1, 4),
                       np.array([np.concatenate([cols[layout.neighbor(i)], cols[layout.neighbor(j)]])
                                 for i, j in pairs])))
    for arr in (a for blk in blocks for a in blk):
        arr.setflags(write=False)
    return tuple(blocks)


def assemble_arrays(xq, X, U) -> ConstraintSystem:
    """Assemble from already-scaled coordinates.

    ``xq`` is (3,), ``X`` is (k, 3), ``U`` is (k,).  Row order: query-sample
    blocks by neighbor index, then pair blocks for ``i < j`` lexicographically.
    """
    X = np.asarray(X, float)
    U = np.asarray(U, float)
    k = len(X)
    if k < 1:
        raise ValueError("need at least one neighbor")
    layout = ThetaLayout(k)
    m, dim = system_size(k)
    A = np.zeros((m, dim))
    b = np.empty(m)
    qcols = layout.query
    for i in range(k):
        L, R = pair_rows(xq, X[i])
        rs = slice(4 * i, 4 * i + 4)
        A[rs, 0] = _SIGNS
        A[rs, qcols] = L
        A[rs, layout.neighbor(i)] = R
        b[rs] = _SIGNS * U[i]
    row = 4 * k
    for i, j in combinations(range(k), 2):
        if np.array_equal(X[i], X[j]):
            raise DuplicatePointError(f"neighbors {i} and {j} share the same point")
        L, R = pair_rows(X[i], X[j])
        rs = slice(row, row + 4)
        A[rs, layout.neighbor(i)] = L
        A[rs, layout.neighbor(j)] = R
        b[rs] = _SIGNS * (U[j] - U[i])
        row += 4
    return ConstraintSystem(A, b, layout)


def assemble(query, neighbors: Sequence[Sample], scaling: AxisScaling | None = None) -> ConstraintSystem:
    scaling = scaling or AxisScaling()
    if len(neighbors) == 0:
        raise ValueError("need at least one neighbor")
    X = scaling.scale(stack_points(neighbors))
    U = np.array([s.u for s in neighbors])
    return assemble_arrays(_coords(query, scaling), X, U)
