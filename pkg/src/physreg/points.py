"""Domain vocabulary: points, samples, snapshots, field variables, layouts.

Coordinates are ordered ``(p1, p2, t)`` everywhere.  Hessians are stored as
6-entry half-vectors ``(h11, h22, h33, h12, h13, h23)``; the matching
quadratic-form vector of a displacement carries the factor 2 on the mixed
terms, so ``lam @ h == xi @ H @ xi``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

# Offsets inside one 11-entry block of field variables.
GRAD = slice(0, 3)
HESS = slice(3, 9)
OMEGA = slice(0, 9)
EPS_G = 9
EPS_Q = 10
BLOCK = 11

# Index pairs of the Hessian half-vector.
HESS_PAIRS = ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))


@dataclass(frozen=True)
class SpatioTemporalPoint:
    p1: float
    p2: float
    t: float

    def __post_init__(self):
        if self.t < 0:
            raise ValueError(f"time must be nonnegative, got {self.t}")

    def as_array(self) -> np.ndarray:
        return np.array([self.p1, self.p2, self.t], dtype=float)

    @classmethod
    def from_array(cls, x) -> "SpatioTemporalPoint":
        return cls(float(x[0]), float(x[1]), float(x[2]))


@dataclass(frozen=True)
class Sample:
    point: SpatioTemporalPoint
    u: float

    def __post_init__(self):
        if not np.isfinite(self.u):
            raise ValueError("sample value must be finite")


@dataclass(frozen=True, eq=False)
class Snapshot:
    """Samples sharing one time instant, stored column-wise.

    ``samples`` materialises :class:`Sample` objects on demand; the numerical
    code works on the ``p`` (n, 2) and ``u`` (n,) arrays directly.
    """

    k: int
    t: float
    p: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float).reshape(-1, 2)
        u = np.asarray(self.u, dtype=float).reshape(-1)
        if len(p) != len(u):
            raise ValueError("point and value arrays differ in length")
        if not np.all(np.isfinite(u)):
            raise ValueError("snapshot contains non-finite values")
        p.setflags(write=False)
        u.setflags(write=False)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "u", u)

    def __len__(self) -> int:
        return len(self.u)

    @property
    def samples(self) -> list[Sample]:
        return [
            Sample(SpatioTemporalPoint(float(a), float(b), self.t), float(v))
            for (a, b), v in zip(self.p, self.u)
        ]

    @property
    def points(self) -> np.ndarray:
        """(n, 3) array of ``(p1, p2, t)``."""
        return np.column_stack([self.p, np.full(len(self.u), self.t)])

    @classmethod
    def from_samples(cls, k: int, samples: Sequence[Sample]) -> "Snapshot":
        if not samples:
            raise ValueError("empty snapshot")
        t = samples[0].point.t
        if any(s.point.t != t for s in samples):
            raise ValueError("all samples of a snapshot must share the same time")
        p = np.array([[s.point.p1, s.point.p2] for s in samples])
        return cls(k, t, p, np.array([s.u for s in samples]))

    def same_nodes(self, other: "Snapshot") -> bool:
        return self.p.shape == other.p.shape and np.array_equal(self.p, other.p)

    def with_values(self, u) -> "Snapshot":
        return Snapshot(self.k, self.t, self.p, u)


@dataclass(frozen=True)
class AxisScaling:
    """Per-axis factors applied to coordinates before constraint assembly."""

    s1: float = 1.0
    s2: float = 1.0
    st: float = 1.0

    def __post_init__(self):
        if min(self.s1, self.s2, self.st) <= 0:
            raise ValueError("scale factors must be strictly positive")

    @property
    def factors(self) -> np.ndarray:
        return np.array([self.s1, self.s2, self.st])

    def scale(self, x):
        return np.asarray(x, dtype=float) * self.factors

    def unscale(self, x):
        return np.asarray(x, dtype=float) / self.factors

    def derivative_factors(self) -> np.ndarray:
        """Multipliers taking scaled-coordinate derivatives to physical ones.

        With ``q = s * x`` we have ``du/dx_j = s_j du/dq_j`` and
        ``d2u/dx_j dx_l = s_j s_l d2u/dq_j dq_l``; the result is ordered like
        the 9 entries of ``omega = (g, h)``.
        """
        s = self.factors
        hess = [s[a] * s[b] for a, b in HESS_PAIRS]
        return np.concatenate([s, hess])


@dataclass(frozen=True)
class Displacement:
    xi: np.ndarray
    r: float
    lam: np.ndarray


def quad_form_vector(xi) -> np.ndarray:
    """Half-vectorisation of ``xi xi^T`` with doubled off-diagonal terms."""
    x1, x2, x3 = xi
    return np.array([x1 * x1, x2 * x2, x3 * x3, 2 * x1 * x2, 2 * x1 * x3, 2 * x2 * x3])


def displacement(frm, to, scaling: AxisScaling | None = None) -> Displacement:
    """Scaled displacement ``to - frm`` with its norm and quadratic-form vector.

    ``frm`` and ``to`` may be :class:`SpatioTemporalPoint` or length-3 arrays.
    """
    scaling = scaling or AxisScaling()
    a = frm.as_array() if isinstance(frm, SpatioTemporalPoint) else np.asarray(frm, float)
    b = to.as_array() if isinstance(to, SpatioTemporalPoint) else np.asarray(to, float)
    xi = scaling.scale(b) - scaling.scale(a)
    return Displacement(xi, float(np.linalg.norm(xi)), quad_form_vector(xi))


def hess_to_half(H) -> np.ndarray:
    H = np.asarray(H, dtype=float)
    return np.array([H[a, b] for a, b in HESS_PAIRS])


def half_to_hess(h) -> np.ndarray:
    H = np.empty((3, 3))
    for v, (a, b) in zip(h, HESS_PAIRS):
        H[a, b] = H[b, a] = v
    return H


@dataclass(frozen=True)
class FieldVars:
    g: np.ndarray
    h: np.ndarray
    eps_g: float = 0.0
    eps_Q: float = 0.0

    def __post_init__(self):
        if self.eps_g < 0 or self.eps_Q < 0:
            raise ValueError("remainder slacks must be nonnegative")

    @property
    def omega(self) -> np.ndarray:
        return np.concatenate([self.g, self.h])

    @property
    def hessian(self) -> np.ndarray:
        return half_to_hess(self.h)

    def to_block(self) -> np.ndarray:
        return np.concatenate([self.g, self.h, [self.eps_g, self.eps_Q]])

    @classmethod
    def from_block(cls, kappa, scaling: AxisScaling | None = None) -> "FieldVars":
        """Read an 11-entry block; with ``scaling`` the derivatives are
        converted back to physical coordinates."""
        kappa = np.asarray(kappa, dtype=float)
        omega = kappa[OMEGA].copy()
        if scaling is not None:
            omega *= scaling.derivative_factors()
        # interior-point iterates can sit a hair below zero
        return cls(omega[GRAD], omega[HESS], max(kappa[EPS_G], 0.0), max(kappa[EPS_Q], 0.0))


@dataclass(frozen=True)
class ThetaLayout:
    """Index map of ``theta = (u', kappa', kappa_1, ..., kappa_k)``."""

    k: int
    dim: int = field(init=False)

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("need at least one neighbor")
        object.__setattr__(self, "dim", 1 + BLOCK * (self.k + 1))

    u_prime = 0

    def block(self, j: int) -> slice:
        """Block of point ``j``: 0 is the query, 1..k the neighbors."""
        if not 0 <= j <= self.k:
            raise IndexError(j)
        start = 1 + BLOCK * j
        return slice(start, start + BLOCK)

    @property
    def query(self) -> slice:
        return self.block(0)

    def neighbor(self, i: int) -> slice:
        """Block of neighbor ``i`` (0-based)."""
        return self.block(i + 1)

    def slack_indices(self) -> np.ndarray:
        starts = 1 + BLOCK * np.arange(self.k + 1)
        return np.sort(np.concatenate([starts + EPS_G, starts + EPS_Q]))

    def offsets(self) -> dict[str, slice]:
        out = {"u_prime": slice(0, 1), "query": self.query}
        out.update({f"neighbor_{i}": self.neighbor(i) for i in range(self.k)})
        return out


def stack_points(items: Iterable) -> np.ndarray:
    """(n, 3) coordinate array from points or samples."""
    rows = []
    for it in items:
        if isinstance(it, Sample):
            it = it.point
        rows.append(it.as_array() if isinstance(it, SpatioTemporalPoint) else np.asarray(it, float))
    return np.array(rows, dtype=float).reshape(-1, 3)
