"""PDE equality constraints on field variables.

A model acts on ``omega = (g1, g2, gt, h11, h22, htt, h12, h1t, h2t)`` in
physical coordinates.  At a sample the state is known and the PDE is a
linear row over ``omega``; at the query the state is a decision variable and
the PDE may be nonlinear in it.
"""
from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np


class PdeModel(ABC):
    @abstractmethod
    def sample_equality(self, u: float) -> tuple[np.ndarray, float]:
        """Row ``c`` and rhs ``d`` with ``c @ omega = d`` at a sample of state ``u``."""

    @abstractmethod
    def query_residual(self, u: float, omega) -> tuple[float, np.ndarray]:
        """PDE residual at the query and its gradient wrt ``(u, omega)``."""

    @property
    def is_linear(self) -> bool:
        return False


@dataclass(frozen=True)
class StateQuadraticPde(PdeModel):
    """``coef @ omega + a0 + a1 u + a2 u^2 = 0``.

    Covers heat, advection-diffusion and the logistic reaction-diffusion
    family used in the benchmarks.
    """

    coef: np.ndarray
    a0: float = 0.0
    a1: float = 0.0
    a2: float = 0.0

    def __post_init__(self):
        c = np.asarray(self.coef, dtype=float).reshape(9)
        c.setflags(write=False)
        object.__setattr__(self, "coef", c)

    def source(self, u: float) -> float:
        return self.a0 + self.a1 * u + self.a2 * u * u

    def sample_equality(self, u):
        return -self.coef, self.source(u)

    def query_residual(self, u, omega):
        res = float(self.coef @ np.asarray(omega, float)) + self.source(u)
        grad = np.concatenate([[self.a1 + 2.0 * self.a2 * u], self.coef])
        return res, grad

    @property
    def is_linear(self) -> bool:
        return self.a2 == 0.0


@dataclass(frozen=True)
class RdsParams:
    """Coefficients of ``u_t = nu lap(u) + alpha u - beta u^2 + w . grad(u)``."""

    nu: float = 0.02
    alpha: float = 1.0
    beta: float = 0.008
    w: tuple[float, float] = field(default=(0.1, -0.06))

    def __post_init__(self):
        if self.nu <= 0:
            raise ValueError("diffusivity must be positive")
        object.__setattr__(self, "w", tuple(float(v) for v in self.w))

    @property
    def equilibrium(self) -> float:
        return self.alpha / self.beta if self.beta else np.inf

    def to_dict(self) -> dict:
        return {"nu": self.nu, "alpha": self.alpha, "beta": self.beta, "w": list(self.w)}


def rds_model(params: RdsParams | None = None) -> StateQuadraticPde:
    p = params or RdsParams()
    w1, w2 = p.w
    coef = [w1, w2, -1.0, p.nu, p.nu, 0.0, 0.0, 0.0, 0.0]
    return StateQuadraticPde(np.array(coef), 0.0, p.alpha, -p.beta)


def rds_sample_equality(u_i: float, params: RdsParams | None = None):
    return rds_model(params).sample_equality(u_i)


def rds_query_residual(u_prime: float, omega_prime, params: RdsParams | None = None):
    return rds_model(params).query_residual(u_prime, omega_prime)


def heat_model(nu: float) -> StateQuadraticPde:
    """``u_t = nu (u_11 + u_22)``."""
    return StateQuadraticPde(np.array([0, 0, -1.0, nu, nu, 0, 0, 0, 0]))
