"""Three-point Gauss-Lobatto rule on [0, 1]."""
import numpy as np

NODES = np.array([0.0, 0.5, 1.0])
WEIGHTS = np.array([1.0, 4.0, 1.0]) / 6.0


def lobatto3(f) -> float:
    """Approximate ``int_0^1 f(s) ds``; exact for cubic ``f``."""
    return float(WEIGHTS @ np.array([f(s) for s in NODES], dtype=float))


def remainder_integral(q) -> float:
    """Approximate the Taylor integral-remainder form ``int_0^1 (1 - s) q(s) ds``."""
    return lobatto3(lambda s: (1.0 - s) * q(s))
