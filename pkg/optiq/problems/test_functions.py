"""
Built-in test-function suite with closed-form gradients and Hessians.
"""
from typing import Callable, Dict, List, Optional

import numpy as np

from optiq.errors import ConfigurationError
from optiq.problems.least_squares import make_synthetic_least_squares
from optiq.problems.objectives import ObjectiveFunction, make_quadratic


def quadratic_example() -> ObjectiveFunction:
    """0.5(x1 - 1)^2 + 50(x1 - x2)^2, minimizer (1, 1)."""
    return make_quadratic(
        Q=np.array([[101.0, -100.0], [-100.0, 100.0]]),
        b=np.array([-1.0, 0.0]),
        constant=0.5,
        name="quadratic_example",
        default_start=[0.0, 0.0],
    )


def booth() -> ObjectiveFunction:
    """(x + 2y - 7)^2 + (2x + y - 5)^2, minimizer (1, 3)."""
    return make_quadratic(
        Q=np.array([[10.0, 8.0], [8.0, 10.0]]),
        b=np.array([-34.0, -38.0]),
        constant=74.0,
        name="booth",
        default_start=[0.0, 0.0],
    )


def three_hump() -> ObjectiveFunction:
    """Three-hump camel 2x^2 - 1.05x^4 + x^6/6 + xy + y^2."""

    def value(p):
        x, y = p
        return 2 * x**2 - 1.05 * x**4 + x**6 / 6 + x * y + y**2

    def gradient(p):
        x, y = p
        return np.array([4 * x - 4.2 * x**3 + x**5 + y, x + 2 * y])

    def hessian(p):
        x, _ = p
        return np.array([[4 - 12.6 * x**2 + 5 * x**4, 1.0], [1.0, 2.0]])

    # from (2, -2) optiq and damped Newton stop at the local minimizer near (1.748, -0.874), f ~ 0.2986
    return ObjectiveFunction(2, value, gradient, hessian, name="three_hump", default_start=[0.25, -0.25])


def himmelblau() -> ObjectiveFunction:
    """(x^2 + y - 11)^2 + (x + y^2 - 7)^2, four minimizers with f = 0."""

    def value(p):
        x, y = p
        return (x**2 + y - 11) ** 2 + (x + y**2 - 7) ** 2

    def gradient(p):
        x, y = p
        a = x**2 + y - 11
        b = x + y**2 - 7
        return np.array([4 * x * a + 2 * b, 2 * a + 4 * y * b])

    def hessian(p):
        x, y = p
        hxy = 4 * x + 4 * y
        return np.array([
            [12 * x**2 + 4 * y - 42, hxy],
            [hxy, 4 * x + 12 * y**2 - 26],
        ])

    return ObjectiveFunction(2, value, gradient, hessian, name="himmelblau", default_start=[0.0, 0.0])


def rosenbrock() -> ObjectiveFunction:
    """100(y - x^2)^2 + (1 - x)^2, minimizer (1, 1)."""

    def value(p):
        x, y = p
        return 100 * (y - x**2) ** 2 + (1 - x) ** 2

    def gradient(p):
        x, y = p
        return np.array([-400 * x * (y - x**2) - 2 * (1 - x), 200 * (y - x**2)])

    def hessian(p):
        x, y = p
        return np.array([[1200 * x**2 - 400 * y + 2, -400 * x], [-400 * x, 200.0]])

    return ObjectiveFunction(2, value, gradient, hessian, name="rosenbrock", default_start=[-1.2, 1.0])


def extended_wood(n: int = 4) -> ObjectiveFunction:
    """Wood function tiled over n/4 independent four-variable blocks."""
    if n < 4 or n % 4 != 0:
        raise ConfigurationError(f"extended_wood needs n divisible by 4, got {n}")

    def split(x):
        return x[0::4], x[1::4], x[2::4], x[3::4]

    def value(x):
        x1, x2, x3, x4 = split(x)
        return float(np.sum(
            100 * (x2 - x1**2) ** 2 + (1 - x1) ** 2
            + 90 * (x4 - x3**2) ** 2 + (1 - x3) ** 2
            + 10 * (x2 + x4 - 2) ** 2 + 0.1 * (x2 - x4) ** 2
        ))

    def gradient(x):
        x1, x2, x3, x4 = split(x)
        g = np.empty_like(x)
        g[0::4] = -400 * x1 * (x2 - x1**2) - 2 * (1 - x1)
        g[1::4] = 200 * (x2 - x1**2) + 20 * (x2 + x4 - 2) + 0.2 * (x2 - x4)
        g[2::4] = -360 * x3 * (x4 - x3**2) - 2 * (1 - x3)
        g[3::4] = 180 * (x4 - x3**2) + 20 * (x2 + x4 - 2) - 0.2 * (x2 - x4)
        return g

    def hessian(x):
        x1, x2, x3, x4 = split(x)
        H = np.zeros((n, n))
        i1 = np.arange(0, n, 4)
        i2, i3, i4 = i1 + 1, i1 + 2, i1 + 3
        H[i1, i1] = 1200 * x1**2 - 400 * x2 + 2
        H[i1, i2] = H[i2, i1] = -400 * x1
        H[i2, i2] = 220.2
        H[i2, i4] = H[i4, i2] = 19.8
        H[i3, i3] = 1080 * x3**2 - 360 * x4 + 2
        H[i3, i4] = H[i4, i3] = -360 * x3
        H[i4, i4] = 200.2
        return H

    return ObjectiveFunction(
        n, value, gradient, hessian, name="extended_wood",
        default_start=np.tile([-3.0, -1.0, -3.0, -1.0], n // 4),
    )


def least_squares_synthetic(n: int = 16, seed: Optional[int] = None) -> ObjectiveFunction:
    if n < 1:
        raise ConfigurationError(f"least_squares_synthetic needs n >= 1, got {n}")
    return make_synthetic_least_squares(n, seed=seed)


FIXED_DIMENSION: Dict[str, Callable[[], ObjectiveFunction]] = {
    "quadratic_example": quadratic_example,
    "booth": booth,
    "three_hump": three_hump,
    "himmelblau": himmelblau,
    "rosenbrock": rosenbrock,
}

VARIABLE_DIMENSION: Dict[str, Callable[..., ObjectiveFunction]] = {
    "extended_wood": extended_wood,
    "least_squares_synthetic": least_squares_synthetic,
}


def available_problems() -> List[str]:
    return sorted([*FIXED_DIMENSION, *VARIABLE_DIMENSION])


def make_test_function(name: str, n: Optional[int] = None, seed: Optional[int] = None) -> ObjectiveFunction:
    """Build a named test function.

    Args:
        name: Problem identifier (see ``available_problems``)
        n: Dimension for extended_wood / least_squares_synthetic; ignored otherwise
        seed: Load perturbation seed for least_squares_synthetic

    Returns:
        ObjectiveFunction with analytic gradient and Hessian
    """
    if name in FIXED_DIMENSION:
        return FIXED_DIMENSION[name]()
    if name not in VARIABLE_DIMENSION:
        raise ConfigurationError(f"unknown problem {name!r}; choose from {', '.join(available_problems())}")
    if n is not None and (isinstance(n, bool) or int(n) != n):
        raise ConfigurationError(f"n must be an integer, got {n!r}")

    builder = VARIABLE_DIMENSION[name]
    if name == "least_squares_synthetic":
        return builder(16 if n is None else int(n), seed=seed)
    return builder(4 if n is None else int(n))
