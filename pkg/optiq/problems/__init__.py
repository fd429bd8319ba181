from optiq.problems.objectives import ObjectiveFunction, make_quadratic
from optiq.problems.least_squares import make_least_squares
from optiq.problems.test_functions import available_problems, make_test_function

__all__ = [
    "ObjectiveFunction",
    "make_quadratic",
    "make_least_squares",
    "make_test_function",
    "available_problems",
]
