"""Coefficient grid search on the probability simplex, plus sensitivity sweeps.

The simplex is enumerated at a fixed step from integer numerators, so
membership is exact; the evaluator re-runs only fusion, selection and the
metric, never the raw scoring.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from .errors import InvalidStep
from .fusion import Coefficients

AXES = ("alpha", "beta", "gamma")


@dataclass(frozen=True)
class GridPoint:
    coefficients: Coefficients
    metric_value: float
    metric_name: str


@dataclass(frozen=True)
class SweepRow:
    axis: str
    x: float
    coefficients: Coefficients
    metric_name: str
    metric_value: float


def _denominator(step: float) -> int:
    if not 0.0 < step <= 1.0:
        raise InvalidStep(f"step must lie in (0, 1], got {step}")
    m = round(1.0 / step)
    if m < 1 or abs(m * step - 1.0) > 1e-9:
        raise InvalidStep(f"1/step must be an integer, got step {step}")
    return m


def grid_numerators(step: float = 0.1) -> list[tuple[int, int, int, int]]:
    """Exact integer representation (a, b, c, m) of every grid point, a/m etc.

    Enumerated ascending in (a, b), i.e. lexicographically by (alpha, beta).
    """
    m = _denominator(step)
    return [(a, b, m - a - b, m) for a in range(m + 1) for b in range(m + 1 - a)]


def simplex_grid(step: float = 0.1) -> list[Coefficients]:
    """All nonnegative weight triples with denominator 1/step summing to one."""
    return [
        Coefficients(a / m, b / m, c / m) for a, b, c, m in grid_numerators(step)
    ]


def grid_search(
    evaluate: Callable[[Coefficients], float],
    step: float = 0.1,
    metric_name: str = "metric",
) -> tuple[GridPoint, list[GridPoint]]:
    """Evaluate every grid point and return (maximizer, full table).

    Ties resolve to the lexicographically smallest (alpha, beta, gamma),
    which is the first maximum in enumeration order.
    """
    table = [
        GridPoint(coefficients, float(evaluate(coefficients)), metric_name)
        for coefficients in simplex_grid(step)
    ]
    best = table[0]
    for point in table[1:]:
        if point.metric_value > best.metric_value:
            best = point
    return best, table


def sweep_coefficients(axis: str, x: float) -> Coefficients:
    """Coefficients with ``axis`` set to x and the other two at (1 - x) / 2."""
    if axis not in AXES:
        raise ValueError(f"axis must be one of {AXES}, got {axis!r}")
    half = (1.0 - x) / 2.0
    if axis == "alpha":
        return Coefficients(x, half, half)
    if axis == "beta":
        return Coefficients(half, x, half)
    return Coefficients(half, half, x)


def sensitivity_sweep(
    evaluate: Callable[[Coefficients], float],
    axis: str,
    step: float = 0.1,
    metric_name: str = "metric",
) -> list[SweepRow]:
    """Metric curve along one coefficient axis, others split evenly."""
    m = _denominator(step)
    rows = []
    for i in range(m + 1):
        x = i / m
        coefficients = sweep_coefficients(axis, x)
        rows.append(
            SweepRow(axis, x, coefficients, metric_name, float(evaluate(coefficients)))
        )
    return rows
