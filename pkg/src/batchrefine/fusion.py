"""Sigmoid scaling of the raw scores, convex fusion, and per-sample selection.

Each raw dimension is squashed into (0, 1) by sigmoid(u * x) with a
dedicated scaling factor u, then combined linearly with weights on the
probability simplex. The candidate with the highest fused score wins.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Candidate, ScoreVector
from .errors import EmptyValidation, InvalidCoefficients

SIMPLEX_TOLERANCE = 1e-12
DEGENERATE_SIGMA = 1e-9

DIMENSIONS = ("s_sta", "s_ent", "s_unc")


@dataclass(frozen=True)
class Coefficients:
    """Fusion weights; nonnegative and summing to one within 1e-12."""

    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        if min(self.alpha, self.beta, self.gamma) < 0.0:
            raise InvalidCoefficients(f"negative weight in {self.as_tuple()}")
        if abs(self.alpha + self.beta + self.gamma - 1.0) > SIMPLEX_TOLERANCE:
            raise InvalidCoefficients(
                f"weights {self.as_tuple()} sum to {self.alpha + self.beta + self.gamma!r}, not 1"
            )

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.alpha, self.beta, self.gamma)


@dataclass(frozen=True)
class ScalingFactors:
    """Per-dimension sigmoid scaling factors, fixed or fitted on validation."""

    u_sta: float
    u_ent: float
    u_unc: float
    fit_source: str = "fixed"
    degenerate: tuple[str, ...] = ()

    def __post_init__(self):
        for name, value in zip(("u_sta", "u_ent", "u_unc"), self.as_tuple()):
            if not value > 0.0:
                raise ValueError(f"{name} must be > 0, got {value}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.u_sta, self.u_ent, self.u_unc)


def fit_scaling(
    raw_scores: Sequence[tuple[float, float, float]], run_id: str = "validation"
) -> ScalingFactors:
    """Fit u per dimension as the inverse population standard deviation.

    A near-constant dimension (sigma < 1e-9) gets u = 1 and is recorded in
    the degeneracy flags.
    """
    arr = np.asarray(list(raw_scores), dtype=np.float64)
    if arr.size == 0:
        raise EmptyValidation("cannot fit scaling factors on an empty validation run")
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError("raw_scores must be a sequence of (s_sta, s_ent, s_unc) triples")
    sigma = arr.std(axis=0)
    factors = []
    degenerate = []
    for name, s in zip(DIMENSIONS, sigma):
        if s < DEGENERATE_SIGMA:
            factors.append(1.0)
            degenerate.append(name)
        else:
            factors.append(1.0 / float(s))
    return ScalingFactors(
        u_sta=factors[0],
        u_ent=factors[1],
        u_unc=factors[2],
        fit_source=f"fitted:{run_id}",
        degenerate=tuple(degenerate),
    )


def sigmoid_scale(raw: float, u: float) -> float:
    """1 / (1 + exp(-u * raw)), computed overflow-safely.

    Mathematically strictly inside (0, 1); in float64 the value saturates
    to the closed endpoints once |u * raw| exceeds roughly 37.
    """
    if not u > 0.0:
        raise ValueError(f"scaling factor must be > 0, got {u}")
    x = u * raw
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


def fuse(scaled: tuple[float, float, float], coefficients: Coefficients) -> float:
    """Convex combination of the three scaled scores."""
    a, b, g = coefficients.as_tuple()
    return a * scaled[0] + b * scaled[1] + g * scaled[2]


def scale_and_fuse(
    raw: tuple[float, float, float],
    scaling: ScalingFactors,
    coefficients: Coefficients,
) -> ScoreVector:
    scaled = tuple(sigmoid_scale(r, u) for r, u in zip(raw, scaling.as_tuple()))
    return ScoreVector(
        s_sta=raw[0],
        s_ent=raw[1],
        s_unc=raw[2],
        s_sta_scaled=scaled[0],
        s_ent_scaled=scaled[1],
        s_unc_scaled=scaled[2],
        final=fuse(scaled, coefficients),
    )


def select(candidates: Sequence[Candidate], finals: Sequence[float]) -> int:
    """Argmax candidate_id; ties go to the lowest minimum source rank, then id."""
    if not candidates:
        raise ValueError("cannot select from an empty group")
    if len(candidates) != len(finals):
        raise ValueError("one final score per candidate required")
    best_key = None
    best_id = -1
    for cand, final in zip(candidates, finals):
        key = (-final, cand.min_rank, cand.candidate_id)
        if best_key is None or key < best_key:
            best_key = key
            best_id = cand.candidate_id
    return best_id
