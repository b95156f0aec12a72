"""Numerical traces at interior interfaces and at the two boundary points."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple


@dataclass(frozen=True)
class TraceParams:
    """Penalties ``alpha`` (on [u]) and ``beta`` (on [q]) and boundary weight ``gamma``.

    ``alpha = beta = 0`` gives the alternating (minimal dissipation) fluxes.
    """

    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.5

    def __post_init__(self):
        if not self.alpha >= 0 or not self.beta >= 0:
            raise ValueError(f"penalties must be nonnegative, got alpha={self.alpha}, beta={self.beta}")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")


class TraceValues(NamedTuple):
    u_hat: complex
    q_hat: complex


def jump(v_minus, v_plus):
    return v_minus - v_plus


def interior_trace(u_minus, u_plus, q_minus, q_plus, params: TraceParams) -> TraceValues:
    u_hat = u_minus - 1j * params.beta * jump(q_minus, q_plus)
    q_hat = q_plus + 1j * params.alpha * jump(u_minus, u_plus)
    return TraceValues(u_hat, q_hat)


def _check(f_val: float, gamma: float) -> float:
    if not f_val > 0:
        raise ValueError(f"f must be positive at the boundary, got {f_val}")
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    return math.sqrt(f_val)


def boundary_trace_left(u_a, q_a, f_a: float, gamma: float) -> TraceValues:
    """Traces at ``x = a`` including the incoming-wave constants."""
    r = _check(f_a, gamma)
    u_hat = (1 - gamma) * u_a + 1j * gamma / r * q_a + 2 * gamma
    q_hat = gamma * q_a - 1j * (1 - gamma) * r * u_a + 2j * (1 - gamma) * r
    return TraceValues(u_hat, q_hat)


def boundary_trace_right(u_b, q_b, f_b: float, gamma: float) -> TraceValues:
    r = _check(f_b, gamma)
    u_hat = (1 - gamma) * u_b - 1j * gamma / r * q_b
    q_hat = gamma * q_b + 1j * (1 - gamma) * r * u_b
    return TraceValues(u_hat, q_hat)


def left_boundary_constants(f_a: float, gamma: float) -> TraceValues:
    """Data-only part of the left traces (what remains for ``u_a = q_a = 0``)."""
    return boundary_trace_left(0.0, 0.0, f_a, gamma)
