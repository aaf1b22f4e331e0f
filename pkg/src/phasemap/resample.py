"""Resampling between a measured q grid and a geometric (log-uniform) grid.

On a geometric grid a multiplicative scaling of q becomes an integer row
offset, which is what lets the solver model peak shifting as row-shifted
copies of the basis matrix. Linear interpolation is used in both
directions: it preserves non-negativity, and anything outside the source
range maps to zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import QGrid, ValidationError

__all__ = [
    "ResamplePlan",
    "build_log_grid",
    "to_log",
    "from_log",
    "shift_to_lambda",
    "oversample_for_shift",
]


def build_log_grid(src: QGrid, oversample: float = 1.0) -> QGrid:
    """Build a geometric grid spanning the source grid.

    The point count is ceil(oversample * (N - 1)) + 1, i.e. the log span
    divided by the source's mean log spacing, scaled by ``oversample``.
    A source grid that is already geometric is returned unchanged when
    oversample is 1.
    """
    if oversample <= 0.0:
        raise ValidationError("oversample must be > 0")
    if src.kind == "geometric" and oversample == 1.0:
        return src
    n = len(src)
    n_log = math.ceil(oversample * (n - 1)) + 1
    lo, hi = math.log(src.qmin), math.log(src.qmax)
    delta = (hi - lo) / (n_log - 1)
    values = np.exp(np.linspace(lo, hi, n_log))
    # pin the endpoints exactly to the source range
    values[0] = src.qmin
    values[-1] = src.qmax
    return QGrid(values=values, kind="geometric", delta=delta)


@dataclass(frozen=True)
class ResamplePlan:
    """Pairing of a source grid with a geometric destination grid."""

    src: QGrid
    dst: QGrid

    def __post_init__(self):
        if self.dst.kind != "geometric":
            raise ValidationError("destination grid must be geometric")
        if self.dst.qmin < self.src.qmin - 1e-12 * self.src.qmin:
            raise ValidationError("destination grid extends below the source")
        if self.dst.qmax > self.src.qmax + 1e-12 * self.src.qmax:
            raise ValidationError("destination grid extends above the source")

    @staticmethod
    def for_instance_grid(src: QGrid, oversample: float = 1.0) -> "ResamplePlan":
        return ResamplePlan(src=src, dst=build_log_grid(src, oversample))

    @property
    def delta(self) -> float:
        return float(self.dst.delta)


def _interp(x_out: np.ndarray, x_in: np.ndarray, signal: np.ndarray) -> np.ndarray:
    signal = np.asarray(signal, dtype=np.float64)
    if signal.shape[0] != x_in.size:
        raise ValidationError(
            f"signal length {signal.shape[0]} does not match grid {x_in.size}"
        )
    if signal.ndim == 1:
        return np.interp(x_out, x_in, signal, left=0.0, right=0.0)
    out = np.empty((x_out.size,) + signal.shape[1:], dtype=np.float64)
    for j in range(signal.shape[1]):
        out[:, j] = np.interp(x_out, x_in, signal[:, j], left=0.0, right=0.0)
    return out


def to_log(signal: np.ndarray, plan: ResamplePlan) -> np.ndarray:
    """Interpolate a signal (vector or N x J matrix) onto the log grid."""
    return _interp(plan.dst.values, plan.src.values, signal)


def from_log(signal: np.ndarray, plan: ResamplePlan) -> np.ndarray:
    """Interpolate a log-grid signal back onto the source grid."""
    return _interp(plan.src.values, plan.dst.values, signal)


def shift_to_lambda(m: int, delta: float) -> float:
    """Multiplicative q scaling corresponding to an integer row offset."""
    return math.exp(m * delta)


def oversample_for_shift(src: QGrid, n_copies: int, lambda_max: float) -> float:
    """Oversample factor so that n_copies row offsets span lambda_max.

    Picks the coarsest grid whose spacing delta satisfies
    (n_copies - 1) * delta >= log(lambda_max), so the discrete shift range
    covers the requested scaling.
    """
    if n_copies < 2:
        raise ValidationError("need at least two shift copies to cover a range")
    if lambda_max <= 1.0:
        raise ValidationError("lambda_max must be > 1")
    span = math.log(src.qmax) - math.log(src.qmin)
    target = math.log(lambda_max) / (n_copies - 1)
    steps = max(1, math.floor(span / target))
    # nudge below the integer so the ceil in build_log_grid lands on it
    return (steps - 0.5) / (len(src) - 1)
