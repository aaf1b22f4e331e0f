"""Shift-aware multiplicative-update solver.

Factorizes a log-resampled library A (N_log x J) as
R = sum over m of (W shifted down m rows) @ H[m], minimizing the
generalized KL divergence, optionally with an L1 penalty on H. Supports
entry-level freezing of W and H, custom initialization, and a
round-and-refine pass that enforces a per-sample phase-count limit.

Update order within one iteration is H then W, with the reconstruction
refreshed between the two half-steps and after the W step for the
recorded loss. With a single shift copy (M = 1) this reduces to plain
KL-NMF on the log-resampled data.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import kernels
from .model import (
    PRESENCE_THRESHOLD,
    FreezeSpec,
    Instance,
    Solution,
    SolverConfig,
    ValidationError,
)
from .resample import ResamplePlan, to_log

__all__ = [
    "SolverPreconditionError",
    "SolveCancelled",
    "ProgressRecord",
    "reconstruct",
    "kl_loss",
    "update_h",
    "update_w",
    "normalize_w",
    "shift_summary",
    "solve",
]


class SolverPreconditionError(ValueError):
    """Model shape is unusable (e.g. more bases or shifts than grid rows)."""


class SolveCancelled(RuntimeError):
    """Raised when the progress sink requests a stop."""


@dataclass(frozen=True)
class ProgressRecord:
    """One per-iteration progress report handed to the caller's sink.

    ``phase`` is ``solve`` for the relaxed run, ``converged`` when a pass
    meets the convergence criterion ahead of rounding, ``round`` for the
    loss right after activations are zeroed, and ``refine`` during
    post-rounding update passes.
    """

    iteration: int
    loss: float
    wall_ms: float
    phase: str


def _check_factor_shapes(W: np.ndarray, H: np.ndarray) -> None:
    if W.ndim != 2 or H.ndim != 3:
        raise ValidationError("W must be N x K and H must be M x K x J")
    if H.shape[1] != W.shape[1]:
        raise ValidationError(
            f"K mismatch: W has {W.shape[1]} columns, H has {H.shape[1]}"
        )
    if H.shape[0] > W.shape[0]:
        raise ValidationError(
            f"shift copies ({H.shape[0]}) exceed grid rows ({W.shape[0]})"
        )


def reconstruct(W: np.ndarray, H: np.ndarray) -> np.ndarray:
    """Sum of row-shifted copies of W times their activations.

    R[n, j] = sum_{m,k} W[n-m, k] * H[m, k, j], rows shifted past the top
    padded with zero.
    """
    _check_factor_shapes(W, H)
    return kernels.reconstruct(W, H)


def kl_loss(
    A: np.ndarray,
    R: np.ndarray,
    gamma: Optional[np.ndarray] = None,
    H: Optional[np.ndarray] = None,
    eps: float = 1e-12,
) -> float:
    """Generalized KL divergence plus the optional L1 activation penalty.

    Uses the convention 0 log 0 = 0; R is floored at ``eps`` inside the
    log and division only.
    """
    A = np.asarray(A, dtype=np.float64)
    R = np.asarray(R, dtype=np.float64)
    if A.shape != R.shape:
        raise ValidationError(f"A {A.shape} and R {R.shape} differ in shape")
    loss = kernels.kl_divergence(A, R, eps)
    if gamma is not None and H is not None:
        g = np.asarray(gamma, dtype=np.float64)
        for m in range(H.shape[0]):
            loss += float(g[m]) * float(H[m].sum())
    return float(loss)


def _apply_pins(arr: np.ndarray, mask, values) -> np.ndarray:
    if mask is not None:
        arr[mask] = values[mask]
    return arr


def update_h(
    W: np.ndarray,
    H: np.ndarray,
    A: np.ndarray,
    gamma: Optional[np.ndarray] = None,
    h_mask: Optional[np.ndarray] = None,
    h_values: Optional[np.ndarray] = None,
    eps: float = 1e-12,
) -> np.ndarray:
    """One multiplicative H update; pinned entries keep their values.

    The reconstruction is recomputed from the current (W, H) before the
    update. The sparsity weight enters the denominator per shift copy.
    """
    _check_factor_shapes(W, H)
    r = kernels.reconstruct(W, H)
    q = A / np.maximum(r, eps)
    g = np.zeros(H.shape[0]) if gamma is None else np.asarray(gamma, dtype=np.float64)
    out = kernels.update_h(W, H, q, g, eps)
    return _apply_pins(out, h_mask, h_values)


def update_w(
    W: np.ndarray,
    H: np.ndarray,
    A: np.ndarray,
    w_mask: Optional[np.ndarray] = None,
    w_values: Optional[np.ndarray] = None,
    eps: float = 1e-12,
) -> np.ndarray:
    """One multiplicative W update; pinned entries keep their values."""
    _check_factor_shapes(W, H)
    r = kernels.reconstruct(W, H)
    q = A / np.maximum(r, eps)
    out = kernels.update_w(W, H, q, eps)
    return _apply_pins(out, w_mask, w_values)


def normalize_w(
    W: np.ndarray,
    H: np.ndarray,
    skip_columns: Optional[np.ndarray] = None,
) -> tuple:
    """Scale each W column to unit L2 norm, rescaling H to preserve W @ H.

    Columns flagged in ``skip_columns`` (and all-zero columns) are left
    untouched. Returns new (W, H) arrays.
    """
    w = np.array(W, dtype=np.float64)
    h = np.array(H, dtype=np.float64)
    norms = np.sqrt((w * w).sum(axis=0))
    active = norms > 0.0
    if skip_columns is not None:
        active &= ~np.asarray(skip_columns, dtype=bool)
    for k in np.nonzero(active)[0]:
        w[:, k] /= norms[k]
        h[:, k, :] *= norms[k]
    return w, h


def shift_summary(H: np.ndarray, eps: float = 1e-12) -> np.ndarray:
    """Activation-weighted mean row offset per (phase, sample).

    Zero where a phase carries no activation mass at a sample.
    """
    m = H.shape[0]
    weights = np.arange(m, dtype=np.float64).reshape(m, 1, 1)
    num = (weights * H).sum(axis=0)
    den = H.sum(axis=0)
    out = np.zeros_like(den)
    np.divide(num, den, out=out, where=den >= eps)
    return out


class _Engine:
    """Owns the update loop state shared by the relaxed and refine passes."""

    def __init__(self, A, cfg: SolverConfig, freeze: FreezeSpec, progress, inspect):
        self.A = A
        self.cfg = cfg
        self.gamma = cfg.gamma_vector()
        self.sparse = cfg.sparsity_active
        self.w_mask = freeze.w_mask
        self.w_values = freeze.w_values
        self.h_mask = freeze.h_mask
        self.h_values = freeze.h_values
        if freeze.w_mask is not None:
            self.skip_cols = freeze.w_mask.any(axis=0)
        else:
            self.skip_cols = None
        self.progress = progress
        self.inspect = inspect
        self.trace: list = []
        self.segments: list = []
        self.iteration = 0
        self._t0 = time.perf_counter()

    def emit(self, loss: float, phase: str) -> None:
        if self.progress is None:
            return
        rec = ProgressRecord(
            iteration=self.iteration,
            loss=float(loss),
            wall_ms=(time.perf_counter() - self._t0) * 1000.0,
            phase=phase,
        )
        if self.progress(rec) is False:
            raise SolveCancelled()

    def pin(self, W, H) -> None:
        _apply_pins(W, self.w_mask, self.w_values)
        _apply_pins(H, self.h_mask, self.h_values)

    def current_loss(self, R, H) -> float:
        return kl_loss(self.A, R, self.gamma, H, self.cfg.epsilon)

    def run_pass(self, W, H, label: str, start_phase: str) -> tuple:
        """Alternate updates until the relative loss gap closes.

        Records the entry loss as the start of a new trace segment, then
        one loss per iteration. The convergence normalizer is the first
        post-iteration loss of this pass.
        """
        cfg = self.cfg
        eps = cfg.epsilon
        r = kernels.reconstruct(W, H)
        prev = self.current_loss(r, H)
        self.segments.append((label, len(self.trace)))
        self.trace.append(prev)
        self.emit(prev, start_phase)
        ref = None
        for _ in range(cfg.max_iters):
            self.iteration += 1
            if self.sparse:
                W, H = normalize_w(W, H, self.skip_cols)
                _apply_pins(H, self.h_mask, self.h_values)
            H = update_h(W, H, self.A, self.gamma, self.h_mask, self.h_values, eps)
            W = update_w(W, H, self.A, self.w_mask, self.w_values, eps)
            r = kernels.reconstruct(W, H)
            loss = self.current_loss(r, H)
            self.trace.append(loss)
            if self.inspect is not None:
                self.inspect(self.iteration, W, H, r, loss)
            self.emit(loss, label)
            if ref is None:
                ref = loss
            if abs(loss - prev) / max(ref, eps) < cfg.conv_gap:
                return W, H, r
            prev = loss
        return W, H, r


def solve(
    instance: Instance,
    config: SolverConfig,
    freeze: Optional[FreezeSpec] = None,
    progress: Optional[Callable[[ProgressRecord], Optional[bool]]] = None,
    inspect: Optional[Callable] = None,
) -> Solution:
    """Run the full pipeline on a measured instance.

    Resamples the library onto the log grid, initializes W then H
    (uniform on (0, 1] from the seeded generator unless the freeze spec
    supplies initial values), alternates multiplicative updates until the
    relative loss change drops below ``conv_gap``, and, when a Gibbs mode
    is selected, hands off to the round-and-refine routine. Each
    refinement pass gets a fresh ``max_iters`` budget.

    ``progress`` may return False to request a stop at the next iteration
    boundary, which raises SolveCancelled. ``inspect`` is a diagnostics
    hook called as inspect(iteration, W, H, R, loss) after every
    iteration; it must not mutate its arguments.
    """
    plan = ResamplePlan.for_instance_grid(instance.q, config.oversample)
    n_log = len(plan.dst)
    j = instance.n_samples
    if config.k > n_log:
        raise SolverPreconditionError(f"k={config.k} exceeds log grid size {n_log}")
    if config.m > n_log:
        raise SolverPreconditionError(f"m={config.m} exceeds log grid size {n_log}")
    fz = freeze if freeze is not None else FreezeSpec()
    fz.validate_for(n_log, config.k, config.m, j)

    A = to_log(instance.intensity_matrix(), plan)

    rng = np.random.default_rng(config.seed)
    if fz.w_init is not None:
        W = fz.w_init.copy()
    else:
        W = 1.0 - rng.random((n_log, config.k))
    if fz.h_init is not None:
        H = fz.h_init.copy()
    else:
        H = 1.0 - rng.random((config.m, config.k, j))

    engine = _Engine(A, config, fz, progress, inspect)
    engine.pin(W, H)

    W, H, R = engine.run_pass(W, H, "solve", start_phase="solve")
    if config.gibbs != "off":
        from .gibbs import enforce_and_refine

        W, H, R = enforce_and_refine(engine, W, H)

    s = shift_summary(H, config.epsilon)
    lam = np.exp(plan.delta * s)
    contrib = kernels.phase_contribution(W, H)
    total = contrib.sum(axis=0, keepdims=True)
    pres = contrib >= PRESENCE_THRESHOLD * total
    return Solution(
        log_q=plan.dst,
        W=W,
        H=H,
        R=R,
        loss_trace=np.asarray(engine.trace, dtype=np.float64),
        segments=tuple(engine.segments),
        shift=s,
        lam=lam,
        presence=pres,
        config=config,
        iterations=engine.iteration,
    )
