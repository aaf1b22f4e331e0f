"""Phase-count limit enforcement by round-and-refine.

After the relaxed solve converges, each sample independently keeps at
most ``n_el`` phases: the rest have their activations (all shift copies)
set to zero, and the multiplicative updates are resumed. Because the
updates are multiplicative, zeroed entries stay zero, so the limit holds
for every later iteration.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from . import kernels
from .model import PRESENCE_THRESHOLD, ValidationError

__all__ = [
    "PresenceMatrix",
    "presence",
    "presence_arrays",
    "select_keep_set",
    "keep_sets",
    "zero_excluded",
    "enforce_and_refine",
]

EXACT_MODE_MAX_K = 16  # C(16, 8) subsets per sample is the practical ceiling
_SUBSET_CHUNK = 2048


@dataclass(frozen=True)
class PresenceMatrix:
    """Per-(phase, sample) modeled-signal mass with a threshold indicator."""

    indicator: np.ndarray  # K x J bool
    contribution: np.ndarray  # K x J


def presence_arrays(W, H, threshold: float = PRESENCE_THRESHOLD):
    """Contribution mass and indicator straight from the factors."""
    if not 0.0 <= threshold < 1.0:
        raise ValidationError("threshold must be in [0, 1)")
    contrib = kernels.phase_contribution(W, H)
    total = contrib.sum(axis=0, keepdims=True)
    return contrib >= threshold * total, contrib


def presence(solution, threshold: float = PRESENCE_THRESHOLD) -> PresenceMatrix:
    """Which phases account for at least ``threshold`` of a sample's signal."""
    ind, contrib = presence_arrays(solution.W, solution.H, threshold)
    return PresenceMatrix(indicator=ind, contribution=contrib)


def _phase_slices(W: np.ndarray, H: np.ndarray, j: int) -> np.ndarray:
    """N x K matrix of per-phase shifted contributions at sample j."""
    n, k = W.shape
    out = np.zeros((n, k), dtype=np.float64)
    for m in range(H.shape[0]):
        out[m:, :] += W[: n - m, :] * H[m, :, j][None, :]
    return out


def _column_kl(a: np.ndarray, r: np.ndarray, eps: float) -> np.ndarray:
    """KL loss of one measured column against many candidate columns."""
    pos = a > 0.0
    ap = a[pos]
    rf = np.maximum(r[pos], eps)
    return r.sum(axis=0) + (ap[:, None] * np.log(ap[:, None] / rf)).sum(axis=0) - ap.sum()


def select_keep_set(
    j: int,
    W: np.ndarray,
    H: np.ndarray,
    A: np.ndarray,
    n_el: int,
    mode: str,
    eps: float = 1e-12,
) -> tuple:
    """Choose which phases survive at sample j.

    greedy keeps the ``n_el`` phases with the largest contribution mass;
    exact enumerates every size-``n_el`` subset, zeroes the rest, and
    keeps the subset whose per-sample KL loss is smallest. Ties resolve
    to the lowest phase indices in both modes.
    """
    k = W.shape[1]
    if k <= n_el:
        return tuple(range(k))
    if mode == "greedy":
        contrib = kernels.phase_contribution(W, H[:, :, j : j + 1])[:, 0]
        order = np.argsort(-contrib, kind="stable")
        return tuple(sorted(int(i) for i in order[:n_el]))
    if mode != "exact":
        raise ValidationError(f"unknown selection mode {mode!r}")
    if k > EXACT_MODE_MAX_K:
        raise ValidationError(
            f"exact selection refused for K={k} > {EXACT_MODE_MAX_K}"
        )
    slices = _phase_slices(W, H, j)
    a = A[:, j]
    subsets = list(combinations(range(k), n_el))
    best_loss = np.inf
    best = subsets[0]
    for start in range(0, len(subsets), _SUBSET_CHUNK):
        chunk = subsets[start : start + _SUBSET_CHUNK]
        sel = np.zeros((k, len(chunk)), dtype=np.float64)
        for c, subset in enumerate(chunk):
            sel[list(subset), c] = 1.0
        losses = _column_kl(a, slices @ sel, eps)
        c = int(np.argmin(losses))
        if losses[c] < best_loss:
            best_loss = float(losses[c])
            best = chunk[c]
    return tuple(best)


def keep_sets(W, H, A, n_el: int, mode: str, eps: float = 1e-12) -> list:
    """Per-sample keep sets; selection is independent across samples."""
    return [
        select_keep_set(j, W, H, A, n_el, mode, eps) for j in range(H.shape[2])
    ]


def zero_excluded(H: np.ndarray, keeps: list) -> np.ndarray:
    """Zero the activations (all shift copies) of phases outside each keep set."""
    out = np.zeros_like(H)
    for j, keep in enumerate(keeps):
        idx = list(keep)
        out[:, idx, j] = H[:, idx, j]
    return out


def enforce_and_refine(engine, W: np.ndarray, H: np.ndarray) -> tuple:
    """Round the converged relaxed solution and refine, once per round.

    Pinned H entries take precedence over rounding: a user pin is a
    stronger contract than the phase-count limit.
    """
    cfg = engine.cfg
    r = None
    for _ in range(cfg.gibbs_rounds):
        engine.emit(engine.trace[-1], "converged")
        keeps = keep_sets(W, H, engine.A, cfg.n_el, cfg.gibbs, cfg.epsilon)
        H = zero_excluded(H, keeps)
        if engine.h_mask is not None:
            H[engine.h_mask] = engine.h_values[engine.h_mask]
        W, H, r = engine.run_pass(W, H, "refine", start_phase="round")
    return W, H, r
