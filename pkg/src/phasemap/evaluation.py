"""Synthetic ternary systems and solution-quality metrics.

The generator places phase anchors on the composition triangle,
triangulates them, and mixes Gaussian-peak patterns with barycentric
weights, so every sample contains at most three phases by construction.
Peak positions scale per sample by a factor that grows linearly with
distance from the phase's anchor, up to ``alloy_max``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial import Delaunay

from . import kernels
from .gibbs import presence_arrays
from .model import Instance, QGrid, Solution, ValidationError, validate_instance
from .resample import ResamplePlan, from_log

__all__ = [
    "SyntheticSpec",
    "GroundTruth",
    "generate",
    "matched_l2",
    "gibbs_percentage",
]

# 2-D corners of the composition triangle, one per element
_CORNERS = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3.0) / 2.0]])

EXHAUSTIVE_MATCH_MAX_K = 8


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of one generated system."""

    k: int = 3
    peaks_per_phase: int = 6
    grid_per_edge: int = 15
    n_q: int = 256
    q_min: float = 1.0
    q_max: float = 4.0
    alloy_max: float = 1.0
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.k < 3:
            raise ValidationError("need at least 3 anchors on the simplex")
        if self.peaks_per_phase < 1:
            raise ValidationError("peaks_per_phase must be >= 1")
        if self.grid_per_edge < 1:
            raise ValidationError("grid_per_edge must be >= 1")
        if self.n_q < 8:
            raise ValidationError("n_q must be >= 8")
        if not 0.0 < self.q_min < self.q_max:
            raise ValidationError("need 0 < q_min < q_max")
        if self.alloy_max < 1.0:
            raise ValidationError("alloy_max must be >= 1")
        if self.noise_sigma < 0.0:
            raise ValidationError("noise_sigma must be >= 0")


@dataclass(frozen=True)
class GroundTruth:
    """What the generator mixed: per-(phase, sample) signals and shifts."""

    q: QGrid
    signals: np.ndarray  # K x J x N
    weights: np.ndarray  # K x J
    lam: np.ndarray  # K x J

    @property
    def k(self) -> int:
        return int(self.signals.shape[0])

    def noiseless_intensity(self) -> np.ndarray:
        """J x N intensities before noise was added."""
        return self.signals.sum(axis=0)

    def total_signal(self) -> float:
        return float(self.signals.sum())


def _to_xy(bary: np.ndarray) -> np.ndarray:
    """Barycentric (…, 3) to 2-D triangle coordinates (…, 2)."""
    return bary @ _CORNERS


def _lattice_compositions(g: int) -> np.ndarray:
    comps = []
    for i in range(g + 1):
        for j in range(g + 1 - i):
            comps.append((i, j, g - i - j))
    return np.asarray(comps, dtype=np.float64) / g


def _place_anchors(k: int, rng: np.random.Generator) -> np.ndarray:
    """Corners first, then well-separated interior anchors."""
    anchors = [
        np.array([1.0, 0.0, 0.0]),
        np.array([0.0, 1.0, 0.0]),
        np.array([0.0, 0.0, 1.0]),
    ]
    min_sep = 0.5 / math.sqrt(k)
    while len(anchors) < k:
        best_cand, best_d = None, -1.0
        for _ in range(200):
            cand = rng.dirichlet((2.0, 2.0, 2.0))
            d = min(np.linalg.norm(_to_xy(cand) - _to_xy(a)) for a in anchors)
            if d > best_d:
                best_cand, best_d = cand, d
            if d > min_sep:
                break
        anchors.append(np.asarray(best_cand, dtype=np.float64))
    return np.vstack(anchors)


def _gaussian_mix(q: np.ndarray, centers, widths, amps) -> np.ndarray:
    out = np.zeros_like(q)
    for c, w, a in zip(centers, widths, amps):
        out += a * np.exp(-0.5 * ((q - c) / w) ** 2)
    return out


def generate(spec: SyntheticSpec):
    """Build one synthetic system; returns (Instance, GroundTruth).

    Deterministic per seed: the generator draws anchors, then peak
    parameters, then noise, in that order.
    """
    rng = np.random.default_rng(spec.seed)
    anchors = _place_anchors(spec.k, rng)
    anchor_xy = _to_xy(anchors)
    tri = Delaunay(anchor_xy)

    comps = _lattice_compositions(spec.grid_per_edge)
    j_count = comps.shape[0]
    sample_xy = _to_xy(comps)

    weights = np.zeros((spec.k, j_count))
    simplex_ids = tri.find_simplex(sample_xy, tol=1e-12)
    for j in range(j_count):
        s = simplex_ids[j]
        if s < 0:
            raise ValidationError("sample outside the anchor hull")
        verts = tri.simplices[s]
        t = tri.transform[s]
        bary2 = t[:2] @ (sample_xy[j] - t[2])
        bary = np.append(bary2, 1.0 - bary2.sum())
        bary = np.clip(bary, 0.0, None)
        bary /= bary.sum()
        weights[verts, j] = bary
    if np.any(weights.sum(axis=1) == 0.0):
        raise ValidationError("lattice too coarse to contain all anchors")

    # peak parameters; centers leave headroom so alloying keeps peaks in range
    span = spec.q_max - spec.q_min
    lo = spec.q_min + 0.04 * span
    hi = (spec.q_max - 0.04 * span) / spec.alloy_max
    centers = rng.uniform(lo, hi, size=(spec.k, spec.peaks_per_phase))
    widths = rng.uniform(0.006, 0.014, size=(spec.k, spec.peaks_per_phase)) * span
    amps = rng.uniform(0.5, 1.0, size=(spec.k, spec.peaks_per_phase))

    # per-sample scaling: 1 at the anchor, alloy_max at the farthest corner
    lam = np.ones((spec.k, j_count))
    if spec.alloy_max > 1.0:
        for k in range(spec.k):
            d = np.linalg.norm(sample_xy - anchor_xy[k], axis=1)
            d_max = max(np.linalg.norm(c - anchor_xy[k]) for c in _CORNERS)
            lam[k] = 1.0 + (spec.alloy_max - 1.0) * d / d_max

    q = np.linspace(spec.q_min, spec.q_max, spec.n_q)
    signals = np.zeros((spec.k, j_count, spec.n_q))
    for k in range(spec.k):
        for j in range(j_count):
            w = weights[k, j]
            if w == 0.0:
                continue
            signals[k, j] = w * _gaussian_mix(
                q / lam[k, j], centers[k], widths[k], amps[k]
            )

    intensity = signals.sum(axis=0)
    if spec.noise_sigma > 0.0:
        intensity = intensity + rng.normal(0.0, spec.noise_sigma, intensity.shape)
        intensity = np.clip(intensity, 0.0, None)

    doc = {
        "elements": ["A", "B", "C"],
        "q": q.tolist(),
        "samples": [
            {
                "id": f"s{j:04d}",
                "composition": comps[j].tolist(),
                "intensity": intensity[j].tolist(),
            }
            for j in range(j_count)
        ],
    }
    instance = validate_instance(doc)
    truth = GroundTruth(q=instance.q, signals=signals, weights=weights, lam=lam)
    return instance, truth


def _modeled_phase_signals(solution: Solution, truth: GroundTruth) -> np.ndarray:
    """K x J x N per-phase reconstructions on the instance grid."""
    plan = ResamplePlan(src=truth.q, dst=solution.log_q)
    n_log, k = solution.W.shape
    j = solution.H.shape[2]
    out = np.empty((k, j, len(truth.q)))
    for a in range(k):
        log_slice = kernels.reconstruct(
            solution.W[:, a : a + 1], solution.H[:, a : a + 1, :]
        )
        out[a] = from_log(log_slice, plan).T
    return out


def matched_l2(solution: Solution, truth: GroundTruth) -> float:
    """Best-permutation squared-L2 mismatch, scaled by the total signal.

    Per-phase modeled signals (shift included) are mapped back to the
    instance grid and matched against the ground-truth phases by the
    assignment that minimizes the summed squared difference.
    """
    if solution.k != truth.k:
        raise ValidationError(
            f"phase count mismatch: solution {solution.k}, truth {truth.k}"
        )
    k = truth.k
    modeled = _modeled_phase_signals(solution, truth)
    cost = np.empty((k, k))
    for a in range(k):
        for b in range(k):
            cost[a, b] = float(((modeled[a] - truth.signals[b]) ** 2).sum())
    if k <= EXHAUSTIVE_MATCH_MAX_K:
        best = min(
            sum(cost[a, p[a]] for a in range(k)) for p in permutations(range(k))
        )
    else:
        rows, cols = linear_sum_assignment(cost)
        best = float(cost[rows, cols].sum())
    return float(best / truth.total_signal())


def gibbs_percentage(
    solution: Solution, n_el: int, threshold: float = 0.01
) -> float:
    """Fraction of samples whose present-phase count is within the limit."""
    indicator, _ = presence_arrays(solution.W, solution.H, threshold)
    counts = indicator.sum(axis=0)
    return float(np.mean(counts <= n_el))
