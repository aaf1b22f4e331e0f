"""Shared domain types, dimension conventions, and input validation.

Convention used throughout the package: the data matrix A is N x J
(rows = q bins, columns = samples), the basis matrix W is N x K, and the
activation tensor H is M x K x J (one K x J slice per shift copy).
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict
from typing import Optional, Sequence, Union

import numpy as np

__all__ = [
    "ValidationError",
    "QGrid",
    "Sample",
    "Instance",
    "SolverConfig",
    "FreezeSpec",
    "Solution",
    "validate_instance",
]

COMPOSITION_TOL = 1e-6
NEGATIVE_CLAMP_BAND = 1e-9  # relative to the largest intensity in the instance
GEOMETRIC_TOL = 1e-12
PRESENCE_THRESHOLD = 0.01  # reporting threshold: 1% of modeled signal


class ValidationError(ValueError):
    """Raised when an input document violates a domain invariant."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class QGrid:
    """Strictly increasing, positive scattering-vector grid.

    ``delta`` is the constant log spacing and is defined only for
    geometric grids (``kind == "geometric"``).
    """

    values: np.ndarray
    kind: str
    delta: Optional[float]

    def __post_init__(self):
        object.__setattr__(self, "values", _readonly(self.values))
        v = self.values
        if v.ndim != 1 or v.size < 2:
            raise ValidationError("q grid needs at least two points")
        if v[0] <= 0.0:
            raise ValidationError("q values must be positive")
        if not np.all(np.diff(v) > 0.0):
            raise ValidationError("non-increasing q")
        if self.kind == "geometric":
            if self.delta is None or self.delta <= 0.0:
                raise ValidationError("geometric grid requires delta > 0")
            logs = np.log(v)
            if np.max(np.abs(np.diff(logs) - self.delta)) >= GEOMETRIC_TOL:
                raise ValidationError("grid is not geometric with the stated delta")
        elif self.kind == "linear":
            if self.delta is not None:
                raise ValidationError("delta is defined only for geometric grids")
        else:
            raise ValidationError(f"unknown grid kind {self.kind!r}")

    @staticmethod
    def from_values(values) -> "QGrid":
        """Build a grid from raw values, detecting geometric spacing."""
        v = np.asarray(values, dtype=np.float64)
        if v.ndim != 1 or v.size < 2:
            raise ValidationError("q grid needs at least two points")
        if v[0] <= 0.0 or not np.all(np.diff(v) > 0.0):
            # dispatch to the common error paths
            return QGrid(values=v, kind="linear", delta=None)
        logs = np.log(v)
        delta = (logs[-1] - logs[0]) / (v.size - 1)
        if delta > 0 and np.max(np.abs(np.diff(logs) - delta)) < GEOMETRIC_TOL:
            return QGrid(values=v, kind="geometric", delta=float(delta))
        return QGrid(values=v, kind="linear", delta=None)

    def __len__(self) -> int:
        return int(self.values.size)

    @property
    def qmin(self) -> float:
        return float(self.values[0])

    @property
    def qmax(self) -> float:
        return float(self.values[-1])


@dataclass(frozen=True)
class Sample:
    """One measured sample: composition on the element simplex plus a pattern."""

    id: str
    composition: np.ndarray
    intensity: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "composition", _readonly(self.composition))
        object.__setattr__(self, "intensity", _readonly(self.intensity))


@dataclass(frozen=True)
class Instance:
    """A measured library: shared q grid plus per-sample records."""

    elements: tuple
    q: QGrid
    samples: tuple

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    @property
    def n_samples(self) -> int:
        return len(self.samples)

    def intensity_matrix(self) -> np.ndarray:
        """Stack intensities into the N x J data matrix."""
        return np.column_stack([s.intensity for s in self.samples])

    def composition_matrix(self) -> np.ndarray:
        """E x J matrix of sample compositions."""
        return np.column_stack([s.composition for s in self.samples])


def validate_instance(raw: dict) -> Instance:
    """Validate a parsed instance document and build an Instance.

    Tiny negative intensities within ``-1e-9 * max`` of zero are clamped to
    zero (background-subtracted detector output); anything below that band
    is an error.
    """
    if not isinstance(raw, dict):
        raise ValidationError("instance document must be a mapping")
    try:
        elements = tuple(str(e) for e in raw["elements"])
        q_values = raw["q"]
        sample_docs = raw["samples"]
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"missing instance field: {exc}") from exc
    if len(elements) < 1:
        raise ValidationError("instance needs at least one element")

    q = QGrid.from_values(q_values)
    n = len(q)
    n_el = len(elements)

    if not sample_docs:
        raise ValidationError("instance needs at least one sample")

    # Clamp band is relative to the global intensity maximum.
    all_int = []
    for doc in sample_docs:
        arr = np.asarray(doc["intensity"], dtype=np.float64)
        if arr.shape != (n,):
            raise ValidationError(
                f"ragged lengths: sample {doc.get('id')!r} has {arr.size} "
                f"intensity values, grid has {n}"
            )
        all_int.append(arr)
    global_max = max(float(a.max()) for a in all_int)
    band = -NEGATIVE_CLAMP_BAND * max(global_max, 0.0)

    samples = []
    for doc, arr in zip(sample_docs, all_int):
        comp = np.asarray(doc["composition"], dtype=np.float64)
        if comp.shape != (n_el,):
            raise ValidationError(
                f"ragged lengths: sample {doc.get('id')!r} has {comp.size} "
                f"composition entries, instance has {n_el} elements"
            )
        if np.any(comp < 0.0) or abs(float(comp.sum()) - 1.0) >= COMPOSITION_TOL:
            raise ValidationError(
                f"composition not on simplex for sample {doc.get('id')!r}"
            )
        if np.any(arr < band):
            raise ValidationError(
                f"intensity below clamp band for sample {doc.get('id')!r}"
            )
        arr = np.where(arr < 0.0, 0.0, arr)
        samples.append(Sample(id=str(doc["id"]), composition=comp, intensity=arr))

    return Instance(elements=elements, q=q, samples=tuple(samples))


GIBBS_MODES = ("off", "greedy", "exact")


@dataclass(frozen=True)
class SolverConfig:
    """Solver settings.

    ``sparsity`` is the per-shift L1 weight on H; a scalar broadcasts over
    all M shift copies. ``oversample`` controls the log-grid density and
    thereby the shift resolution (lambda step = exp(delta)).
    """

    k: int
    m: int = 1
    sparsity: Union[float, Sequence[float]] = 0.0
    conv_gap: float = 2e-5
    max_iters: int = 5000
    seed: int = 0
    n_el: int = 3
    gibbs: str = "off"
    gibbs_rounds: int = 1
    epsilon: float = 1e-12
    oversample: float = 1.0

    def __post_init__(self):
        if self.k < 1:
            raise ValidationError("k must be >= 1")
        if self.m < 1:
            raise ValidationError("m must be >= 1")
        if self.conv_gap <= 0.0:
            raise ValidationError("conv_gap must be > 0")
        if self.max_iters < 1:
            raise ValidationError("max_iters must be >= 1")
        if self.n_el < 1:
            raise ValidationError("n_el must be >= 1")
        if self.gibbs not in GIBBS_MODES:
            raise ValidationError(f"gibbs must be one of {GIBBS_MODES}")
        if self.gibbs_rounds < 1:
            raise ValidationError("gibbs_rounds must be >= 1")
        if self.epsilon <= 0.0:
            raise ValidationError("epsilon must be > 0")
        if self.oversample <= 0.0:
            raise ValidationError("oversample must be > 0")
        if np.any(np.asarray(self.gamma_vector(self.m)) < 0.0):
            raise ValidationError("sparsity weights must be >= 0")

    def gamma_vector(self, m: Optional[int] = None) -> np.ndarray:
        """Sparsity weights as a length-M vector (scalar broadcasts)."""
        m = self.m if m is None else m
        g = np.asarray(self.sparsity, dtype=np.float64)
        if g.ndim == 0:
            return np.full(m, float(g))
        if g.shape != (m,):
            raise ValidationError(f"sparsity must be scalar or length {m}")
        return g.copy()

    @property
    def sparsity_active(self) -> bool:
        return bool(np.any(self.gamma_vector() > 0.0))

    def to_dict(self) -> dict:
        d = asdict(self)
        g = np.asarray(self.sparsity, dtype=np.float64)
        d["sparsity"] = float(g) if g.ndim == 0 else [float(x) for x in g]
        return d

    @staticmethod
    def from_dict(d: dict) -> "SolverConfig":
        sp = d.get("sparsity", 0.0)
        if isinstance(sp, list):
            sp = tuple(sp)
        return SolverConfig(
            k=int(d["k"]),
            m=int(d.get("m", 1)),
            sparsity=sp,
            conv_gap=float(d.get("conv_gap", 2e-5)),
            max_iters=int(d.get("max_iters", 5000)),
            seed=int(d.get("seed", 0)),
            n_el=int(d.get("n_el", 3)),
            gibbs=str(d.get("gibbs", "off")),
            gibbs_rounds=int(d.get("gibbs_rounds", 1)),
            epsilon=float(d.get("epsilon", 1e-12)),
            oversample=float(d.get("oversample", 1.0)),
        )


def _opt_array(a, dtype) -> Optional[np.ndarray]:
    if a is None:
        return None
    out = np.ascontiguousarray(a, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class FreezeSpec:
    """Entry-level pins and optional initial values for W and H.

    Mask entries set to True are held bit-exactly at the matching value
    for every iteration. ``w_init`` / ``h_init`` seed the search without
    pinning.
    """

    w_mask: Optional[np.ndarray] = None
    w_values: Optional[np.ndarray] = None
    h_mask: Optional[np.ndarray] = None
    h_values: Optional[np.ndarray] = None
    w_init: Optional[np.ndarray] = None
    h_init: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "w_mask", _opt_array(self.w_mask, np.bool_))
        object.__setattr__(self, "h_mask", _opt_array(self.h_mask, np.bool_))
        for name in ("w_values", "h_values", "w_init", "h_init"):
            arr = _opt_array(getattr(self, name), np.float64)
            if arr is not None and np.any(arr < 0.0):
                raise ValidationError(f"{name} must be non-negative")
            object.__setattr__(self, name, arr)
        if (self.w_mask is None) != (self.w_values is None):
            raise ValidationError("w_mask and w_values must be given together")
        if (self.h_mask is None) != (self.h_values is None):
            raise ValidationError("h_mask and h_values must be given together")

    def validate_for(self, n_log: int, k: int, m: int, j: int) -> None:
        """Check that every supplied array matches the model dimensions."""
        shapes = {
            "w_mask": (n_log, k),
            "w_values": (n_log, k),
            "w_init": (n_log, k),
            "h_mask": (m, k, j),
            "h_values": (m, k, j),
            "h_init": (m, k, j),
        }
        for name, want in shapes.items():
            arr = getattr(self, name)
            if arr is not None and arr.shape != want:
                raise ValidationError(
                    f"{name} has shape {arr.shape}, model needs {want}"
                )

    @property
    def empty(self) -> bool:
        return all(
            getattr(self, n) is None
            for n in ("w_mask", "h_mask", "w_init", "h_init")
        )


@dataclass(frozen=True)
class Solution:
    """Converged factorization plus derived summaries.

    ``segments`` marks where each monotone stretch of ``loss_trace``
    begins: the relaxed solve, then one segment per round-and-refine pass
    (rounding reintroduces loss, so the trace is non-increasing only
    within a segment).
    """

    log_q: QGrid
    W: np.ndarray
    H: np.ndarray
    R: np.ndarray
    loss_trace: np.ndarray
    segments: tuple  # ((label, start_index), ...)
    shift: np.ndarray  # K x J fractional shift s
    lam: np.ndarray  # K x J, exp(delta * s)
    presence: np.ndarray  # K x J bool at the reporting threshold
    config: SolverConfig
    iterations: int = 0

    def __post_init__(self):
        for name in ("W", "H", "R", "loss_trace", "shift", "lam"):
            object.__setattr__(self, name, _readonly(getattr(self, name)))
        p = np.ascontiguousarray(self.presence, dtype=np.bool_)
        p.setflags(write=False)
        object.__setattr__(self, "presence", p)
        object.__setattr__(self, "segments", tuple(tuple(s) for s in self.segments))

    @property
    def k(self) -> int:
        return int(self.W.shape[1])

    @property
    def m(self) -> int:
        return int(self.H.shape[0])

    @property
    def n_samples(self) -> int:
        return int(self.H.shape[2])
