"""Backend dispatch for the numeric hot kernels.

The numba backend is used by default when numba imports cleanly; set the
environment variable ``PHASEMAP_NUMBA=0`` before import to force the
pure-numpy path. ``set_backend`` switches at runtime (used by tests and
by the kernel benchmark).
"""

from __future__ import annotations

import os

from . import _kernels_numpy

_IMPLS = {"numpy": _kernels_numpy}

_env = os.environ.get("PHASEMAP_NUMBA", "1").strip().lower()
if _env not in ("0", "false", "no", "off"):
    try:
        from . import _kernels_numba

        _IMPLS["numba"] = _kernels_numba
    except ImportError:  # pragma: no cover - numba missing or broken
        pass

_active = "numba" if "numba" in _IMPLS else "numpy"


def available_backends() -> tuple:
    return tuple(sorted(_IMPLS))


def active_backend() -> str:
    return _active


def set_backend(name: str) -> str:
    """Select a kernel backend; returns the previously active one."""
    global _active
    if name not in _IMPLS:
        raise ValueError(f"unknown backend {name!r}; have {available_backends()}")
    previous = _active
    _active = name
    return previous


def reconstruct(W, H):
    """R[n, j] = sum over m, k of W[n - m, k] * H[m, k, j] (zero padded)."""
    return _IMPLS[_active].reconstruct(W, H)


def kl_divergence(A, R, eps):
    """Generalized KL divergence sum(A log(A/R) - A + R), 0 log 0 = 0."""
    return _IMPLS[_active].kl_divergence(A, R, eps)


def per_sample_kl(A, R, eps):
    """Column-wise generalized KL divergence (one value per sample)."""
    return _IMPLS[_active].per_sample_kl(A, R, eps)


def update_h(W, H, Q, gamma, eps):
    """Multiplicative H update; Q is the elementwise ratio A / max(R, eps)."""
    return _IMPLS[_active].update_h(W, H, Q, gamma, eps)


def update_w(W, H, Q, eps):
    """Multiplicative W update; shifted-out rows contribute nothing."""
    return _IMPLS[_active].update_w(W, H, Q, eps)


def phase_contribution(W, H):
    """Per-(phase, sample) mass of the modeled signal, a K x J matrix."""
    return _IMPLS[_active].phase_contribution(W, H)
