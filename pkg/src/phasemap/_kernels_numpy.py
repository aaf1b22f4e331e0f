"""Pure-numpy reference implementations of the hot kernels.

All functions are pure: inputs are never mutated. Shapes follow the
package convention A,R: N x J; W: N x K; H: M x K x J. Shift copy m uses
rows of W shifted down m places with zero padding, so shifted rows drop
out of every sum (they contribute zero to numerators and denominators
alike).
"""

from __future__ import annotations

import numpy as np


def reconstruct(W: np.ndarray, H: np.ndarray) -> np.ndarray:
    n = W.shape[0]
    m_copies, _, j = H.shape
    r = np.zeros((n, j), dtype=np.float64)
    for m in range(m_copies):
        r[m:] += W[: n - m] @ H[m]
    return r


def kl_divergence(A: np.ndarray, R: np.ndarray, eps: float) -> float:
    mask = A > 0.0
    a = A[mask]
    rf = np.maximum(R[mask], eps)
    return float(R.sum() + np.sum(a * np.log(a / rf)) - a.sum())


def per_sample_kl(A: np.ndarray, R: np.ndarray, eps: float) -> np.ndarray:
    terms = np.zeros_like(A)
    mask = A > 0.0
    a = A[mask]
    rf = np.maximum(R[mask], eps)
    terms[mask] = a * np.log(a / rf) - a
    return R.sum(axis=0) + terms.sum(axis=0)


def update_h(
    W: np.ndarray,
    H: np.ndarray,
    Q: np.ndarray,
    gamma: np.ndarray,
    eps: float,
) -> np.ndarray:
    n = W.shape[0]
    out = np.empty_like(H)
    for m in range(H.shape[0]):
        t = n - m
        num = W[:t].T @ Q[m:]
        den = W[:t].sum(axis=0) + gamma[m]
        out[m] = H[m] * (num / np.maximum(den, eps)[:, None])
    return out


def update_w(W: np.ndarray, H: np.ndarray, Q: np.ndarray, eps: float) -> np.ndarray:
    n, k = W.shape
    num = np.zeros((n, k), dtype=np.float64)
    den = np.zeros((n, k), dtype=np.float64)
    for m in range(H.shape[0]):
        t = n - m
        num[:t] += Q[m:] @ H[m].T
        den[:t] += H[m].sum(axis=1)[None, :]
    return W * (num / np.maximum(den, eps))


def phase_contribution(W: np.ndarray, H: np.ndarray) -> np.ndarray:
    n = W.shape[0]
    m_copies, k, j = H.shape
    c = np.zeros((k, j), dtype=np.float64)
    for m in range(m_copies):
        c += W[: n - m].sum(axis=0)[:, None] * H[m]
    return c
