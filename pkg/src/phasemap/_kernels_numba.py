"""Numba-compiled implementations of the hot kernels.

Same contracts as ``_kernels_numpy``; explicit loops instead of BLAS
calls. No fastmath and no parallel sections, so results are
deterministic for a fixed input.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def reconstruct(W, H):
    n = W.shape[0]
    m_copies, k, j = H.shape
    r = np.zeros((n, j), dtype=np.float64)
    for m in range(m_copies):
        for a in range(k):
            for i in range(n - m):
                w = W[i, a]
                if w == 0.0:
                    continue
                for b in range(j):
                    r[i + m, b] += w * H[m, a, b]
    return r


@njit(cache=True)
def kl_divergence(A, R, eps):
    n, j = A.shape
    total = 0.0
    for i in range(n):
        for b in range(j):
            r = R[i, b]
            total += r
            a = A[i, b]
            if a > 0.0:
                rf = r if r > eps else eps
                total += a * np.log(a / rf) - a
    return total


@njit(cache=True)
def per_sample_kl(A, R, eps):
    n, j = A.shape
    out = np.zeros(j, dtype=np.float64)
    for b in range(j):
        s = 0.0
        for i in range(n):
            r = R[i, b]
            s += r
            a = A[i, b]
            if a > 0.0:
                rf = r if r > eps else eps
                s += a * np.log(a / rf) - a
        out[b] = s
    return out


@njit(cache=True)
def update_h(W, H, Q, gamma, eps):
    n = W.shape[0]
    m_copies, k, j = H.shape
    out = np.empty_like(H)
    num = np.zeros((k, j), dtype=np.float64)
    for m in range(m_copies):
        t = n - m
        num[:, :] = 0.0
        for i in range(t):  # row-major accumulation over W and Q rows
            for a in range(k):
                w = W[i, a]
                if w == 0.0:
                    continue
                for b in range(j):
                    num[a, b] += w * Q[i + m, b]
        for a in range(k):
            den = 0.0
            for i in range(t):
                den += W[i, a]
            den += gamma[m]
            if den < eps:
                den = eps
            for b in range(j):
                out[m, a, b] = H[m, a, b] * (num[a, b] / den)
    return out


@njit(cache=True)
def update_w(W, H, Q, eps):
    n, k = W.shape
    m_copies = H.shape[0]
    j = H.shape[2]
    num = np.zeros((n, k), dtype=np.float64)
    den = np.zeros((n, k), dtype=np.float64)
    for m in range(m_copies):
        t = n - m
        for a in range(k):
            hsum = 0.0
            for b in range(j):
                hsum += H[m, a, b]
            for i in range(t):
                acc = 0.0
                for b in range(j):
                    acc += Q[i + m, b] * H[m, a, b]
                num[i, a] += acc
                den[i, a] += hsum
    out = np.empty_like(W)
    for i in range(n):
        for a in range(k):
            d = den[i, a]
            if d < eps:
                d = eps
            out[i, a] = W[i, a] * (num[i, a] / d)
    return out


@njit(cache=True)
def phase_contribution(W, H):
    n = W.shape[0]
    m_copies, k, j = H.shape
    c = np.zeros((k, j), dtype=np.float64)
    for m in range(m_copies):
        t = n - m
        for a in range(k):
            wsum = 0.0
            for i in range(t):
                wsum += W[i, a]
            for b in range(j):
                c[a, b] += wsum * H[m, a, b]
    return c
