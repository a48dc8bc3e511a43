"""Pure-Python (numpy) versions of the compiled kernels in ``_kernels.pyx``.

Signatures and return values match the compiled module exactly.
"""

from __future__ import annotations

import numpy as np


def _herm(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + np.conj(np.swapaxes(a, -1, -2)))


def eigvalsh(h: np.ndarray) -> np.ndarray:
    return np.linalg.eigvalsh(_herm(np.asarray(h, dtype=complex)))


def inv_sqrt(h: np.ndarray, eps: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    w, v = np.linalg.eigh(_herm(np.asarray(h, dtype=complex)))
    keep = w >= eps
    f = np.where(keep, 1.0 / np.sqrt(np.where(keep, w, 1.0)), 0.0)
    out = (v * f) @ v.conj().T
    kern = (v * (~keep)) @ v.conj().T
    return out, kern


def certificate(r: np.ndarray, m: np.ndarray) -> float:
    y = _herm(np.einsum("xij,xjk->ik", r, m))
    lows = np.linalg.eigvalsh(_herm(y[None, :, :] - r))[:, 0]
    return float(max(0.0, -lows.min()))


def _value(r: np.ndarray, m: np.ndarray) -> float:
    return float(np.einsum("xij,xji->", r, m).real)


def fixed_point(r: np.ndarray, m: np.ndarray, tol: float, cert_tol: float,
                max_iter: int, eps: float, check_every: int = 8):
    r = np.ascontiguousarray(r, dtype=complex)
    m = np.array(m, dtype=complex, copy=True)
    prev = value = _value(r, m)
    gap = -1.0
    max_dec = 0.0
    converged = regularized = False
    last_check = -check_every
    it = 0
    while it < max_iter:
        it += 1
        g = np.einsum("xij,xjk,xkl->il", r, m, r)
        gi, kern = inv_sqrt(g, eps)
        if np.trace(kern).real > 0.5:
            regularized = True
        m = _herm(gi[None] @ r @ m @ r @ gi[None])
        if regularized:
            m[0] += kern
        value = _value(r, m)
        max_dec = max(max_dec, prev - value)
        if abs(value - prev) < tol and it - last_check >= check_every:
            last_check = it
            gap = certificate(r, m)
            if gap <= cert_tol:
                converged = True
                break
        prev = value
    if gap < 0.0 or not converged:
        gap = certificate(r, m)
    return m, value, it, gap, converged, regularized, max_dec


def ks_max_sums(points: np.ndarray, axes: np.ndarray, weights: np.ndarray) -> tuple[float, float]:
    dots = np.maximum(points @ axes.T, 0.0)
    best = (dots @ weights).max(axis=1)
    return float(best.sum()), float(best @ best)
