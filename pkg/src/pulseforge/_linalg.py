"""Deterministic truncated SVD used by the process-tensor build."""

from __future__ import annotations

import numpy as np
from scipy.linalg import svd as _scipy_svd


class CapacityError(RuntimeError):
    """Requested bond dimension exceeds the configured cap."""


def svd_truncate(mat: np.ndarray, rel_tol: float, max_bond: int | None = None,
                 context: str = ""):
    """SVD with relative truncation and a fixed sign convention.

    Keeps singular values > rel_tol * s_max (always at least one), then makes
    the largest-magnitude entry of each left singular vector real-positive so
    repeated builds are bit-identical.

    Returns (u, s, vh) with u: (m, r), s: (r,), vh: (r, n).
    """
    u, s, vh = _scipy_svd(mat, full_matrices=False, lapack_driver="gesdd",
                          check_finite=False)
    if not np.all(np.isfinite(s)):
        raise FloatingPointError(f"non-finite singular values {context}")
    if s[0] == 0.0:
        rank = 1
    else:
        rank = max(1, int(np.count_nonzero(s > rel_tol * s[0])))
    if max_bond is not None and rank > max_bond:
        raise CapacityError(
            f"bond dimension {rank} exceeds max_bond={max_bond} {context}")
    u, s, vh = u[:, :rank], s[:rank], vh[:rank, :]
    # Sign/phase convention: pivot entry of each left vector real-positive.
    piv = np.argmax(np.abs(u), axis=0)
    phase = u[piv, np.arange(rank)]
    mag = np.abs(phase)
    phase = np.where(mag > 0, phase / np.where(mag > 0, mag, 1.0), 1.0)
    u = u / phase[None, :]
    vh = vh * phase[:, None]
    return u, s, vh
