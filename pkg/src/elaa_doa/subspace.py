"""Hankel lifting of single snapshots and SVD subspace extraction.

A single observation carries no sample covariance, so each sub-array
vector is lifted into a Hankel matrix whose columns are sliding windows.
For noiseless data the Hankel matrix of a sum of K complex exponentials
has rank exactly K, which restores the signal/noise subspace split that
covariance methods get from multiple snapshots.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg


@dataclass(frozen=True)
class SubspacePair:
    """Orthonormal signal/noise bases plus the singular values behind them."""

    signal: np.ndarray
    noise: np.ndarray
    singular_values: np.ndarray


def default_pencil(n_elements: int) -> int:
    """Default pencil parameter, half the sub-array length."""
    return n_elements // 2


def hankel(y: np.ndarray, pencil: int) -> np.ndarray:
    """Hankel lifting of a length-M vector into ``(pencil+1, M-pencil)``.

    Entry ``[i, j]`` is ``y[i + j]``; every window of ``pencil + 1``
    consecutive samples appears as one column.
    """
    y = np.asarray(y)
    m = y.size
    if not 1 <= pencil < m:
        raise ValueError(f"pencil must be in [1, {m - 1}], got {pencil}")
    return scipy.linalg.hankel(y[: pencil + 1], y[pencil:])


def split_subspaces(h: np.ndarray, num_sources: int) -> SubspacePair:
    """SVD split of a lifted matrix into signal and noise subspaces.

    ``signal`` holds the ``num_sources`` dominant left singular vectors,
    ``noise`` the full orthogonal complement (``rows - num_sources``
    columns).
    """
    rows, cols = h.shape
    if not 1 <= num_sources < min(rows, cols):
        raise ValueError(
            f"num_sources must be in [1, {min(rows, cols) - 1}], got {num_sources}"
        )
    u, s, _ = np.linalg.svd(h, full_matrices=True)
    return SubspacePair(
        signal=u[:, :num_sources], noise=u[:, num_sources:], singular_values=s
    )


def stacked_subspace(
    y1: np.ndarray,
    y2: np.ndarray,
    pencil: int,
    num_sources: int,
    coherent: bool = True,
) -> SubspacePair:
    """Joint subspace of both sub-arrays' Hankel liftings.

    With ``coherent=True`` (default) the two Hankel matrices are stacked
    row-wise and decomposed by one SVD, so the signal basis preserves the
    inter-sub-array phase of each source.  ``coherent=False`` instead
    concatenates independently computed per-sub-array signal bases and
    re-orthonormalizes them; the span is the union of the per-block spans
    but the relative phase between blocks is arbitrary.  That variant
    exists only for comparison.
    """
    h1 = hankel(y1, pencil)
    h2 = hankel(y2, pencil)
    if coherent:
        return split_subspaces(np.vstack([h1, h2]), num_sources)
    s1 = split_subspaces(h1, num_sources)
    s2 = split_subspaces(h2, num_sources)
    stacked = np.vstack([s1.signal, s2.signal])
    q, _ = np.linalg.qr(stacked, mode="complete")
    sv = np.linalg.svd(stacked, compute_uv=False)
    return SubspacePair(
        signal=q[:, :num_sources], noise=q[:, num_sources:], singular_values=sv
    )


def estimate_source_count(singular_values: np.ndarray, energy_tol: float = 1e-3) -> int:
    """Smallest K whose residual spectral energy is below ``energy_tol``.

    Returns the smallest K with ``sum(s[K:]**2) < energy_tol * sum(s**2)``.
    Intended as a fallback when the source count is not known a priori.
    """
    s = np.asarray(singular_values, dtype=float)
    total = float(np.sum(s * s))
    if total == 0.0:
        return 0
    residual = total
    for k in range(len(s) + 1):
        if residual < energy_tol * total:
            return k
        if k < len(s):
            residual -= float(s[k] * s[k])
    return len(s)
