"""Pauli and Dirac matrices and the Clifford relations every other module leans on.

The 4x4 alpha matrices carry the Pauli matrices in their off-diagonal blocks:

    alpha_j = [[0, sigma_j], [sigma_j, 0]],   alpha_j alpha_k + alpha_k alpha_j = 2 delta_jk I4.

Everything here is exact in double precision: entries are 0, +-1, +-i.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray

ArrayC = NDArray[np.complex128]

I2: ArrayC = np.eye(2, dtype=np.complex128)
I4: ArrayC = np.eye(4, dtype=np.complex128)
ZERO2: ArrayC = np.zeros((2, 2), dtype=np.complex128)

_PAULI = (
    np.array([[0, 1], [1, 0]], dtype=np.complex128),
    np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    np.array([[1, 0], [0, -1]], dtype=np.complex128),
)


def pauli(j: int) -> ArrayC:
    """Pauli matrix sigma_j for j in {1, 2, 3}. Returns a fresh copy."""
    if j not in (1, 2, 3):
        raise ValueError(f"pauli index must be 1, 2 or 3, got {j!r}")
    return _PAULI[j - 1].copy()


def alpha(j: int) -> ArrayC:
    """Dirac matrix alpha_j: zero diagonal blocks, sigma_j off-diagonal blocks."""
    if j not in (1, 2, 3):
        raise ValueError(f"alpha index must be 1, 2 or 3, got {j!r}")
    return assemble_blocks(ZERO2, _PAULI[j - 1], _PAULI[j - 1], ZERO2)


def assemble_blocks(a: ArrayC, b: ArrayC, c: ArrayC, d: ArrayC) -> ArrayC:
    """Build a 4x4 matrix [[a, b], [c, d]] from 2x2 blocks."""
    out = np.empty((4, 4), dtype=np.complex128)
    out[:2, :2] = a
    out[:2, 2:] = b
    out[2:, :2] = c
    out[2:, 2:] = d
    return out


def extract_block(m: ArrayC, row: int, col: int) -> ArrayC:
    """Read the (row, col) 2x2 block of a 4x4 matrix; row, col in {1, 2}."""
    if row not in (1, 2) or col not in (1, 2):
        raise ValueError(f"block indices must be 1 or 2, got ({row!r}, {col!r})")
    r, c = 2 * (row - 1), 2 * (col - 1)
    return np.asarray(m, dtype=np.complex128)[r : r + 2, c : c + 2].copy()


def anticommutator(a: ArrayC, b: ArrayC) -> ArrayC:
    """AB + BA."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    return a @ b + b @ a


def operator_norm(m: ArrayC) -> float:
    """Largest singular value (spectral norm) of a single matrix."""
    m = np.asarray(m, dtype=np.complex128)
    if not np.all(np.isfinite(m.view(np.float64))):
        raise ValueError("operator_norm requires finite entries")
    return float(np.linalg.svd(m, compute_uv=False)[0])


def operator_norm_stack(ms: ArrayC) -> NDArray[np.float64]:
    """Spectral norm of a stack of matrices with shape (..., k, k), batched."""
    ms = np.asarray(ms, dtype=np.complex128)
    if not np.all(np.isfinite(ms.view(np.float64))):
        raise ValueError("operator_norm_stack requires finite entries")
    return np.linalg.svd(ms, compute_uv=False)[..., 0]
