"""Application of alpha.p by spectral and finite-difference methods, and the heat semigroup.

Spectral differentiation acts on full-box periodic fields through discrete
Fourier modes k_j in (pi/L)*{-N/2, ..., N/2-1}; the highest mode's derivative
is zeroed (standard odd-derivative convention). Finite-difference methods work
on masked fields and shrink the output mask by their stencil radius.

The heat semigroup P_t approximates the whole-space Gaussian convolution by
zero-padding the box to double width, multiplying modes by e^{-t|k|^2}, and
cropping back; wrap-around error is of size e^{-L^2/t}, and results carry an
accuracy note once sqrt(t) exceeds L/2.
"""

from __future__ import annotations

import numpy as np
import scipy.fft as sfft
from numpy.typing import NDArray

from .fields import DomainMask, SpinorField, full_box_mask
from .matrices import alpha

ArrayC = NDArray[np.complex128]

DERIVATIVE_METHODS = ("spectral_periodic", "centered_fd2", "centered_fd4")

_ALPHA = [alpha(j) for j in (1, 2, 3)]


def _check_method(method: str) -> None:
    if method not in DERIVATIVE_METHODS:
        raise ValueError(
            f"unknown derivative method {method!r}, expected one of {DERIVATIVE_METHODS}"
        )


def spectral_wavenumbers(grid) -> NDArray[np.float64]:
    """1D wavenumber array in FFT order, highest mode zeroed for derivatives."""
    k = 2.0 * np.pi * sfft.fftfreq(grid.points_per_axis, d=grid.spacing)
    k[grid.points_per_axis // 2] = 0.0  # Nyquist derivative zeroed
    return k


def _alpha_dot(d1: ArrayC, d2: ArrayC, d3: ArrayC) -> ArrayC:
    """Contract component derivatives with the alpha matrices: sum_j alpha_j d_j."""
    out = np.zeros_like(d1)
    for a in range(4):
        for j, dj in enumerate((d1, d2, d3)):
            row = _ALPHA[j][a]
            for b in range(4):
                if row[b] != 0:
                    out[a] += row[b] * dj[b]
    return out


def _erode_mask(mask: DomainMask, radius: int) -> DomainMask:
    inside = mask.inside
    out = inside.copy()
    n = inside.shape[0]
    for axis in range(3):
        shrunk = np.zeros_like(inside)
        sl_core = [slice(None)] * 3
        sl_core[axis] = slice(radius, n - radius)
        core = tuple(sl_core)
        acc = np.ones_like(inside[core])
        for off in range(-radius, radius + 1):
            sl = [slice(None)] * 3
            sl[axis] = slice(radius + off, n - radius + off)
            acc = acc & inside[tuple(sl)]
        shrunk[core] = acc
        out &= shrunk
    return DomainMask(mask.kind, mask.params, out, mask.boundary_layer)


def _fd_derivatives(values: ArrayC, h: float, order: int) -> ArrayC:
    """Centered differences along the three space axes; shape (3, 4, N, N, N).

    Works on the zero-filled raw array; only stencil-complete cells are valid,
    which the caller enforces through mask erosion.
    """
    d = np.zeros((3,) + values.shape, dtype=np.complex128)
    n = values.shape[1]
    for axis in range(3):
        ax = axis + 1
        if order == 2:
            plus = np.take(values, range(2, n), axis=ax)
            minus = np.take(values, range(0, n - 2), axis=ax)
            core = (plus - minus) / (2.0 * h)
            sl = [slice(None)] * 4
            sl[ax] = slice(1, n - 1)
            d[axis][tuple(sl)] = core
        else:
            p1 = np.take(values, range(3, n - 1), axis=ax)
            m1 = np.take(values, range(1, n - 3), axis=ax)
            p2 = np.take(values, range(4, n), axis=ax)
            m2 = np.take(values, range(0, n - 4), axis=ax)
            core = (-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * h)
            sl = [slice(None)] * 4
            sl[ax] = slice(2, n - 2)
            d[axis][tuple(sl)] = core
    return d


def apply_dirac(fld: SpinorField, method: str = "spectral_periodic") -> SpinorField:
    """alpha.p f = sum_j alpha_j (-i d_j f) by the chosen derivative method."""
    _check_method(method)
    if method == "spectral_periodic":
        if fld.mask.kind != "full_box":
            raise ValueError(
                f"spectral_periodic requires a full_box mask, got {fld.mask.kind!r}"
            )
        k = spectral_wavenumbers(fld.grid)
        fhat = sfft.fftn(fld.values, axes=(1, 2, 3))
        d1 = k[None, :, None, None] * fhat
        d2 = k[None, None, :, None] * fhat
        d3 = k[None, None, None, :] * fhat
        # -i d_j in Fourier space is multiplication by k_j
        out_hat = _alpha_dot(d1, d2, d3)
        out = sfft.ifftn(out_hat, axes=(1, 2, 3))
        return SpinorField(fld.grid, fld.mask, out)

    radius = 1 if method == "centered_fd2" else 2
    d = _fd_derivatives(fld.values, fld.grid.spacing, 2 if radius == 1 else 4)
    out = -1j * _alpha_dot(d[0], d[1], d[2])
    mask = _erode_mask(fld.mask, radius)
    out = np.where(mask.inside[None], out, 0.0 + 0.0j)
    return SpinorField(fld.grid, mask, out)


def apply_dirac_squared(fld: SpinorField, method: str = "spectral_periodic") -> SpinorField:
    """(alpha.p)^2 f, equal to the componentwise -Laplacian of f."""
    return apply_dirac(apply_dirac(fld, method), method)


def laplacian_spectral(fld: SpinorField) -> SpinorField:
    """Componentwise -Laplacian through the same zeroed-Nyquist Fourier symbol."""
    if fld.mask.kind != "full_box":
        raise ValueError("spectral Laplacian requires a full_box mask")
    k = spectral_wavenumbers(fld.grid)
    k2 = (
        k[:, None, None] ** 2 + k[None, :, None] ** 2 + k[None, None, :] ** 2
    )
    fhat = sfft.fftn(fld.values, axes=(1, 2, 3))
    out = sfft.ifftn(k2[None] * fhat, axes=(1, 2, 3))
    return SpinorField(fld.grid, fld.mask, out)


class HeatPropagator:
    """Caches the padded Fourier transform of a field so many P_t evaluations
    cost one inverse transform each."""

    def __init__(self, fld: SpinorField):
        self.grid = fld.grid
        self.src_mask = fld.mask
        n = fld.grid.points_per_axis
        self._n = n
        padded = np.zeros((4, 2 * n, 2 * n, 2 * n), dtype=np.complex128)
        padded[:, :n, :n, :n] = fld.values
        self._fhat = sfft.fftn(padded, axes=(1, 2, 3))
        k = 2.0 * np.pi * sfft.fftfreq(2 * n, d=fld.grid.spacing)
        self._k2 = (
            k[:, None, None] ** 2 + k[None, :, None] ** 2 + k[None, None, :] ** 2
        )

    def at(self, t: float) -> SpinorField:
        if not t > 0:
            raise ValueError(f"heat semigroup time must be positive, got {t!r}")
        sym = np.exp(-t * self._k2)
        big = sfft.ifftn(self._fhat * sym[None], axes=(1, 2, 3))
        n = self._n
        vals = np.ascontiguousarray(big[:, :n, :n, :n])
        notes = ()
        if np.sqrt(t) > self.grid.half_width / 2.0:
            notes = (
                f"heat time t={t:g} has sqrt(t) > L/2; wrap-around error may be visible",
            )
        return SpinorField(self.grid, full_box_mask(self.grid), vals, notes=notes)


def heat_semigroup(fld: SpinorField, t: float) -> SpinorField:
    """P_t f on the field's grid; the result lives on the full box (the heat
    kernel spreads mass beyond any mask; the input is zero outside its mask)."""
    return HeatPropagator(fld).at(t)


def sup_norm(fld: SpinorField) -> float:
    """Max of |f(x_i)| over unmasked cells."""
    sel = fld.mask.inside
    if not sel.any():
        raise ValueError("sup norm over an empty mask")
    return float(fld.abs_values()[sel].max())
