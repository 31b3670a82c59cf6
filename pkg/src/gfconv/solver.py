"""Spectral solve of the discrete Poisson problem and its exact adjoint.

Forward path per channel: zero-pad the Laplacian, forward-transform,
multiply by the cached Green's spectrum, inverse-transform, take the real
part, subtract the integration constant (the padded-grid corner value, or
the cropped-region mean), crop the pad back off. The whole map is linear,
so the adjoint is the reversed composition of each step's adjoint: crop
becomes zero-insert, the spectral multiply uses the conjugate spectrum,
and the constant subtraction transposes into a lump subtracted at the
corner (or a mean subtraction, which is its own adjoint).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft as _fft

from .errors import InvalidPadError, NumericalHealthError
from .fields import Field
from .kernels import DEFAULT_PAD, KernelCache, default_cache

CORNER_ZERO = "corner-zero"
MEAN_ZERO = "mean-zero"

# A potential is just a field whose stencil Laplacian matches some source;
# the alias marks intent in signatures.
PotentialField = Field


@dataclass(frozen=True)
class SolverConfig:
    pad: int = DEFAULT_PAD
    constant_policy: str = CORNER_ZERO
    precision: str = "double"

    def __post_init__(self):
        if self.pad < 1:
            raise InvalidPadError(f"pad must be >= 1, got {self.pad}")
        if self.constant_policy not in (CORNER_ZERO, MEAN_ZERO):
            raise ValueError(f"unknown constant policy {self.constant_policy!r}")
        if self.precision not in ("single", "double"):
            raise ValueError(f"unknown precision {self.precision!r}")


def _spatial_axes(dim: int) -> tuple[int, ...]:
    return tuple(range(2, 2 + dim))


def _pad_widths(dim: int, pad: int):
    return [(0, 0), (0, 0)] + [(pad, pad)] * dim


def _crop(arr: np.ndarray, dim: int, pad: int) -> np.ndarray:
    sl = (slice(None), slice(None)) + (slice(pad, -pad),) * dim
    return arr[sl]


def _corner(arr: np.ndarray, dim: int) -> np.ndarray:
    idx = (slice(None), slice(None)) + (0,) * dim
    return arr[idx]


def solve_laplacian(L: Field, cfg: SolverConfig = SolverConfig(),
                    cache: KernelCache | None = None) -> Field:
    """Potential whose stencil Laplacian reproduces L (up to the constant)."""
    L.require_stencil_size()
    if cache is None:
        cache = default_cache()
    dim = L.dim
    real_dt = np.float64 if cfg.precision == "double" else np.float32
    data = L.data.astype(real_dt, copy=False)
    kernel = cache.get_or_build(L.shape, pad=cfg.pad, dim=dim, precision=cfg.precision)
    axes = _spatial_axes(dim)

    padded = np.pad(data, _pad_widths(dim, cfg.pad))
    hat = _fft.fftn(padded, axes=axes, workers=-1) * kernel.spectrum
    full = _fft.ifftn(hat, axes=axes, workers=-1)
    residue = np.abs(full.imag).max() if full.size else 0.0
    scale = np.abs(data).max()
    if residue > 1e-9 * max(scale, 1.0):
        raise NumericalHealthError(
            f"imaginary residue {residue:.3e} exceeds health bound for input scale {scale:.3e}"
        )
    J = full.real

    if cfg.constant_policy == CORNER_ZERO:
        J = J - _corner(J, dim)[(...,) + (None,) * dim]
        out = _crop(J, dim, cfg.pad)
    else:
        out = _crop(J, dim, cfg.pad)
        mean = out.mean(axis=axes)
        out = out - mean[(...,) + (None,) * dim]
    return Field(np.ascontiguousarray(out.astype(real_dt, copy=False)))


def solve_laplacian_adjoint(G: Field, cfg: SolverConfig = SolverConfig(),
                            cache: KernelCache | None = None) -> Field:
    """Exact transpose of solve_laplacian as a linear map on fields."""
    G.require_stencil_size()
    if cache is None:
        cache = default_cache()
    dim = G.dim
    real_dt = np.float64 if cfg.precision == "double" else np.float32
    data = G.data.astype(real_dt, copy=False)
    kernel = cache.get_or_build(G.shape, pad=cfg.pad, dim=dim, precision=cfg.precision)
    axes = _spatial_axes(dim)

    if cfg.constant_policy == MEAN_ZERO:
        # Mean subtraction over the crop is symmetric, so it leads here.
        data = data - data.mean(axis=axes)[(...,) + (None,) * dim]
    z = np.pad(data, _pad_widths(dim, cfg.pad))
    if cfg.constant_policy == CORNER_ZERO:
        # Transpose of (I - 1 e0^T): subtract the total mass at the corner.
        total = data.sum(axis=axes)
        corner_idx = (slice(None), slice(None)) + (0,) * dim
        z[corner_idx] -= total
    hat = _fft.fftn(z, axes=axes, workers=-1) * np.conj(kernel.spectrum)
    full = _fft.ifftn(hat, axes=axes, workers=-1)
    out = _crop(full.real, dim, cfg.pad)
    return Field(np.ascontiguousarray(out.astype(real_dt, copy=False)))


def laplacian_stencil(f: Field) -> Field:
    """Discrete Laplacian matching the composition divergence(gradient(f)).

    Interior cells see the standard 5-point (7-point) zero-extension stencil;
    cells on the low edge of an axis get the one-sided variant produced by
    the forward-difference / backward-difference pairing, which is what makes
    div(grad(f)) reproduce this operator exactly on every input.
    """
    f.require_stencil_size()
    data = f.data
    dim = f.dim
    out = -2.0 * dim * data.copy()
    for axis in range(2, 2 + dim):
        lo = [slice(None)] * data.ndim
        hi = [slice(None)] * data.ndim
        lo[axis] = slice(0, -1)
        hi[axis] = slice(1, None)
        out[tuple(lo)] += data[tuple(hi)]
        out[tuple(hi)] += data[tuple(lo)]
        first = [slice(None)] * data.ndim
        first[axis] = slice(0, 1)
        # One-sided low boundary: coefficient -1 instead of -2.
        out[tuple(first)] += data[tuple(first)]
    return Field(out)
