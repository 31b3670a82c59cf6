"""Frequency-domain Green's function of the discrete Laplacian.

The kernel for a padded grid is the elementwise ratio of two forward DFTs:
a Dirac impulse placed at index (1,1) (or (1,1,1)) over the 5-point (7-point)
Laplacian stencil occupying the top-left 3x3 (3x3x3) block of an otherwise
zero array. The DC entry of the ratio is forced to 0, which pins the
integration constant in the solver. Because the impulse sits exactly at the
stencil center, the two placement phases cancel and the ratio is the real,
even reciprocal Laplacian spectrum; the output is spatially unshifted.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np

from .errors import DimensionTooSmallError, InvalidPadError, NumericalHealthError

DEFAULT_PAD = 4

LAPLACE_2D = np.array([[0.0, 1.0, 0.0],
                       [1.0, -4.0, 1.0],
                       [0.0, 1.0, 0.0]])


def _laplace_3d() -> np.ndarray:
    k = np.zeros((3, 3, 3))
    k[1, 1, 1] = -6.0
    for axis in range(3):
        idx = [1, 1, 1]
        idx[axis] = 0
        k[tuple(idx)] = 1.0
        idx[axis] = 2
        k[tuple(idx)] = 1.0
    return k


LAPLACE_3D = _laplace_3d()


@dataclass(frozen=True)
class SpectralKernel:
    """Complex spectrum over the full padded grid, DC entry zero."""

    spectrum: np.ndarray
    padded_shape: tuple[int, ...]
    pad: int
    dim: int

    def __post_init__(self):
        self.spectrum.setflags(write=False)


def build_green_kernel(image_shape, pad: int = DEFAULT_PAD, dim: int | None = None,
                       precision: str = "double") -> SpectralKernel:
    """Build the spectral kernel for an image of the given spatial shape.

    The stored grid is image_shape + 2*pad per axis.
    """
    image_shape = tuple(int(s) for s in image_shape)
    if dim is None:
        dim = len(image_shape)
    if dim != len(image_shape) or dim not in (2, 3):
        raise DimensionTooSmallError(f"kernel dimensionality must be 2 or 3, got {image_shape}")
    if pad < 1:
        raise InvalidPadError(f"pad must be >= 1, got {pad}")
    if any(s < 3 for s in image_shape):
        raise DimensionTooSmallError(f"image dims {image_shape} below stencil minimum 3")
    padded = tuple(s + 2 * pad for s in image_shape)
    spectrum = green_spectrum(padded, precision=precision)
    return SpectralKernel(spectrum=spectrum, padded_shape=padded, pad=pad, dim=dim)


def green_spectrum(grid_shape, precision: str = "double") -> np.ndarray:
    """Ratio of DFTs on an explicit grid; shared by the solver and the layers."""
    grid_shape = tuple(int(s) for s in grid_shape)
    dim = len(grid_shape)
    if dim not in (2, 3):
        raise DimensionTooSmallError(f"grid rank must be 2 or 3, got {grid_shape}")
    if any(s < 3 for s in grid_shape):
        raise DimensionTooSmallError(f"grid dims {grid_shape} below stencil minimum 3")
    dtype = np.float64 if precision == "double" else np.float32
    dirac = np.zeros(grid_shape, dtype=dtype)
    dirac[(1,) * dim] = 1.0
    laplace = np.zeros(grid_shape, dtype=dtype)
    block = LAPLACE_2D if dim == 2 else LAPLACE_3D
    laplace[(slice(0, 3),) * dim] = block
    fd = np.fft.fftn(dirac)
    fl = np.fft.fftn(laplace)
    # 0/0 at DC: divide with the denominator patched to 1, then overwrite.
    fl.flat[0] = 1.0
    spectrum = fd / fl
    spectrum.flat[0] = 0.0
    if not np.isfinite(spectrum).all():
        raise NumericalHealthError("non-finite entry in Green's spectrum")
    if precision == "single":
        spectrum = spectrum.astype(np.complex64)
    return spectrum


class KernelCache:
    """Keyed spectra, built once and shared; safe for concurrent readers."""

    def __init__(self):
        self._entries: dict[tuple, SpectralKernel] = {}
        self._lock = threading.Lock()

    def get_or_build(self, image_shape, pad: int = DEFAULT_PAD, dim: int | None = None,
                     precision: str = "double") -> SpectralKernel:
        image_shape = tuple(int(s) for s in image_shape)
        if dim is None:
            dim = len(image_shape)
        padded = tuple(s + 2 * pad for s in image_shape)
        return self._lookup(padded, pad, dim, precision,
                            lambda: build_green_kernel(image_shape, pad, dim, precision))

    def spectrum_for_grid(self, grid_shape, precision: str = "double") -> np.ndarray:
        """Spectrum on an exact grid (no extra padding); used by the layers."""
        grid_shape = tuple(int(s) for s in grid_shape)
        kernel = self._lookup(grid_shape, 0, len(grid_shape), precision,
                              lambda: SpectralKernel(green_spectrum(grid_shape, precision),
                                                     grid_shape, 0, len(grid_shape)))
        return kernel.spectrum

    def _lookup(self, padded, pad, dim, precision, builder) -> SpectralKernel:
        key = (dim, padded, precision)
        with self._lock:
            hit = self._entries.get(key)
        if hit is not None:
            return hit
        # Build outside the lock: duplicate builds are value-equal, and the
        # first insertion wins so all callers share one array.
        built = builder()
        with self._lock:
            return self._entries.setdefault(key, built)

    def __len__(self) -> int:
        return len(self._entries)


_default_cache = KernelCache()


def default_cache() -> KernelCache:
    return _default_cache


def cache_get_or_build(cache: KernelCache, image_shape, pad: int = DEFAULT_PAD,
                       dim: int | None = None, precision: str = "double") -> SpectralKernel:
    return cache.get_or_build(image_shape, pad=pad, dim=dim, precision=precision)
