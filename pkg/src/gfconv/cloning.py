"""Gradient-domain compositing: paste a patch's gradients and re-integrate.

The base image is framed by a one-pixel zero ring so its own gradient field
integrates back exactly; patch gradients replace base gradients where the
mask selects them, the composite divergence is solved per channel with the
mean-zero constant, and the result is affinely mapped back onto the base
image's value range. Patch gradients are only pasted where their forward
difference stays inside the patch rectangle, which keeps self-cloning exact
at the rectangle's far edges.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeMismatchError
from .fields import Field
from .kernels import KernelCache, default_cache
from .solver import MEAN_ZERO, SolverConfig, solve_laplacian


def _forward_diff(arr: np.ndarray, axis: int) -> np.ndarray:
    out = np.empty_like(arr)
    lo = [slice(None)] * arr.ndim
    hi = [slice(None)] * arr.ndim
    lo[axis] = slice(0, -1)
    hi[axis] = slice(1, None)
    out[tuple(lo)] = arr[tuple(hi)] - arr[tuple(lo)]
    last = [slice(None)] * arr.ndim
    last[axis] = slice(-1, None)
    out[tuple(last)] = -arr[tuple(last)]
    return out


def _backward_diff(arr: np.ndarray, axis: int) -> np.ndarray:
    out = np.empty_like(arr)
    lo = [slice(None)] * arr.ndim
    hi = [slice(None)] * arr.ndim
    lo[axis] = slice(0, -1)
    hi[axis] = slice(1, None)
    out[tuple(hi)] = arr[tuple(hi)] - arr[tuple(lo)]
    first = [slice(None)] * arr.ndim
    first[axis] = slice(0, 1)
    out[tuple(first)] = arr[tuple(first)]
    return out


def clone(base: Field, patch: Field, mask: Field, offset: tuple[int, int],
          pad: int = 4, cache: KernelCache | None = None) -> Field:
    """Composite ``patch`` into ``base`` where ``mask`` > 0.5.

    ``offset`` is (x, y): x columns right, y rows down, locating the patch's
    top-left corner inside the base.
    """
    if base.dim != 2 or patch.dim != 2 or mask.dim != 2:
        raise ShapeMismatchError("cloning works on 2D images")
    if mask.channels != 1:
        raise ShapeMismatchError("mask must be grayscale")
    if patch.channels != base.channels:
        raise ShapeMismatchError(
            f"patch has {patch.channels} channels, base has {base.channels}"
        )
    if mask.shape != patch.shape:
        raise ShapeMismatchError(f"mask {mask.shape} must match patch {patch.shape}")
    H, W = base.shape
    h, w = patch.shape
    x, y = int(offset[0]), int(offset[1])
    if x < 0 or y < 0 or y + h > H or x + w > W:
        raise ShapeMismatchError(
            f"patch {h}x{w} at offset ({x},{y}) does not fit inside base {H}x{W}"
        )

    if cache is None:
        cache = default_cache()
    base_arr = base.data[0].astype(np.float64)  # (C, H, W)
    patch_arr = patch.data[0].astype(np.float64)
    sel = mask.data[0, 0] > 0.5

    framed = np.zeros((base.channels, H + 2, W + 2))
    framed[:, 1:-1, 1:-1] = base_arr
    grads = [_forward_diff(framed, ax) for ax in (1, 2)]
    patch_grads = [_forward_diff(patch_arr, ax) for ax in (1, 2)]

    # Keep only patch gradients whose forward neighbor is a patch cell.
    for ax, pg in enumerate(patch_grads):
        ok = sel.copy()
        if ax == 0:
            ok[-1, :] = False
        else:
            ok[:, -1] = False
        ii, jj = np.nonzero(ok)
        grads[ax][:, 1 + y + ii, 1 + x + jj] = pg[:, ii, jj]

    lap = _backward_diff(grads[0], 1) + _backward_diff(grads[1], 2)
    cfg = SolverConfig(pad=pad, constant_policy=MEAN_ZERO)
    solved = solve_laplacian(Field(lap[None]), cfg, cache).data[0, :, 1:-1, 1:-1]

    out = np.empty_like(solved)
    for c in range(base.channels):
        lo, hi = base_arr[c].min(), base_arr[c].max()
        smin, smax = solved[c].min(), solved[c].max()
        span = smax - smin
        if span < 1e-12:
            out[c] = np.full_like(solved[c], (lo + hi) / 2.0)
        else:
            out[c] = (solved[c] - smin) / span * (hi - lo) + lo
    return Field(np.clip(out, 0.0, 1.0)[None])


def naive_paste(base: Field, patch: Field, mask: Field, offset: tuple[int, int]) -> Field:
    """Plain pixel copy, the comparison baseline for the seam metric."""
    H, W = base.shape
    h, w = patch.shape
    x, y = int(offset[0]), int(offset[1])
    out = base.data[0].copy()
    sel = mask.data[0, 0] > 0.5
    ii, jj = np.nonzero(sel)
    out[:, y + ii, x + jj] = patch.data[0][:, ii, jj]
    return Field(out[None])


def seam_gradient_metric(image: Field, mask: Field, offset: tuple[int, int]) -> float:
    """Mean gradient magnitude over the one-pixel band around the mask boundary."""
    H, W = image.shape
    h, w = mask.shape
    x, y = int(offset[0]), int(offset[1])
    region = np.zeros((H, W), dtype=bool)
    region[y : y + h, x : x + w] = mask.data[0, 0] > 0.5

    def shift(m, dy, dx):
        out = np.zeros_like(m)
        src_y = slice(max(0, -dy), H - max(0, dy))
        src_x = slice(max(0, -dx), W - max(0, dx))
        dst_y = slice(max(0, dy), H - max(0, -dy))
        dst_x = slice(max(0, dx), W - max(0, -dx))
        out[dst_y, dst_x] = m[src_y, src_x]
        return out

    dilated = region.copy()
    eroded = region.copy()
    for dy, dx in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        dilated |= shift(region, dy, dx)
        eroded &= shift(region, dy, dx)
    band = dilated & ~eroded
    if not band.any():
        return 0.0

    arr = image.data[0]
    gy = _forward_diff(arr, 1)
    gx = _forward_diff(arr, 2)
    mag = np.sqrt(gy**2 + gx**2).sum(axis=0)
    return float(mag[band].mean())
