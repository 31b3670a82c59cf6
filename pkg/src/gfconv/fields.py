"""Dense grid data model: batched multi-channel 2D/3D fields and their algebra.

The canonical memory layout is a row-major numpy array with axis order
(batch, channel, spatial...). Arrays are frozen after construction; every
operation returns a new Field.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import (
    DimensionTooSmallError,
    NonFiniteValueError,
    ShapeMismatchError,
)

MIN_SPATIAL = 3  # smallest grid that hosts a 3x3 / 3x3x3 stencil

_DTYPES = {"single": np.float32, "double": np.float64}


def _precision_of(dtype) -> str:
    if dtype == np.float32:
        return "single"
    if dtype == np.float64:
        return "double"
    raise TypeError(f"unsupported dtype {dtype}")


@dataclass(frozen=True)
class Field:
    """Real-valued dense grid with batch and channel axes.

    ``data`` has shape (batch, channels, *spatial). Values must be finite;
    construction rejects NaN/Inf outright rather than letting them propagate.
    Spatial dims below 3 are allowed at construction (tiny images exist) but
    every stencil-based operator rejects them with dimension-too-small.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(np.float64)
        if arr.ndim < 3:
            raise ShapeMismatchError(
                f"field array needs (batch, channels, spatial...) axes, got shape {arr.shape}"
            )
        if arr.ndim not in (4, 5):
            raise ShapeMismatchError(
                f"spatial rank must be 2 or 3, got array of rank {arr.ndim}"
            )
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ShapeMismatchError("batch and channel counts must be >= 1")
        if any(s < 1 for s in arr.shape[2:]):
            raise DimensionTooSmallError(f"empty spatial dimension in shape {arr.shape[2:]}")
        if not np.isfinite(arr).all():
            raise NonFiniteValueError("field values must be finite")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def batch(self) -> int:
        return self.data.shape[0]

    @property
    def channels(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, ...]:
        """Spatial dims only (H, W) or (D, H, W)."""
        return self.data.shape[2:]

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def precision(self) -> str:
        return _precision_of(self.data.dtype)

    def astype(self, precision: str) -> "Field":
        dt = _DTYPES[precision]
        if self.data.dtype == dt:
            return self
        return Field(self.data.astype(dt))

    def same_geometry(self, other: "Field") -> bool:
        return self.data.shape == other.data.shape and self.data.dtype == other.data.dtype

    def require_stencil_size(self):
        if any(s < MIN_SPATIAL for s in self.shape):
            raise DimensionTooSmallError(
                f"spatial dims {self.shape} below stencil minimum {MIN_SPATIAL}"
            )


@dataclass(frozen=True)
class VectorField:
    """One Field per spatial axis; component k holds the axis-k derivative."""

    components: tuple[Field, ...] = dc_field(default=())

    def __post_init__(self):
        comps = tuple(self.components)
        if len(comps) not in (2, 3):
            raise ShapeMismatchError(f"vector fields have 2 or 3 components, got {len(comps)}")
        first = comps[0]
        if len(comps) != first.dim:
            raise ShapeMismatchError(
                f"component count {len(comps)} does not match spatial rank {first.dim}"
            )
        for c in comps[1:]:
            if not first.same_geometry(c):
                raise ShapeMismatchError("vector field components must be shape-identical")
        object.__setattr__(self, "components", comps)

    @property
    def dim(self) -> int:
        return len(self.components)


def field_new(shape, batch: int = 1, channels: int = 1, fill: float = 0.0,
              precision: str = "double") -> Field:
    """Allocate a constant-filled field; rejects spatial dims below 3."""
    shape = tuple(int(s) for s in shape)
    if len(shape) not in (2, 3):
        raise ShapeMismatchError(f"spatial rank must be 2 or 3, got {len(shape)}")
    if any(s < MIN_SPATIAL for s in shape):
        raise DimensionTooSmallError(f"spatial dims {shape} below minimum {MIN_SPATIAL}")
    if batch < 1 or channels < 1:
        raise ShapeMismatchError("batch and channels must be >= 1")
    arr = np.full((batch, channels) + shape, float(fill), dtype=_DTYPES[precision])
    return Field(arr)


def from_array(arr, dim: int | None = None) -> Field:
    """Wrap a plain array as a Field, adding missing leading axes.

    With ``dim`` unset, rank-2 arrays are 2D single-channel and rank-4/5 are
    taken as (batch, channels, spatial...). Rank-3 is ambiguous ((C,H,W) vs
    (D,H,W)) and requires ``dim``.
    """
    arr = np.asarray(arr)
    if dim is None:
        if arr.ndim == 2:
            dim = 2
        elif arr.ndim in (4, 5):
            dim = arr.ndim - 2
        else:
            raise ShapeMismatchError(
                f"rank-{arr.ndim} array is ambiguous; pass dim explicitly"
            )
    missing = dim + 2 - arr.ndim
    if missing < 0 or missing > 2:
        raise ShapeMismatchError(f"cannot interpret rank-{arr.ndim} array as {dim}D field")
    for _ in range(missing):
        arr = arr[None]
    return Field(arr)


def field_axpy(a: float, x: Field, y: Field) -> Field:
    """Elementwise a*x + y."""
    if not x.same_geometry(y):
        raise ShapeMismatchError(
            f"axpy operands differ: {x.data.shape}/{x.data.dtype} vs {y.data.shape}/{y.data.dtype}"
        )
    return Field(a * x.data + y.data)


def field_inner(x: Field, y: Field) -> float:
    """Sum of elementwise products over every axis."""
    if not x.same_geometry(y):
        raise ShapeMismatchError(
            f"inner-product operands differ: {x.data.shape} vs {y.data.shape}"
        )
    return float(np.sum(x.data * y.data, dtype=np.float64))


def vector_inner(x: VectorField, y: VectorField) -> float:
    if x.dim != y.dim:
        raise ShapeMismatchError("vector fields differ in dimensionality")
    return sum(field_inner(a, b) for a, b in zip(x.components, y.components))
