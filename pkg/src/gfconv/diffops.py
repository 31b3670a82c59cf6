"""Discrete gradient, divergence and curl with adjoint-compatible boundaries.

Gradient takes forward differences per axis with zero extension past the
last index; divergence takes backward differences with zero extension below
index 0. Under this pairing divergence is exactly the negative transpose of
gradient, and their composition reproduces laplacian_stencil elementwise.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeMismatchError
from .fields import Field, VectorField


def _axis_forward_diff(data: np.ndarray, axis: int) -> np.ndarray:
    out = np.empty_like(data)
    lo = [slice(None)] * data.ndim
    hi = [slice(None)] * data.ndim
    lo[axis] = slice(0, -1)
    hi[axis] = slice(1, None)
    out[tuple(lo)] = data[tuple(hi)] - data[tuple(lo)]
    last = [slice(None)] * data.ndim
    last[axis] = slice(-1, None)
    out[tuple(last)] = -data[tuple(last)]
    return out


def _axis_backward_diff(data: np.ndarray, axis: int) -> np.ndarray:
    out = np.empty_like(data)
    lo = [slice(None)] * data.ndim
    hi = [slice(None)] * data.ndim
    lo[axis] = slice(0, -1)
    hi[axis] = slice(1, None)
    out[tuple(hi)] = data[tuple(hi)] - data[tuple(lo)]
    first = [slice(None)] * data.ndim
    first[axis] = slice(0, 1)
    out[tuple(first)] = data[tuple(first)]
    return out


def gradient(f: Field) -> VectorField:
    """Forward differences along each spatial axis; component k = d/d(axis k)."""
    f.require_stencil_size()
    comps = tuple(Field(_axis_forward_diff(f.data, axis)) for axis in range(2, 2 + f.dim))
    return VectorField(comps)


def divergence(V: VectorField) -> Field:
    """Backward differences of each component, summed."""
    V.components[0].require_stencil_size()
    acc = None
    for k, comp in enumerate(V.components):
        d = _axis_backward_diff(comp.data, 2 + k)
        acc = d if acc is None else acc + d
    return Field(acc)


def gradient_adjoint(V: VectorField) -> Field:
    """Transpose of gradient; equals -divergence exactly."""
    return Field(-divergence(V).data)


def divergence_adjoint(f: Field) -> VectorField:
    """Transpose of divergence; equals -gradient exactly."""
    g = gradient(f)
    return VectorField(tuple(Field(-c.data) for c in g.components))


def curl2d(V: VectorField) -> Field:
    """dv/d(axis0) - du/d(axis1) with forward differences."""
    if V.dim != 2:
        raise ShapeMismatchError(f"curl2d needs a 2-component field, got {V.dim}")
    u, v = V.components
    return Field(_axis_forward_diff(v.data, 2) - _axis_forward_diff(u.data, 3))


def curl3d(V: VectorField) -> VectorField:
    """Standard 3-component discrete curl via forward differences."""
    if V.dim != 3:
        raise ShapeMismatchError(f"curl3d needs a 3-component field, got {V.dim}")
    u, v, w = (c.data for c in V.components)
    d = lambda arr, ax: _axis_forward_diff(arr, 2 + ax)  # noqa: E731
    cx = d(w, 1) - d(v, 2)
    cy = d(u, 2) - d(w, 0)
    cz = d(v, 0) - d(u, 1)
    return VectorField((Field(cx), Field(cy), Field(cz)))


def interior_max_curl(V: VectorField) -> float:
    """Max |curl| away from the high edges, the diagnostic for conservativity."""
    if V.dim == 2:
        c = curl2d(V).data
        return float(np.abs(c[..., :-1, :-1]).max())
    c = curl3d(V)
    inner = (slice(None), slice(None)) + (slice(0, -1),) * 3
    return float(max(np.abs(comp.data[inner]).max() for comp in c.components))
