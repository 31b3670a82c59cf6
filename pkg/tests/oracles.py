"""Independent reference implementations used only to check the library.

Everything here deliberately avoids the code paths under test: the DFT is an
explicit exponential sum, the Poisson solve assembles the circulant system
densely and pseudo-inverts it with SVD, and the differential operators are
plain Python loops.
"""

import numpy as np


def naive_dft(x: np.ndarray) -> np.ndarray:
    """Explicit-sum DFT over all axes; O(n^2) in the number of grid points."""
    out = np.asarray(x, dtype=np.complex128)
    for axis in range(x.ndim):
        n = x.shape[axis]
        j = np.arange(n)
        twiddle = np.exp(-2j * np.pi * np.outer(j, j) / n)
        out = np.moveaxis(np.tensordot(twiddle, np.moveaxis(out, axis, 0), axes=(1, 0)), 0, axis)
    return out


def torus_stencil_matrix(grid_shape) -> np.ndarray:
    """Dense matrix of the periodic 5/7-point Laplacian on the given grid."""
    size = int(np.prod(grid_shape))
    A = np.zeros((size, size))
    for col in range(size):
        e = np.zeros(size)
        e[col] = 1.0
        x = e.reshape(grid_shape)
        y = -2.0 * len(grid_shape) * x
        for axis in range(len(grid_shape)):
            y = y + np.roll(x, 1, axis=axis) + np.roll(x, -1, axis=axis)
        A[:, col] = y.ravel()
    return A


def dense_solve(L: np.ndarray, pad: int, policy: str = "corner") -> np.ndarray:
    """Pseudo-inverse solve of the padded circulant system, cropped."""
    padded = np.pad(L, pad)
    A = torus_stencil_matrix(padded.shape)
    J = (np.linalg.pinv(A) @ padded.ravel()).reshape(padded.shape)
    crop = tuple(slice(pad, -pad) for _ in padded.shape)
    if policy == "corner":
        J = J - J.flat[0]
        return J[crop]
    I = J[crop]
    return I - I.mean()


def loop_inner(x: np.ndarray, y: np.ndarray) -> float:
    total = 0.0
    for a, b in zip(x.ravel(), y.ravel()):
        total += float(a) * float(b)
    return total


def loop_gradient_2d(f: np.ndarray):
    h, w = f.shape
    u = np.zeros_like(f)
    v = np.zeros_like(f)
    for i in range(h):
        for j in range(w):
            u[i, j] = (f[i + 1, j] if i + 1 < h else 0.0) - f[i, j]
            v[i, j] = (f[i, j + 1] if j + 1 < w else 0.0) - f[i, j]
    return u, v


def loop_divergence_2d(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    h, w = u.shape
    d = np.zeros_like(u)
    for i in range(h):
        for j in range(w):
            d[i, j] = u[i, j] - (u[i - 1, j] if i > 0 else 0.0)
            d[i, j] += v[i, j] - (v[i, j - 1] if j > 0 else 0.0)
    return d


def loop_stencil_2d(f: np.ndarray) -> np.ndarray:
    """div(grad) composite: zero extension, one-sided at the low edges."""
    return loop_divergence_2d(*loop_gradient_2d(f))


def loop_curl3d(u: np.ndarray, v: np.ndarray, w: np.ndarray):
    def d(f, axis, idx):
        nxt = list(idx)
        nxt[axis] += 1
        if nxt[axis] >= f.shape[axis]:
            return -f[tuple(idx)]
        return f[tuple(nxt)] - f[tuple(idx)]

    shape = u.shape
    cx = np.zeros(shape)
    cy = np.zeros(shape)
    cz = np.zeros(shape)
    for idx in np.ndindex(shape):
        cx[idx] = d(w, 1, idx) - d(v, 2, idx)
        cy[idx] = d(u, 2, idx) - d(w, 0, idx)
        cz[idx] = d(v, 0, idx) - d(u, 1, idx)
    return cx, cy, cz


def loop_mix_full(weights: np.ndarray, x: np.ndarray) -> np.ndarray:
    b, cin = x.shape[0], x.shape[1]
    cout = weights.shape[0]
    out = np.zeros((b, cout) + x.shape[2:])
    for bi in range(b):
        for o in range(cout):
            for i in range(cin):
                out[bi, o] += weights[o, i] * x[bi, i]
    return out
