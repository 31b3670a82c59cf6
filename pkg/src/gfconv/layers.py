"""Conservative-field layer operators: LI, GI and GID, with exact adjoints.

Each layer optionally mixes the selected channels with a bias-free linear
combination, then integrates spectrally. GI pairs channels into vector
fields ((u, v) in 2D, (u, v, w) in 3D, consecutive within the subset),
forms a Laplacian via divergence and solves it into one potential channel
per group; GID re-differentiates the potential, projecting each group onto
the space of conservative (curl-free) fields. LI treats each selected
channel directly as a Laplacian.

The integration runs circularly on the feature-map grid itself: gradient
and divergence are periodic differences and the Green's spectrum is built
at the exact feature size. On the shared grid the composite
grad . solve . div is an orthogonal projection, which is what makes GID
idempotent and its conservative fixed points exact instead of approximate.
Zero-padding between the differences and the solve would break that
projection at the crop boundary, so the layers deliberately do not pad;
the pad width of an attached SolverConfig is ignored here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ChannelCountMismatchError,
    IndivisibleChannelCountError,
    NonFiniteValueError,
    ShapeMismatchError,
)
from .fields import Field
from .kernels import KernelCache, default_cache
from .solver import CORNER_ZERO, MEAN_ZERO, SolverConfig

LI = "LI"
GI = "GI"
GID = "GID"


@dataclass(frozen=True)
class ChannelMixer:
    """Bias-free, activation-free linear channel combination.

    kind "identity" passes through, "diagonal" scales each channel by one
    weight, "full" applies an (out_channels, in_channels) matrix.
    """

    kind: str = "identity"
    weights: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("identity", "diagonal", "full"):
            raise ValueError(f"unknown mixer kind {self.kind!r}")
        if self.kind == "identity":
            if self.weights is not None:
                raise ChannelCountMismatchError("identity mixer carries no weights")
            return
        w = np.asarray(self.weights, dtype=np.float64)
        if not np.isfinite(w).all():
            raise NonFiniteValueError("mixer weights must be finite")
        if self.kind == "diagonal" and w.ndim != 1:
            raise ChannelCountMismatchError("diagonal mixer needs a 1D weight vector")
        if self.kind == "full" and w.ndim != 2:
            raise ChannelCountMismatchError("full mixer needs an (out, in) weight matrix")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def in_channels(self, available: int) -> int:
        if self.kind == "identity":
            return available
        if self.kind == "diagonal":
            return self.weights.shape[0]
        return self.weights.shape[1]

    def out_channels(self, available: int) -> int:
        if self.kind in ("identity", "diagonal"):
            return self.in_channels(available)
        return self.weights.shape[0]

    def param_count(self) -> int:
        return 0 if self.kind == "identity" else int(self.weights.size)

    def apply(self, x: np.ndarray) -> np.ndarray:
        if self.kind == "identity":
            return x
        if x.shape[1] != self.in_channels(x.shape[1]):
            raise ChannelCountMismatchError(
                f"mixer expects {self.in_channels(x.shape[1])} channels, got {x.shape[1]}"
            )
        if self.kind == "diagonal":
            return x * self.weights.reshape((1, -1) + (1,) * (x.ndim - 2))
        return np.einsum("oi,bi...->bo...", self.weights, x)

    def apply_transpose(self, g: np.ndarray) -> np.ndarray:
        if self.kind == "identity":
            return g
        if self.kind == "diagonal":
            return g * self.weights.reshape((1, -1) + (1,) * (g.ndim - 2))
        return np.einsum("oi,bo...->bi...", self.weights, g)

    def weight_gradient(self, x: np.ndarray, g_mixed: np.ndarray) -> np.ndarray | None:
        """d<G, layer(x)>/dw given x and the layer-adjoint of G at the mixer output."""
        if self.kind == "identity":
            return None
        spatial = tuple(range(2, x.ndim))
        if self.kind == "diagonal":
            return np.sum(x * g_mixed, axis=(0,) + spatial)
        b, o = g_mixed.shape[0], g_mixed.shape[1]
        i = x.shape[1]
        return np.einsum("bop,bip->oi", g_mixed.reshape(b, o, -1), x.reshape(b, i, -1))


@dataclass(frozen=True)
class LayerSpec:
    """Which operator to apply, how to mix, and which channels to touch.

    ``channel_subset`` lists the input channels the layer transforms; all
    others pass through untouched. The mixer is sized to the subset. With a
    proper subset the mixer must preserve the channel count so pass-through
    positions stay well defined; a subset of None means every channel.
    """

    kind: str
    mixer: ChannelMixer = ChannelMixer()
    solver_cfg: SolverConfig = SolverConfig(constant_policy=MEAN_ZERO)
    channel_subset: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.kind not in (LI, GI, GID):
            raise ValueError(f"unknown layer kind {self.kind!r}")
        if self.channel_subset is not None:
            subset = tuple(int(c) for c in self.channel_subset)
            if len(set(subset)) != len(subset):
                raise ShapeMismatchError("channel subset contains duplicates")
            object.__setattr__(self, "channel_subset", subset)

    def param_count(self) -> int:
        return self.mixer.param_count()


def mix_channels(X: Field, m: ChannelMixer) -> Field:
    """Per-pixel linear combination of all channels of X."""
    if m.kind != "identity" and m.in_channels(X.channels) != X.channels:
        raise ChannelCountMismatchError(
            f"mixer expects {m.in_channels(X.channels)} channels, field has {X.channels}"
        )
    return Field(np.ascontiguousarray(m.apply(X.data)))


# -- circular differences on the feature grid ------------------------------

def _grad_t(p: np.ndarray, dim: int) -> list[np.ndarray]:
    axes = range(p.ndim - dim, p.ndim)
    return [np.roll(p, -1, axis=a) - p for a in axes]


def _div_t(comps: list[np.ndarray], dim: int) -> np.ndarray:
    ndim = comps[0].ndim
    axes = range(ndim - dim, ndim)
    return sum(u - np.roll(u, 1, axis=a) for a, u in zip(axes, comps))


def _integrate(lap: np.ndarray, dim: int, cfg: SolverConfig, cache: KernelCache,
               conjugate: bool = False) -> np.ndarray:
    """Same-grid spectral solve; self-adjoint up to the constant handling."""
    axes = tuple(range(lap.ndim - dim, lap.ndim))
    spectrum = cache.spectrum_for_grid(lap.shape[-dim:], precision=cfg.precision)
    if conjugate:
        spectrum = np.conj(spectrum)
    return np.fft.ifftn(np.fft.fftn(lap, axes=axes) * spectrum, axes=axes).real


def _subtract_constant(p: np.ndarray, dim: int, policy: str) -> np.ndarray:
    axes = tuple(range(p.ndim - dim, p.ndim))
    if policy == CORNER_ZERO:
        corner = p[(...,) + (0,) * dim]
        return p - corner[(...,) + (None,) * dim]
    return p - p.mean(axis=axes)[(...,) + (None,) * dim]


def _subtract_constant_transpose(g: np.ndarray, dim: int, policy: str) -> np.ndarray:
    axes = tuple(range(g.ndim - dim, g.ndim))
    if policy == CORNER_ZERO:
        out = g.copy()
        out[(...,) + (0,) * dim] -= g.sum(axis=axes)
        return out
    return g - g.mean(axis=axes)[(...,) + (None,) * dim]


# -- channel bookkeeping ----------------------------------------------------

@dataclass(frozen=True)
class _Plan:
    subset: tuple[int, ...]
    passthrough: tuple[int, ...]
    in_channels: int
    mixed_channels: int
    out_channels: int
    groups: int  # vector groups for GI/GID, 0 for LI


def _plan(spec: LayerSpec, in_channels: int, dim: int) -> _Plan:
    subset = spec.channel_subset if spec.channel_subset is not None \
        else tuple(range(in_channels))
    if subset and (min(subset) < 0 or max(subset) >= in_channels):
        raise ShapeMismatchError(
            f"channel subset {subset} out of range for {in_channels} channels"
        )
    passthrough = tuple(c for c in range(in_channels) if c not in set(subset))
    mixed = spec.mixer.out_channels(len(subset))
    if spec.mixer.kind != "identity" and spec.mixer.in_channels(len(subset)) != len(subset):
        raise ChannelCountMismatchError(
            f"mixer expects {spec.mixer.in_channels(len(subset))} channels, "
            f"subset has {len(subset)}"
        )
    if passthrough and mixed != len(subset):
        raise ChannelCountMismatchError(
            "a channel-count-changing mixer requires the subset to cover all channels"
        )
    if spec.kind == LI:
        groups = 0
        out = len(passthrough) + mixed
    else:
        if mixed % dim != 0:
            raise IndivisibleChannelCountError(
                f"{spec.kind} needs the mixed channel count ({mixed}) divisible by {dim}"
            )
        groups = mixed // dim
        out = len(passthrough) + (groups if spec.kind == GI else mixed)
    return _Plan(subset, passthrough, in_channels, mixed, out, groups)


def _core_forward(mixed: np.ndarray, spec: LayerSpec, plan: _Plan, dim: int,
                  cache: KernelCache) -> np.ndarray:
    cfg = spec.solver_cfg
    if spec.kind == LI:
        return _subtract_constant(_integrate(mixed, dim, cfg, cache), dim, cfg.constant_policy)
    b = mixed.shape[0]
    grouped = mixed.reshape((b, plan.groups, dim) + mixed.shape[2:])
    lap = _div_t([grouped[:, :, k] for k in range(dim)], dim)
    pot = _subtract_constant(_integrate(lap, dim, cfg, cache), dim, cfg.constant_policy)
    if spec.kind == GI:
        return pot
    comps = _grad_t(pot, dim)
    return np.stack(comps, axis=2).reshape((b, plan.groups * dim) + mixed.shape[2:])


def _core_adjoint(g: np.ndarray, spec: LayerSpec, plan: _Plan, dim: int,
                  cache: KernelCache) -> np.ndarray:
    """Transpose of _core_forward on the mixed-channel block."""
    cfg = spec.solver_cfg
    policy = cfg.constant_policy
    if spec.kind == LI:
        return _integrate(_subtract_constant_transpose(g, dim, policy), dim, cfg, cache,
                          conjugate=True)
    b = g.shape[0]
    if spec.kind == GID:
        grouped = g.reshape((b, plan.groups, dim) + g.shape[2:])
        # grad_t^T = -div_t; the sign cancels against div_t^T = -grad_t below.
        pot_bar = -_div_t([grouped[:, :, k] for k in range(dim)], dim)
    else:
        pot_bar = g
    lap_bar = _integrate(_subtract_constant_transpose(pot_bar, dim, policy), dim, cfg, cache,
                         conjugate=True)
    comps = [-c for c in _grad_t(lap_bar, dim)]
    return np.stack(comps, axis=2).reshape((b, plan.groups * dim) + g.shape[2:])


def _scatter(transformed: np.ndarray, passthrough_data: np.ndarray, plan: _Plan,
             spec: LayerSpec) -> np.ndarray:
    """Interleave transformed channels with pass-through ones.

    Pass-through channels keep their input positions relative to each other;
    each transformed group (or LI channel) lands at the position of the
    first input channel it came from.
    """
    b = transformed.shape[0]
    spatial = transformed.shape[2:]
    out = np.empty((b, plan.out_channels) + spatial, dtype=transformed.dtype)
    anchors = _anchor_positions(plan, spec)
    order = sorted(range(len(anchors)), key=lambda i: anchors[i][0])
    for pos, i in enumerate(order):
        _, kind, idx = anchors[i]
        out[:, pos] = passthrough_data[:, idx] if kind == "pass" else transformed[:, idx]
    return out


def _gather(out_grad: np.ndarray, plan: _Plan, spec: LayerSpec):
    """Inverse of _scatter: split an output-shaped array back apart."""
    anchors = _anchor_positions(plan, spec)
    order = sorted(range(len(anchors)), key=lambda i: anchors[i][0])
    n_trans = plan.out_channels - len(plan.passthrough)
    b = out_grad.shape[0]
    spatial = out_grad.shape[2:]
    transformed = np.empty((b, n_trans) + spatial, dtype=out_grad.dtype)
    passthrough = np.empty((b, len(plan.passthrough)) + spatial, dtype=out_grad.dtype)
    for pos, i in enumerate(order):
        _, kind, idx = anchors[i]
        if kind == "pass":
            passthrough[:, idx] = out_grad[:, pos]
        else:
            transformed[:, idx] = out_grad[:, pos]
    return transformed, passthrough


def _anchor_positions(plan: _Plan, spec: LayerSpec):
    anchors = [(ch, "pass", i) for i, ch in enumerate(plan.passthrough)]
    if spec.kind == GI:
        dim_span = plan.mixed_channels // plan.groups if plan.groups else 1
        for g in range(plan.groups):
            j = g * dim_span
            anchor = plan.subset[j] if j < len(plan.subset) else plan.in_channels + g
            anchors.append((anchor, "trans", g))
    else:
        for j in range(plan.mixed_channels):
            anchor = plan.subset[j] if j < len(plan.subset) else plan.in_channels + j
            anchors.append((anchor, "trans", j))
    return anchors


def _forward(X: Field, spec: LayerSpec, cache: KernelCache) -> Field:
    X.require_stencil_size()
    dim = X.dim
    plan = _plan(spec, X.channels, dim)
    target_dt = np.float64 if spec.solver_cfg.precision == "double" else np.float32
    data = X.data.astype(target_dt, copy=False)
    sel = data[:, list(plan.subset)] if plan.subset else data[:, :0]
    mixed = spec.mixer.apply(sel)
    transformed = _core_forward(mixed, spec, plan, dim, cache)
    out = _scatter(transformed, data[:, list(plan.passthrough)], plan, spec)
    return Field(np.ascontiguousarray(out.astype(target_dt, copy=False)))


def li_forward(X: Field, spec: LayerSpec, cache: KernelCache | None = None) -> Field:
    if spec.kind != LI:
        raise ValueError(f"li_forward called with kind {spec.kind!r}")
    return _forward(X, spec, default_cache() if cache is None else cache)


def gi_forward(X: Field, spec: LayerSpec, cache: KernelCache | None = None) -> Field:
    if spec.kind != GI:
        raise ValueError(f"gi_forward called with kind {spec.kind!r}")
    return _forward(X, spec, default_cache() if cache is None else cache)


def gid_forward(X: Field, spec: LayerSpec, cache: KernelCache | None = None) -> Field:
    if spec.kind != GID:
        raise ValueError(f"gid_forward called with kind {spec.kind!r}")
    return _forward(X, spec, default_cache() if cache is None else cache)


def layer_forward(X: Field, spec: LayerSpec, cache: KernelCache | None = None) -> Field:
    return _forward(X, spec, default_cache() if cache is None else cache)


@dataclass(frozen=True)
class LayerAdjointResult:
    input_grad: Field
    weight_grad: np.ndarray | None


def layer_adjoint(G: Field, spec: LayerSpec, X: Field | None = None,
                  cache: KernelCache | None = None) -> LayerAdjointResult:
    """Pull a cotangent G back through the layer.

    Returns the exact transpose of the forward map applied to G, plus
    d<G, forward(X)>/dw when X is supplied and the mixer has weights.
    """
    if cache is None:
        cache = default_cache()
    G.require_stencil_size()
    dim = G.dim
    in_channels = X.channels if X is not None else _infer_in_channels(spec, G.channels, dim)
    plan = _plan(spec, in_channels, dim)
    if G.channels != plan.out_channels:
        raise ShapeMismatchError(
            f"cotangent has {G.channels} channels, forward output has {plan.out_channels}"
        )
    g = G.data.astype(np.float64 if spec.solver_cfg.precision == "double" else np.float32,
                      copy=False)
    g_trans, g_pass = _gather(g, plan, spec)
    g_mixed = _core_adjoint(g_trans, spec, plan, dim, cache)
    g_sel = spec.mixer.apply_transpose(g_mixed)

    grad = np.zeros((g.shape[0], in_channels) + g.shape[2:], dtype=g.dtype)
    if plan.subset:
        grad[:, list(plan.subset)] = g_sel
    if plan.passthrough:
        grad[:, list(plan.passthrough)] = g_pass

    weight_grad = None
    if X is not None and spec.mixer.kind != "identity":
        x_sel = X.data.astype(g.dtype, copy=False)[:, list(plan.subset)]
        weight_grad = spec.mixer.weight_gradient(x_sel, g_mixed)
    return LayerAdjointResult(Field(np.ascontiguousarray(grad)), weight_grad)


def _infer_in_channels(spec: LayerSpec, out_channels: int, dim: int) -> int:
    if spec.channel_subset is not None:
        n_sub = len(spec.channel_subset)
        n_pass_and_trans = out_channels
        if spec.kind == GI:
            return n_pass_and_trans - n_sub // dim + n_sub
        return n_pass_and_trans
    if spec.mixer.kind == "full":
        return spec.mixer.weights.shape[1]
    if spec.kind == GI:
        return out_channels * dim
    return out_channels
