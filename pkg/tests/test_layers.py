import numpy as np
import pytest

from gfconv import (
    CORNER_ZERO,
    GI,
    GID,
    LI,
    ChannelCountMismatchError,
    ChannelMixer,
    Field,
    IndivisibleChannelCountError,
    LayerSpec,
    SolverConfig,
    VectorField,
    curl2d,
    field_inner,
    field_new,
    gi_forward,
    gid_forward,
    gradient,
    interior_max_curl,
    laplacian_stencil,
    layer_adjoint,
    layer_forward,
    li_forward,
    mix_channels,
)

from .conftest import random_field, rel_close
from .oracles import loop_mix_full

CORNER_CFG = SolverConfig(constant_policy=CORNER_ZERO)


def grad_as_channels(f: Field) -> Field:
    """Stack gradient components as consecutive channels per input channel."""
    comps = gradient(f).components
    stacked = np.stack([c.data for c in comps], axis=2)
    b, c, d = stacked.shape[0], stacked.shape[1], stacked.shape[2]
    return Field(stacked.reshape((b, c * d) + f.shape))


def channel_pairs(f: Field) -> list[VectorField]:
    dim = f.dim
    return [VectorField(tuple(Field(f.data[:, g * dim + k : g * dim + k + 1])
                              for k in range(dim)))
            for g in range(f.channels // dim)]


class TestMixChannels:
    def test_identity(self, rng):
        x = random_field(rng, (5, 5), channels=3)
        assert np.array_equal(mix_channels(x, ChannelMixer()).data, x.data)

    def test_negative_diagonal_flips_sign(self, rng):
        x = random_field(rng, (5, 5), channels=3)
        m = ChannelMixer(kind="diagonal", weights=np.array([-1.0, -1.0, -1.0]))
        assert np.array_equal(mix_channels(x, m).data, -x.data)

    def test_full_matches_loop_oracle(self, rng):
        x = random_field(rng, (4, 4), batch=2, channels=2)
        w = np.array([[1.0, 1.0], [1.0, -1.0]])
        got = mix_channels(x, ChannelMixer(kind="full", weights=w)).data
        assert np.array_equal(got, loop_mix_full(w, x.data))

    def test_channel_mismatch(self, rng):
        x = random_field(rng, (4, 4), channels=3)
        m = ChannelMixer(kind="diagonal", weights=np.ones(2))
        with pytest.raises(ChannelCountMismatchError):
            mix_channels(x, m)

    def test_no_bias_no_weights_for_identity(self):
        with pytest.raises(ChannelCountMismatchError):
            ChannelMixer(kind="identity", weights=np.ones(2))


class TestLiForward:
    def test_recovers_potential(self, rng):
        f = random_field(rng, (10, 10), channels=3, ring_zero=True)
        spec = LayerSpec(kind=LI, solver_cfg=CORNER_CFG)
        out = li_forward(laplacian_stencil(f), spec)
        assert np.abs(out.data - f.data).max() <= 1e-9

    def test_zeros(self):
        spec = LayerSpec(kind=LI)
        out = li_forward(field_new((8, 8), channels=2), spec)
        assert np.abs(out.data).max() == 0.0

    def test_linearity(self, rng):
        spec = LayerSpec(kind=LI)
        a, b = 1.5, -2.5
        x = random_field(rng, (8, 8), channels=2)
        y = random_field(rng, (8, 8), channels=2)
        lhs = li_forward(Field(a * x.data + b * y.data), spec).data
        rhs = a * li_forward(x, spec).data + b * li_forward(y, spec).data
        assert np.abs(lhs - rhs).max() <= 1e-10 * max(np.abs(rhs).max(), 1.0)

    def test_wrong_kind_rejected(self, rng):
        with pytest.raises(ValueError):
            li_forward(random_field(rng, (6, 6)), LayerSpec(kind=GI))


class TestGiForward:
    def test_inverts_gradient(self, rng):
        f = random_field(rng, (10, 10), ring_zero=True)
        spec = LayerSpec(kind=GI, solver_cfg=CORNER_CFG)
        out = gi_forward(grad_as_channels(f), spec)
        assert out.channels == 1
        assert np.abs(out.data - f.data).max() <= 1e-9

    def test_rotation_annihilated(self):
        ii, jj = np.meshgrid(np.arange(10, dtype=float), np.arange(10, dtype=float),
                             indexing="ij")
        rotation = Field(np.stack([-jj, ii])[None])
        spec = LayerSpec(kind=GID)
        out = gid_forward(rotation, spec)
        for pair in channel_pairs(out):
            assert interior_max_curl(pair) <= 1e-9

    def test_zeros(self):
        spec = LayerSpec(kind=GI)
        out = gi_forward(field_new((8, 8), channels=4), spec)
        assert np.abs(out.data).max() == 0.0
        assert out.channels == 2

    def test_indivisible(self, rng):
        with pytest.raises(IndivisibleChannelCountError):
            gi_forward(random_field(rng, (8, 8), channels=3), LayerSpec(kind=GI))

    def test_3d_inverts_gradient(self, rng):
        f = random_field(rng, (6, 6, 6), ring_zero=True)
        spec = LayerSpec(kind=GI, solver_cfg=CORNER_CFG)
        out = gi_forward(grad_as_channels(f), spec)
        assert np.abs(out.data - f.data).max() <= 1e-9


class TestGidForward:
    def test_conservative_fixed_point(self, rng):
        f = random_field(rng, (10, 10), channels=2, ring_zero=True)
        spec = LayerSpec(kind=GID)
        X = grad_as_channels(f)
        out = gid_forward(X, spec)
        assert np.abs(out.data - X.data).max() <= 1e-9

    def test_output_curl_free(self, rng):
        spec = LayerSpec(kind=GID)
        out = gid_forward(random_field(rng, (9, 9), channels=4), spec)
        for pair in channel_pairs(out):
            assert interior_max_curl(pair) <= 1e-9

    def test_idempotent(self, rng):
        spec = LayerSpec(kind=GID)
        x = random_field(rng, (12, 12), channels=4)
        once = gid_forward(x, spec)
        twice = gid_forward(once, spec)
        assert np.abs(once.data - twice.data).max() <= 1e-8

    def test_idempotent_3d(self, rng):
        spec = LayerSpec(kind=GID)
        x = random_field(rng, (6, 6, 6), channels=3)
        once = gid_forward(x, spec)
        twice = gid_forward(once, spec)
        assert np.abs(once.data - twice.data).max() <= 1e-8

    def test_preserves_channel_count(self, rng):
        out = gid_forward(random_field(rng, (8, 8), channels=6), LayerSpec(kind=GID))
        assert out.channels == 6

    def test_subset_passthrough(self, rng):
        x = random_field(rng, (8, 8), channels=6)
        spec = LayerSpec(kind=GID, channel_subset=(1, 2, 4, 5))
        out = gid_forward(x, spec)
        assert out.channels == 6
        assert np.array_equal(out.data[:, 0], x.data[:, 0])
        assert np.array_equal(out.data[:, 3], x.data[:, 3])
        assert not np.allclose(out.data[:, 1], x.data[:, 1])

    def test_diagonal_param_count(self):
        spec = LayerSpec(kind=GID, mixer=ChannelMixer(kind="diagonal", weights=np.ones(4)),
                         channel_subset=(0, 1, 2, 3))
        assert spec.param_count() == 4


class TestLayerAdjoint:
    @pytest.mark.parametrize("kind", [LI, GI, GID])
    @pytest.mark.parametrize("mixer_kind", ["identity", "diagonal", "full"])
    def test_inner_product_identity(self, rng, kind, mixer_kind):
        channels = 4
        if mixer_kind == "identity":
            mixer = ChannelMixer()
        elif mixer_kind == "diagonal":
            mixer = ChannelMixer(kind="diagonal", weights=rng.standard_normal(channels))
        else:
            mixer = ChannelMixer(kind="full",
                                 weights=rng.standard_normal((channels, channels)))
        spec = LayerSpec(kind=kind, mixer=mixer)
        x = random_field(rng, (8, 8), channels=channels)
        y_shape = layer_forward(x, spec).data.shape
        y = Field(rng.standard_normal(y_shape))
        lhs = field_inner(layer_forward(x, spec), y)
        rhs = field_inner(x, layer_adjoint(y, spec).input_grad)
        assert rel_close(lhs, rhs, 1e-10)

    @pytest.mark.parametrize("kind", [LI, GI, GID])
    @pytest.mark.parametrize("mixer_kind", ["diagonal", "full"])
    def test_weight_gradient_vs_central_differences(self, rng, kind, mixer_kind):
        channels = 2
        if mixer_kind == "diagonal":
            w0 = rng.standard_normal(channels)
            make = lambda w: ChannelMixer(kind="diagonal", weights=w)
        else:
            w0 = rng.standard_normal((channels, channels))
            make = lambda w: ChannelMixer(kind="full", weights=w)
        x = random_field(rng, (6, 6), channels=channels)
        spec0 = LayerSpec(kind=kind, mixer=make(w0))
        g = Field(rng.standard_normal(layer_forward(x, spec0).data.shape))
        analytic = layer_adjoint(g, spec0, x).weight_grad
        assert analytic.shape == w0.shape
        eps = 1e-5
        fd = np.zeros_like(w0)
        for idx in np.ndindex(w0.shape):
            wp, wm = w0.copy(), w0.copy()
            wp[idx] += eps
            wm[idx] -= eps
            lp = field_inner(layer_forward(x, LayerSpec(kind=kind, mixer=make(wp))), g)
            lm = field_inner(layer_forward(x, LayerSpec(kind=kind, mixer=make(wm))), g)
            fd[idx] = (lp - lm) / (2 * eps)
        scale = max(np.abs(fd).max(), 1e-300)
        assert np.abs(analytic - fd).max() <= 1e-6 * scale

    def test_zero_cotangent(self, rng):
        spec = LayerSpec(kind=GID, mixer=ChannelMixer(kind="diagonal", weights=np.ones(4)))
        x = random_field(rng, (8, 8), channels=4)
        res = layer_adjoint(field_new((8, 8), channels=4), spec, x)
        assert np.abs(res.input_grad.data).max() == 0.0
        assert np.abs(res.weight_grad).max() == 0.0

    def test_subset_adjoint(self, rng):
        spec = LayerSpec(kind=GI, channel_subset=(0, 1, 4, 5))
        x = random_field(rng, (8, 8), channels=6)
        y = Field(rng.standard_normal(layer_forward(x, spec).data.shape))
        lhs = field_inner(layer_forward(x, spec), y)
        rhs = field_inner(x, layer_adjoint(y, spec, x).input_grad)
        assert rel_close(lhs, rhs, 1e-10)

    def test_3d_adjoint(self, rng):
        spec = LayerSpec(kind=GID)
        x = random_field(rng, (5, 6, 7), channels=3)
        y = Field(rng.standard_normal(layer_forward(x, spec).data.shape))
        lhs = field_inner(layer_forward(x, spec), y)
        rhs = field_inner(x, layer_adjoint(y, spec).input_grad)
        assert rel_close(lhs, rhs, 1e-10)


class TestGiGradientIdentity:
    def test_corner_policy_round_trip(self, rng):
        # gi(gradient(f)) = f for zero-ring f under the corner-zero constant
        f = random_field(rng, (9, 9), ring_zero=True)
        spec = LayerSpec(kind=GI, solver_cfg=CORNER_CFG)
        out = gi_forward(grad_as_channels(f), spec)
        assert np.abs(out.data - f.data).max() <= 1e-9

    def test_mean_policy_round_trip_up_to_constant(self, rng):
        f = random_field(rng, (9, 9), ring_zero=True)
        spec = LayerSpec(kind=GI)
        out = gi_forward(grad_as_channels(f), spec)
        diff = out.data - (f.data - f.data.mean())
        assert np.abs(diff).max() <= 1e-9
