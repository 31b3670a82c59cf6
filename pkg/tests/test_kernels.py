import threading

import numpy as np
import pytest

from gfconv import (
    DimensionTooSmallError,
    InvalidPadError,
    KernelCache,
    build_green_kernel,
    cache_get_or_build,
)
from gfconv.kernels import DEFAULT_PAD, LAPLACE_2D, LAPLACE_3D

from .oracles import naive_dft


def spectrum_oracle(grid_shape):
    """Green's spectrum via the explicit-sum DFT, no FFT involved."""
    dim = len(grid_shape)
    dirac = np.zeros(grid_shape)
    dirac[(1,) * dim] = 1.0
    lap = np.zeros(grid_shape)
    lap[(slice(0, 3),) * dim] = LAPLACE_2D if dim == 2 else LAPLACE_3D
    fd = naive_dft(dirac)
    fl = naive_dft(lap)
    fl.flat[0] = 1.0
    g = fd / fl
    g.flat[0] = 0.0
    return g


class TestBuildGreenKernel:
    def test_default_pad_is_four(self):
        assert DEFAULT_PAD == 4
        k = build_green_kernel((8, 8))
        assert k.pad == 4
        assert k.padded_shape == (16, 16)

    def test_dc_entry_zero(self):
        for shape in ((8, 8), (5, 7), (4, 4, 4)):
            k = build_green_kernel(shape, pad=2)
            assert k.spectrum.flat[0] == 0.0

    def test_matches_naive_dft_16x16(self):
        k = build_green_kernel((8, 8), pad=4)
        oracle = spectrum_oracle((16, 16))
        scale = np.abs(oracle).max()
        assert np.abs(k.spectrum - oracle).max() <= 1e-12 * scale

    def test_spot_frequency(self):
        # spectrum[8, 0] must equal F(dirac)[8,0] / F(laplace)[8,0]
        k = build_green_kernel((8, 8), pad=4)
        dirac = np.zeros((16, 16))
        dirac[1, 1] = 1.0
        lap = np.zeros((16, 16))
        lap[0:3, 0:3] = LAPLACE_2D
        expected = naive_dft(dirac)[8, 0] / naive_dft(lap)[8, 0]
        assert abs(k.spectrum[8, 0] - expected) <= 1e-12 * abs(expected)

    def test_matches_naive_dft_3d(self):
        k = build_green_kernel((4, 4, 4), pad=1)
        oracle = spectrum_oracle((6, 6, 6))
        scale = np.abs(oracle).max()
        assert np.abs(k.spectrum - oracle).max() <= 1e-12 * scale

    def test_finite_everywhere(self):
        for shape, pad in (((8, 8), 1), ((13, 9), 4), ((5, 5, 5), 2)):
            k = build_green_kernel(shape, pad=pad)
            assert np.isfinite(k.spectrum).all()

    def test_laplacian_spectrum_negative_off_dc(self):
        # every non-DC frequency: 2cos(2pi k1/N1) + 2cos(2pi k2/N2) - 4 < 0
        n1, n2 = 16, 12
        k1, k2 = np.meshgrid(np.arange(n1), np.arange(n2), indexing="ij")
        lam = 2 * np.cos(2 * np.pi * k1 / n1) + 2 * np.cos(2 * np.pi * k2 / n2) - 4
        lam_off_dc = lam.ravel()[1:]
        assert (lam_off_dc < 0).all()

    def test_magnitude_symmetric_under_negation(self):
        k = build_green_kernel((7, 9), pad=3)
        s = k.spectrum
        flipped = s[tuple(np.meshgrid(*[(-np.arange(n)) % n for n in s.shape],
                                      indexing="ij"))]
        assert np.abs(np.abs(s) - np.abs(flipped)).max() <= 1e-12

    def test_invalid_pad(self):
        with pytest.raises(InvalidPadError):
            build_green_kernel((8, 8), pad=0)

    def test_dimension_too_small(self):
        with pytest.raises(DimensionTooSmallError):
            build_green_kernel((2, 8), pad=4)


class TestKernelCache:
    def test_same_key_same_values(self):
        cache = KernelCache()
        a = cache_get_or_build(cache, (8, 8), pad=4)
        b = cache_get_or_build(cache, (8, 8), pad=4)
        assert a.spectrum is b.spectrum
        assert len(cache) == 1

    def test_distinct_shapes_distinct_entries(self):
        cache = KernelCache()
        cache_get_or_build(cache, (8, 8), pad=4)
        cache_get_or_build(cache, (8, 10), pad=4)
        assert len(cache) == 2

    def test_precision_keys_separate(self):
        cache = KernelCache()
        cache_get_or_build(cache, (8, 8), pad=4, precision="double")
        cache_get_or_build(cache, (8, 8), pad=4, precision="single")
        assert len(cache) == 2

    def test_concurrent_builds_value_equal(self):
        cache = KernelCache()
        results = []
        barrier = threading.Barrier(8)

        def worker():
            barrier.wait()
            results.append(cache_get_or_build(cache, (16, 16), pad=4))

        threads = [threading.Thread(target=worker) for _ in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert len(cache) == 1
        first = results[0].spectrum
        for r in results[1:]:
            assert np.array_equal(r.spectrum, first)
