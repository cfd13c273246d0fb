import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from inkjetid import spectral as sp
from oracles import dft_direct

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


class TestDFT:
    def test_constant_signal(self):
        X = sp.dft_1d(np.full(16, 2.5))
        assert X[0] == pytest.approx(16 * 2.5)
        np.testing.assert_allclose(X[1:], 0, atol=1e-9)

    def test_unit_impulse(self):
        x = np.zeros(12)
        x[0] = 1
        np.testing.assert_allclose(sp.dft_1d(x), np.ones(12), atol=1e-12)

    def test_matches_direct_sum(self):
        x = np.random.default_rng(8).normal(size=8)
        ref = dft_direct(x)
        np.testing.assert_allclose(sp.dft_1d(x), ref, rtol=1e-9, atol=1e-9 * np.abs(ref).max())

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.float64, st.integers(1, 64), elements=finite), arrays(np.float64, 1, elements=finite))
    def test_linearity(self, x, ab):
        y = np.roll(x[::-1], 3)
        a, b = 1.7, ab[0]
        lhs = sp.dft_1d(a * x + b * y)
        rhs = a * sp.dft_1d(x) + b * sp.dft_1d(y)
        scale = max(1.0, np.abs(lhs).max(), np.abs(rhs).max())
        np.testing.assert_allclose(lhs, rhs, atol=1e-9 * scale)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            sp.dft_1d([])


class TestWaveletFilters:
    @pytest.mark.parametrize("name", ["db1", "db2", "db3", "db4"])
    def test_orthonormal_and_vanishing_moments(self, name):
        w = sp.Wavelet.from_name(name)
        lo, hi = w.rec_lo, w.rec_hi
        assert lo.sum() == pytest.approx(math.sqrt(2), abs=1e-12)
        for shift in range(0, len(lo), 2):
            expect = 1.0 if shift == 0 else 0.0
            assert np.dot(lo[shift:], lo[: len(lo) - shift]) == pytest.approx(expect, abs=1e-12)
            assert np.dot(hi[shift:], hi[: len(hi) - shift]) == pytest.approx(expect, abs=1e-12)
        k = np.arange(len(hi))
        for p in range(len(lo) // 2):
            assert np.dot(k**p, hi) == pytest.approx(0, abs=1e-9)

    def test_unknown_wavelet(self):
        with pytest.raises(ValueError, match="unknown wavelet"):
            sp.Wavelet.from_name("sym5")


class TestDWT:
    def test_haar_constant_has_zero_detail(self):
        a, d = sp.dwt(np.ones(4), "haar")
        np.testing.assert_allclose(a, [math.sqrt(2)] * 2)
        np.testing.assert_allclose(d, [0, 0], atol=1e-15)

    def test_haar_pair(self):
        a, d = sp.dwt(np.array([1.0, 0.0]), "haar")
        np.testing.assert_allclose(a, [1 / math.sqrt(2)])
        np.testing.assert_allclose(d, [1 / math.sqrt(2)])

    def test_db4_reconstruction_length_64(self):
        x = np.random.default_rng(64).normal(size=64)
        coeffs = sp.dwt_multilevel_1d(x, 3, "db4").bands
        assert np.abs(sp.waverec(coeffs, "db4") - x).max() < 1e-10

    @pytest.mark.parametrize("boundary", sp.BOUNDARY_MODES)
    @pytest.mark.parametrize("name", ["db1", "db2", "db3", "db4"])
    @pytest.mark.parametrize("n", [56, 64, 67, 100, 256])
    def test_perfect_reconstruction(self, name, boundary, n):
        x = np.random.default_rng(n).normal(size=n)
        rec = sp.waverec(sp.wavedec(x, name, 3, boundary), name, boundary, length=n)
        assert np.abs(rec - x).max() < 1e-10

    @pytest.mark.parametrize("name", ["db1", "db2", "db3", "db4"])
    def test_energy_conservation_periodized(self, name):
        x = np.random.default_rng(1).normal(size=256)
        e = sum(np.sum(c**2) for c in sp.wavedec(x, name, 3))
        assert e == pytest.approx(np.sum(x**2), rel=1e-8)

    def test_band_order_and_lengths(self):
        bands = sp.dwt_multilevel_1d(np.arange(256.0)).bands
        assert [len(b) for b in bands] == [32, 32, 64, 128]

    def test_too_short(self):
        with pytest.raises(ValueError, match="too short"):
            sp.wavedec(np.ones(40), "db4", 3)

    def test_other_depths_need_wavedec(self):
        with pytest.raises(ValueError):
            sp.dwt_multilevel_1d(np.ones(256), levels=2)

    @pytest.mark.parametrize("boundary", sp.BOUNDARY_MODES)
    @pytest.mark.parametrize("name", ["db1", "db2", "db4"])
    def test_matches_pywavelets(self, name, boundary):
        pywt = pytest.importorskip("pywt")
        x = np.random.default_rng(3).normal(size=(4, 77))
        ours = sp.wavedec(x, name, 3, boundary)
        ref = pywt.wavedec(x, name, mode=boundary, level=3, axis=-1)
        for a, b in zip(ours, ref):
            np.testing.assert_allclose(a, b, atol=1e-12)

    def test_2d_constant_block_has_no_detail(self):
        ll, (lh, hl, hh) = sp.dwt2(np.full((2, 2), 3.0), "haar")
        np.testing.assert_allclose([lh, hl, hh], 0, atol=1e-15)
        assert ll[0, 0] == pytest.approx(6.0)

    def test_2d_round_trip_and_pywt(self):
        x = np.random.default_rng(5).normal(size=(64, 64))
        c = sp.wavedec2(x, "db3")
        assert np.abs(sp.waverec2(c, "db3") - x).max() < 1e-10
        pywt = pytest.importorskip("pywt")
        ref = pywt.wavedec2(x, "db3", mode="periodization", level=3)
        np.testing.assert_allclose(c[0], ref[0], atol=1e-12)
        for ours, theirs in zip(c[1:], ref[1:]):
            np.testing.assert_allclose(np.array(ours), np.array(theirs), atol=1e-12)


class TestSTFT:
    def test_constant_rect_only_dc(self):
        mag = sp.stft_1d(np.full(256, 0.7), 64, 32, "rect")
        assert np.all(mag[0] > 0)
        np.testing.assert_allclose(mag[1:], 0, atol=1e-9)

    def test_rect_hop_equal_window_is_chunked_dft(self):
        x = np.random.default_rng(0).normal(size=256)
        mag = sp.stft_1d(x, 32, 32, "rect")
        assert mag.shape == (32, 8)
        for n in range(8):
            np.testing.assert_allclose(mag[:, n], np.abs(sp.dft_1d(x[32 * n : 32 * n + 32])), atol=1e-9)

    def test_sinusoid_peak_bin(self):
        t = np.arange(512)
        x = np.sin(2 * np.pi * 4 * t / 64)
        mag = sp.stft_1d(x, 64, 32, "hann", onesided=True)
        assert np.all(np.argmax(mag, axis=0) == 4)

    def test_window_longer_than_signal(self):
        with pytest.raises(ValueError):
            sp.stft_1d(np.ones(16), 64, 32)

    def test_2d_shape(self):
        mag = sp.stft_2d(np.zeros((256, 256)), 64, 32)
        assert mag.shape == (7, 7, 64, 64)


class TestBandGrouping:
    def test_dyadic_band_sizes(self):
        idx = sp.dyadic_band_index(256)
        assert [int(np.sum(idx == b)) for b in range(4)] == [33, 32, 64, 127]
        assert idx[0] == 0 and idx[128] == 3

    def test_fft_2d_constant_plane(self):
        bands = sp.transform_2d(np.full((256, 256), 0.4), "fft").bands
        assert bands[0].max() > 0
        for b in bands[1:]:
            np.testing.assert_allclose(b, 0, atol=1e-9)

    def test_fft_2d_parseval(self):
        x = np.random.default_rng(2).random((256, 256))
        bands = sp.transform_2d(x, "fft").bands
        energy = sum(np.sum(b**2) for b in bands) / x.size
        assert energy == pytest.approx(np.sum(x**2), rel=1e-6)

    def test_dwt_2d_grouping(self):
        bands = sp.transform_2d(np.random.default_rng(0).random((256, 256)), "dwt").bands
        assert [b.size for b in bands] == [32 * 32, 3 * 32 * 32, 3 * 64 * 64, 3 * 128 * 128]

    @pytest.mark.parametrize("method", sp.METHODS)
    def test_2d_needs_square(self, method):
        with pytest.raises(ValueError, match="square"):
            sp.transform_2d(np.zeros((256, 128)), method)

    @pytest.mark.parametrize("method", sp.METHODS)
    def test_rowwise_identical_rows_repeat(self, method):
        row = np.random.default_rng(4).random(256)
        plane = np.tile(row, (256, 1))
        single = sp.rowwise_linearize(plane[:1], method).bands
        full = sp.rowwise_linearize(plane, method).bands
        for s, f in zip(single, full):
            np.testing.assert_allclose(f, np.tile(s, 256))

    def test_rowwise_dwt_band_lengths(self):
        bands = sp.rowwise_linearize(np.zeros((256, 256)), "dwt").bands
        assert [b.size for b in bands] == [256 * 32, 256 * 32, 256 * 64, 256 * 128]

    def test_rowwise_fft_zero_plane(self):
        for b in sp.rowwise_linearize(np.zeros((256, 256)), "fft").bands:
            assert not b.any()

    @pytest.mark.parametrize("method", sp.METHODS)
    @pytest.mark.parametrize("mode", sp.MODES)
    def test_always_four_bands(self, method, mode):
        params = sp.SpectralParams(method=method, mode=mode)
        s = sp.sub_bands(np.random.default_rng(1).random((256, 256)), params)
        assert len(s.bands) == 4 and all(b.size for b in s.bands)


class TestBandStats:
    def test_alternating(self):
        s = sp.band_stats(np.array([1.0, -1.0, 1.0, -1.0]))
        assert s.zero_crossings == 3
        assert s.mean == 0
        assert s.mean_crossings == 3

    def test_single_nonzero_entropy(self):
        assert sp.band_stats(np.array([0.0, 0.0, 3.0, 0.0])).entropy == 0.0

    def test_equal_magnitudes_entropy(self):
        assert sp.band_stats(np.array([2.0, -2.0, 2.0, 2.0])).entropy == pytest.approx(math.log(4))

    def test_zero_band(self):
        s = sp.band_stats(np.zeros(10))
        assert s.entropy == 0 and s.zero_crossings == 0 and s.rms == 0

    def test_underflowing_energy(self):
        assert sp.energy_entropy(np.array([323.0, 5e-160])) == 0.0

    def test_zeros_do_not_cross(self):
        assert sp.crossings(np.array([1.0, 0.0, -1.0])) == 0

    def test_empty(self):
        with pytest.raises(ValueError):
            sp.band_stats(np.array([]))

    def test_twelve_values(self):
        assert sp.band_stats(np.arange(5.0)).as_array().shape == (12,)

    @settings(max_examples=100, deadline=None)
    @given(arrays(np.float64, st.integers(1, 300), elements=finite))
    def test_invariants(self, c):
        s = sp.band_stats(c)
        assert s.p5 <= s.p25 <= s.p50 <= s.p75 <= s.p95
        assert s.std**2 == pytest.approx(s.variance, rel=1e-9, abs=1e-300)
        assert 0 <= s.entropy <= math.log(len(c)) + 1e-9
        assert s.rms**2 == pytest.approx(s.variance + s.mean**2, rel=1e-6, abs=1e-9)
