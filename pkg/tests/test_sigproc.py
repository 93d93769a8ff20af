import numpy as np
import pytest

from helpers import random_image, random_mask

from sonoguard.imgcore import BinaryMask, GrayImage
from sonoguard.sigproc import (
    ComplexSpectrum,
    RngStream,
    butterworth_bandpass_gain,
    centered_frequency_distances,
    euclidean_distance_transform,
    fft2_centered,
    gaussian_blur,
    gaussian_blur_array,
    gaussian_kernel1d,
    ifft2_real,
    largest_component,
    mask_boundary,
    median_filter_3x3,
    morph_open_3x3,
    normalize_zero_mean_unit_var,
    sample_rayleigh_field,
    ssim,
)


class TestRngStream:
    def test_same_seed_same_draws(self):
        a = RngStream(42).generator().random(8)
        b = RngStream(42).generator().random(8)
        assert np.array_equal(a, b)

    def test_generator_is_fresh_each_call(self):
        s = RngStream(42)
        assert np.array_equal(s.generator().random(4), s.generator().random(4))

    def test_children_are_distinct_and_stable(self):
        s = RngStream(42)
        a = s.child("alpha")
        b = s.child("beta")
        assert a != b
        assert not np.array_equal(a.generator().random(8), b.generator().random(8))
        assert np.array_equal(a.generator().random(8), s.child("alpha").generator().random(8))

    def test_int_and_str_keys_compose(self):
        s = RngStream(0).child("case", 3).child("noise")
        t = RngStream(0).child("case", 3).child("noise")
        assert s == t

    def test_child_differs_from_parent(self):
        s = RngStream(9)
        assert not np.array_equal(s.generator().random(4), s.child(0).generator().random(4))

    def test_seed_bounds(self):
        RngStream(0)
        RngStream(2**64 - 1)
        with pytest.raises(ValueError):
            RngStream(-1)
        with pytest.raises(ValueError):
            RngStream(2**64)


class TestGaussianBlur:
    def test_sigma_zero_kernel_is_identity(self):
        assert gaussian_kernel1d(0.0).tolist() == [1.0]

    def test_kernel_normalized_and_symmetric(self):
        for sigma in (0.3, 0.8, 1.5, 2.0):
            k = gaussian_kernel1d(sigma)
            assert k.size == 2 * int(np.ceil(3.0 * sigma)) + 1
            assert abs(k.sum() - 1.0) < 1e-12
            assert np.array_equal(k, k[::-1])

    def test_impulse_response_reproduces_separable_kernel(self):
        sigma = 1.0
        k = gaussian_kernel1d(sigma)
        r = k.size // 2
        n = 4 * r + 1
        a = np.zeros((n, n))
        a[n // 2, n // 2] = 1.0
        out = gaussian_blur_array(a, sigma)
        want = np.outer(k, k)
        got = out[n // 2 - r : n // 2 + r + 1, n // 2 - r : n // 2 + r + 1]
        assert np.abs(got - want).max() < 1e-12

    def test_constant_image_unchanged(self):
        img = GrayImage(np.full((9, 9), 0.42))
        out = gaussian_blur(img, 1.3)
        assert np.abs(out.data - 0.42).max() < 1e-12

    def test_sigma_zero_returns_input_image(self):
        g = np.random.default_rng(0)
        img = random_image(g, 6, 6)
        assert gaussian_blur(img, 0.0) is img

    def test_mean_preserved_under_reflect_border(self):
        g = np.random.default_rng(1)
        a = g.random((16, 16))
        out = gaussian_blur_array(a, 2.0)
        # reflect-101 is not strictly mean-preserving, but stays close
        assert abs(out.mean() - a.mean()) < 0.01

    def test_negative_sigma_rejected(self):
        with pytest.raises(ValueError):
            gaussian_kernel1d(-0.5)


def test_median_filter_examples():
    img = GrayImage(np.array([[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]]))
    out = median_filter_3x3(img)
    # lone spike is wiped; reflect-101 padding keeps every window majority-zero
    assert out.data.max() == 0.0


class TestDistanceTransform:
    def test_three_by_three_center(self):
        m = np.zeros((3, 3), dtype=np.uint8)
        m[1, 1] = 1
        d = euclidean_distance_transform(BinaryMask(m))
        assert d[1, 1] == 0.0
        assert abs(d[0, 0] - np.sqrt(2.0)) < 1e-12
        assert d[0, 1] == 1.0

    def test_empty_feature_gives_infinite_field(self):
        d = euclidean_distance_transform(BinaryMask(np.zeros((4, 5), dtype=np.uint8)))
        assert d.shape == (4, 5)
        assert np.all(np.isinf(d))

    def test_full_feature_gives_zero_field(self):
        d = euclidean_distance_transform(BinaryMask(np.ones((4, 4), dtype=np.uint8)))
        assert d.max() == 0.0


class TestMaskBoundary:
    def test_filled_square_keeps_ring(self):
        m = np.zeros((5, 5), dtype=np.uint8)
        m[1:4, 1:4] = 1
        b = mask_boundary(BinaryMask(m)).data
        assert b.sum() == 8
        assert b[2, 2] == 0

    def test_border_touching_foreground_is_boundary(self):
        m = np.ones((3, 3), dtype=np.uint8)
        b = mask_boundary(BinaryMask(m)).data
        assert b.sum() == 8 and b[1, 1] == 0

    def test_single_pixel_and_empty(self):
        assert mask_boundary(BinaryMask(np.zeros((3, 3), dtype=np.uint8))).count() == 0
        m = np.zeros((3, 3), dtype=np.uint8)
        m[0, 2] = 1
        out = mask_boundary(BinaryMask(m))
        assert out.data[0, 2] == 1 and out.count() == 1

    def test_construction_freezes_source_array(self):
        m = np.zeros((3, 3), dtype=np.uint8)
        BinaryMask(m)
        with pytest.raises((ValueError, RuntimeError)):
            m[0, 0] = 1


class TestFrequencyDomain:
    def test_round_trip_recovers_image(self):
        g = np.random.default_rng(2)
        img = random_image(g, 12, 10)
        back = ifft2_real(fft2_centered(img))
        assert np.abs(back - img.data).max() < 1e-12

    def test_dc_bin_is_centered_sum(self):
        g = np.random.default_rng(3)
        img = random_image(g, 8, 6)
        spec = fft2_centered(img)
        cy, cx = 6 // 2, 8 // 2
        assert abs(spec.data[cy, cx] - img.data.sum()) < 1e-9

    def test_parseval_energy_identity(self):
        g = np.random.default_rng(4)
        img = random_image(g, 16, 16)
        spec = fft2_centered(img)
        lhs = (np.abs(spec.data) ** 2).sum() / (16 * 16)
        rhs = (img.data**2).sum()
        assert abs(lhs - rhs) < 1e-9 * max(1.0, rhs)

    def test_spectrum_type_rejects_nan(self):
        with pytest.raises(ValueError):
            ComplexSpectrum(np.array([[np.nan + 0j]]))

    def test_distance_grid_center_and_corners(self):
        d = centered_frequency_distances(8, 6)
        assert d[3, 4] == 0.0
        assert d[3, 5] == 1.0 and d[2, 4] == 1.0
        assert abs(d[0, 0] - np.hypot(4, 3)) < 1e-12


class TestButterworth:
    def test_zero_at_dc(self):
        assert butterworth_bandpass_gain(0.0, 5.0, 20.0, 2) == 0.0

    def test_cutoff_gain_closed_form(self):
        # product of the high-pass and low-pass squared-magnitude factors:
        # at D=low the first factor is exactly 1/2, the second 1/(1+(low/high)^2n)
        low, high = 5.0, 20.0
        for order in (1, 2, 3, 4):
            other = 1.0 / (1.0 + (low / high) ** (2 * order))
            g_low = butterworth_bandpass_gain(low, low, high, order)
            g_high = butterworth_bandpass_gain(high, low, high, order)
            assert g_low == pytest.approx(0.5 * other, abs=1e-12)
            assert g_high == pytest.approx(0.5 * other, abs=1e-12)
            assert 0.45 < g_low <= 0.5

    def test_passband_center_near_unity(self):
        g = butterworth_bandpass_gain(np.sqrt(5.0 * 20.0), 5.0, 20.0, 4)
        assert g > 0.95

    def test_monotone_rolloff_outside_band(self):
        d = np.linspace(20.0, 200.0, 50)
        g = butterworth_bandpass_gain(d, 5.0, 20.0, 2)
        assert np.all(np.diff(g) < 0)

    def test_array_and_scalar_agree(self):
        d = np.array([0.0, 3.0, 10.0, 40.0])
        arr = butterworth_bandpass_gain(d, 5.0, 20.0, 3)
        sc = [butterworth_bandpass_gain(float(v), 5.0, 20.0, 3) for v in d]
        assert np.allclose(arr, sc, atol=1e-15)

    def test_invalid_parameters(self):
        with pytest.raises(ValueError):
            butterworth_bandpass_gain(1.0, -1.0, 5.0, 2)
        with pytest.raises(ValueError):
            butterworth_bandpass_gain(1.0, 6.0, 5.0, 2)
        with pytest.raises(ValueError):
            butterworth_bandpass_gain(1.0, 2.0, 5.0, 0)


class TestRayleigh:
    def test_moments_match_distribution(self):
        f = sample_rayleigh_field(1000, 1000, RngStream(5))
        # Rayleigh(sigma=1): mean = sqrt(pi/2), var = (4-pi)/2
        assert abs(f.mean() - np.sqrt(np.pi / 2.0)) < 5e-3
        assert abs(f.var() - (4.0 - np.pi) / 2.0) < 5e-3

    def test_positive_and_deterministic(self):
        a = sample_rayleigh_field(32, 16, RngStream(6))
        b = sample_rayleigh_field(32, 16, RngStream(6))
        assert a.shape == (16, 32)
        assert a.min() > 0.0
        assert np.array_equal(a, b)


class TestNormalize:
    def test_two_point_example(self):
        out = normalize_zero_mean_unit_var(np.array([0.0, 2.0]))
        assert np.allclose(out, [-1.0, 1.0], atol=1e-12)

    def test_idempotent_statistics(self):
        g = np.random.default_rng(7)
        out = normalize_zero_mean_unit_var(g.random((20, 20)))
        assert abs(out.mean()) < 1e-12
        assert abs(out.std() - 1.0) < 1e-12

    def test_degenerate_inputs_rejected(self):
        with pytest.raises(ValueError):
            normalize_zero_mean_unit_var(np.array([1.0]))
        with pytest.raises(ValueError):
            normalize_zero_mean_unit_var(np.full((3, 3), 0.7))


class TestSsim:
    def test_identical_images_score_one(self):
        g = np.random.default_rng(8)
        img = random_image(g, 24, 24)
        assert ssim(img, img) == pytest.approx(1.0, abs=1e-12)

    def test_symmetric(self):
        g = np.random.default_rng(9)
        a, b = random_image(g, 20, 20), random_image(g, 20, 20)
        assert ssim(a, b) == pytest.approx(ssim(b, a), abs=1e-15)

    def test_constant_pair_closed_form(self):
        zero = GrayImage(np.zeros((16, 16)))
        one = GrayImage(np.ones((16, 16)))
        c1 = 0.01**2
        want = c1 / (1.0 + c1)
        assert ssim(zero, one) == pytest.approx(want, abs=1e-12)

    def test_noise_lowers_score(self):
        g = np.random.default_rng(10)
        img = random_image(g, 32, 32)
        noisy = GrayImage(np.clip(img.data + 0.2 * g.standard_normal(img.data.shape), 0.0, 1.0))
        assert ssim(img, noisy) < 0.95


def test_morph_open_removes_specks_keeps_blobs():
    m = np.zeros((9, 9), dtype=np.uint8)
    m[1, 1] = 1  # speck
    m[4:8, 4:8] = 1  # blob
    out = morph_open_3x3(BinaryMask(m)).data
    assert out[1, 1] == 0
    assert out[5, 5] == 1


def test_largest_component_keeps_biggest_blob():
    m = np.zeros((8, 8), dtype=np.uint8)
    m[0:2, 0:2] = 1
    m[4:8, 4:8] = 1
    out = largest_component(BinaryMask(m)).data
    assert out[0, 0] == 0 and out[5, 5] == 1
    assert out.sum() == 16


def test_largest_component_diagonal_blobs_are_separate():
    m = np.zeros((4, 4), dtype=np.uint8)
    m[0, 0] = 1
    m[1, 1] = 1
    m[2, 2] = 1
    out = largest_component(BinaryMask(m)).data
    assert out.sum() == 1  # 4-connectivity: diagonals do not join


def test_boundary_distance_weight_peaks_on_ring():
    # composite check used by the speckle attack: EDT of the boundary of a disk
    yy, xx = np.mgrid[0:33, 0:33]
    disk = (((yy - 16) ** 2 + (xx - 16) ** 2) <= 8**2).astype(np.uint8)
    d = euclidean_distance_transform(mask_boundary(BinaryMask(disk)))
    assert d[16, 16] > 5.0
    ring = mask_boundary(BinaryMask(disk)).data
    assert d[ring == 1].max() == 0.0
