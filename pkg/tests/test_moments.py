import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from decilab.kernels import TimeKernel, eval_response, fold, make_scaled_window_family, two_frequency_demo_family
from decilab.moments import (
    GammaMatrix,
    a_term,
    b_term,
    case_constant,
    cov_exact,
    cov_of_square_sums,
    gamma_limit,
    gamma_matrix,
    limit_cov_squares,
    limit_cross_cov,
    limit_variance,
    m_n_functional,
    symmetrized_limit_product,
)
from decilab.quadrature import gauss_legendre_panels
from decilab.simulate import NoiseSpec
from decilab.windows import make_bspline_window

from conftest import random_trig_poly, single_level_family

TWO_PI = 2.0 * math.pi
GAUSS = NoiseSpec("gaussian")
RADEMACHER = NoiseSpec("rademacher")
UNIFORM = NoiseSpec("scaled_uniform")


def kernel_dict(kernel):
    return {t: v for t, v in zip(kernel.support, kernel.coeffs)}


def brute_a_term(k1, k2, gamma, n):
    """Independent enumeration oracle over an index superset."""
    d1, d2 = kernel_dict(k1), kernel_dict(k2)
    total = 0.0
    for tau in range(-n + 1, n):
        inner = 0.0
        for u in range(k1.support_start - 1, k1.support_end + 2):
            inner += d1.get(u, 0.0) * d2.get(gamma * tau + u, 0.0)
        total += (1.0 - abs(tau) / n) * inner ** 2
    return total


def brute_b_term(k1, k2, gamma, n):
    d1, d2 = kernel_dict(k1), kernel_dict(k2)
    total = 0.0
    for u in range(k1.support_start - 1, k1.support_end + 2):
        acc = 0.0
        for tau in range(-n + 1, n):
            acc += (1.0 - abs(tau) / n) * d2.get(gamma * tau + u, 0.0) ** 2
        total += d1.get(u, 0.0) ** 2 * acc
    return total


small_kernels = st.builds(
    lambda start, coeffs: TimeKernel(start, np.array(coeffs)),
    st.integers(-6, 6),
    st.lists(st.floats(-3.0, 3.0), min_size=1, max_size=9),
)


class TestCovExact:
    def test_unit_impulse_variance(self):
        fam = single_level_family([TimeKernel(0, np.array([1.0]))], gamma=1)
        assert cov_exact(fam, 0, 0, 0, 0, 0) == 1.0

    def test_disjoint_impulses(self):
        fam = single_level_family(
            [TimeKernel(0, np.array([1.0])), TimeKernel(1, np.array([1.0]))], gamma=2
        )
        assert cov_exact(fam, 0, 0, 1, 0, 0) == 0.0

    def test_spectral_integral_crosscheck(self, rng):
        for _ in range(5):
            k1 = TimeKernel(int(rng.integers(-4, 4)), rng.standard_normal(int(rng.integers(1, 10))))
            k2 = TimeKernel(int(rng.integers(-4, 4)), rng.standard_normal(int(rng.integers(1, 10))))
            fam = single_level_family([k1, k2], gamma=3)
            # raises internally if the quadrature disagrees with the sum
            cov_exact(fam, 0, 0, 1, 0, 2, spectral_check=True, tol=1e-8)

    def test_lag_symmetry(self, rng):
        k1 = TimeKernel(0, rng.standard_normal(6))
        fam = single_level_family([k1, k1], gamma=2)
        assert cov_exact(fam, 0, 0, 1, 0, 1) == cov_exact(fam, 0, 1, 0, 1, 0)


class TestABTerms:
    def test_impulse_values(self):
        fam = single_level_family([TimeKernel(0, np.array([1.0]))] * 2, gamma=1)
        for n in (1, 3, 10):
            assert a_term(fam, 0, 0, 1, n) == 1.0
            assert b_term(fam, 0, 0, 1, n) == 1.0

    def test_two_tap_hand_oracle(self):
        # {1,1} at indices 0,1; gamma=2, n=2: inner sums (2, 0, 0) -> A = 4,
        # and per-u contributions 1, 1 -> B = 2
        k = TimeKernel(0, np.array([1.0, 1.0]))
        fam = single_level_family([k, k], gamma=2)
        assert a_term(fam, 0, 0, 1, 2) == 4.0
        assert b_term(fam, 0, 0, 1, 2) == 2.0

    @given(k1=small_kernels, k2=small_kernels,
           gamma=st.integers(1, 8), n=st.integers(1, 6))
    @settings(max_examples=40, deadline=None)
    def test_matches_enumeration_oracle(self, k1, k2, gamma, n):
        fam = single_level_family([k1, k2], gamma=gamma)
        assert a_term(fam, 0, 0, 1, n) == pytest.approx(brute_a_term(k1, k2, gamma, n), abs=1e-10)
        assert b_term(fam, 0, 0, 1, n) == pytest.approx(brute_b_term(k1, k2, gamma, n), abs=1e-10)

    def test_a_equals_m_n_of_folded_product(self, rng):
        # A(n) = M_n(g)^2 with g = sqrt(2*pi)/gamma * fold(v1* conj v2*)
        k1 = TimeKernel(-2, rng.standard_normal(7))
        k2 = TimeKernel(0, rng.standard_normal(5))
        gamma, n = 3, 4
        fam = single_level_family([k1, k2], gamma=gamma)

        def g(lam):
            prod = lambda x: eval_response(k1, x) * np.conj(eval_response(k2, x))
            return math.sqrt(TWO_PI) / gamma * fold(prod, gamma, lam)

        assert m_n_functional(g, n) ** 2 == pytest.approx(a_term(fam, 0, 0, 1, n), abs=1e-10)

    def test_a_spectral_bound(self, rng):
        # A(n) <= 2*pi * int |gamma^-1 fold(v1* conj v2*)|^2
        for _ in range(5):
            k1 = TimeKernel(int(rng.integers(-3, 3)), rng.standard_normal(int(rng.integers(1, 8))))
            k2 = TimeKernel(int(rng.integers(-3, 3)), rng.standard_normal(int(rng.integers(1, 8))))
            gamma = int(rng.integers(1, 6))
            fam = single_level_family([k1, k2], gamma=gamma)
            prod = lambda x: eval_response(k1, x) * np.conj(eval_response(k2, x))
            x, w = gauss_legendre_panels(-math.pi, math.pi, panels=96, nodes=8)
            bound = TWO_PI * np.sum(w * np.abs(fold(prod, gamma, x) / gamma) ** 2)
            for n in (1, 4, 9):
                assert a_term(fam, 0, 0, 1, n) <= bound + 1e-9

    def test_b_spectral_bound(self, rng):
        # B(n) <= int |v1*|^2 * int (gamma^-1 fold(|v2*|))^2
        for _ in range(5):
            k1 = TimeKernel(int(rng.integers(-3, 3)), rng.standard_normal(int(rng.integers(1, 8))))
            k2 = TimeKernel(int(rng.integers(-3, 3)), rng.standard_normal(int(rng.integers(1, 8))))
            gamma = int(rng.integers(1, 6))
            fam = single_level_family([k1, k2], gamma=gamma)
            x, w = gauss_legendre_panels(-math.pi, math.pi, panels=96, nodes=8)
            first = np.sum(w * np.abs(eval_response(k1, x)) ** 2)
            absresp = lambda lam: np.abs(eval_response(k2, lam))
            second = np.sum(w * (np.abs(fold(absresp, gamma, x)) / gamma) ** 2)
            for n in (1, 4, 9):
                assert b_term(fam, 0, 0, 1, n) <= first * second + 1e-9

    def test_b_term_decays_along_ladder(self):
        w = make_bspline_window(4)
        fam = make_scaled_window_family(w, [16, 32, 64, 128])
        values = [b_term(fam, j, 0, 0, 32) for j in range(4)]
        for prev, cur in zip(values, values[1:]):
            assert cur < 0.7 * prev  # at least 30% drop per doubling


class TestCovOfSquareSums:
    def test_gaussian_impulse_chi_square(self):
        fam = single_level_family([TimeKernel(0, np.array([1.0]))] * 2, gamma=1)
        assert cov_of_square_sums(fam, 0, 0, 1, 1, GAUSS) == 2.0

    def test_rademacher_impulse_degenerate(self):
        fam = single_level_family([TimeKernel(0, np.array([1.0]))] * 2, gamma=1)
        assert cov_of_square_sums(fam, 0, 0, 1, 1, RADEMACHER) == 0.0

    def test_scaled_uniform_impulse(self):
        fam = single_level_family([TimeKernel(0, np.array([1.0]))] * 2, gamma=1)
        assert cov_of_square_sums(fam, 0, 0, 1, 1, UNIFORM) == pytest.approx(0.8)

    @given(k=small_kernels, gamma=st.integers(1, 6), n=st.integers(1, 5),
           dist=st.sampled_from(["gaussian", "rademacher", "scaled_uniform"]))
    @settings(max_examples=40, deadline=None)
    def test_own_variance_nonnegative(self, k, gamma, n, dist):
        fam = single_level_family([k, k], gamma=gamma)
        assert cov_of_square_sums(fam, 0, 0, 1, n, NoiseSpec(dist)) >= -1e-10


class TestMnFunctional:
    def test_constant_function(self):
        g = lambda lam: np.ones_like(np.asarray(lam, dtype=float))
        for n in (1, 5, 100):
            assert m_n_functional(g, n) == pytest.approx(math.sqrt(TWO_PI), abs=1e-12)

    def test_single_oscillation(self):
        g = lambda lam: np.exp(1j * np.asarray(lam))
        assert m_n_functional(g, 1) == pytest.approx(0.0, abs=1e-12)
        assert m_n_functional(g, 4) == pytest.approx(math.sqrt(TWO_PI) * math.sqrt(0.75), abs=1e-12)

    def test_requires_enough_coefficients(self):
        g = lambda lam: np.ones_like(np.asarray(lam, dtype=float))
        with pytest.raises(ValueError):
            m_n_functional(g, 8, n_coeffs=4)

    def test_lipschitz_in_l2(self, rng):
        x, w = gauss_legendre_panels(-math.pi, math.pi, panels=64, nodes=8)
        for _ in range(10):
            g1, _ = random_trig_poly(rng)
            g2, _ = random_trig_poly(rng)
            dist = math.sqrt(float(np.sum(w * np.abs(g1(x) - g2(x)) ** 2)))
            for n in (1, 3, 17):
                gap = abs(m_n_functional(g1, n) - m_n_functional(g2, n))
                assert gap <= dist + 1e-10

    def test_increases_to_l2_norm(self, rng):
        g, norm_sq = random_trig_poly(rng)
        norm = math.sqrt(norm_sq)
        values = [m_n_functional(g, n) for n in (4, 16, 64, 512)]
        assert all(a <= b + 1e-12 for a, b in zip(values, values[1:]))
        assert values[-1] <= norm + 1e-9
        assert norm - values[-1] < norm * 0.05


@pytest.fixture(scope="module")
def ma_family():
    return make_scaled_window_family(make_bspline_window(4), [8, 16, 32, 64])


@pytest.fixture(scope="module")
def two_freq():
    return two_frequency_demo_family(make_bspline_window(4), [8, 16, 32, 64])


class TestLimitQuantities:
    def test_case_constants(self, two_freq):
        assert case_constant(two_freq, 0, 0) == 1
        assert case_constant(two_freq, 1, 1) == 2
        assert case_constant(two_freq, 0, 1) == 0

    def test_cross_branch_limit_is_exact_zero(self, two_freq):
        rep = limit_cross_cov(two_freq, 0, 1, 0)
        assert rep.value == 0.0 and rep.truncation_bound == 0.0

    def test_limit_variance_matches_exact_at_deep_level(self, ma_family):
        lim = limit_variance(ma_family, 0)
        deep = cov_exact(ma_family, 3, 0, 0, 0, 0)
        assert lim == pytest.approx(1.0 / TWO_PI, abs=1e-4)
        assert abs(lim - deep) < 1e-4

    def test_limit_lag_one_close_to_exact(self, ma_family):
        lim = limit_cross_cov(ma_family, 0, 0, 1).value
        deep = cov_exact(ma_family, 3, 0, 0, 0, 1)
        assert abs(lim - deep) < 5e-3

    def test_modulated_limit_variance(self, two_freq):
        # cosine modulation halves the variance: limit is 1/(4*pi)
        lim = limit_variance(two_freq, 1)
        deep = cov_exact(two_freq, 3, 1, 1, 0, 0)
        assert lim == pytest.approx(1.0 / (4.0 * math.pi), abs=1e-4)
        assert abs(lim - deep) < 1e-4

    def test_missing_limits_raise(self):
        fam = single_level_family([TimeKernel(0, np.array([1.0]))], gamma=2)
        with pytest.raises(ValueError, match="limit responses unavailable"):
            limit_cross_cov(fam, 0, 0, 0)
        with pytest.raises(ValueError, match="limit responses unavailable"):
            gamma_limit(fam, 0, 0)

    def test_gamma_entries(self, two_freq):
        gm = gamma_matrix(two_freq)
        assert gm.entries[0, 1] == 0.0
        assert gm.constants[0, 0] == 1 and gm.constants[1, 1] == 2
        assert gm.entries[0, 0] == pytest.approx(1.0 / (2.0 * math.pi ** 2), rel=1e-6)
        # the +-passband copies double the folded weight: 4*pi*C^2*int gives 1/(8 pi^2)
        assert gm.entries[1, 1] == pytest.approx(1.0 / (8.0 * math.pi ** 2), rel=1e-6)

    def test_gamma_agrees_with_exact_decomposition(self, two_freq):
        # 2A + kappa4*B at gamma=64, n=512 should sit within 1% of Gamma
        gm = gamma_matrix(two_freq)
        for i in (0, 1):
            analytic = cov_of_square_sums(two_freq, 3, i, i, 512, GAUSS)
            assert abs(analytic - gm.entries[i, i]) / gm.entries[i, i] < 0.01

    def test_duplicated_branch_entries_equal(self):
        base = make_scaled_window_family(make_bspline_window(4), [8, 16])
        from decilab.kernels import DecimatedFamily, FamilyLevel

        levels = tuple(
            FamilyLevel(
                gamma=lv.gamma,
                kernels=(lv.kernels[0], lv.kernels[0]),
                center_freqs=np.zeros(2),
            )
            for lv in base.levels
        )
        fam = DecimatedFamily(
            levels=levels,
            limit_freqs=np.zeros(2),
            decay=4.0,
            limit_responses=(base.limit_responses[0], base.limit_responses[0]),
        )
        gm = gamma_matrix(fam)
        assert gm.entries[0, 0] == pytest.approx(gm.entries[0, 1], abs=1e-14)
        assert gm.entries[0, 0] == pytest.approx(gm.entries[1, 1], abs=1e-14)

    def test_phase_invariance(self, two_freq):
        from decilab.kernels import DecimatedFamily

        base_entries = gamma_matrix(two_freq).entries
        for theta in (math.pi / 7, math.pi / 2):
            rot = complex(math.cos(theta), math.sin(theta))
            rotated = DecimatedFamily(
                levels=two_freq.levels,
                limit_freqs=two_freq.limit_freqs,
                decay=two_freq.decay,
                limit_responses=tuple(
                    (lambda lam, f=f: rot * f(lam)) for f in two_freq.limit_responses
                ),
            )
            assert np.allclose(gamma_matrix(rotated).entries, base_entries, atol=1e-10)

    def test_limit_cov_squares_consistency(self, ma_family, two_freq):
        # equals twice the squared limiting covariance, for both case constants
        for fam, i, ip in ((ma_family, 0, 0), (two_freq, 1, 1)):
            lcc = limit_cross_cov(fam, i, ip, 0).value
            assert limit_cov_squares(fam, i, ip, 0) == pytest.approx(2.0 * lcc ** 2, abs=1e-10)
        assert limit_cov_squares(two_freq, 0, 1, 3) == 0.0

    def test_symmetrized_product_is_conjugate_symmetric(self, two_freq):
        w = symmetrized_limit_product(two_freq, 0, 1)
        lam = np.linspace(-5.0, 5.0, 11)
        vals = w(lam)
        flipped = w(-lam)
        assert np.allclose(vals, np.conj(flipped), atol=1e-14)

    def test_truncation_bounds_reported(self, ma_family):
        rep = gamma_limit(ma_family, 0, 0)
        assert rep.truncation_bound >= 0.0
        assert rep.inputs_digest


class TestGammaMatrixValidation:
    def test_asymmetric_rejected(self):
        with pytest.raises(ValueError):
            GammaMatrix(
                entries=np.array([[1.0, 0.2], [0.1, 1.0]]),
                constants=np.ones((2, 2), dtype=int),
                truncation_bounds=np.zeros((2, 2)),
            )

    def test_indefinite_rejected(self):
        with pytest.raises(ValueError):
            GammaMatrix(
                entries=np.array([[1.0, 2.0], [2.0, 1.0]]),
                constants=np.ones((2, 2), dtype=int),
                truncation_bounds=np.zeros((2, 2)),
            )

    def test_bad_constants_rejected(self):
        with pytest.raises(ValueError):
            GammaMatrix(
                entries=np.eye(2),
                constants=np.full((2, 2), 3),
                truncation_bounds=np.zeros((2, 2)),
            )
