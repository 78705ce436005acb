import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qjump.analytics import (
    SuperpositionSpec,
    build_jump_overlay,
    first_downward_crossing,
    initial_superposition_photon,
    null_record_density_matrix,
    null_record_photon_approx,
    null_record_photon_exact,
    overlay_deviation,
    poisson_count_prob,
)
from qjump.fock import expectation, space, superposition_ket
from qjump.semiclassical import localization_intersection, null_probability

FIG2 = SuperpositionSpec(1.7 - 5.15j, -2.25 - 0.2j)
FIG1 = SuperpositionSpec(0.3 - 2.38j, -0.175 - 0.53j)
S8 = SuperpositionSpec(1.9 - 3.95j, 1.4 - 0.8j)

small = st.complex_numbers(max_magnitude=3.0, allow_nan=False, allow_infinity=False)


def photon_number(rho):
    return float(np.real(np.arange(rho.shape[0]) @ np.diag(rho)))


class TestInitialPhoton:
    def test_equal_amplitudes(self):
        a = 1.3 - 2.2j
        assert initial_superposition_photon(SuperpositionSpec(a, a)) == pytest.approx(abs(a) ** 2, rel=1e-14)

    @pytest.mark.parametrize("s", [SuperpositionSpec(2, -2), FIG2, FIG1, S8])
    def test_matches_fock_expectation(self, s):
        psi = superposition_ket(s.alpha1, s.alpha2, 80)
        assert abs(initial_superposition_photon(s) - expectation("photon_number", psi, space(80, False))) < 1e-9

    def test_even_cat_closed_form(self):
        assert initial_superposition_photon(SuperpositionSpec(2, -2)) == pytest.approx(4 * math.tanh(4), rel=1e-14)


class TestNullRecordPhoton:
    @given(small, st.floats(0, 3))
    @settings(max_examples=50, deadline=None)
    def test_single_state_decays(self, a, t):
        val = null_record_photon_exact(SuperpositionSpec(a, a), t)
        assert val == pytest.approx(abs(a) ** 2 * math.exp(-2 * t), rel=1e-12, abs=1e-300)

    @pytest.mark.parametrize("s", [FIG2, FIG1, S8])
    def test_initial_value(self, s):
        assert null_record_photon_exact(s, 0.0) == initial_superposition_photon(s)

    def test_fig2_reaches_intermediate_intensity(self):
        assert null_record_photon_exact(FIG2, 0.0743) == pytest.approx(abs(FIG2.alpha2) ** 2, abs=0.05)

    def test_approx_vanishes_at_long_times(self):
        assert null_record_photon_approx(FIG2, 50.0) < 1e-40

    def test_approx_close_for_fig2(self):
        t = np.linspace(0, 0.3, 301)
        gap = np.abs(null_record_photon_exact(FIG2, t) - null_record_photon_approx(FIG2, t))
        assert gap.max() < 1e-6

    @pytest.mark.parametrize("s", [FIG2, FIG1, S8])
    def test_wider_separation_shrinks_interference(self, s):
        t = np.linspace(0, 0.3, 301)
        sup = []
        for k in (1.0, 2.0):
            sk = SuperpositionSpec(k * s.alpha1, k * s.alpha2)
            sup.append(np.max(np.abs(null_record_photon_exact(sk, t) - null_record_photon_approx(sk, t))))
        assert sup[1] < sup[0]

    @pytest.mark.parametrize("s", [FIG2, FIG1, S8])
    def test_monotone_decrease(self, s):
        n = null_record_photon_exact(s, np.linspace(0, 3, 1000))
        assert np.all(np.diff(n) < 0)

    def test_negative_time(self):
        with pytest.raises(ValueError):
            null_record_photon_exact(FIG2, -0.1)


class TestNullProbability:
    @pytest.mark.parametrize("x", [0.0, 0.5, 5.1025, 29.4125])
    def test_limits(self, x):
        assert null_probability(x, 0.0) == 1.0
        assert null_probability(x, np.inf) == pytest.approx(math.exp(-x), rel=1e-15)


class TestDensityMatrix:
    def test_initial_superposition(self):
        rho = null_record_density_matrix(FIG2, 0.0, 80)
        psi = superposition_ket(FIG2.alpha1, FIG2.alpha2, 80)
        assert np.max(np.abs(rho - np.outer(psi, psi.conj()))) < 1e-12

    @pytest.mark.parametrize("t", [0.0, 0.02, 0.0743, 0.3, 2.0])
    @pytest.mark.parametrize("s", [FIG2, FIG1, S8])
    def test_trace_photon_and_positivity(self, s, t):
        rho = null_record_density_matrix(s, t, 80)
        assert abs(np.trace(rho) - 1) < 1e-10
        assert abs(photon_number(rho) - null_record_photon_exact(s, t)) < 1e-9
        assert np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() >= -1e-9

    def test_coherence_blocks_peak_at_component_intensities(self):
        rho = np.abs(null_record_density_matrix(FIG2, 0.0, 80))
        x1, x2 = abs(FIG2.alpha1) ** 2, abs(FIG2.alpha2) ** 2
        # upper-right block m < n and lower-left block m > n
        upper = np.triu(rho, 12)
        lower = np.tril(rho, -12)
        m, n = np.unravel_index(np.argmax(lower), rho.shape)
        assert abs(m - x1) <= 2 and abs(n - x2) <= 2
        m, n = np.unravel_index(np.argmax(upper), rho.shape)
        assert abs(m - x2) <= 2 and abs(n - x1) <= 2


class TestPoisson:
    @pytest.mark.parametrize("alpha,t", [(2.0, 0.3), (1 - 1j, 1.0), (3j, 0.05)])
    def test_zero_counts_is_null_probability(self, alpha, t):
        assert poisson_count_prob(alpha, t, 0) == pytest.approx(float(null_probability(abs(alpha) ** 2, t)), rel=1e-14)

    @pytest.mark.parametrize("alpha,t", [(2.0, 0.3), (1.7 - 5.15j, 2.0)])
    def test_normalized(self, alpha, t):
        mean = abs(alpha) ** 2 * (1 - math.exp(-2 * t))
        total = sum(poisson_count_prob(alpha, t, n) for n in range(int(10 * mean) + 20))
        assert abs(total - 1) < 1e-12

    def test_long_time_limit(self):
        assert poisson_count_prob(2.0, np.inf, 4) == pytest.approx(4**4 * math.exp(-4) / 24, rel=1e-12)
        assert poisson_count_prob(2.0, np.inf, 4) == pytest.approx(0.19537, abs=1e-5)

    def test_matches_formula(self):
        alpha, t = 1.2 + 0.7j, 0.4
        mu = abs(alpha) ** 2 * (1 - math.exp(-2 * t))
        for n in range(8):
            assert poisson_count_prob(alpha, t, n) == pytest.approx(mu**n / math.factorial(n) * math.exp(-mu), rel=1e-12)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            poisson_count_prob(1.0, 1.0, -1)


def synthetic_record(s, t_mid, step=0.001, half=0.3):
    t = np.arange(t_mid - half, t_mid + half + step / 2, step)
    n_mid = initial_superposition_photon(s)
    tau = np.abs(t - t_mid)
    f = null_record_photon_exact(s, tau)
    return t, np.where(t >= t_mid, f, 2 * n_mid - f)


class TestOverlay:
    @pytest.mark.parametrize("s", [FIG2, FIG1, S8])
    def test_self_consistent_record(self, s):
        t, n = synthetic_record(s, 10.0)
        ov = build_jump_overlay((t, n), s, (9.8, 10.2))
        assert ov.t_mid == pytest.approx(10.0, abs=1e-9)
        assert ov.dt_end == localization_intersection(s.alpha1, s.alpha2)
        assert overlay_deviation(ov, (t, n)) < 1e-9

    def test_point_symmetry(self):
        t, n = synthetic_record(FIG2, 5.0)
        ov = build_jump_overlay((t, n), FIG2, (4.8, 5.2))
        assert ov.forward_curve[1, 0] == ov.inverted_curve[1, 0] == ov.n_mid
        assert np.all(ov.forward_curve[1] + ov.inverted_curve[1] == 2 * ov.n_mid)
        assert ov.forward_curve[1, -1] + ov.inverted_curve[1, -1] == 2 * ov.n_mid
        assert ov.forward_curve[0, -1] - ov.t_mid == pytest.approx(ov.dt_end)

    def test_no_crossing_names_window(self):
        t = np.linspace(0, 1, 101)
        with pytest.raises(ValueError, match="window"):
            build_jump_overlay((t, np.full_like(t, 40.0)), FIG2, (0.2, 0.8))

    def test_first_crossing_is_chosen(self):
        t = np.arange(6.0)
        n = np.array([3, 1, 3, 1, 3, 1.0])
        assert first_downward_crossing(t, n, 2.0) == 0.5
        assert first_downward_crossing(t, n, 2.0, (1.5, 5)) == 2.5
