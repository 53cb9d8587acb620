import cmath

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

import oracles
from ellint import Bases, TruncationPolicy, core
from ellint.errors import DivisionByZero, DomainError, NearPole, NonConvergent, PoleHit
from laws import gamma_laws, residue_limit
from strategies import annulus, bases, rel

# mpmath values, 40 digits, direct truncated products
THETA_05_03 = 0.12067676625106696
THETA_C = 0.46463692627314757 + 1.8217685241108315j  # theta(2.5-1j; 0.1+0.3j)
GAMMA_05 = 2.31197611095325  # Gamma(0.5; 0.1, 0.2)
GAMMA_C = -1.843017371643328 - 1.4099092179615882j  # Gamma(1.3-0.4j; 0.2+0.1j, 0.05-0.3j)
GAMMA_D = 1.659175304190656 + 1.4994183942124908j  # Gamma(0.7+0.2j; 0.25j, -0.3)
QP_HALF = 0.2887880950866024  # (0.5; 0.5)_inf
RES_C = 1.513671929826683 - 0.2906436414320869j  # 1/((0.3;0.3)(-0.2j;-0.2j))


class TestBases:
    def test_rejects_unit_modulus(self):
        with pytest.raises(NonConvergent):
            Bases(0.5, 1.0)

    def test_swapped(self):
        b = Bases(0.1, 0.2j)
        assert b.swapped() == Bases(0.2j, 0.1)
        assert b.big_m == pytest.approx(0.2)


class TestPolicy:
    def test_cutoff_bound(self):
        pol = TruncationPolicy(1e-16)
        k = pol.cutoff(0.3)
        assert 0.3 ** (k - 4) / 0.7 < 1e-16 <= 0.3 ** (k - 5) / 0.7

    def test_cap(self):
        assert TruncationPolicy(1e-16, max_terms=10).cutoff(0.99) == 10

    @pytest.mark.parametrize("tol,terms", [(0.0, 10), (1e-10, 0)])
    def test_invalid(self, tol, terms):
        with pytest.raises(ValueError):
            TruncationPolicy(tol, terms)


class TestQPochhammer:
    def test_oracle(self):
        assert core.qpochhammer_inf(0.5, 0.5) == pytest.approx(QP_HALF, rel=1e-14)

    def test_q_zero(self):
        assert core.qpochhammer_inf(0.3, 0) == pytest.approx(0.7)

    def test_vanishing_factor(self):
        with pytest.raises(PoleHit):
            core.qpochhammer_inf(1 / 0.25, 0.5)
        assert core.qpochhammer_inf(4.0, 0.5, zero_ok=True) == 0

    def test_divergent(self):
        with pytest.raises(NonConvergent):
            core.qpochhammer_inf(0.5, 1.0)

    def test_vectorised(self):
        a = np.array([[0.1, 0.2j], [0.3, -0.4]])
        out = core.qpochhammer_inf(a, 0.4 + 0.1j)
        assert out.shape == (2, 2)
        assert out[1, 0] == pytest.approx(core.qpochhammer_inf(0.3, 0.4 + 0.1j), rel=1e-15)


class TestTheta:
    def test_zero_at_one(self):
        assert core.theta(1.0, 0.3) == 0

    def test_p_zero(self):
        assert core.theta(0.4, 0) == pytest.approx(0.6)

    def test_oracles(self):
        assert core.theta(0.5, 0.3) == pytest.approx(THETA_05_03, rel=1e-14)
        assert core.theta(2.5 - 1j, 0.1 + 0.3j) == pytest.approx(THETA_C, rel=1e-14)

    def test_domain(self):
        with pytest.raises(DomainError):
            core.theta(0, 0.3)

    def test_large_argument_against_oracle(self):
        p = 0.2 - 0.1j
        for z in (40 + 3j, 1e-3j, 7.5e4, -2e-5 + 1e-5j):
            assert rel(core.theta(z, p), complex(oracles.theta(z, p))) < 1e-13

    @settings(max_examples=200, deadline=None)
    @given(annulus(0.05, 20), annulus(0.01, 0.6))
    def test_inversion(self, z, p):
        assume(abs(core.theta(z, p)) > 1e-2)  # relative comparison is void near the zeros z = p^k
        assert abs(core.theta(z, p) + z * core.theta(1 / z, p)) <= 1e-13 * abs(z * core.theta(1 / z, p)) + 1e-300

    @settings(max_examples=100, deadline=None)
    @given(annulus(0.1, 10), annulus(0.01, 0.6))
    def test_quasi_period(self, z, p):
        assume(abs(core.theta(z, p)) > 1e-2)
        lhs, rhs = core.theta(p * z, p), -core.theta(z, p) / z
        assert abs(lhs - rhs) <= 1e-13 * abs(rhs)


class TestEllipticGamma:
    def test_at_sqrt_pq(self):
        b = Bases(0.3, 0.2)
        assert core.elliptic_gamma(cmath.sqrt(b.pq), b) == pytest.approx(1, rel=1e-15)

    def test_reflection_example(self):
        b = Bases(0.2, 0.15)
        z = 0.3 + 0.1j
        assert core.elliptic_gamma(z, b) * core.elliptic_gamma(b.pq / z, b) == pytest.approx(1, rel=1e-14)

    def test_oracles(self):
        assert core.elliptic_gamma(0.5, Bases(0.1, 0.2)) == pytest.approx(GAMMA_05, rel=1e-14)
        assert core.elliptic_gamma(1.3 - 0.4j, Bases(0.2 + 0.1j, 0.05 - 0.3j)) == pytest.approx(GAMMA_C, rel=1e-14)
        assert core.elliptic_gamma(0.7 + 0.2j, Bases(0.25j, -0.3)) == pytest.approx(GAMMA_D, rel=1e-14)

    def test_near_pole(self):
        b = Bases(0.3, 0.2)
        with pytest.raises(NearPole) as info:
            core.elliptic_gamma(1 / (0.3 * 0.2**2) * (1 + 1e-12), b)
        assert (info.value.mu, info.value.nu) == (1, 2)

    def test_domain(self):
        with pytest.raises(DomainError):
            core.elliptic_gamma(0, Bases(0.1, 0.1))

    def test_reciprocal_zero_at_pole(self):
        b = Bases(0.3, 0.2)
        assert abs(core.reciprocal_gamma(1.0, b)) < 1e-15
        assert core.reciprocal_gamma(0.5, b) == pytest.approx(1 / core.elliptic_gamma(0.5, b), rel=1e-14)

    def test_reciprocal_with_p_zero(self):
        # Gamma(z; 0, q) = 1/(z; q)_inf
        b = Bases(0, 0.3)
        assert core.reciprocal_gamma(0.7j, b) == pytest.approx(core.qpochhammer_inf(0.7j, 0.3), rel=1e-14)

    @settings(max_examples=100, deadline=None)
    @given(annulus(0.6, 1.6), bases())
    def test_laws(self, z, b):
        try:
            residuals = gamma_laws(z, b)
        except NearPole:
            assume(False)
        for name, value in residuals.items():
            assert value < 1e-12, name

    def test_truncation_soundness(self):
        # squaring the tolerance roughly doubles K
        b = Bases(0.4 - 0.1j, 0.3j)
        zs = np.array([0.5, 1.2 - 0.3j, 0.8j])
        for tol in (1e-8, 1e-10, 1e-12):
            coarse = core.elliptic_gamma(zs, b, TruncationPolicy(tol))
            fine = core.elliptic_gamma(zs, b, TruncationPolicy(tol**2, max_terms=800))
            assert np.max(np.abs(coarse / fine - 1)) < 10 * tol
            coarse_t = core.theta(zs, b.p, TruncationPolicy(tol))
            fine_t = core.theta(zs, b.p, TruncationPolicy(tol**2, max_terms=800))
            assert np.max(np.abs(coarse_t / fine_t - 1)) < 10 * tol


class TestShiftedFactorial:
    b = Bases(0.3, 0.4)

    def test_empty(self):
        assert core.shifted_factorial(0.7j, 0, self.b) == 1

    def test_one(self):
        assert core.shifted_factorial(0.5, 1, self.b) == pytest.approx(core.theta(0.5, 0.3), rel=1e-15)

    def test_negative_closed_form(self):
        assert core.shifted_factorial(0.5, -1, self.b) == pytest.approx(1 / core.theta(0.5 / 0.4, 0.3), rel=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(annulus(0.5, 2), st.integers(-3, 3), st.integers(-3, 3))
    def test_composition(self, a, m, n):
        # (a)_{m+n} = (a)_m (a q^m)_n
        q = self.b.q
        try:
            whole = core.shifted_factorial(a, m + n, self.b)
            parts = core.shifted_factorial(a, m, self.b) * core.shifted_factorial(a * q**m, n, self.b)
        except (NearPole, DivisionByZero):
            assume(False)
        assume(abs(whole) > 1e-6)
        assert abs(whole - parts) <= 1e-11 * abs(whole)

    def test_negative_at_gamma_zero(self):
        with pytest.raises(DivisionByZero):
            core.shifted_factorial(self.b.pq, -1, self.b)


class TestResidueConstant:
    def test_trivial(self):
        assert core.residue_constant(Bases(0, 0)) == 1

    def test_half(self):
        assert core.residue_constant(Bases(0.5, 0)) == pytest.approx(1 / QP_HALF, rel=1e-14)
        assert core.residue_constant(Bases(0.5, 0)) == pytest.approx(3.4627466, rel=1e-7)

    def test_oracle(self):
        assert core.residue_constant(Bases(0.3, -0.2j)) == pytest.approx(RES_C, rel=1e-14)

    def test_one_sided_limit(self):
        b = Bases(0.2 + 0.1j, 0.3)
        a = 0.8 - 0.5j
        eps = 1e-6
        z = a * (1 + eps)
        value = (1 - z / a) * core.elliptic_gamma(z / a, b)
        assert abs(value - core.residue_constant(b)) < 1e-4 * abs(core.residue_constant(b))

    @settings(max_examples=50, deadline=None)
    @given(annulus(0.5, 2), bases(0.02, 0.5))
    def test_extrapolated_limit(self, a, b):
        assert rel(residue_limit(a, b), core.residue_constant(b)) < 1e-11

    def test_pochhammer_pair(self):
        b = Bases(0.3, -0.2j)
        assert core.pochhammer_pair(b) * core.residue_constant(b) == pytest.approx(1, rel=1e-15)
