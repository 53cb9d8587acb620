import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from ellint import Bases, identities
from ellint.errors import DomainError, NearZeroDenominator
from ellint.identities import IDENTITIES, ThetaIdentityCase

THETA_IDS = [i for i in IDENTITIES if i != "contiguous_I"]


class _MpThetas:
    """Stand-in for the float theta evaluator, backed by mpmath."""

    def __init__(self, p):
        self.p = oracles.mpc(p)

    def __call__(self, x):
        return oracles.theta(oracles.mpc(x), self.p)

    def den(self, label, x):
        return self(x)


class TestCases:
    def test_unknown(self):
        with pytest.raises(DomainError):
            ThetaIdentityCase("theta9", 1, {}, Bases(0.1, 0.1))

    def test_shapes(self):
        with pytest.raises(DomainError):
            ThetaIdentityCase("theta3", 2, {"a": (0.5,), "b": (0.5, 0.6), "z": (1.0, 1.1)}, Bases(0.1, 0.1))
        with pytest.raises(DomainError):
            ThetaIdentityCase("theta1", 0, {}, Bases(0.1, 0.1))

    @pytest.mark.parametrize("identity", ["theta1", "theta3", "an_partial_fraction", "qdiff_lemma"])
    def test_balance(self, identity):
        case = identities.random_case(identity, 3, np.random.default_rng(1))
        assert case.balance_residual() < 1e-14

    def test_deterministic(self):
        a = identities.random_case("theta2", 2, np.random.default_rng(5))
        b = identities.random_case("theta2", 2, np.random.default_rng(5))
        assert a == b


class TestOracle:
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_theta3_in_high_precision(self, n):
        # the transcription holds to 30 digits with mpmath thetas
        case = identities.random_case("theta3", n, np.random.default_rng(n))
        a = oracles.mpc(case.params["a"][0])
        b = [oracles.mpc(v) for v in case.params["b"]]
        z = [oracles.mpc(v) for v in case.params["z"]]
        big_b = oracles.mp.fprod(b) / oracles.mp.fprod(z)
        lhs, rhs = identities.theta3_sides(a, b, z, big_b, _MpThetas(case.bases.p))
        assert abs(lhs - rhs) / abs(rhs) < 1e-30
        flo, _ = identities.identity_sides(case)
        assert abs(flo - complex(lhs)) / abs(lhs) < 1e-12


class TestSweeps:
    @pytest.mark.parametrize("identity", THETA_IDS)
    def test_hundred_points(self, identity):
        res = identities.sweep(identity, 3, 100, seed=2024)
        assert res.max_residual < 1e-10, res.reports[res.argmax].params
        assert {r.grid["n"] for r in res.reports} == {1, 2, 3}

    def test_contiguous(self):
        res = identities.sweep("contiguous_I", 3, 30, seed=7, threshold=1e-9)
        assert res.max_residual < 1e-9

    def test_unknown(self):
        with pytest.raises(DomainError):
            identities.sweep("nope", 1, 1, 0)

    def test_timing_off_by_default(self):
        res = identities.sweep("theta1", 1, 2, seed=0)
        assert all(r.elapsed_ms == 0 for r in res.reports)

    @settings(max_examples=25, deadline=None)
    @given(st.sampled_from(THETA_IDS), st.integers(1, 3), st.integers(0, 2**32 - 1))
    def test_property(self, identity, n, seed):
        case = identities.random_case(identity, n, np.random.default_rng(seed))
        assert identities.check_identity(case) < 1e-10


class TestTheta3Periodicity:
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_invariant_under_p_shift(self, n):
        case = identities.random_case("theta3", n, np.random.default_rng(10 + n))
        assert identities.theta3_periodicity(case) < 1e-10

    def test_wrong_identity(self):
        case = identities.random_case("theta1", 1, np.random.default_rng(0))
        with pytest.raises(DomainError):
            identities.theta3_periodicity(case)


class TestDenominators:
    def test_near_zero_named(self):
        # z_1 = z_2 puts theta(z_1/z_2) = theta(1) = 0 in a denominator
        case = ThetaIdentityCase("theta3", 2, {"a": (0.7,), "b": (0.6, 0.8, 0.9j, 1.1), "z": (1.1, 1.1)},
                                 Bases(0.1, 0.2))
        with pytest.raises(NearZeroDenominator) as info:
            identities.identity_sides(case)
        assert "z" in str(info.value)
