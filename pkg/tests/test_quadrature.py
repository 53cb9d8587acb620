import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ellint import Bases, TorusGrid, core, integrate_torus, kappa_constants
from ellint.errors import BudgetExceeded, DomainError, NonFinite, PoleTooClose
from ellint.quadrature import BUDGET_ENV, MonomialProduct, evaluation_budget, pole_distance


class TestGrid:
    def test_nodes_on_circle(self):
        g = TorusGrid(2, 64)
        assert np.max(np.abs(np.abs(g.nodes) - 1)) < 1e-15
        assert g.size == 64**2

    @pytest.mark.parametrize("n", [7, 6, 9, 0])
    def test_bad_node_count(self, n):
        with pytest.raises(DomainError):
            TorusGrid(1, n)

    def test_bad_dims(self):
        with pytest.raises(DomainError):
            TorusGrid(0, 16)

    def test_phase(self):
        g = TorusGrid(1, 8, phase=0.25)
        assert np.angle(g.nodes[0]) == pytest.approx(2 * math.pi * 0.25 / 8)
        with pytest.raises(DomainError):
            TorusGrid(1, 8, phase=math.pi / 10)

    def test_budget_env(self, monkeypatch):
        monkeypatch.setenv(BUDGET_ENV, "100")
        assert evaluation_budget() == 100
        monkeypatch.setenv(BUDGET_ENV, "lots")
        with pytest.raises(DomainError):
            evaluation_budget()


class TestIntegrate:
    def test_monomials(self):
        g = TorusGrid(1, 16)
        assert integrate_torus(lambda z: 1 / z, g).value == pytest.approx(1, abs=1e-15)
        for k in (-8, -3, 0, 2, 6):
            assert abs(integrate_torus(lambda z, k=k: z**k, g).value) < 1e-15

    def test_aliasing(self):
        # z^(N-1) aliases onto 1/z on an N-point grid
        g = TorusGrid(1, 16)
        assert integrate_torus(lambda z: z**15, g).value == pytest.approx(1, abs=1e-14)

    def test_cauchy_kernel_geometric_convergence(self):
        a = 0.5 + 0.3j
        errs = []
        for n in (16, 32, 64):
            est = integrate_torus(lambda z: 1 / (z - a), TorusGrid(1, n))
            errs.append(abs(est.value - 1))
            assert est.error_estimate >= 0
        assert errs[-1] < 1e-14
        assert errs[1] <= abs(a) ** 32 * 2

    def test_half_grid_estimate(self):
        f = lambda z: 1 / (z - 0.6j)  # noqa: E731
        full = integrate_torus(f, TorusGrid(1, 32))
        half = integrate_torus(f, TorusGrid(1, 16))
        assert full.error_estimate == pytest.approx(abs(full.value - half.value), rel=1e-12)
        assert full.nodes_used == 32

    def test_two_dims_separable(self):
        a, b = 0.3, -0.4j
        est = integrate_torus(lambda z, w: 1 / ((z - a) * (w - b)), TorusGrid(2, 64))
        assert est.value == pytest.approx(1, abs=1e-14)

    def test_pointwise_fallback(self):
        def scalar_only(z):
            return complex(z) ** -1  # complex() of an array raises TypeError

        assert integrate_torus(scalar_only, TorusGrid(1, 8)).value == pytest.approx(1, abs=1e-15)

    def test_budget(self):
        with pytest.raises(BudgetExceeded):
            integrate_torus(lambda z, w: z, TorusGrid(2, 64), budget=1000)

    def test_non_finite(self):
        with pytest.raises(NonFinite):
            integrate_torus(lambda z: 1 / (z - 1), TorusGrid(1, 8))

    def test_deterministic(self):
        f = lambda z, w: np.exp(z + 2 * w) / (z * w)  # noqa: E731
        g = TorusGrid(2, 32)
        assert integrate_torus(f, g).value == integrate_torus(f, g).value

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
                    min_size=15, max_size=15))
    def test_laurent_exact(self, coeffs):
        # degrees -7..7 on a 16-node grid: only 1/z contributes
        g = TorusGrid(1, 16)
        c = np.asarray(coeffs)
        f = lambda z: sum(ck * z ** (k - 7) for k, ck in enumerate(c))  # noqa: E731
        value = integrate_torus(f, g).value
        assert abs(value - c[6]) <= 1e-14 * (1 + np.sum(np.abs(c)))


class TestMonomialProduct:
    b = Bases(0.2 + 0.1j, 0.3)

    def product(self):
        m = MonomialProduct(2, self.b)
        m.add("gamma", 0.4, (1, -1)).add("rgamma", 0.5j, (2, 0)).add("theta", 0.7, (0, 1))
        m.add("qpoch", 0.3, (1, 1)).add("func", 1.0, (1, 0), func=np.exp)
        return m

    def test_grid_values_match_pointwise(self):
        m = self.product()
        g = TorusGrid(2, 16)
        zz, ww = np.meshgrid(g.nodes, g.nodes, indexing="ij")
        direct = m(zz, ww).ravel()
        assert np.max(np.abs(m.grid_values(g) - direct) / np.abs(direct)) < 1e-13

    def test_grid_values_with_phase(self):
        m = self.product()
        g = TorusGrid(2, 16, phase=0.5)
        zz, ww = np.meshgrid(g.nodes, g.nodes, indexing="ij")
        assert np.max(np.abs(m.grid_values(g) - m(zz, ww).ravel())) < 1e-13

    def test_monomial_gamma_integral(self):
        # integral of Gamma(c z) / z is Gamma's constant Laurent coefficient; check against a fine grid
        m = MonomialProduct(1, self.b).add("gamma", 0.4, (1,)).scaled(1.0, (-1,))
        coarse = integrate_torus(m, TorusGrid(1, 64)).value
        fine = integrate_torus(lambda z: core.elliptic_gamma(0.4 * z, self.b) / z, TorusGrid(1, 256)).value
        assert coarse == pytest.approx(fine, rel=1e-14)

    def test_pole_preflight(self):
        # Gamma(z) has its first pole at z = 1, on the torus
        m = MonomialProduct(1, self.b).add("gamma", 1.02, (1,))
        with pytest.raises(PoleTooClose):
            integrate_torus(m, TorusGrid(1, 32))

    def test_arity(self):
        with pytest.raises(ValueError):
            MonomialProduct(2, self.b).add("gamma", 1.0, (1,))
        with pytest.raises(ValueError):
            self.product()(1.0)

    def test_pole_distance(self):
        assert pole_distance(1.0, (1,), 2.0) == pytest.approx(0.5)
        assert pole_distance(1.0, (2, 1), 4.0) == pytest.approx(0.5)


class TestKappa:
    def test_values(self):
        b = Bases(0.3, 0.2j)
        pp = core.pochhammer_pair(b)
        kappa, ka, kc = kappa_constants(2, b)
        assert kappa == pytest.approx(pp / (4j * math.pi))
        assert ka == pytest.approx(pp**2 / ((2j * math.pi) ** 2 * 6))
        assert kc == pytest.approx(pp**2 / ((2j * math.pi) ** 2 * 8))

    def test_rank_one_agrees(self):
        # rank one: the A constant is twice the C constant, which equals the univariate one
        kappa, ka, kc = kappa_constants(1, Bases(0.1, 0.4))
        assert kc == pytest.approx(kappa)
        assert ka == pytest.approx(kappa)

    def test_rank(self):
        with pytest.raises(DomainError):
            kappa_constants(0, Bases(0.1, 0.1))
