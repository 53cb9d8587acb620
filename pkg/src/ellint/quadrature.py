"""Trapezoidal quadrature on the n-torus.

``integrate_torus`` computes (2 pi i)^-n times the contour integral of f over
|z_1| = ... = |z_n| = 1, i.e. the mean over the grid of f(z) z_1 ... z_n.
Integrands analytic on a neighbourhood of the torus converge geometrically.

Most integrands in this package are products of special functions of
monomials c z^m with integer exponent vectors m.  On an equal-angle grid
such a monomial only takes N (or a small multiple of N) distinct values, so
``MonomialProduct`` evaluates each distinct factor on a 1-D table once and
gathers it by index.  That is where almost all of the speed comes from.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import core
from .core import Bases, TruncationPolicy, DEFAULT_POLICY
from .errors import BudgetExceeded, DomainError, NonFinite, PoleTooClose

DEFAULT_BUDGET = 1 << 24
BUDGET_ENV = "ELLINT_BUDGET"
POLE_MARGIN = 0.05


def evaluation_budget() -> int:
    """Node-evaluation cap: ELLINT_BUDGET if set, else 2**24."""
    raw = os.environ.get(BUDGET_ENV)
    if raw is None or raw.strip() == "":
        return DEFAULT_BUDGET
    try:
        value = int(float(raw))
    except ValueError:
        raise DomainError(f"{BUDGET_ENV} must be an integer, got {raw!r}") from None
    if value < 1:
        raise DomainError(f"{BUDGET_ENV} must be positive")
    return value


@dataclass(frozen=True)
class TorusGrid:
    """Tensor equal-angle grid with ``nodes_per_dim`` points per circle.

    ``phase`` rotates every circle by that fraction of a node spacing; it must
    be a rational with a small denominator (0 and 1/2 are the useful ones).
    """

    dims: int
    nodes_per_dim: int
    phase: float = 0.0
    budget: int | None = None

    def __post_init__(self):
        if self.dims < 1:
            raise DomainError("grid dimension must be >= 1")
        n = self.nodes_per_dim
        if int(n) != n or n < 8 or n % 2:
            raise DomainError(f"nodes per dimension must be an even integer >= 8, got {n}")
        frac = Fraction(self.phase).limit_denominator(64)
        if abs(float(frac) - self.phase) > 1e-12 or not 0 <= frac < 1:
            raise DomainError("grid phase must be a rational in [0, 1) with denominator <= 64")

    @property
    def phase_fraction(self) -> Fraction:
        return Fraction(self.phase).limit_denominator(64)

    @property
    def nodes(self) -> np.ndarray:
        k = np.arange(self.nodes_per_dim) + self.phase
        return np.exp(2j * np.pi * k / self.nodes_per_dim)

    @property
    def size(self) -> int:
        return self.nodes_per_dim**self.dims


@dataclass(frozen=True)
class IntegralEstimate:
    """Trapezoidal value with the two-grid error estimate |I(N) - I(N/2)|."""

    value: complex
    error_estimate: float
    nodes_used: int

    def __add__(self, other: "IntegralEstimate") -> "IntegralEstimate":
        return IntegralEstimate(
            self.value + other.value,
            self.error_estimate + other.error_estimate,
            self.nodes_used + other.nodes_used,
        )

    def scaled(self, factor: complex) -> "IntegralEstimate":
        return IntegralEstimate(self.value * factor, self.error_estimate * abs(factor), self.nodes_used)


FACTOR_KINDS = ("gamma", "rgamma", "theta", "qpoch", "rqpoch", "func")


@dataclass(frozen=True)
class Factor:
    """One factor F(coef * z^exps) of a monomial product.

    kind is gamma (elliptic Gamma), rgamma (1/Gamma), theta (theta(.; p)),
    qpoch / rqpoch ((.; q)_inf and its reciprocal) or func, in which case
    ``func`` must be a vectorised callable of one complex array.
    """

    kind: str
    coef: complex
    exps: tuple[int, ...]
    func: Callable | None = None

    def __post_init__(self):
        if self.kind not in FACTOR_KINDS:
            raise ValueError(f"unknown factor kind {self.kind!r}")
        if (self.kind == "func") != (self.func is not None):
            raise ValueError("func factors need a callable and only they take one")
        object.__setattr__(self, "coef", complex(self.coef))
        object.__setattr__(self, "exps", tuple(int(e) for e in self.exps))


@dataclass
class MonomialProduct:
    """prefactor * z^prefactor_exps * prod_k F_k(c_k z^m_k) as a function on C^n."""

    dims: int
    bases: Bases
    factors: list[Factor] = field(default_factory=list)
    prefactor: complex = 1.0
    prefactor_exps: tuple[int, ...] | None = None
    policy: TruncationPolicy = DEFAULT_POLICY

    def __post_init__(self):
        if self.prefactor_exps is None:
            self.prefactor_exps = (0,) * self.dims
        for f in self.factors:
            if len(f.exps) != self.dims:
                raise ValueError(f"factor exponent vector {f.exps} does not have length {self.dims}")

    def add(self, kind: str, coef, exps, func=None) -> "MonomialProduct":
        if len(exps) != self.dims:
            raise ValueError(f"factor exponent vector {tuple(exps)} does not have length {self.dims}")
        self.factors.append(Factor(kind, coef, tuple(exps), func))
        return self

    def scaled(self, factor: complex, exps=None) -> "MonomialProduct":
        """Copy multiplied by factor * z^exps."""
        extra = (0,) * self.dims if exps is None else tuple(exps)
        return MonomialProduct(
            self.dims,
            self.bases,
            list(self.factors),
            self.prefactor * factor,
            tuple(a + b for a, b in zip(self.prefactor_exps, extra)),
            self.policy,
        )

    def _apply(self, factor: Factor, u: np.ndarray) -> np.ndarray:
        b, pol = self.bases, self.policy
        kind = factor.kind
        if kind == "gamma":
            return core.elliptic_gamma(u, b, pol)
        if kind == "rgamma":
            return core.reciprocal_gamma(u, b, pol)
        if kind == "theta":
            return core.theta(u, b.p, pol)
        if kind == "qpoch":
            return core.qpochhammer_inf(u, b.q, pol, zero_ok=True)
        if kind == "rqpoch":
            return 1 / core.qpochhammer_inf(u, b.q, pol)
        return np.asarray(factor.func(u), dtype=complex) * np.ones(u.shape)

    def __call__(self, *z):
        """Direct pointwise evaluation (no tables); arguments broadcast."""
        if len(z) != self.dims:
            raise ValueError(f"expected {self.dims} arguments, got {len(z)}")
        zs = np.broadcast_arrays(*[np.asarray(v, dtype=complex) for v in z])
        out = np.full(zs[0].shape, self.prefactor, dtype=complex)
        out = out * _monomial(zs, self.prefactor_exps)
        for f in self.factors:
            out = out * self._apply(f, f.coef * _monomial(zs, f.exps))
        return complex(out) if out.ndim == 0 else out

    def grid_values(self, grid: TorusGrid) -> np.ndarray:
        """Values on the grid, flattened in C order, via per-factor lookup tables."""
        if grid.dims != self.dims:
            raise ValueError("grid and integrand dimensions differ")
        n_nodes = grid.nodes_per_dim
        frac = grid.phase_fraction
        den, num = frac.denominator, frac.numerator
        period = den * n_nodes
        k = np.indices((n_nodes,) * self.dims).reshape(self.dims, -1)
        roots = np.exp(2j * np.pi * np.arange(period) / period)

        def index(exps):
            m = np.asarray(exps)
            return (den * (m @ k) + num * int(m.sum())) % period

        out = np.full(k.shape[1], self.prefactor, dtype=complex)
        out *= roots[index(self.prefactor_exps)]
        # tables are filled lazily: only the roots a factor actually reaches
        # are evaluated, so singular points between shifted nodes stay unseen
        tables: dict = {}
        with np.errstate(over="ignore", invalid="ignore"):
            for f in self.factors:
                key = (f.kind, f.coef, f.func)
                table, filled = tables.setdefault(
                    key, (np.empty(period, dtype=complex), np.zeros(period, dtype=bool)))
                idx = index(f.exps)
                todo = np.unique(idx[~filled[idx]])
                if todo.size:
                    table[todo] = self._apply(f, f.coef * roots[todo])
                    filled[todo] = True
                out *= table[idx]
        return out


def _monomial(zs, exps) -> np.ndarray:
    out = np.ones(np.shape(zs[0]), dtype=complex)
    for v, e in zip(zs, exps):
        if e:
            out = out * v ** int(e)
    return out


def _pole_radii(bases: Bases, reciprocal: bool, cutoff: float = 1e-16) -> list[float]:
    """Moduli of the pole lattice of Gamma (|p^-mu q^-nu|) or of 1/Gamma (|p^mu+1 q^nu+1|)."""
    ap, aq = abs(bases.p), abs(bases.q)
    radii = []
    mu = 0
    while True:
        pm = ap**mu
        if pm < cutoff:
            break
        nu = 0
        while True:
            w = pm * aq**nu
            if w < cutoff:
                break
            radii.append(w * ap * aq if reciprocal else 1 / w)
            nu += 1
            if aq == 0:
                break
        mu += 1
        if ap == 0:
            break
    if reciprocal:
        radii = [r for r in radii if r > 0]
    return radii


def pole_distance(coef_modulus: float, exps: Sequence[int], radius: float) -> float:
    """Distance to the unit circle of the pole |c z^m| = radius along one coordinate.

    Moving one coordinate to modulus rho scales |c z^m| by rho^m_j, so the
    pole reaches the torus at rho = (radius/|c|)^(1/|m_j|); the worst case
    is the largest |m_j|.
    """
    top = max(abs(e) for e in exps)
    rho = (radius / coef_modulus) ** (1 / top)
    return min(abs(rho - 1), abs(1 / rho - 1))


def preflight_poles(product: MonomialProduct, margin: float = POLE_MARGIN) -> None:
    """Raise PoleTooClose if a pole family of the integrand lies within ``margin`` of the torus."""
    cache: dict[tuple, list[float]] = {}
    b = product.bases
    for f in product.factors:
        if not any(f.exps) or f.kind in ("theta", "qpoch", "func"):
            continue
        c = abs(f.coef)
        if f.kind in ("gamma", "rgamma"):
            recip = f.kind == "rgamma"
            if recip and b.pq == 0:
                continue
            key = ("g", recip)
            if key not in cache:
                cache[key] = _pole_radii(b, recip)
            radii = cache[key]
        else:
            aq = abs(b.q)
            if aq == 0:
                radii = [1.0]
            else:
                radii = [aq**-k for k in range(int(math.log(1e-16) / math.log(aq)) + 1)] if aq < 1 else [1.0]
        for r in radii:
            if pole_distance(c, f.exps, r) < margin:
                label = f"{f.kind}({f.coef:.6g} * z^{list(f.exps)})"
                raise PoleTooClose(label, r / c, margin)


def _sum(values: np.ndarray) -> complex:
    # numpy reduces contiguous arrays pairwise, which keeps the order fixed
    return complex(np.sum(values))


def integrate_torus(f, grid: TorusGrid, budget: int | None = None, check_poles: bool = True) -> IntegralEstimate:
    """(2 pi i)^-n times the integral of f over T^n, with the embedded half-grid error estimate.

    ``f`` is either a MonomialProduct or a callable of ``grid.dims`` complex
    arrays.  Callables are first tried vectorised (on meshgrid arrays) and
    fall back to pointwise evaluation if that raises TypeError.
    """
    cap = budget if budget is not None else (grid.budget if grid.budget is not None else evaluation_budget())
    if grid.size > cap:
        raise BudgetExceeded(f"{grid.size} node evaluations exceed the budget of {cap}")
    n, n_nodes = grid.dims, grid.nodes_per_dim
    shape = (n_nodes,) * n

    if isinstance(f, MonomialProduct):
        if check_poles:
            preflight_poles(f)
        vals = f.scaled(1.0, (1,) * n).grid_values(grid).reshape(shape)
    else:
        axes = np.meshgrid(*([grid.nodes] * n), indexing="ij")
        try:
            with np.errstate(all="ignore"):
                raw = f(*axes)
            vals = np.broadcast_to(np.asarray(raw, dtype=complex), shape).copy()
        except TypeError:
            flat = [a.ravel() for a in axes]
            vals = np.array([complex(f(*pt)) for pt in zip(*flat)], dtype=complex).reshape(shape)
        weight = np.ones(shape, dtype=complex)
        for a in axes:
            weight = weight * a
        vals = vals * weight

    if not np.all(np.isfinite(vals)):
        bad = np.argwhere(~np.isfinite(vals))[0]
        raise NonFinite(f"integrand is not finite at grid index {tuple(int(i) for i in bad)}")

    value = _sum(vals.ravel()) / grid.size
    sub = vals[(slice(None, None, 2),) * n]
    half = _sum(np.ascontiguousarray(sub).ravel()) / sub.size
    return IntegralEstimate(value, float(abs(value - half)), grid.size)


def kappa_constants(n: int, bases: Bases, policy: TruncationPolicy = DEFAULT_POLICY):
    """(kappa, kappa_A, kappa_C) for rank n, each including its powers of 2 pi i."""
    if n < 1:
        raise DomainError("rank n must be >= 1")
    pp = core.pochhammer_pair(bases, policy)
    two_pi_i = 2j * math.pi
    kappa = pp / (2 * two_pi_i)
    kappa_a = pp**n / (two_pi_i**n * math.factorial(n + 1))
    kappa_c = pp**n / (two_pi_i**n * 2**n * math.factorial(n))
    return kappa, kappa_a, kappa_c
