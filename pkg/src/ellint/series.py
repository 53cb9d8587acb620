"""Finite elliptic hypergeometric sums obtained from the new A_n integral by residues.

(a)_k below is the elliptic shifted factorial (a; q, p)_k.  Every summand is
assembled from named numerator and denominator factors so that a vanishing
denominator can be reported by name before any summation happens.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from . import beta, core
from .core import Bases, DEFAULT_POLICY, TruncationPolicy
from .errors import DegenerateDenominator, DomainError, SamplingExhausted
from .quadrature import kappa_constants

MAX_TERMS = 10**5
DENOMINATOR_FLOOR = 1e-12
# samplers reject points where sum |term| / |sum| exceeds this: there the sum
# sits near a zero of the closed form and binary64 cancellation dominates
CONDITION_CAP = 1e3


class _Parts(tuple):
    """The individual theta factors of a shifted factorial, kept apart for log-space products."""


class _Fraction:
    """Running product of labelled numerator and denominator factors."""

    def __init__(self, bases: Bases, policy: TruncationPolicy):
        self.bases, self.policy = bases, policy
        self.num: list[complex] = []
        self.den: list[tuple[str, complex]] = []

    def sf(self, a: complex, k: int):
        a, k = complex(a), int(k)
        if k < 0:
            return complex(core.shifted_factorial(a, k, self.bases, self.policy))
        q = self.bases.q
        return _Parts(complex(core.theta(a * q**j, self.bases.p, self.policy)) for j in range(k))

    def th(self, a: complex) -> complex:
        return complex(core.theta(complex(a), self.bases.p, self.policy))

    def over(self, label: str, value):
        if isinstance(value, _Parts):
            self.den.extend((label, v) for v in value)
        else:
            self.den.append((label, value))

    def times(self, *values):
        for value in values:
            if isinstance(value, _Parts):
                self.num.extend(value)
            else:
                self.num.append(value)

    def value(self) -> complex:
        num = np.asarray(self.num, dtype=complex)
        if np.any(num == 0):
            return 0j
        den = np.asarray([d for _, d in self.den], dtype=complex)
        mn, en = _split(num)
        md, ed = _split(den)
        # exact power-of-two scaling keeps long products in range; summing logs instead costs digits
        acc, exp2 = 1 + 0j, int(en.sum() - ed.sum())
        for m in np.concatenate([mn, 1 / md]):
            acc *= m
            e = math.frexp(abs(acc))[1]
            acc, exp2 = acc * 2.0**-e, exp2 + e
        return complex(math.ldexp(acc.real, exp2), math.ldexp(acc.imag, exp2))

    def check(self, index):
        for label, d in self.den:
            if not abs(d) > DENOMINATOR_FLOOR:
                raise DegenerateDenominator(index, label)


def _split(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """values = mantissas * 2**exponents with |mantissa| in [0.5, 1)."""
    exps = np.frexp(np.abs(values))[1]
    return values * np.ldexp(1.0, -exps), exps.astype(np.int64)


def index_box(big_n: Sequence[int]) -> Iterator[tuple[int, ...]]:
    return itertools.product(*(range(k + 1) for k in big_n))


def _box_size(big_n) -> int:
    return math.prod(k + 1 for k in big_n)


@dataclass(frozen=True)
class RosParams:
    n: int
    s: tuple
    big_n: tuple
    bases: Bases

    def __post_init__(self):
        object.__setattr__(self, "s", tuple(complex(v) for v in self.s))
        object.__setattr__(self, "big_n", tuple(int(k) for k in self.big_n))
        if self.n < 1 or len(self.s) != self.n + 3 or len(self.big_n) != self.n:
            raise DomainError("need n >= 1, n+3 values of s and n values of N")
        if min(self.big_n) < 0:
            raise DomainError("N must be non-negative")
        if _box_size(self.big_n) > MAX_TERMS:
            raise DomainError(f"index box exceeds {MAX_TERMS} terms")

    @property
    def big_s(self) -> complex:
        return complex(np.prod(self.s))

    @property
    def big_s_prime(self) -> complex:
        return complex(np.prod(self.s[: self.n]))


@dataclass(frozen=True)
class EbParams:
    n: int
    t: tuple
    b: tuple
    big_n: tuple
    bases: Bases

    def __post_init__(self):
        object.__setattr__(self, "t", tuple(complex(v) for v in self.t))
        object.__setattr__(self, "b", tuple(complex(v) for v in self.b))
        object.__setattr__(self, "big_n", tuple(int(k) for k in self.big_n))
        if self.n < 1 or len(self.t) != self.n or len(self.b) != 3 or len(self.big_n) != self.n:
            raise DomainError("need n >= 1, n values of t, 3 of b and n values of N")
        if min(self.big_n) < 0:
            raise DomainError("N must be non-negative")
        if _box_size(self.big_n) > MAX_TERMS:
            raise DomainError(f"index box exceeds {MAX_TERMS} terms")

    @property
    def big_t(self) -> complex:
        return complex(np.prod(self.t))

    @property
    def big_a(self) -> complex:
        return self.bases.q * self.big_t / complex(np.prod(self.b))


# A_n sum and its closed form ---------------------------------------------------------


def ros_summand(lam: Sequence[int], params: RosParams, policy: TruncationPolicy = DEFAULT_POLICY) -> _Fraction:
    n, s, big_n, q = params.n, params.s, params.big_n, params.bases.q
    big_s, sp = params.big_s, params.big_s_prime
    total = sum(lam)
    fr = _Fraction(params.bases, policy)
    for i in range(n):
        fr.times(fr.th(sp * s[i] * q ** (lam[i] + total)))
        fr.over(f"theta(S' s_{i + 1})", fr.th(sp * s[i]))
    for i, j in itertools.combinations(range(n), 2):
        fr.times(fr.th(q ** (lam[i] - lam[j]) * s[i] / s[j]))
        fr.over(f"theta(s_{i + 1}/s_{j + 1})", fr.th(s[i] / s[j]))
        fr.over(f"(q s_{i + 1} s_{j + 1}/S)_{lam[i] + lam[j]}", fr.sf(q * s[i] * s[j] / big_s, lam[i] + lam[j]))
    for j in range(n + 3):
        fr.times(fr.sf(sp * s[j], total))
        for i in range(n):
            fr.over(f"(q s_{i + 1}/s_{j + 1})_{lam[i]}", fr.sf(q * s[i] / s[j], lam[i]))
    for i in range(n):
        for j in range(n):
            fr.times(fr.sf(q ** -big_n[j] * s[i] / s[j], lam[i]))
            fr.times(fr.sf(q ** (big_n[j] + 1) * s[i] * s[j] / big_s, lam[i]))
    for i in range(n):
        fr.times(fr.sf(big_s * sp / s[i], total - lam[i]), q ** ((i + 1) * lam[i]))
        fr.over(f"(q^-N_{i + 1} S S'/s_{i + 1})_{total}", fr.sf(q ** -big_n[i] * big_s * sp / s[i], total))
        fr.over(f"(q^(N_{i + 1}+1) S' s_{i + 1})_{total}", fr.sf(q ** (big_n[i] + 1) * sp * s[i], total))
    return fr


def _box_sum(summand, params, policy) -> complex:
    terms = []
    for lam in index_box(params.big_n):
        fr = summand(lam, params, policy)
        fr.check(lam)
        terms.append(fr.value())
    return complex(np.sum(np.asarray(terms)))


def summation_condition(summand, params, policy: TruncationPolicy = DEFAULT_POLICY) -> float:
    """sum |term| / |sum term|; the relative error of the sum is about this times machine epsilon."""
    terms = np.asarray([summand(lam, params, policy).value() for lam in index_box(params.big_n)])
    total = abs(np.sum(terms))
    return float(np.sum(np.abs(terms)) / total) if total else math.inf


def preflight(summand, params, policy: TruncationPolicy = DEFAULT_POLICY):
    """Raise DegenerateDenominator for the first index whose summand has a vanishing denominator."""
    for lam in index_box(params.big_n):
        summand(lam, params, policy).check(lam)


def ros_lhs(params: RosParams, policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    preflight(ros_summand, params, policy)
    return _box_sum(ros_summand, params, policy)


def ros_rhs(params: RosParams, policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    n, s, big_n, q = params.n, params.s, params.big_n, params.bases.q
    big_s, sp = params.big_s, params.big_s_prime
    fr = _Fraction(params.bases, policy)
    for i in range(n):
        k = big_n[i]
        fr.times(fr.sf(q * sp * s[i], k))
        fr.over(f"(q s_{i + 1}/(S S'))_{k}", fr.sf(q * s[i] / (big_s * sp), k))
        for j in range(n, n + 3):
            fr.times(fr.sf(q * s[i] * s[j] / big_s, k))
            fr.over(f"(q s_{i + 1}/s_{j + 1})_{k}", fr.sf(q * s[i] / s[j], k))
    fr.check("rhs")
    return fr.value()


# companion sum ------------------------------------------------------------------


def eb_summand(lam: Sequence[int], params: EbParams, policy: TruncationPolicy = DEFAULT_POLICY) -> _Fraction:
    n, t, b, big_n, q = params.n, params.t, params.b, params.big_n, params.bases.q
    big_t, big_a = params.big_t, params.big_a
    nn = sum(big_n)
    total = sum(lam)
    fr = _Fraction(params.bases, policy)
    for i in range(n):
        fr.times(fr.th(big_t * t[i] * q ** (lam[i] + total)))
        fr.over(f"theta(T t_{i + 1})", fr.th(big_t * t[i]))
    for i, j in itertools.combinations(range(n), 2):
        fr.times(fr.th(q ** (lam[i] - lam[j]) * t[i] / t[j]))
        fr.over(f"theta(t_{i + 1}/t_{j + 1})", fr.th(t[i] / t[j]))
        fr.times(fr.sf(q ** (1 - nn) * t[i] * t[j] / big_a, lam[i] + lam[j]))
    for i in range(n):
        for j in range(n):
            fr.times(fr.sf(q ** -big_n[j] * t[i] / t[j], lam[i]))
            fr.over(f"(q t_{i + 1}/t_{j + 1})_{lam[i]}", fr.sf(q * t[i] / t[j], lam[i]))
            fr.over(f"(q^(1-|N|) t_{i + 1} t_{j + 1}/A)_{lam[i]}",
                    fr.sf(q ** (1 - nn) * t[i] * t[j] / big_a, lam[i]))
    for j in range(3):
        for i in range(n):
            fr.times(fr.sf(t[i] * b[j], lam[i]))
        fr.over(f"(q T/b_{j + 1})_{total}", fr.sf(q * big_t / b[j], total))
    for i in range(n):
        fr.times(fr.sf(big_t * t[i], total), fr.sf(q**nn * big_a * big_t / t[i], total), q ** ((i + 1) * lam[i]))
        fr.over(f"(q^(N_{i + 1}+1) T t_{i + 1})_{total}", fr.sf(q ** (big_n[i] + 1) * big_t * t[i], total))
        fr.over(f"(q^|N| A T/t_{i + 1})_{total - lam[i]}", fr.sf(q**nn * big_a * big_t / t[i], total - lam[i]))
    return fr


def eb_lhs(params: EbParams, policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    preflight(eb_summand, params, policy)
    return _box_sum(eb_summand, params, policy)


def eb_rhs(params: EbParams, policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    n, t, b, big_n, q = params.n, params.t, params.b, params.big_n, params.bases.q
    big_t, big_a = params.big_t, params.big_a
    nn = sum(big_n)
    fr = _Fraction(params.bases, policy)
    for i in range(n):
        for j in range(n):
            a = big_a / (t[i] * t[j])
            fr.times(fr.sf(a, nn - big_n[i]))
            fr.over(f"(A/(t_{i + 1} t_{j + 1}))_{nn}", fr.sf(a, nn))
    for i, j in itertools.combinations(range(n), 2):
        a = big_a / (t[i] * t[j])
        fr.times(fr.sf(a, nn))
        fr.over(f"(A/(t_{i + 1} t_{j + 1}))_{nn - big_n[i] - big_n[j]}", fr.sf(a, nn - big_n[i] - big_n[j]))
    for i in range(n):
        for j in range(3):
            a = big_a * b[j] / t[i]
            fr.times(fr.sf(a, nn))
            fr.over(f"(A b_{j + 1}/t_{i + 1})_{nn - big_n[i]}", fr.sf(a, nn - big_n[i]))
        fr.times(fr.sf(q * big_t * t[i], big_n[i]))
    for j in range(3):
        fr.over(f"(q T/b_{j + 1})_{nn}", fr.sf(q * big_t / b[j], nn))
    fr.check("rhs")
    return fr.value()


def reversed_eb(params: RosParams) -> EbParams:
    """Companion-sum parameters whose summand at lambda matches the A_n summand at N - lambda."""
    n, s, q = params.n, params.s, params.bases.q
    t = tuple(q ** -params.big_n[i] / s[i] for i in range(n))
    return EbParams(n, t, s[n:], params.big_n, params.bases)


def reversal_residual(params: RosParams, policy: TruncationPolicy = DEFAULT_POLICY) -> float:
    """max over lambda of |c(lambda)/c - 1| with c(lambda) = eb(lambda)/ros(N - lambda), c = eb_rhs/ros_rhs."""
    eb = reversed_eb(params)
    preflight(ros_summand, params, policy)
    preflight(eb_summand, eb, policy)
    ratio = eb_rhs(eb, policy) / ros_rhs(params, policy)
    worst = 0.0
    for lam in index_box(params.big_n):
        flipped = tuple(k - l for k, l in zip(params.big_n, lam))
        c = eb_summand(lam, eb, policy).value() / ros_summand(flipped, params, policy).value()
        worst = max(worst, abs(c / ratio - 1))
    return worst


# the residue kernels --------------------------------------------------------------


def rho_normalizer(params: beta.NewAnParams, policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """Constant c with rho = c * (new A_n integrand)."""
    b = params.bases
    big_s = params.big_s
    num = [big_s * ti / sj for ti in params.t for sj in params.s]
    den = [ti * sj for ti in params.t for sj in params.s]
    den += [big_s / (a * c) for a, c in itertools.combinations(params.s, 2)]
    return core.gamma_prod(num, b, policy) * core.rgamma_prod(den, b, policy)


def rho_kernel(z: Sequence[complex], params: beta.NewAnParams, policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """rho(z; s, t) at z_1..z_n (z_{n+1} = 1/(z_1...z_n))."""
    z = [complex(v) for v in np.atleast_1d(z)]
    if len(z) != params.n:
        raise DomainError(f"rho needs {params.n} coordinates")
    f = beta.new_an_integrand(params, policy)
    # the integrand carries the 1/(z_1...z_n) of the measure
    return complex(f(*z)) * complex(np.prod(z)) * rho_normalizer(params, policy)


def rho_integrand(params: beta.NewAnParams, policy: TruncationPolicy = DEFAULT_POLICY):
    """rho as a MonomialProduct including the measure, ready for integrate_torus."""
    return beta.new_an_integrand(params, policy).scaled(rho_normalizer(params, policy))


def kappa_rho_lambda(lam: Sequence[int], s: Sequence[complex], t: Sequence[complex], bases: Bases,
                     policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """kappa_A * rho_lambda(s, t), the n-fold residue of rho at z_i = s_i q^lambda_i."""
    s = tuple(complex(v) for v in s)
    t = tuple(complex(v) for v in t)
    n = len(t)
    if len(s) != n + 3 or len(lam) != n:
        raise DomainError("rho_lambda needs n values of t and lambda and n+3 of s")
    q = bases.q
    big_s = complex(np.prod(s))
    sp = complex(np.prod(s[:n]))
    total = sum(lam)
    fr = _Fraction(bases, policy)
    g = lambda a: complex(core.elliptic_gamma(complex(a), bases, policy))  # noqa: E731
    for i in range(n):
        fr.times(g(t[i] / sp) * g(big_s * sp / s[i]))
        fr.over(f"Gamma(1/(S' s_{i + 1}))", g(1 / (sp * s[i])))
        fr.over(f"Gamma(S S' t_{i + 1})", g(big_s * sp * t[i]))
        for j in range(n, n + 3):
            fr.times(g(big_s * t[i] / s[j]) * g(s[j] / s[i]))
            fr.over(f"Gamma(S/(s_{i + 1} s_{j + 1}))", g(big_s / (s[i] * s[j])))
            fr.over(f"Gamma(t_{i + 1} s_{j + 1})", g(t[i] * s[j]))
    for i in range(n):
        fr.times(fr.th(sp * s[i] * q ** (lam[i] + total)))
        fr.over(f"theta(S' s_{i + 1})", fr.th(sp * s[i]))
    for i, j in itertools.combinations(range(n), 2):
        fr.times(fr.th(q ** (lam[i] - lam[j]) * s[i] / s[j]))
        fr.over(f"theta(s_{i + 1}/s_{j + 1})", fr.th(s[i] / s[j]))
        fr.over(f"(q s_{i + 1} s_{j + 1}/S)_{lam[i] + lam[j]}", fr.sf(q * s[i] * s[j] / big_s, lam[i] + lam[j]))
    for j in range(n + 3):
        fr.times(fr.sf(sp * s[j], total))
        for i in range(n):
            fr.over(f"(q s_{i + 1}/s_{j + 1})_{lam[i]}", fr.sf(q * s[i] / s[j], lam[i]))
    for i in range(n):
        for j in range(n):
            fr.times(fr.sf(s[i] * t[j], lam[i]), fr.sf(q * s[i] / (big_s * t[j]), lam[i]))
    for i in range(n):
        fr.times(fr.sf(big_s * sp / s[i], total - lam[i]), q ** ((i + 1) * lam[i]))
        fr.over(f"(S S' t_{i + 1})_{total}", fr.sf(big_s * sp * t[i], total))
        fr.over(f"(q S'/t_{i + 1})_{total}", fr.sf(q * sp / t[i], total))
    fr.check(tuple(lam))
    return fr.value()


def rho_lambda(lam, s, t, bases: Bases, policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """rho_lambda(s, t) itself (the residue expression divided by kappa_A)."""
    _, kappa_a, _ = kappa_constants(len(t), bases, policy)
    return kappa_rho_lambda(lam, s, t, bases, policy) / kappa_a


def terminating_t(s: Sequence[complex], big_n: Sequence[int], q: complex) -> tuple:
    """t_i = q^(-N_i) / s_i, where only the fully residual term survives."""
    return tuple(q ** -k / complex(si) for k, si in zip(big_n, s))


def residue_sum(params: RosParams, policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """sum over the box of kappa_A rho_lambda at the terminating t; equals 1."""
    t = terminating_t(params.s, params.big_n, params.bases.q)
    total = [kappa_rho_lambda(lam, params.s, t, params.bases, policy) for lam in index_box(params.big_n)]
    return complex(np.sum(np.asarray(total)))


def residue_consistency(params: RosParams, policy: TruncationPolicy = DEFAULT_POLICY) -> float:
    """max over lambda of |kappa_A rho_lambda * ros_rhs / ros_summand - 1| at the terminating t."""
    t = terminating_t(params.s, params.big_n, params.bases.q)
    rhs = ros_rhs(params, policy)
    worst = 0.0
    for lam in index_box(params.big_n):
        a = kappa_rho_lambda(lam, params.s, t, params.bases, policy)
        b = ros_summand(lam, params, policy).value()
        worst = max(worst, abs(a * rhs / b - 1))
    return worst


# sampling ------------------------------------------------------------------------


def _draw(rng, lo, hi) -> complex:
    r = math.exp(rng.uniform(math.log(lo), math.log(hi)))
    return complex(r * np.exp(1j * rng.uniform(-math.pi, math.pi)))


def _draw_bases(rng, m_cap: float) -> Bases:
    # a very small |q| makes q^-N arguments, and theta values, overflow
    lo = min(0.05, m_cap / 2)
    return Bases(_draw(rng, lo, m_cap), _draw(rng, lo, m_cap))


def sample_ros(n: int, big_n: Sequence[int], seed: int, m_cap: float = 0.3, lo: float = 0.5, hi: float = 1.3,
               policy: TruncationPolicy = DEFAULT_POLICY, max_tries: int = 1000) -> RosParams:
    """Pole-free Ros parameters; both sides are rational in s, so no corridor is imposed."""
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        params = RosParams(n, [_draw(rng, lo, hi) for _ in range(n + 3)], big_n, _draw_bases(rng, m_cap))
        try:
            preflight(ros_summand, params, policy)
            ros_rhs(params, policy)
            preflight(eb_summand, reversed_eb(params), policy)
            eb_rhs(reversed_eb(params), policy)
        except DegenerateDenominator:
            continue
        if summation_condition(ros_summand, params, policy) > CONDITION_CAP:
            continue
        return params
    raise SamplingExhausted(f"no pole-free series sample after {max_tries} draws (seed {seed})")


def sample_eb(n: int, big_n: Sequence[int], seed: int, m_cap: float = 0.3, lo: float = 0.5, hi: float = 1.3,
              policy: TruncationPolicy = DEFAULT_POLICY, max_tries: int = 1000) -> EbParams:
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        params = EbParams(n, [_draw(rng, lo, hi) for _ in range(n)], [_draw(rng, lo, hi) for _ in range(3)],
                          big_n, _draw_bases(rng, m_cap))
        try:
            preflight(eb_summand, params, policy)
            eb_rhs(params, policy)
        except DegenerateDenominator:
            continue
        if summation_condition(eb_summand, params, policy) > CONDITION_CAP:
            continue
        return params
    raise SamplingExhausted(f"no pole-free series sample after {max_tries} draws (seed {seed})")
