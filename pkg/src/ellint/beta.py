"""Elliptic beta integrals: integrands on the torus, closed-form evaluations, samplers.

Every ``*_lhs`` returns (2 pi i)^-n times the torus integral against
dz_1/z_1 ... dz_n/z_n, exactly as the integrals are normally displayed, so
it should match the matching ``*_rhs``.  Wherever a variable z_{n+1}
appears it is 1/(z_1 ... z_n) and only z_1..z_n are integrated.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import core
from .core import Bases, DEFAULT_POLICY, TruncationPolicy
from .errors import DomainError, PoleTooClose, SamplingExhausted
from .quadrature import IntegralEstimate, MonomialProduct, TorusGrid, integrate_torus, preflight_poles

BALANCE_TOL = 1e-14
DEFAULT_GRID = {1: 256, 2: 128, 3: 48}
MAX_QUADRATURE_RANK = 3
MAX_SAMPLING_TRIES = 1000


def default_grid(n: int) -> TorusGrid:
    if n > MAX_QUADRATURE_RANK:
        raise DomainError(f"torus quadrature is supported up to rank {MAX_QUADRATURE_RANK}, got {n}")
    return TorusGrid(n, DEFAULT_GRID[n])


def _cplx(values) -> tuple[complex, ...]:
    return tuple(complex(v) for v in values)


def _check_balance(lhs: complex, rhs: complex, what: str):
    if abs(lhs - rhs) > BALANCE_TOL * max(abs(rhs), 1e-300) * 10:
        raise DomainError(f"balancing condition {what} fails: {lhs!r} != {rhs!r}")


def _last_exps(n: int) -> tuple[int, ...]:
    """Exponent vector of z_{n+1} = 1/(z_1 ... z_n)."""
    return (-1,) * n


def _unit(n: int, j: int) -> tuple[int, ...]:
    """Exponent vector of z_j, j = 0..n (index n is z_{n+1})."""
    if j == n:
        return _last_exps(n)
    return tuple(1 if i == j else 0 for i in range(n))


def _neg(e):
    return tuple(-x for x in e)


def _add(a, b):
    return tuple(x + y for x, y in zip(a, b))


def _sub(a, b):
    return tuple(x - y for x, y in zip(a, b))


def _measure(n, bases, policy) -> MonomialProduct:
    # integrand against dz/z: the extra 1/(z_1 ... z_n)
    return MonomialProduct(n, bases, prefactor=1.0, prefactor_exps=(-1,) * n, policy=policy)


def _gp(args, bases, policy) -> complex:
    return core.gamma_prod(list(args), bases, policy)


def _rgp(args, bases, policy) -> complex:
    return core.rgamma_prod(list(args), bases, policy)


# parameter records ---------------------------------------------------------


@dataclass(frozen=True)
class UnivariateBetaParams:
    t: tuple[complex, ...]
    bases: Bases

    def __post_init__(self):
        object.__setattr__(self, "t", _cplx(self.t))
        if len(self.t) != 6:
            raise DomainError("the univariate integral takes six parameters")
        _check_balance(complex(np.prod(self.t)), self.bases.pq, "t_1...t_6 = pq")

    @property
    def moduli(self) -> list[float]:
        return [abs(v) for v in self.t]


@dataclass(frozen=True)
class AnBetaParams:
    n: int
    s: tuple[complex, ...]
    t: tuple[complex, ...]
    bases: Bases

    def __post_init__(self):
        object.__setattr__(self, "s", _cplx(self.s))
        object.__setattr__(self, "t", _cplx(self.t))
        if self.n < 1 or len(self.s) != self.n + 2 or len(self.t) != self.n + 2:
            raise DomainError("A_n parameters need n >= 1 and n+2 values each of s and t")
        _check_balance(self.big_s * self.big_t, self.bases.pq, "ST = pq")

    @property
    def big_s(self) -> complex:
        return complex(np.prod(self.s))

    @property
    def big_t(self) -> complex:
        return complex(np.prod(self.t))

    @property
    def moduli(self) -> list[float]:
        return [abs(v) for v in self.s + self.t]


@dataclass(frozen=True)
class CnBetaParams:
    n: int
    t: tuple[complex, ...]
    bases: Bases

    def __post_init__(self):
        object.__setattr__(self, "t", _cplx(self.t))
        if self.n < 1 or len(self.t) != 2 * self.n + 4:
            raise DomainError("C_n parameters need n >= 1 and 2n+4 values")
        _check_balance(complex(np.prod(self.t)), self.bases.pq, "t_1...t_{2n+4} = pq")

    @property
    def moduli(self) -> list[float]:
        return [abs(v) for v in self.t]


@dataclass(frozen=True)
class NewAnParams:
    n: int
    t: tuple[complex, ...]
    s: tuple[complex, ...]
    bases: Bases

    def __post_init__(self):
        object.__setattr__(self, "t", _cplx(self.t))
        object.__setattr__(self, "s", _cplx(self.s))
        if self.n < 1 or len(self.t) != self.n or len(self.s) != self.n + 3:
            raise DomainError("new A_n parameters need n >= 1, n values of t and n+3 of s")

    @property
    def big_s(self) -> complex:
        return complex(np.prod(self.s))

    @property
    def moduli(self) -> list[float]:
        """All moduli that the admissibility condition requires to be < 1."""
        pq, big_s = self.bases.pq, self.big_s
        return [abs(v) for v in self.t + self.s] + [abs(pq / (big_s * ti)) for ti in self.t]

    def with_t(self, t) -> "NewAnParams":
        return NewAnParams(self.n, tuple(t), self.s, self.bases)


def check_admissible(params, bound: float = 1.0):
    worst = max(params.moduli)
    if not worst < bound:
        raise DomainError(f"parameters are not admissible: a modulus equals {worst:.6g} >= {bound}")


# univariate ------------------------------------------------------------------


def univariate_integrand(params: UnivariateBetaParams, mode: str = "symmetric",
                         policy: TruncationPolicy = DEFAULT_POLICY) -> MonomialProduct:
    """mode 'symmetric': all six t_i; mode 'five': t_6 eliminated through T = t_1...t_5."""
    f = _measure(1, params.bases, policy)
    if mode == "symmetric":
        ts = params.t
    elif mode == "five":
        ts = params.t[:5]
        big_t = complex(np.prod(ts))
        f.add("rgamma", big_t, (1,)).add("rgamma", big_t, (-1,))
    else:
        raise DomainError(f"unknown mode {mode!r}")
    for ti in ts:
        f.add("gamma", ti, (1,)).add("gamma", ti, (-1,))
    f.add("rgamma", 1, (2,)).add("rgamma", 1, (-2,))
    return f


def univariate_lhs(params: UnivariateBetaParams, grid: TorusGrid | None = None, mode: str = "symmetric",
                   policy: TruncationPolicy = DEFAULT_POLICY) -> IntegralEstimate:
    check_admissible(params)
    return integrate_torus(univariate_integrand(params, mode, policy), grid or default_grid(1))


def univariate_rhs(params: UnivariateBetaParams, mode: str = "symmetric",
                   policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    b = params.bases
    pp = core.pochhammer_pair(b, policy)
    if mode == "symmetric":
        pairs = [a * c for a, c in itertools.combinations(params.t, 2)]
        return 2 * _gp(pairs, b, policy) / pp
    if mode == "five":
        ts = params.t[:5]
        big_t = complex(np.prod(ts))
        pairs = [a * c for a, c in itertools.combinations(ts, 2)]
        return 2 * _gp(pairs, b, policy) * _rgp([big_t / ti for ti in ts], b, policy) / pp
    raise DomainError(f"unknown mode {mode!r}")


# A_n ---------------------------------------------------------------------------


def _weyl_denominator_a(f: MonomialProduct, n: int, kind: str = "rgamma"):
    """1/Gamma(z_i/z_j, z_j/z_i) over 1 <= i < j <= n+1."""
    for i, j in itertools.combinations(range(n + 1), 2):
        e = _sub(_unit(n, i), _unit(n, j))
        f.add(kind, 1, e).add(kind, 1, _neg(e))
    return f


def an_integrand(params: AnBetaParams, policy: TruncationPolicy = DEFAULT_POLICY) -> MonomialProduct:
    n = params.n
    f = _measure(n, params.bases, policy)
    for j in range(n + 1):
        e = _unit(n, j)
        for si in params.s:
            f.add("gamma", si, e)
        for ti in params.t:
            f.add("gamma", ti, _neg(e))
    return _weyl_denominator_a(f, n)


def an_lhs(params: AnBetaParams, grid: TorusGrid | None = None,
           policy: TruncationPolicy = DEFAULT_POLICY) -> IntegralEstimate:
    check_admissible(params)
    return integrate_torus(an_integrand(params, policy), grid or default_grid(params.n))


def an_rhs(params: AnBetaParams, policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    b, n = params.bases, params.n
    big_s, big_t = params.big_s, params.big_t
    args = [big_s / si for si in params.s] + [big_t / ti for ti in params.t]
    args += [si * tj for si in params.s for tj in params.t]
    return math.factorial(n + 1) / core.pochhammer_pair(b, policy) ** n * _gp(args, b, policy)


# C_n ---------------------------------------------------------------------------


def _weyl_denominator_c(f: MonomialProduct, n: int):
    """1/Gamma(z_j^{+-2}) and 1/Gamma(z_i^{+-} z_j^{+-})."""
    for j in range(n):
        e = _unit(n, j)
        f.add("rgamma", 1, tuple(2 * x for x in e)).add("rgamma", 1, tuple(-2 * x for x in e))
    for i, j in itertools.combinations(range(n), 2):
        for si, sj in itertools.product((1, -1), repeat=2):
            f.add("rgamma", 1, _add(tuple(si * x for x in _unit(n, i)), tuple(sj * x for x in _unit(n, j))))
    return f


def cn_integrand(params: CnBetaParams, policy: TruncationPolicy = DEFAULT_POLICY) -> MonomialProduct:
    n = params.n
    f = _measure(n, params.bases, policy)
    for j in range(n):
        e = _unit(n, j)
        for ti in params.t:
            f.add("gamma", ti, e).add("gamma", ti, _neg(e))
    return _weyl_denominator_c(f, n)


def cn_lhs(params: CnBetaParams, grid: TorusGrid | None = None,
           policy: TruncationPolicy = DEFAULT_POLICY) -> IntegralEstimate:
    check_admissible(params)
    return integrate_torus(cn_integrand(params, policy), grid or default_grid(params.n))


def cn_rhs(params: CnBetaParams, policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    b, n = params.bases, params.n
    pairs = [a * c for a, c in itertools.combinations(params.t, 2)]
    pref = 2**n * math.factorial(n) / core.pochhammer_pair(b, policy) ** n
    return pref * _gp(pairs, b, policy)


# new A_n -------------------------------------------------------------------------


def new_an_integrand(params: NewAnParams, policy: TruncationPolicy = DEFAULT_POLICY,
                     qlimit: bool = False) -> MonomialProduct:
    """The new A_n integrand; with ``qlimit`` every Gamma(x) becomes 1/(x; q)_inf."""
    n = params.n
    num, den = ("rqpoch", "qpoch") if qlimit else ("gamma", "rgamma")
    big_s = params.big_s
    f = _measure(n, params.bases, policy)
    for j in range(n + 1):
        e = _unit(n, j)
        for ti in params.t:
            f.add(num, ti, e)
            f.add(den, big_s * ti, _neg(e))
        for si in params.s:
            f.add(num, si, _neg(e))
    for i, j in itertools.combinations(range(n + 1), 2):
        f.add(num, big_s, _neg(_add(_unit(n, i), _unit(n, j))))
    return _weyl_denominator_a(f, n, den)


def new_an_lhs(params: NewAnParams, grid: TorusGrid | None = None,
               policy: TruncationPolicy = DEFAULT_POLICY) -> IntegralEstimate:
    check_admissible(params)
    return integrate_torus(new_an_integrand(params, policy), grid or default_grid(params.n))


def new_an_rhs(params: NewAnParams, policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    b, n = params.bases, params.n
    big_s = params.big_s
    num = [ti * sj for ti in params.t for sj in params.s]
    num += [big_s / (a * c) for a, c in itertools.combinations(params.s, 2)]
    den = [big_s * ti / sj for ti in params.t for sj in params.s]
    pref = math.factorial(n + 1) / core.pochhammer_pair(b, policy) ** n
    return pref * _gp(num, b, policy) * _rgp(den, b, policy)


def new_an_qlimit_lhs(params: NewAnParams, grid: TorusGrid | None = None,
                      policy: TruncationPolicy = DEFAULT_POLICY) -> IntegralEstimate:
    """p -> 0 form of the new A_n integral; p in ``params.bases`` is ignored."""
    qparams = _drop_p(params)
    bound = max(abs(v) for v in qparams.t + qparams.s)
    if not bound < 1:
        raise DomainError(f"parameters are not admissible: a modulus equals {bound:.6g} >= 1")
    return integrate_torus(new_an_integrand(qparams, policy, qlimit=True), grid or default_grid(params.n))


def new_an_qlimit_rhs(params: NewAnParams, policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    qparams = _drop_p(params)
    q, n = qparams.bases.q, qparams.n
    big_s = qparams.big_s
    qp = lambda a: core.qpochhammer_inf(a, q, policy)  # noqa: E731
    out = math.factorial(n + 1) / qp(q) ** n
    for ti in qparams.t:
        for sj in qparams.s:
            out *= qp(big_s * ti / sj) / qp(ti * sj)
    for a, c in itertools.combinations(qparams.s, 2):
        out /= qp(big_s / (a * c))
    return complex(out)


def _drop_p(params: NewAnParams) -> NewAnParams:
    if params.bases.p == 0:
        return params
    return NewAnParams(params.n, params.t, params.s, Bases(0, params.bases.q))


# sampling -------------------------------------------------------------------------

KINDS = ("univariate", "an", "cn", "new_an", "new_an_qlimit")
DEFAULT_M_CAP = {"univariate": 0.3, "an": 0.3, "cn": 0.3, "new_an": 0.09, "new_an_qlimit": 0.3}


def _draw_modulus(rng: np.random.Generator, lo: float, hi: float) -> float:
    return float(math.exp(rng.uniform(math.log(lo), math.log(hi))))


def _draw(rng, lo, hi) -> complex:
    return cmath.rect(_draw_modulus(rng, lo, hi), rng.uniform(-math.pi, math.pi))


def _draw_bases(rng, m_cap: float, with_p: bool = True) -> Bases:
    lo = min(0.01, m_cap / 2)
    q = _draw(rng, lo, m_cap)
    p = _draw(rng, lo, m_cap) if with_p else 0j
    return Bases(p, q)


def sample_params(kind: str, seed: int, modulus_cap: float = 0.8, m_cap: float | None = None, n: int = 1,
                  policy: TruncationPolicy = DEFAULT_POLICY):
    """Seeded admissible parameters for one of the beta integrals.

    Free parameters have uniform phase and log-uniform modulus in
    [0.2, modulus_cap]; the balancing constraint fixes the last one.  A draw
    is rejected unless every modulus the admissibility condition bounds by 1
    is at most ``modulus_cap`` and the integrand passes the pole preflight.
    """
    if kind not in KINDS:
        raise DomainError(f"unknown parameter kind {kind!r}")
    if m_cap is None:
        m_cap = DEFAULT_M_CAP[kind]
    if not 0 < m_cap < modulus_cap < 1:
        raise DomainError("need 0 < m_cap < modulus_cap < 1")
    if n < 1:
        raise DomainError("rank n must be >= 1")
    rng = np.random.default_rng(seed)
    lo = 0.2
    for _ in range(MAX_SAMPLING_TRIES):
        bases = _draw_bases(rng, m_cap, with_p=kind != "new_an_qlimit")
        pq = bases.pq
        if kind == "univariate":
            t = [_draw(rng, lo, modulus_cap) for _ in range(5)]
            t.append(pq / complex(np.prod(t)))
            params = UnivariateBetaParams(tuple(t), bases)
            build = lambda prm, pol: univariate_integrand(prm, "symmetric", pol)  # noqa: E731
        elif kind == "an":
            s = [_draw(rng, lo, modulus_cap) for _ in range(n + 2)]
            t = [_draw(rng, lo, modulus_cap) for _ in range(n + 1)]
            t.append(pq / complex(np.prod(s) * np.prod(t)))
            params = AnBetaParams(n, tuple(s), tuple(t), bases)
            build = an_integrand
        elif kind == "cn":
            t = [_draw(rng, lo, modulus_cap) for _ in range(2 * n + 3)]
            t.append(pq / complex(np.prod(t)))
            params = CnBetaParams(n, tuple(t), bases)
            build = cn_integrand
        else:
            t = [_draw(rng, lo, modulus_cap) for _ in range(n)]
            s = [_draw(rng, lo, modulus_cap) for _ in range(n + 3)]
            params = NewAnParams(n, tuple(t), tuple(s), bases)
            build = new_an_integrand
        if max(params.moduli) > modulus_cap:
            continue
        if kind == "new_an_qlimit":
            return params
        try:
            preflight_poles(build(params, policy))
        except PoleTooClose:
            continue
        return params
    raise SamplingExhausted(f"no admissible {kind} sample after {MAX_SAMPLING_TRIES} draws (seed {seed})")


def univariate_from_five(t5: Sequence[complex], bases: Bases) -> UnivariateBetaParams:
    """The six-parameter record whose t_6 = pq/(t_1...t_5)."""
    t5 = _cplx(t5)
    return UnivariateBetaParams(t5 + (bases.pq / complex(np.prod(t5)),), bases)
