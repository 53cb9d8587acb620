"""Pointwise checks of theta-function identities and q-difference relations.

All theta functions are theta(x; p); q enters only as an explicit shift.
"""

from __future__ import annotations

import cmath
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import beta, core, series
from .core import Bases, DEFAULT_POLICY, TruncationPolicy
from .errors import DomainError, EllintError, NearZeroDenominator, SamplingExhausted
from .report import VerificationReport

ZERO_MARGIN = 1e-3
BALANCE_TOL = 1e-14
IDENTITIES = ("theta1", "theta2", "theta3", "an_partial_fraction", "c_partial_fraction", "qdiff_lemma",
              "contiguous_I")


@dataclass(frozen=True)
class ThetaIdentityCase:
    """One evaluation point.  ``params`` maps names to tuples of complex values."""

    identity: str
    n: int
    params: dict
    bases: Bases
    derived: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.identity not in IDENTITIES:
            raise DomainError(f"unknown identity {self.identity!r}")
        if self.n < 1:
            raise DomainError("n must be >= 1")
        shapes = _SHAPES[self.identity](self.n)
        for name, size in shapes.items():
            if len(self.params.get(name, ())) != size:
                raise DomainError(f"{self.identity} needs {size} values of {name!r}")
        fixed = {k: tuple(complex(v) for v in self.params[k]) for k in shapes}
        object.__setattr__(self, "params", fixed)
        object.__setattr__(self, "derived", _derive(self.identity, self.n, fixed))

    def balance_residual(self) -> float:
        """Relative residual of the balancing constraint that fixes the derived parameter."""
        p, d = self.params, self.derived
        if self.identity == "theta3":
            lhs, rhs = d["B"] * np.prod(p["z"]), np.prod(p["b"])
        elif self.identity == "an_partial_fraction":
            lhs, rhs = d["A"] * np.prod(p["z"]), np.prod(p["a"])
        elif self.identity in ("theta1", "qdiff_lemma"):
            lhs, rhs = np.prod(d["zz"]), 1.0
        else:
            return 0.0
        return abs(lhs - rhs) / abs(rhs)


_SHAPES: dict[str, Callable[[int], dict]] = {
    "theta1": lambda n: {"t1": 1, "s": n + 3, "z": n},
    "theta2": lambda n: {"t": n - 1, "S": 1, "z": n + 1},
    "theta3": lambda n: {"a": 1, "b": n + 2, "z": n},
    "an_partial_fraction": lambda n: {"a": n + 1, "z": n},
    "c_partial_fraction": lambda n: {"a": 1, "b": n - 1, "z": n},
    "qdiff_lemma": lambda n: {"s": n + 3, "t": n, "z": n},
    "contiguous_I": lambda n: {"s": n + 3, "t": n},
}


def _derive(identity, n, p) -> dict:
    if identity in ("theta1", "qdiff_lemma"):
        return {"zz": p["z"] + (1 / complex(np.prod(p["z"])),)}
    if identity == "theta3":
        return {"B": complex(np.prod(p["b"]) / np.prod(p["z"]))}
    if identity == "an_partial_fraction":
        return {"A": complex(np.prod(p["a"]) / np.prod(p["z"]))}
    return {}


class _Thetas:
    """theta(.; p) with every denominator value recorded under a readable name."""

    def __init__(self, bases: Bases, policy: TruncationPolicy):
        self.p, self.policy = bases.p, policy
        self.small: list[tuple[str, complex]] = []

    def __call__(self, x) -> complex:
        return complex(core.theta(complex(x), self.p, self.policy))

    def den(self, label: str, x) -> complex:
        v = self(x)
        if v == 0:
            raise NearZeroDenominator(label, v)
        if abs(v) < ZERO_MARGIN:
            self.small.append((label, v))
        return v

    def check(self):
        if self.small:
            label, v = min(self.small, key=lambda item: abs(item[1]))
            raise NearZeroDenominator(label, v)


def _theta1(case, th):
    n, p = case.n, case.params
    (t1,) = p["t1"]
    s, z = p["s"], case.derived["zz"]
    big_s = complex(np.prod(s))
    lhs = 0j
    for i in range(n + 1):
        term = t1 * z[i] * th(big_s * t1**2) / th.den(f"theta(S t1/z{i + 1})", big_s * t1 / z[i])
        for j, sj in enumerate(s):
            term *= th(sj / z[i]) / th.den(f"theta(t1 s{j + 1})", t1 * sj)
        for j in range(n + 1):
            if j != i:
                term *= th(t1 * z[j]) / th.den(f"theta(z{j + 1}/z{i + 1})", z[j] / z[i])
        lhs += term
    prod = 1 + 0j
    for i in range(n + 1):
        prod *= th(t1 * z[i]) / th.den(f"theta(S t1/z{i + 1})", big_s * t1 / z[i])
    for j, sj in enumerate(s):
        prod *= th(big_s * t1 / sj) / th.den(f"theta(t1 s{j + 1})", t1 * sj)
    return lhs, 1 - prod


def _theta2(case, th):
    n, p, q = case.n, case.params, case.bases.q
    t = (None,) + p["t"]  # t[1..n-1] hold t_2..t_n
    (big_s,) = p["S"]
    z = p["z"]
    zl = z[n]
    lhs = 0j
    for i in range(n):
        term = 1 + 0j
        for j in range(1, n):
            term *= th(t[j] * z[i]) * th(big_s * t[j] / (q * z[i]))
            term /= th.den(f"theta(t{j + 1} z{n + 1}/q)", t[j] * zl / q)
            term /= th.den(f"theta(S t{j + 1}/z{n + 1})", big_s * t[j] / zl)
        for j in range(n):
            if j != i:
                term *= th(zl / (q * z[j])) * th(big_s / (z[j] * zl))
                term /= th.den(f"theta(z{i + 1}/z{j + 1})", z[i] / z[j])
                term /= th.den(f"theta(S/(q z{i + 1} z{j + 1}))", big_s / (q * z[i] * z[j]))
        lhs += term
    return lhs, 1 + 0j


def theta3_sides(a, b, z, big_b, th):
    n = len(z)
    lhs = 0j
    for i in range(n):
        term = a * z[i] * th(big_b * a**2) / th.den(f"theta(B a/z{i + 1})", big_b * a / z[i])
        for j, bj in enumerate(b):
            term *= th(bj / z[i]) / th.den(f"theta(a b{j + 1})", a * bj)
        for j in range(n):
            if j != i:
                term *= th(a * z[j]) / th.den(f"theta(z{j + 1}/z{i + 1})", z[j] / z[i])
        lhs += term
    prod = 1 + 0j
    for i in range(n):
        prod *= th(a * z[i]) / th.den(f"theta(B a/z{i + 1})", big_b * a / z[i])
    for j, bj in enumerate(b):
        prod *= th(big_b * a / bj) / th.den(f"theta(a b{j + 1})", a * bj)
    return lhs, 1 - prod


def _theta3(case, th):
    (a,) = case.params["a"]
    return theta3_sides(a, case.params["b"], case.params["z"], case.derived["B"], th)


def _an_pf(case, th):
    n, a, z = case.n, case.params["a"], case.params["z"]
    big_a = case.derived["A"]
    lhs = 0j
    for i in range(n):
        term = 1 + 0j
        for j, aj in enumerate(a):
            term *= th(aj / z[i]) / th.den(f"theta(A/a{j + 1})", big_a / aj)
        for j in range(n):
            if j != i:
                term *= th(big_a / z[j]) / th.den(f"theta(z{j + 1}/z{i + 1})", z[j] / z[i])
        lhs += term
    return lhs, 1 + 0j


def _c_pf(case, th):
    n = case.n
    (a,) = case.params["a"]
    b, z = case.params["b"], case.params["z"]
    lhs = 0j
    for i in range(n):
        term = 1 + 0j
        for j, bj in enumerate(b):
            term *= th(bj * z[i]) * th(bj / z[i])
            term /= th.den(f"theta(a b{j + 1})", a * bj) * th.den(f"theta(b{j + 1}/a)", bj / a)
        for j in range(n):
            if j != i:
                term *= th(a * z[j]) * th(z[j] / a)
                term /= th.den(f"theta(z{j + 1}/z{i + 1})", z[j] / z[i])
                term /= th.den(f"theta(z{i + 1} z{j + 1})", z[i] * z[j])
        lhs += term
    return lhs, 1 + 0j


def qdiff_f(i: int, z, s, t, q, th) -> complex:
    """The function f_i multiplying rho in the q-difference lemma; z has n+1 entries."""
    n = len(t)
    big_s = complex(np.prod(s))
    zl = z[n]
    t1 = t[0]
    out = t1 * zl * th(big_s * t1**2)
    for j in range(n):
        out *= th(t1 * z[j])
        out /= th.den(f"theta(z{j + 1}/z{n + 1})", z[j] / zl) * th.den(f"theta(S t{j + 1}/z{n + 1})", big_s * t[j] / zl)
    for j in range(1, n):
        out *= th(t[j] * z[i]) * th(big_s * t[j] / (q * z[i]))
        out /= th.den(f"theta(t{j + 1} z{n + 1}/q)", t[j] * zl / q)
    for j, sj in enumerate(s):
        out *= th(sj / zl) / th.den(f"theta(t1 s{j + 1})", t1 * sj)
    for j in range(n):
        if j != i:
            out *= th(zl / (q * z[j])) * th(big_s / (z[j] * zl))
            out /= th.den(f"theta(z{i + 1}/z{j + 1})", z[i] / z[j])
            out /= th.den(f"theta(S/(q z{i + 1} z{j + 1}))", big_s / (q * z[i] * z[j]))
    return out


def _qdiff(case, th, policy):
    n, bases, q = case.n, case.bases, case.bases.q
    s, t, z = case.params["s"], case.params["t"], case.params["z"]
    params = beta.NewAnParams(n, t, s, bases)
    shifted_t = beta.NewAnParams(n, (q * t[0],) + t[1:], s, bases)
    lhs = series.rho_kernel(z, params, policy) - series.rho_kernel(z, shifted_t, policy)
    rhs = 0j
    for i in range(n):
        moved = list(z)
        moved[i] = z[i] / q
        full = list(z) + [1 / complex(np.prod(z))]
        full_moved = moved + [1 / complex(np.prod(moved))]
        rhs += series.rho_kernel(z, params, policy) * qdiff_f(i, full, s, t, q, th)
        rhs -= series.rho_kernel(moved, params, policy) * qdiff_f(i, full_moved, s, t, q, th)
    return lhs, rhs


def _contiguous(case, th, policy):
    n, bases, q = case.n, case.bases, case.bases.q
    s, t = case.params["s"], case.params["t"]
    big_s = complex(np.prod(s))
    closed = lambda ss: beta.new_an_rhs(beta.NewAnParams(n, t, ss, bases), policy)  # noqa: E731
    lhs = 0j
    for i in range(n + 1):
        coef = th(big_s / (q * s[i] * s[n + 1])) / th.den("theta(S/(s_{n+2} s_{n+3}))", big_s / (s[n + 1] * s[n + 2]))
        for j in range(n + 1):
            if j != i:
                coef *= th(s[n + 2] / (q * s[j])) / th.den(f"theta(s{i + 1}/s{j + 1})", s[i] / s[j])
        moved = list(s)
        moved[i] = q * s[i]
        moved[n + 2] = s[n + 2] / q
        lhs += coef * closed(tuple(moved))
    return lhs, closed(s)


_CHECKS = {
    "theta1": _theta1,
    "theta2": _theta2,
    "theta3": _theta3,
    "an_partial_fraction": _an_pf,
    "c_partial_fraction": _c_pf,
}


def identity_sides(case: ThetaIdentityCase, policy: TruncationPolicy = DEFAULT_POLICY) -> tuple[complex, complex]:
    """(LHS, RHS) of the identity at the case's point, after the zero-denominator preflight."""
    th = _Thetas(case.bases, policy)
    if case.identity == "qdiff_lemma":
        sides = _qdiff(case, th, policy)
    elif case.identity == "contiguous_I":
        sides = _contiguous(case, th, policy)
    else:
        sides = _CHECKS[case.identity](case, th)
    th.check()
    return sides


def check_identity(case: ThetaIdentityCase, policy: TruncationPolicy = DEFAULT_POLICY) -> float:
    """|LHS - RHS| / (|LHS| + |RHS| + 1e-300)."""
    lhs, rhs = identity_sides(case, policy)
    return abs(lhs - rhs) / (abs(lhs) + abs(rhs) + 1e-300)


def theta3_periodicity(case: ThetaIdentityCase, policy: TruncationPolicy = DEFAULT_POLICY) -> float:
    """Relative change of the theta3 left side under a -> p a."""
    if case.identity != "theta3":
        raise DomainError("periodicity check applies to theta3")
    th = _Thetas(case.bases, policy)
    (a,) = case.params["a"]
    b, z, big_b = case.params["b"], case.params["z"], case.derived["B"]
    before, _ = theta3_sides(a, b, z, big_b, th)
    after, _ = theta3_sides(case.bases.p * a, b, z, big_b, th)
    th.check()
    return abs(after - before) / abs(before)


# random cases ---------------------------------------------------------------------


def _draw(rng, lo, hi) -> complex:
    return cmath.rect(math.exp(rng.uniform(math.log(lo), math.log(hi))), rng.uniform(-math.pi, math.pi))


# free parameters modulus ranges per identity: (parameters, torus-like variables)
_RANGES = {
    "qdiff_lemma": ((0.4, 0.9), (0.8, 1.25)),
    "contiguous_I": ((0.4, 0.9), (0.8, 1.25)),
}


def random_case(identity: str, n: int, rng: np.random.Generator, m_cap: float = 0.4,
                policy: TruncationPolicy = DEFAULT_POLICY, max_tries: int = 1000) -> ThetaIdentityCase:
    """A random admissible point, redrawn until no denominator is within the zero margin."""
    shapes = _SHAPES[identity](n)
    par, var = _RANGES.get(identity, ((0.5, 2.0), (0.7, 1.4)))
    last = None
    for _ in range(max_tries):
        lo = min(0.01, m_cap / 2)
        bases = Bases(_draw(rng, lo, m_cap), _draw(rng, lo, m_cap))
        params = {name: tuple(_draw(rng, *(var if name == "z" else par)) for _ in range(size))
                  for name, size in shapes.items()}
        case = ThetaIdentityCase(identity, n, params, bases)
        try:
            identity_sides(case, policy)
        except NearZeroDenominator as exc:
            last = exc
            continue
        except EllintError as exc:  # parameters drifted onto a Gamma pole
            last = exc
            continue
        return case
    raise SamplingExhausted(f"no admissible {identity} point after {max_tries} draws: {last}")


@dataclass
class SweepResult:
    reports: list
    max_residual: float
    argmax: int


def case_params(case: ThetaIdentityCase) -> dict:
    out = {k: list(v) for k, v in case.params.items()}
    out["p"], out["q"] = case.bases.p, case.bases.q
    return out


def sweep(identity: str, n_max: int, samples: int, seed: int, threshold: float = 1e-10, m_cap: float = 0.4,
          policy: TruncationPolicy = DEFAULT_POLICY, timing: bool = False) -> SweepResult:
    """``samples`` deterministic checks with n cycling through 1..n_max."""
    if identity not in IDENTITIES:
        raise DomainError(f"unknown identity {identity!r}")
    reports = []
    for k in range(samples):
        n = 1 + k % n_max
        rng = np.random.default_rng([seed, k])
        start = time.perf_counter()
        case = random_case(identity, n, rng, m_cap, policy)
        lhs, rhs = identity_sides(case, policy)
        residual = abs(lhs - rhs) / (abs(lhs) + abs(rhs) + 1e-300)
        rep = VerificationReport(identity, case_params(case), lhs, rhs, threshold, grid={"n": n},
                                 truncation=_truncation(case.bases, policy), residual=residual, sample=k, seed=seed)
        if timing:
            rep.elapsed_ms = int(1000 * (time.perf_counter() - start))
        reports.append(rep)
    errs = [r.rel_err for r in reports]
    worst = int(np.argmax(errs)) if errs else 0
    return SweepResult(reports, max(errs) if errs else 0.0, worst)


def _truncation(bases: Bases, policy: TruncationPolicy) -> dict:
    return {"tolerance": policy.tolerance, "K": policy.cutoff(bases.big_m, 1.0)}


__all__ = ["IDENTITIES", "ThetaIdentityCase", "check_identity", "identity_sides", "random_case", "sweep",
           "theta3_periodicity", "SweepResult"]
