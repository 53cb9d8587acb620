"""Products of special functions of symbolic monomials.

A ``Mono`` is c * prod v^e over named variables such as ("z", 0).  A
``Product`` is a scalar times factors F(mono), F one of the factor kinds of
``quadrature.Factor``.  The same product can be evaluated at a point,
have variables replaced by other monomials, or be turned into a
``MonomialProduct`` over a chosen set of integration variables with the
remaining variables fixed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

import numpy as np

from . import core
from .core import Bases, DEFAULT_POLICY, TruncationPolicy
from .quadrature import MonomialProduct

Var = tuple  # (name, index)


@dataclass(frozen=True)
class Mono:
    coef: complex = 1.0
    exps: tuple = ()  # sorted ((var, exponent), ...) with nonzero exponents

    @staticmethod
    def of(coef=1.0, exps: Mapping | None = None) -> "Mono":
        items = tuple(sorted((k, int(e)) for k, e in (exps or {}).items() if e))
        return Mono(complex(coef), items)

    @staticmethod
    def var(name: str, index: int) -> "Mono":
        return Mono.of(1.0, {(name, index): 1})

    def __mul__(self, other) -> "Mono":
        if not isinstance(other, Mono):
            return Mono(self.coef * complex(other), self.exps)
        acc = dict(self.exps)
        for k, e in other.exps:
            acc[k] = acc.get(k, 0) + e
        return Mono.of(self.coef * other.coef, acc)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Mono":
        if not isinstance(other, Mono):
            return Mono(self.coef / complex(other), self.exps)
        return self * other.inv()

    def __rtruediv__(self, other) -> "Mono":
        return self.inv() * complex(other)

    def inv(self) -> "Mono":
        return Mono(1 / self.coef, tuple((k, -e) for k, e in self.exps))

    def __pow__(self, k: int) -> "Mono":
        return Mono(self.coef**k, tuple((v, e * k) for v, e in self.exps)) if k else Mono()

    def variables(self) -> set:
        return {k for k, _ in self.exps}

    def evaluate(self, values: Mapping) -> complex:
        out = self.coef
        for k, e in self.exps:
            out *= complex(values[k]) ** e
        return out

    def substitute(self, subs: Mapping) -> "Mono":
        out = Mono(self.coef)
        for k, e in self.exps:
            out = out * ((subs[k] ** e) if k in subs else Mono.of(1.0, {k: e}))
        return out


def coords(name: str, n: int, derived: bool) -> list[Mono]:
    """The monomials v_1..v_n and, if ``derived``, v_{n+1} = 1/(v_1...v_n)."""
    vs = [Mono.var(name, i) for i in range(n)]
    if derived:
        last = Mono()
        for v in vs:
            last = last / v
        vs.append(last)
    return vs


@dataclass
class Product:
    scalar: complex = 1.0
    factors: list = field(default_factory=list)  # (kind, Mono, func or None)

    def add(self, kind: str, mono, func: Callable | None = None) -> "Product":
        if not isinstance(mono, Mono):
            # a plain number: fold into a constant factor
            mono = Mono(complex(mono))
        self.factors.append((kind, mono, func))
        return self

    def gammas(self, monos: Iterable) -> "Product":
        for m in monos:
            self.add("gamma", m)
        return self

    def rgammas(self, monos: Iterable) -> "Product":
        for m in monos:
            self.add("rgamma", m)
        return self

    def __mul__(self, other: "Product") -> "Product":
        if not isinstance(other, Product):
            return Product(self.scalar * complex(other), list(self.factors))
        return Product(self.scalar * other.scalar, self.factors + other.factors)

    __rmul__ = __mul__

    def variables(self) -> set:
        out = set()
        for _, m, _ in self.factors:
            out |= m.variables()
        return out

    def substitute(self, subs: Mapping) -> "Product":
        return Product(self.scalar, [(k, m.substitute(subs), f) for k, m, f in self.factors])

    def evaluate(self, values: Mapping, bases: Bases, policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
        """Pointwise value; all variables must be in ``values``."""
        groups: dict = {}
        out = complex(self.scalar)
        for kind, mono, func in self.factors:
            arg = mono.evaluate(values)
            if kind == "func":
                out *= complex(func(np.asarray(arg)))
            else:
                groups.setdefault(kind, []).append(arg)
        for kind, args in groups.items():
            arr = np.asarray(args, dtype=complex)
            if kind == "gamma":
                vals = core.elliptic_gamma(arr, bases, policy)
            elif kind == "rgamma":
                vals = core.reciprocal_gamma(arr, bases, policy)
            elif kind == "theta":
                vals = core.theta(arr, bases.p, policy)
            elif kind == "qpoch":
                vals = core.qpochhammer_inf(arr, bases.q, policy, zero_ok=True)
            elif kind == "rqpoch":
                vals = 1 / core.qpochhammer_inf(arr, bases.q, policy)
            else:
                raise ValueError(f"unknown factor kind {kind!r}")
            out *= complex(np.prod(vals))
        return out

    def on_torus(self, int_vars: list, fixed: Mapping, bases: Bases,
                 policy: TruncationPolicy = DEFAULT_POLICY, measure: bool = True) -> MonomialProduct:
        """MonomialProduct in ``int_vars`` with every other variable set from ``fixed``.

        With ``measure`` the 1/(v_1...v_n) of the dv/v measure is included.
        Factors that do not depend on an integration variable are evaluated
        once and folded into the prefactor.
        """
        n = len(int_vars)
        pos = {v: i for i, v in enumerate(int_vars)}
        mp = MonomialProduct(n, bases, prefactor=1.0,
                             prefactor_exps=(-1,) * n if measure else (0,) * n, policy=policy)
        constant = Product(self.scalar)
        for kind, mono, func in self.factors:
            coef = mono.coef
            exps = [0] * n
            for k, e in mono.exps:
                if k in pos:
                    exps[pos[k]] += e
                else:
                    coef *= complex(fixed[k]) ** e
            if any(exps):
                mp.add(kind, coef, exps, func)
            else:
                constant.add(kind, Mono(coef), func)
        mp.prefactor = constant.evaluate({}, bases, policy)
        return mp
