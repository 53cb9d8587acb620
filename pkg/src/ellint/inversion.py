"""Inversion kernels, transform pairs and the n = 1 inversion.

Kernels are built as ``terms.Product`` objects from coordinate monomials, so
the same definition serves pointwise evaluation and torus quadrature.
Contours other than the unit torus are never discretised: an integral over
a deformed contour is the torus integral plus the residues of the poles that
cross it, evaluated in closed form.

Normalisation: kappa * integral over T of g(z) dz/z equals
(p;p)(q;q)/2 times the grid mean of g, and kappa_A (resp. kappa_C) times an
n-fold integral equals (p;p)^n(q;q)^n/(n+1)! (resp. /(2^n n!)) times the mean.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from . import core
from .core import Bases, DEFAULT_POLICY, TruncationPolicy
from .errors import ArityMismatch, DomainError, PrincipalValueUnsupported, SamplingExhausted
from .quadrature import IntegralEstimate, TorusGrid, integrate_torus, preflight_poles
from .terms import Mono, Product, coords

PV_BAND = 1e-6


def _m(v) -> Mono:
    return v if isinstance(v, Mono) else Mono(complex(v))


def _pm(v: Mono) -> list[Mono]:
    return [v, v.inv()]


# kernels ---------------------------------------------------------------------
# Arguments are lists of Mono; A-type arguments carry n+1 entries (the last
# one the reciprocal product of the others), C-type arguments n entries.


def delta_small(z: Mono, w: Mono, t) -> Product:
    """delta(z, w; t) = Gamma(t w^+- z^+-) / Gamma(t^2, z^+-2)."""
    t = complex(t)
    out = Product()
    out.gammas(t * a * b for a in _pm(w) for b in _pm(z))
    out.rgammas([Mono(t * t), z**2, z**-2])
    return out


def delta_one(z: Mono, w: Mono, x: Mono, t) -> Product:
    """The n = 1 kernel Gamma(t w^+- x^+-, t^-1 w^+- z^+-) / Gamma(t^+-2, z^+-2, w^+-2)."""
    t = complex(t)
    out = Product()
    out.gammas(t * a * b for a in _pm(w) for b in _pm(x))
    out.gammas(a * b / t for a in _pm(w) for b in _pm(z))
    out.rgammas([Mono(t * t), Mono(1 / (t * t)), z**2, z**-2, w**2, w**-2])
    return out


def _a_roots(z: Sequence[Mono]) -> list[Mono]:
    """z_i/z_j and z_j/z_i over i < j."""
    out = []
    for i, j in itertools.combinations(range(len(z)), 2):
        out += [z[i] / z[j], z[j] / z[i]]
    return out


def _c_roots(w: Sequence[Mono]) -> list[Mono]:
    """w_i^+-2 and w_i^+- w_j^+- over i < j."""
    out = []
    for v in w:
        out += [v**2, v**-2]
    for i, j in itertools.combinations(range(len(w)), 2):
        out += [a * b for a in _pm(w[i]) for b in _pm(w[j])]
    return out


def nabla_a(z: Sequence[Mono], w: Sequence[Mono], t) -> Product:
    """prod_{i,j} Gamma(t/(w_i z_j)) / (Gamma(t^{n+1}) prod_{i<j} Gamma(z_i/z_j, z_j/z_i))."""
    t = complex(t)
    n = len(z) - 1
    out = Product()
    out.gammas(t / (wi * zj) for wi in w for zj in z)
    out.rgammas([Mono(t ** (n + 1))] + _a_roots(z))
    return out


def delta_a(z: Sequence[Mono], w: Sequence[Mono], t) -> Product:
    """prod_{i<=n, j<=n+1} Gamma(t w_i^+- / z_j) / prod_{i<j} Gamma(z_i/z_j, z_j/z_i, t^-2 z_i z_j, t^2/(z_i z_j))."""
    t = complex(t)
    out = Product()
    out.gammas(t * a / zj for wi in w for a in _pm(wi) for zj in z)
    out.rgammas(_a_roots(z))
    for i, j in itertools.combinations(range(len(z)), 2):
        out.rgammas([z[i] * z[j] / (t * t), (z[i] * z[j]).inv() * (t * t)])
    return out


def delta_c(w: Sequence[Mono], x: Sequence[Mono], t) -> Product:
    """prod_{i<=n, j<=n+1} Gamma(t w_i^+- x_j) / prod Gamma(C_n roots of w)."""
    t = complex(t)
    out = Product()
    out.gammas(t * a * xj for wi in w for a in _pm(wi) for xj in x)
    out.rgammas(_c_roots(w))
    return out


def delta_aa(z, w, x, t) -> Product:
    t = complex(t)
    n = len(z) - 1
    out = Product()
    out.gammas(t * wi * xj for wi in w for xj in x)
    out.gammas((wi * zj).inv() / t for wi in w for zj in z)
    out.rgammas([Mono(t ** (n + 1)), Mono(t ** -(n + 1))] + _a_roots(z) + _a_roots(w))
    return out


def delta_ac(z, w, x, t) -> Product:
    t = complex(t)
    out = Product()
    out.gammas(t * a * xj for wi in w for a in _pm(wi) for xj in x)
    out.gammas(a / (t * zj) for wi in w for a in _pm(wi) for zj in z)
    out.rgammas(_c_roots(w) + _a_roots(z))
    for i, j in itertools.combinations(range(len(z)), 2):
        out.rgammas([z[i] * z[j] * (t * t), (z[i] * z[j]).inv() / (t * t)])
    return out


def delta_ca(z, w, x, t) -> Product:
    t = complex(t)
    out = Product()
    out.gammas(t * a / wj for xi in x for a in _pm(xi) for wj in w)
    out.gammas(a * wj / t for zi in z for a in _pm(zi) for wj in w)
    out.rgammas(_c_roots(z) + _a_roots(w))
    for i, j in itertools.combinations(range(len(w)), 2):
        out.rgammas([w[i] * w[j] / (t * t), (w[i] * w[j]).inv() * (t * t)])
    return out


# family name -> (builder, argument types); "A" = n+1 coordinates with the
# last derived, "C" = n coordinates, "1" = a single coordinate (n = 1 only)
FAMILIES: dict[str, tuple[Callable, tuple[str, ...]]] = {
    "Delta_1": (delta_one, ("1", "1", "1")),
    "delta_small": (delta_small, ("1", "1")),
    "nabla_A": (nabla_a, ("A", "A")),
    "delta_A": (delta_a, ("A", "C")),
    "delta_C": (delta_c, ("C", "A")),
    "Delta_AA": (delta_aa, ("A", "A", "A")),
    "Delta_AC": (delta_ac, ("A", "C", "A")),
    "Delta_CA": (delta_ca, ("C", "A", "C")),
}
CONJECTURAL = {"Delta_CA"}


@dataclass(frozen=True)
class KernelSpec:
    family: str
    n: int
    t: complex
    bases: Bases
    policy: TruncationPolicy = DEFAULT_POLICY

    def __post_init__(self):
        object.__setattr__(self, "t", complex(self.t))
        if self.family not in FAMILIES:
            raise DomainError(f"unknown kernel family {self.family!r}")
        if self.n < 1:
            raise DomainError("rank n must be >= 1")
        if "1" in FAMILIES[self.family][1] and self.n != 1:
            raise ArityMismatch(f"{self.family} is a rank-one kernel")
        mod = abs(self.t) ** (self.n + 1)
        if not self.bases.big_m < mod < 1:
            raise DomainError(f"need M < |t|^(n+1) < 1, got M = {self.bases.big_m:.6g}, |t|^(n+1) = {mod:.6g}")

    @property
    def conjecture(self) -> bool:
        return self.family in CONJECTURAL


def _point_coords(values, kind: str, n: int, label: str) -> list[Mono]:
    vals = [complex(values)] if np.ndim(values) == 0 else [complex(v) for v in values]
    if len(vals) != n:
        raise ArityMismatch(f"argument {label} needs {n} components, got {len(vals)}")
    out = [Mono(v) for v in vals]
    if kind == "A":
        out.append(Mono(1 / complex(np.prod(vals))))
    return out


def kernel_product(family: str, n: int, t, args: Sequence) -> Product:
    builder, _ = FAMILIES[family]
    if family in ("Delta_1", "delta_small"):
        return builder(*[a[0] for a in args], t)
    return builder(*args, t)


def _symbolic(name: str, kind: str, n: int) -> list[Mono]:
    return coords(name, n, kind == "A")


def eval_kernel(spec: KernelSpec, z, w, x=None) -> complex:
    """Value of the kernel at a point; two-argument kernels ignore ``x``.

    For two-argument kernels the slots follow their usual letters: delta(z, w),
    nabla_A(z, w), delta_A(z, w) and delta_C(w, x) all take their first
    argument in ``z`` and their second in ``w``.
    """
    kinds = FAMILIES[spec.family][1]
    raw = (z, w, x)[: len(kinds)]
    args = [_point_coords(v, k, spec.n, lbl) for v, k, lbl in zip(raw, kinds, "zwx")]
    return kernel_product(spec.family, spec.n, spec.t, args).evaluate({}, spec.bases, spec.policy)


def _eval(family, n, t, args, bases, policy) -> complex:
    return kernel_product(family, n, t, args).evaluate({}, bases, policy)


def _inverse(args: list[Mono]) -> list[Mono]:
    """Componentwise inverse of an A-type coordinate list (still A-type)."""
    return [a.inv() for a in args]


def check_factorization(family: str, points, n: int, t, bases: Bases,
                        policy: TruncationPolicy = DEFAULT_POLICY) -> float:
    """max over points of |Delta - delta delta| / |Delta| for the four factorizable kernels."""
    if family not in ("Delta_1", "Delta_AA", "Delta_AC", "Delta_CA"):
        raise DomainError(f"{family} has no factorization")
    KernelSpec(family, n, t, bases, policy)
    t = complex(t)
    kinds = FAMILIES[family][1]
    worst = 0.0
    for z, w, x in points:
        pz, pw, px = [_point_coords(v, k, n, lbl) for v, k, lbl in zip((z, w, x), kinds, "zwx")]
        whole = _eval(family, n, t, [pz, pw, px], bases, policy)
        if family == "Delta_1":
            split = (delta_small(pz[0], pw[0], 1 / t).evaluate({}, bases, policy)
                     * delta_small(pw[0], px[0], t).evaluate({}, bases, policy))
        elif family == "Delta_AA":
            split = (nabla_a(pz, pw, 1 / t).evaluate({}, bases, policy)
                     * nabla_a(_inverse(pw), _inverse(px), t).evaluate({}, bases, policy))
        elif family == "Delta_AC":
            split = (delta_a(pz, pw, 1 / t).evaluate({}, bases, policy)
                     * delta_c(pw, px, t).evaluate({}, bases, policy))
        else:
            # delta_C(z, w; 1/t) delta_A(w, x; t): here z, x are C-type and w is A-type
            split = (delta_c(pz, pw, 1 / t).evaluate({}, bases, policy)
                     * delta_a(pw, px, t).evaluate({}, bases, policy))
        worst = max(worst, abs(whole - split) / abs(whole))
    return worst


def rank_one_coincidence(points, t, bases: Bases, policy: TruncationPolicy = DEFAULT_POLICY) -> dict:
    """max |K/Delta_1 - 1| at n = 1 for K in Delta_AA, Delta_AC, Delta_CA."""
    out = {}
    for family in ("Delta_AA", "Delta_AC", "Delta_CA"):
        worst = 0.0
        kinds = FAMILIES[family][1]
        for z, w, x in points:
            base = _eval("Delta_1", 1, t, [[Mono(complex(v))] for v in (z, w, x)], bases, policy)
            args = [_point_coords(v, k, 1, lbl) for v, k, lbl in zip((z, w, x), kinds, "zwx")]
            worst = max(worst, abs(_eval(family, 1, t, args, bases, policy) / base - 1))
        out[family] = worst
    return out


# symmetric test functions and transform pairs ------------------------------

SYMMETRY_CLASS = {
    "constant": "C",
    "laurent_symmetric": "C",
    "newpair_f": "C",
    "an_pair_f": "A",
    "pair_AC_fhat": "C",
    "pair_CA_f": "C",
}


@dataclass(frozen=True)
class SymmetricFunctionSpec:
    """A test function for the inversion formulas.

    constant: ``value``.  laurent_symmetric: f(z) = c_0 + sum_k c_k (z^k + z^-k)
    with ``coeffs`` = (c_0, c_1, ...).  The remaining tags are the Gamma
    products of the transform pairs and take their parameters in ``s``.
    """

    tag: str
    s: tuple = ()
    coeffs: tuple = ()
    value: complex = 1.0

    def __post_init__(self):
        if self.tag not in SYMMETRY_CLASS:
            raise DomainError(f"unknown function tag {self.tag!r}")
        object.__setattr__(self, "s", tuple(complex(v) for v in self.s))
        object.__setattr__(self, "coeffs", tuple(complex(v) for v in self.coeffs))
        need = {"newpair_f": 3}.get(self.tag)
        if need is not None and len(self.s) != need:
            raise ArityMismatch(f"{self.tag} takes {need} parameters")

    @property
    def symmetry(self) -> str:
        return SYMMETRY_CLASS[self.tag]

    def rank(self, default: int = 1) -> int:
        if self.tag == "an_pair_f":
            return len(self.s) - 2
        if self.tag in ("pair_AC_fhat", "pair_CA_f"):
            return len(self.s) - 3
        return default

    def product(self, z: Sequence[Mono], t) -> Product:
        """Gamma-product representation in the coordinates z (A-type for an_pair_f)."""
        t = complex(t)
        s = self.s
        tag = self.tag
        if tag == "constant":
            return Product(complex(self.value))
        if tag == "laurent_symmetric":
            if len(z) != 1:
                raise ArityMismatch("laurent_symmetric is a function of one variable")
            c = self.coeffs

            def laurent(u, c=c):
                u = np.asarray(u, dtype=complex)
                out = np.full(u.shape, c[0] if c else 0, dtype=complex)
                for k, ck in enumerate(c[1:], start=1):
                    out = out + ck * (u**k + u ** (-k))
                return out

            return Product().add("func", z[0], laurent)
        if tag == "newpair_f":
            return newpair(z[0], t, s, hat=False)
        if tag == "an_pair_f":
            return an_pair(z, t, s, hat=False)
        if tag == "pair_AC_fhat":
            return pair_ac_fhat(z, s)
        return pair_ca_f(z, t, s)

    def evaluate(self, point, t, bases: Bases, policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
        n = self.rank(len(np.atleast_1d(point)))
        kind = "A" if self.symmetry == "A" else "C"
        args = _point_coords(point, kind, n, "z")
        return self.product(args, t).evaluate({}, bases, policy)

    def check_holomorphic(self, t, bases: Bases):
        """Raise DomainError unless the parameter bounds of the tag hold."""
        t = complex(t)
        s = self.s
        pq = bases.pq
        if not s:
            return
        big_s = complex(np.prod(s))
        n = self.rank()
        if self.tag == "newpair_f":
            bounds = [abs(v) for v in s] + [abs(pq / (t * t * big_s))]
        elif self.tag == "an_pair_f":
            bounds = [abs(v) for v in s] + [abs(pq / (t ** (n + 1) * big_s))]
        else:
            bounds = [abs(v) for v in s]
            target = t ** (n + 1) * big_s if self.tag == "pair_AC_fhat" else t * t * big_s
            if abs(target - pq) > 1e-12 * max(abs(pq), 1e-300):
                raise DomainError(f"{self.tag} needs its balancing condition to hold")
        if not max(bounds) < 1:
            raise DomainError(f"{self.tag} parameters violate the holomorphy bound: {max(bounds):.6g} >= 1")


def newpair(z: Mono, t, s, hat: bool) -> Product:
    """f or f-hat of the rank-one pair; f-hat(z; t, s) = f(1/z; 1/t, t s)."""
    t = complex(t)
    big_s = complex(np.prod(s))
    out = Product()
    if hat:
        out.gammas([Mono(t * t * big_s / si) for si in s] + [si * a for si in s for a in _pm(z)])
        out.rgammas([t * t * big_s * a for a in _pm(z)])
    else:
        out.gammas([Mono(big_s / si) for si in s] + [t * si * a for si in s for a in _pm(z)])
        out.rgammas([t * big_s * a for a in _pm(z)])
    return out


def an_pair(z: Sequence[Mono], t, s, hat: bool) -> Product:
    t = complex(t)
    n = len(z) - 1
    big_s = complex(np.prod(s))
    out = Product()
    if hat:
        c = t ** (n + 1) * big_s
        out.gammas([Mono(c / si) for si in s] + [si / zj for zj in z for si in s])
        out.rgammas([Mono(c) / zj for zj in z])
    else:
        out.gammas([Mono(big_s / si) for si in s] + [t * si * zj for zj in z for si in s])
        out.rgammas([t * big_s * zj for zj in z])
    return out


def pair_ac_fhat(w: Sequence[Mono], s) -> Product:
    return Product().gammas(a * sj for wi in w for a in _pm(wi) for sj in s)


def pair_ac_f(x: Sequence[Mono], t, s) -> Product:
    t = complex(t)
    out = Product().gammas(t * xi * sj for xi in x for sj in s)
    out.gammas(t * t * x[i] * x[j] for i, j in itertools.combinations(range(len(x)), 2))
    out.gammas(Mono(a * c) for a, c in itertools.combinations(s, 2))
    return out


def pair_ca_f(z: Sequence[Mono], t, s) -> Product:
    t = complex(t)
    return Product().gammas(t * sj * a for zi in z for a in _pm(zi) for sj in s)


def pair_ca_fhat(w: Sequence[Mono], t, s) -> Product:
    t = complex(t)
    out = Product().gammas(wi * sj for wi in w for sj in s)
    out.gammas(w[i] * w[j] / (t * t) for i, j in itertools.combinations(range(len(w)), 2))
    out.gammas(Mono(t * t * a * c) for a, c in itertools.combinations(s, 2))
    return out


def _random_torus_point(rng, n, spread=0.3):
    return [cmath.rect(math.exp(rng.uniform(-spread, spread)), rng.uniform(-math.pi, math.pi)) for _ in range(n)]


def check_symmetry(spec: SymmetricFunctionSpec, t, bases: Bases, n: int | None = None, points: int = 20,
                   seed: int = 0, policy: TruncationPolicy = DEFAULT_POLICY) -> float:
    """Max relative change of f under random Weyl-group moves at random points."""
    rng = np.random.default_rng(seed)
    n = spec.rank(1) if n is None else n
    worst = 0.0
    for _ in range(points):
        z = _random_torus_point(rng, n)
        base = spec.evaluate(z, t, bases, policy)
        if spec.symmetry == "A":
            full = z + [1 / complex(np.prod(z))]
            perm = rng.permutation(n + 1)
            moved = [full[k] for k in perm[:n]]
        else:
            perm = rng.permutation(n)
            signs = rng.choice([-1, 1], size=n)
            moved = [z[k] ** int(e) for k, e in zip(perm, signs)]
        other = spec.evaluate(moved, t, bases, policy)
        worst = max(worst, abs(other - base) / max(abs(base), 1e-300))
    return worst


# n = 1 inversion ---------------------------------------------------------------


def _half_measure(bases, policy) -> complex:
    """kappa * 2 pi i: converts a grid mean into kappa times the integral against dz/z."""
    return core.pochhammer_pair(bases, policy) / 2


def _check_rank_one(x, t, bases: Bases):
    t = complex(t)
    if not bases.big_m < abs(t) ** 2 < 1:
        raise DomainError(f"need M < |t|^2 < 1, got M = {bases.big_m:.6g}, |t|^2 = {abs(t) ** 2:.6g}")
    if x is not None:
        ax = abs(complex(x))
        if abs(ax - 1) < PV_BAND:
            raise PrincipalValueUnsupported("x on the unit circle needs a principal-value integral")
        if not abs(t) < ax < 1 / abs(t):
            raise DomainError(f"need |t| < |x| < 1/|t|, got |x| = {ax:.6g}")


def _grid_or_default(grid: TorusGrid | None, dims: int, nodes: int = 256, phase: float = 0.0) -> TorusGrid:
    if grid is None:
        return TorusGrid(dims, nodes, phase)
    return TorusGrid(dims, grid.nodes_per_dim, grid.phase if phase == 0 else phase, grid.budget)


def inner_residues(f: Product, w: Mono, x: Mono, t) -> list[Product]:
    """The two residue terms that turn the T-integral over z into the C_w-integral."""
    t = complex(t)
    out = []
    for arg, pair in ((w / t, (w**2, w**-2 * (t * t))), (w.inv() / t, (w**-2, w**2 * (t * t)))):
        term = f.substitute({("z", 0): arg})
        term.gammas(t * a * b for a in _pm(w) for b in _pm(x))
        term.rgammas([Mono(t * t), *pair])
        out.append(term)
    return out


def invert_n1(f: SymmetricFunctionSpec, x, t, bases: Bases, grid: TorusGrid | None = None,
              policy: TruncationPolicy = DEFAULT_POLICY) -> IntegralEstimate:
    """kappa^2 times the double integral of Delta(z, w, x; t) f(z), inner contour C_w.

    The C_w integral is the T^2 quadrature plus the two residue terms;
    by the inversion theorem the value should reproduce f(x).
    """
    x, t = complex(x), complex(t)
    _check_rank_one(x, t, bases)
    f.check_holomorphic(t, bases)
    g2 = _grid_or_default(grid, 2)
    g1 = TorusGrid(1, g2.nodes_per_dim, g2.phase, g2.budget)
    z, w = Mono.var("z", 0), Mono.var("w", 0)
    fz = f.product([z], t)
    double = delta_one(z, w, Mono(x), t) * fz
    h = _half_measure(bases, policy)
    est = integrate_torus(double.on_torus([("z", 0), ("w", 0)], {}, bases, policy), g2).scaled(h * h)
    for term in inner_residues(fz, w, Mono(x), t):
        est = est + integrate_torus(term.on_torus([("w", 0)], {}, bases, policy), g1).scaled(h)
    return est


def exp2_residual(x, t, bases: Bases, zs: Sequence[complex], grid: TorusGrid | None = None,
                  policy: TruncationPolicy = DEFAULT_POLICY) -> float:
    """Pointwise check that kappa * integral over T of Delta dw equals minus the two residue ratios."""
    x, t = complex(x), complex(t)
    _check_rank_one(x, t, bases)
    g1 = _grid_or_default(grid, 1)
    h = _half_measure(bases, policy)
    w = Mono.var("w", 0)
    worst = 0.0
    for zv in zs:
        zv = complex(zv)
        lhs = h * integrate_torus(delta_one(Mono(zv), w, Mono(x), t).on_torus([("w", 0)], {}, bases, policy), g1).value
        res = Product().gammas([Mono(x / zv), Mono(1 / (x * zv)), Mono(t * t * x * zv), Mono(t * t * zv / x)])
        res.rgammas([Mono(t * t), Mono(zv**-2), Mono(t * t * zv**2)])
        res2 = Product().gammas([Mono(x * zv), Mono(zv / x), Mono(t * t * x / zv), Mono(t * t / (x * zv))])
        res2.rgammas([Mono(t * t), Mono(zv**2), Mono(t * t / zv**2)])
        rhs = -res.evaluate({}, bases, policy) - res2.evaluate({}, bases, policy)
        worst = max(worst, abs(lhs - rhs) / max(abs(rhs), 1e-300))
    return worst


class BaileyResiduals(NamedTuple):
    fhat_residual: float
    roundtrip_residual: float


def _pair_bounds(s, t, bases: Bases):
    SymmetricFunctionSpec("newpair_f", s=tuple(s)).check_holomorphic(t, bases)


# Nodes are rotated by a quarter step: the two residue terms of the f-hat
# transform are singular at w = +-1 separately, and a half step would make the
# embedded half-grid blind to the leading aliasing error of even integrands.
BAILEY_PHASE = 0.25


def bailey_pair_n1(s: Sequence[complex], t, bases: Bases, grid: TorusGrid | None = None, xs=None,
                   policy: TruncationPolicy = DEFAULT_POLICY) -> BaileyResiduals:
    """Transform f to f-hat by quadrature plus residues, compare with the closed form, then invert.

    The f-hat comparison is taken at the w nodes of the grid; the round trip
    applies the second transform with the quadrature f-hat and compares
    with f at the points ``xs``.
    """
    t = complex(t)
    s = tuple(complex(v) for v in s)
    _check_rank_one(None, t, bases)
    _pair_bounds(s, t, bases)
    if xs is None:
        xs = default_probe_points(t)
    for xv in xs:
        _check_rank_one(xv, t, bases)
    g_nodes = 256 if grid is None else grid.nodes_per_dim
    g2 = TorusGrid(2, g_nodes, BAILEY_PHASE, None if grid is None else grid.budget)
    g1 = TorusGrid(1, g_nodes, BAILEY_PHASE, g2.budget)
    h = _half_measure(bases, policy)
    z, w = Mono.var("z", 0), Mono.var("w", 0)
    fz = newpair(z, t, s, hat=False)

    inner = (delta_small(z, w, 1 / t) * fz).on_torus([("z", 0), ("w", 0)], {}, bases, policy, measure=False)
    preflight_poles(inner)
    vals = inner.grid_values(g2).reshape(g_nodes, g_nodes)
    fhat_t = h * vals.mean(axis=0)

    res_a = fz.substitute({("z", 0): w / t}).gammas([w**-2]).rgammas([w**-2 * (t * t)])
    res_b = fz.substitute({("z", 0): w.inv() / t}).gammas([w**2]).rgammas([w**2 * (t * t)])
    fhat_quad = fhat_t
    for term in (res_a, res_b):
        fhat_quad = fhat_quad + term.on_torus([("w", 0)], {}, bases, policy, measure=False).grid_values(g1)
    closed = newpair(w, t, s, hat=True).on_torus([("w", 0)], {}, bases, policy, measure=False).grid_values(g1)
    fhat_residual = float(np.max(np.abs(fhat_quad - closed)) / np.max(np.abs(closed)))

    worst = 0.0
    for xv in xs:
        kern = delta_small(w, Mono(complex(xv)), t).on_torus([("w", 0)], {}, bases, policy, measure=False)
        back = h * complex(np.mean(kern.grid_values(g1) * fhat_quad))
        target = fz.evaluate({("z", 0): complex(xv)}, bases, policy)
        worst = max(worst, abs(back - target) / abs(target))
    return BaileyResiduals(fhat_residual, worst)


def ffhat_symmetry_residual(s, t, bases: Bases, points: Sequence[complex],
                            policy: TruncationPolicy = DEFAULT_POLICY) -> float:
    """max |f-hat(z; t, s) - f(1/z; 1/t, t s)| / |f-hat| over the given points."""
    t = complex(t)
    s = tuple(complex(v) for v in s)
    ts = tuple(t * v for v in s)
    worst = 0.0
    for zv in points:
        zv = complex(zv)
        a = newpair(Mono(zv), t, s, hat=True).evaluate({}, bases, policy)
        b = newpair(Mono(1 / zv), 1 / t, ts, hat=False).evaluate({}, bases, policy)
        worst = max(worst, abs(a - b) / abs(a))
        c = newpair(Mono(zv), t, s, hat=False).evaluate({}, bases, policy)
        d = newpair(Mono(1 / zv), 1 / t, ts, hat=True).evaluate({}, bases, policy)
        worst = max(worst, abs(c - d) / abs(c))
    return worst


def default_probe_points(t) -> list[complex]:
    """A few x with |t| < |x| < 1/|t| kept clear of the unit circle."""
    a = abs(complex(t))
    r_in, r_out = a**0.5, a**-0.5
    return [cmath.rect(r_in, 0.7), cmath.rect(r_out, -1.9), cmath.rect(r_in**0.5, 2.6)]


# multivariate pairs on the torus ---------------------------------------------------


class PairCheck(NamedTuple):
    value: IntegralEstimate
    expected: complex
    conjecture: bool

    @property
    def rel_err(self) -> float:
        return abs(self.value.value - self.expected) / abs(self.expected)


def pair_check(kind: str, n: int, s: Sequence[complex], t, x: Sequence[complex], bases: Bases,
               grid: TorusGrid | None = None, policy: TruncationPolicy = DEFAULT_POLICY) -> PairCheck:
    """Apply the torus half of a transform pair and compare with the closed-form partner.

    kind AC: kappa_C int delta_C(w, x; t) fhat_C(w) dw against f_A(x), x A-type.
    kind CA: kappa_A int delta_A(w, x; t) fhat_A(w) dw against f_C(x), x C-type
    (the conjectural (C, A) direction).
    kind AA: kappa_A int nabla_A(w^-1, x^-1; t) fhat_A(w) dw against f_A(x).
    """
    t = complex(t)
    s = tuple(complex(v) for v in s)
    grid = grid or TorusGrid(n, {1: 256, 2: 96, 3: 40}.get(n, 32))
    pp = core.pochhammer_pair(bases, policy)
    if kind == "AC":
        w = coords("w", n, False)
        xs = _point_coords(x, "A", n, "x")
        integrand = delta_c(w, xs, t) * pair_ac_fhat(w, s)
        norm = pp**n / (2**n * math.factorial(n))
        expected = pair_ac_f(xs, t, s)
    elif kind == "CA":
        w = coords("w", n, True)
        xs = _point_coords(x, "C", n, "x")
        integrand = delta_a(w, xs, t) * pair_ca_fhat(w, t, s)
        norm = pp**n / math.factorial(n + 1)
        expected = pair_ca_f(xs, t, s)
    elif kind == "AA":
        w = coords("w", n, True)
        xs = _point_coords(x, "A", n, "x")
        integrand = nabla_a(_inverse(w), _inverse(xs), t) * an_pair(w, t, s, hat=True)
        norm = pp**n / math.factorial(n + 1)
        expected = an_pair(xs, t, s, hat=False)
    else:
        raise DomainError(f"unknown pair kind {kind!r}")
    mp = integrand.on_torus([("w", i) for i in range(n)], {}, bases, policy)
    est = integrate_torus(mp, grid).scaled(norm)
    return PairCheck(est, expected.evaluate({}, bases, policy), kind == "CA")


# sampling ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InversionSample:
    bases: Bases
    t: complex
    x: complex
    f: SymmetricFunctionSpec


def _log_uniform(rng, lo, hi):
    return math.exp(rng.uniform(math.log(lo), math.log(hi)))


def sample_rank_one(seed: int, tag: str = "newpair_f", m_cap: float = 0.2, t_cap: float = 0.8,
                    s_cap: float = 0.8, max_tries: int = 1000) -> InversionSample:
    """Seeded (p, q, t, x, f) for the n = 1 inversion with margins on every bound."""
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        lo = min(0.01, m_cap / 2)
        bases = Bases(cmath.rect(_log_uniform(rng, lo, m_cap), rng.uniform(-math.pi, math.pi)),
                      cmath.rect(_log_uniform(rng, lo, m_cap), rng.uniform(-math.pi, math.pi)))
        t_lo = max(0.3, 1.2 * bases.big_m**0.5)
        if t_lo >= t_cap:
            continue
        t = cmath.rect(_log_uniform(rng, t_lo, t_cap), rng.uniform(-math.pi, math.pi))
        at = abs(t)
        rx = _log_uniform(rng, at**0.7, at**-0.7)
        if abs(rx - 1) < 0.02:
            continue
        x = cmath.rect(rx, rng.uniform(-math.pi, math.pi))
        if tag == "constant":
            f = SymmetricFunctionSpec("constant", value=complex(rng.uniform(0.5, 2), rng.uniform(-1, 1)))
        elif tag == "laurent_symmetric":
            coeffs = [complex(*rng.uniform(-1, 1, 2)) for _ in range(1 + int(rng.integers(1, 4)))]
            f = SymmetricFunctionSpec("laurent_symmetric", coeffs=tuple(coeffs))
        elif tag == "newpair_f":
            s = tuple(cmath.rect(_log_uniform(rng, 0.2, s_cap), rng.uniform(-math.pi, math.pi)) for _ in range(3))
            if abs(bases.pq / (t * t * complex(np.prod(s)))) > s_cap:
                continue
            f = SymmetricFunctionSpec("newpair_f", s=s)
        else:
            raise DomainError(f"no rank-one sampler for tag {tag!r}")
        return InversionSample(bases, t, x, f)
    raise SamplingExhausted(f"no rank-one inversion sample after {max_tries} draws (seed {seed})")


def weyl_residuals(n: int, t, bases: Bases, points: int = 10, seed: int = 0,
                   policy: TruncationPolicy = DEFAULT_POLICY) -> dict:
    """Symmetry and diagonal checks of Delta_AC at random points.

    ``A_z``: transpositions of z_1..z_{n+1} (including the derived coordinate).
    ``C_w``: random signed permutations of w.  ``diagonal``: |Delta| at
    w_i = w_j relative to |Delta| at the unperturbed point.
    """
    spec = KernelSpec("Delta_AC", n, t, bases, policy)
    rng = np.random.default_rng(seed)
    out = {"A_z": 0.0, "C_w": 0.0, "diagonal": 0.0}
    for _ in range(points):
        z, w, x = (_random_torus_point(rng, n, 0.15) for _ in range(3))
        base = eval_kernel(spec, z, w, x)
        full = z + [1 / complex(np.prod(z))]
        i, j = sorted(rng.choice(n + 1, size=2, replace=False))
        full[i], full[j] = full[j], full[i]
        out["A_z"] = max(out["A_z"], abs(eval_kernel(spec, full[:n], w, x) / base - 1))
        perm = rng.permutation(n)
        signs = rng.choice([-1, 1], size=n)
        moved = [w[k] ** int(e) for k, e in zip(perm, signs)]
        out["C_w"] = max(out["C_w"], abs(eval_kernel(spec, z, moved, x) / base - 1))
        if n >= 2:
            i, j = sorted(rng.choice(n, size=2, replace=False))
            diag = list(w)
            diag[j] = diag[i]
            out["diagonal"] = max(out["diagonal"], abs(eval_kernel(spec, z, diag, x)) / abs(base))
    return out


@dataclass(frozen=True)
class PairSample:
    kind: str
    n: int
    bases: Bases
    t: complex
    s: tuple
    x: tuple


def sample_pair(kind: str, n: int, seed: int, m_cap: float = 0.05, max_tries: int = 1000) -> PairSample:
    """Seeded parameters for ``pair_check`` with the balancing condition of each kind solved for s_last."""
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        lo = min(0.01, m_cap / 2)
        bases = Bases(cmath.rect(_log_uniform(rng, lo, m_cap), rng.uniform(-math.pi, math.pi)),
                      cmath.rect(_log_uniform(rng, lo, m_cap), rng.uniform(-math.pi, math.pi)))
        t = cmath.rect(_log_uniform(rng, 0.6, 0.8), rng.uniform(-math.pi, math.pi))
        if not bases.big_m < abs(t) ** (n + 1):
            continue
        x = tuple(cmath.rect(_log_uniform(rng, 0.85, 1.15), rng.uniform(-math.pi, math.pi)) for _ in range(n))
        count = n + 2
        s = [cmath.rect(_log_uniform(rng, 0.4, 0.8), rng.uniform(-math.pi, math.pi)) for _ in range(count)]
        if kind == "AC":
            s.append(bases.pq / (t ** (n + 1) * complex(np.prod(s))))
        elif kind == "CA":
            s.append(bases.pq / (t * t * complex(np.prod(s))))
        elif kind == "AA":
            if abs(bases.pq / (t ** (n + 1) * complex(np.prod(s)))) > 0.8:
                continue
        else:
            raise DomainError(f"unknown pair kind {kind!r}")
        if max(abs(v) for v in s) > 0.8:
            continue
        return PairSample(kind, n, bases, t, tuple(s), x)
    raise SamplingExhausted(f"no {kind} pair sample after {max_tries} draws (seed {seed})")
