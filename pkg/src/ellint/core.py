"""Theta functions, elliptic gamma functions and related infinite products.

Everything here is vectorised over the first argument: pass a scalar and a
Python ``complex`` comes back, pass an array and an array of the same shape
comes back.  Products are accumulated as sums of ``log1p`` terms and
exponentiated once, so intermediate overflow is impossible and exact zeros
(a factor equal to zero) come out as an exact ``0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DivisionByZero, DomainError, NearPole, NonConvergent, PoleHit

_CHUNK = 1 << 21  # max matrix entries per log-sum block


@dataclass(frozen=True)
class Bases:
    """The pair of nome-like bases ``(p, q)`` with ``max(|p|, |q|) < 1``."""

    p: complex
    q: complex

    def __post_init__(self):
        object.__setattr__(self, "p", complex(self.p))
        object.__setattr__(self, "q", complex(self.q))
        if not self.big_m < 1:
            raise NonConvergent(f"need max(|p|, |q|) < 1, got {self.big_m}")

    @property
    def big_m(self) -> float:
        return max(abs(self.p), abs(self.q))

    @property
    def pq(self) -> complex:
        return self.p * self.q

    def swapped(self) -> "Bases":
        return Bases(self.q, self.p)


@dataclass(frozen=True)
class TruncationPolicy:
    """Target relative error of each infinite product and a hard term cap."""

    tolerance: float = 1e-16
    max_terms: int = 400

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")

    def cutoff(self, big_m: float, scale: float = 1.0) -> int:
        """Index cutoff K with ``scale * M**K / (1 - M) < tolerance`` plus 4 safety terms.

        ``scale`` is the largest modulus multiplying the geometric terms; for
        arguments of modulus O(1) it is 1.
        """
        if big_m == 0:
            return 0
        target = self.tolerance * (1 - big_m) / max(scale, 1.0)
        k = math.ceil(math.log(target) / math.log(big_m)) + 4
        return int(min(max(k, 1), self.max_terms))


DEFAULT_POLICY = TruncationPolicy()


@lru_cache(maxsize=256)
def _lattice_powers(p: complex, q: complex, k: int, prune: float):
    """Flat arrays (w, mu, nu) with w = p**mu q**nu over the triangle mu + nu <= k.

    Entries with |w| < prune are dropped (they cannot affect the product at
    the requested tolerance); (0, 0) is always kept.
    """
    mus, nus, ws = [], [], []
    for mu in range(k + 1):
        pm = p**mu
        for nu in range(k + 1 - mu):
            w = pm * q**nu
            if mu + nu == 0 or abs(w) >= prune:
                mus.append(mu)
                nus.append(nu)
                ws.append(w)
    return np.array(ws, dtype=complex), np.array(mus), np.array(nus)


def _as_array(z) -> tuple[np.ndarray, bool]:
    arr = np.asarray(z, dtype=complex)
    return arr, arr.ndim == 0


def _finish(values: np.ndarray, scalar: bool):
    return complex(values.reshape(())) if scalar else values


def _logsum(args: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    """sum_k log1p(-args * coeffs[k]) for every entry of the flat array ``args``."""
    out = np.zeros(args.shape, dtype=complex)
    if coeffs.size == 0:
        return out
    step = max(1, _CHUNK // coeffs.size)
    with np.errstate(divide="ignore", invalid="ignore"):
        for start in range(0, args.size, step):
            block = args[start:start + step, None] * coeffs[None, :]
            out[start:start + step] = np.log1p(-block).sum(axis=1)
    return out


def _exp_log(logs: np.ndarray) -> np.ndarray:
    res = np.zeros(logs.shape, dtype=complex)
    finite = np.isfinite(logs.real)
    res[finite] = np.exp(logs[finite])
    # logs with real part -inf come from an exact zero factor
    return res


def _check_near(z: np.ndarray, w: np.ndarray, mu, nu, radius: float, zeros_of: complex | None = None):
    """Raise NearPole if some z lies within ``radius`` of a lattice point.

    Without ``zeros_of`` the lattice is the pole set 1/w of Gamma; with it the
    lattice is ``zeros_of * w`` (the poles of 1/Gamma when zeros_of = pq).
    """
    if zeros_of is None:
        keep = w != 0
        w, mu, nu = w[keep], mu[keep], nu[keep]
    if w.size == 0:
        return
    step = max(1, _CHUNK // w.size)
    for start in range(0, z.size, step):
        block = z[start:start + step, None]
        if zeros_of is None:
            dist = np.abs(1 - block * w[None, :]) / np.abs(w)[None, :]
        else:
            dist = np.abs(block - zeros_of * w[None, :])
        hit = dist < radius
        if hit.any():
            i, k = np.argwhere(hit)[0]
            shift = 0 if zeros_of is None else 1
            raise NearPole(int(mu[k]) + shift, int(nu[k]) + shift, complex(block[i, 0]))


def qpochhammer_inf(a, q: complex, policy: TruncationPolicy = DEFAULT_POLICY, zero_ok: bool = False):
    """The infinite q-shifted factorial (a; q)_inf = prod_{k>=0} (1 - a q^k)."""
    q = complex(q)
    if abs(q) >= 1:
        raise NonConvergent(f"|q| = {abs(q)} >= 1")
    arr, scalar = _as_array(a)
    flat = arr.ravel()
    scale = float(np.max(np.abs(flat), initial=1.0))
    k = policy.cutoff(abs(q), scale)
    powers = np.array([q**j for j in range(k + 1)], dtype=complex)
    factors_min = np.min(np.abs(1 - flat[:, None] * powers[None, :]), axis=1) if flat.size else flat.real
    zero = factors_min < np.finfo(float).eps * (1 + np.abs(flat))
    if zero.any() and not zero_ok:
        raise PoleHit(f"(a; q)_inf has a vanishing factor at a = {complex(flat[zero][0])!r}")
    out = _exp_log(_logsum(flat, powers))
    out[zero] = 0
    return _finish(out.reshape(arr.shape), scalar)


def theta(z, p: complex, policy: TruncationPolicy = DEFAULT_POLICY):
    """Modified Jacobi theta function theta(z; p) = (z, p/z; p)_inf.

    The argument is first moved into |p|^(1/2) <= |z| < |p|^(-1/2) with
    theta(z) = -z theta(p z), so every product factor stays O(1).
    """
    p = complex(p)
    if abs(p) >= 1:
        raise NonConvergent(f"|p| = {abs(p)} >= 1")
    arr, scalar = _as_array(z)
    if np.any(arr == 0):
        raise DomainError("theta(z; p) is undefined at z = 0")
    flat = arr.ravel().copy()
    if p == 0:
        return _finish((1 - flat).reshape(arr.shape), scalar)

    pref = np.ones_like(flat)
    lo, hi = abs(p) ** 0.5, abs(p) ** -0.5
    while True:
        mod = np.abs(flat)
        up = mod >= hi
        down = mod < lo
        if not (up.any() or down.any()):
            break
        pref[up] *= -flat[up]
        flat[up] *= p
        pref[down] *= -p / flat[down]
        flat[down] /= p

    k = policy.cutoff(abs(p), hi)
    powers = np.array([p**j for j in range(k + 1)], dtype=complex)
    logs = _logsum(flat, powers) + _logsum(1 / flat, p * powers)
    return _finish((pref * _exp_log(logs)).reshape(arr.shape), scalar)


def _gamma_logs(flat: np.ndarray, bases: Bases, policy: TruncationPolicy, check_poles: bool, reciprocal: bool):
    pq = bases.pq
    if flat.size == 0:
        return flat
    mod = np.abs(flat)
    scale = max(1.0, float(mod.max()), float(np.max(abs(pq) / mod)))
    k = policy.cutoff(bases.big_m, scale)
    w, mu, nu = _lattice_powers(bases.p, bases.q, k, policy.tolerance * 1e-3 / scale)
    radius = policy.tolerance**0.5
    if check_poles:
        if reciprocal:
            # poles of 1/Gamma sit at the zeros z = p^(mu+1) q^(nu+1)
            if pq != 0:
                _check_near(flat, w, mu, nu, radius, zeros_of=pq)
        else:
            _check_near(flat, w, mu, nu, radius)
    num = _logsum(1 / flat, pq * w) if pq != 0 else np.zeros_like(flat)
    den = _logsum(flat, w)
    return den - num if reciprocal else num - den


def elliptic_gamma(z, bases: Bases, policy: TruncationPolicy = DEFAULT_POLICY, check_poles: bool = True):
    """Elliptic gamma function Gamma(z; p, q).

    Double product over mu, nu >= 0 of (1 - p^(mu+1) q^(nu+1)/z) / (1 - z p^mu q^nu),
    truncated at mu + nu <= K.  Raises NearPole when z is within
    ``tolerance**0.5`` of a pole p^-mu q^-nu.
    """
    arr, scalar = _as_array(z)
    if np.any(arr == 0):
        raise DomainError("Gamma(z; p, q) is undefined at z = 0")
    flat = arr.ravel()
    out = _exp_log(_gamma_logs(flat, bases, policy, check_poles, reciprocal=False))
    return _finish(out.reshape(arr.shape), scalar)


def reciprocal_gamma(z, bases: Bases, policy: TruncationPolicy = DEFAULT_POLICY, check_poles: bool = True):
    """1 / Gamma(z; p, q), computed directly so that it is finite (zero) at the poles of Gamma.

    Unlike Gamma(pq/z) this stays correct when p or q is exactly zero.
    """
    arr, scalar = _as_array(z)
    if np.any(arr == 0):
        raise DomainError("1/Gamma(z; p, q) is undefined at z = 0")
    flat = arr.ravel()
    out = _exp_log(_gamma_logs(flat, bases, policy, check_poles, reciprocal=True))
    return _finish(out.reshape(arr.shape), scalar)


def gamma_prod(args, bases: Bases, policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """Condensed notation Gamma(a_1, ..., a_k) = prod_i Gamma(a_i)."""
    vals = elliptic_gamma(np.asarray(list(args), dtype=complex), bases, policy)
    return complex(np.prod(vals))


def rgamma_prod(args, bases: Bases, policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """prod_i 1/Gamma(a_i), zero-safe."""
    vals = reciprocal_gamma(np.asarray(list(args), dtype=complex), bases, policy)
    return complex(np.prod(vals))


def theta_prod(args, p: complex, policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    vals = theta(np.asarray(list(args), dtype=complex), p, policy)
    return complex(np.prod(vals))


def shifted_factorial(a, n: int, bases: Bases, policy: TruncationPolicy = DEFAULT_POLICY):
    """Elliptic shifted factorial (a; q, p)_n = Gamma(a q^n) / Gamma(a).

    For n >= 0 this is the finite product prod_{j<n} theta(a q^j; p); for
    n < 0 the gamma ratio is used.
    """
    arr, scalar = _as_array(a)
    n = int(n)
    if n >= 0:
        out = np.ones(arr.shape, dtype=complex)
        for j in range(n):
            out = out * theta(arr * bases.q**j, bases.p, policy)
        return _finish(out, scalar)

    flat = arr.ravel()
    pq = bases.pq
    if pq != 0:
        k = policy.cutoff(bases.big_m, max(1.0, float(np.max(np.abs(flat)))))
        w, _, _ = _lattice_powers(bases.p, bases.q, k, policy.tolerance * 1e-3)
        dist = np.abs(flat[:, None] - pq * w[None, :])
        if np.any(dist < policy.tolerance**0.5):
            raise DivisionByZero("Gamma(a) vanishes in (a; q, p)_n with n < 0")
    out = elliptic_gamma(flat * bases.q**n, bases, policy) * reciprocal_gamma(flat, bases, policy)
    return _finish(out.reshape(arr.shape), scalar)


def residue_constant(bases: Bases, policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """lim_{z -> a} (1 - z/a) Gamma(z/a) = 1 / ((p; p)_inf (q; q)_inf)."""
    pp = qpochhammer_inf(bases.p, bases.p, policy)
    qq = qpochhammer_inf(bases.q, bases.q, policy)
    return 1 / (pp * qq)


def pochhammer_pair(bases: Bases, policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """(p; p)_inf (q; q)_inf, the normalisation recurring in every beta integral."""
    return 1 / residue_constant(bases, policy)
