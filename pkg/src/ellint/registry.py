"""The table of verifiable identities: how to sample, evaluate and judge each one."""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import beta, identities, inversion, series
from .core import Bases, DEFAULT_POLICY, TruncationPolicy
from .errors import DomainError, EllintError
from .quadrature import TorusGrid
from .report import VerificationReport


@dataclass(frozen=True)
class RunConfig:
    """Settings shared by every sample of one run; None means the identity's default."""

    n: int | None = None
    big_n: tuple | None = None
    seed: int = 0
    grid: int | None = None
    tol: float | None = None
    m_cap: float | None = None
    modulus_cap: float | None = None
    timing: bool = False


@dataclass(frozen=True)
class Entry:
    name: str
    description: str
    runner: Callable
    tolerance: Callable[[int], float]
    default_n: int = 1
    quadrature: bool = False
    ranks: tuple = (1, 2, 3)

    def tol(self, n: int) -> float:
        return self.tolerance(n)


def params_dict(obj) -> dict:
    out = {}
    for f in dataclasses.fields(obj):
        v = getattr(obj, f.name)
        if isinstance(v, Bases):
            out["p"], out["q"] = v.p, v.q
        elif dataclasses.is_dataclass(v):
            out[f.name] = params_dict(v)
        else:
            out[f.name] = v
    return out


def _truncation(bases: Bases, policy: TruncationPolicy = DEFAULT_POLICY) -> dict:
    return {"tolerance": policy.tolerance, "K": policy.cutoff(bases.big_m, 1.0)}


def _grid(cfg: RunConfig, n: int) -> TorusGrid:
    return TorusGrid(n, cfg.grid or beta.DEFAULT_GRID.get(n, 32))


def _caps(cfg: RunConfig, kind: str) -> dict:
    out = {"modulus_cap": cfg.modulus_cap or 0.8}
    if cfg.m_cap is not None:
        out["m_cap"] = cfg.m_cap
    elif kind in beta.DEFAULT_M_CAP:
        out["m_cap"] = beta.DEFAULT_M_CAP[kind]
    return out


def _estimate_report(name, params, est, rhs, cfg, n, grid, bases, tol, **extra) -> VerificationReport:
    return VerificationReport(name, params_dict(params), est.value, rhs, tol, grid={"n": n, "N": grid.nodes_per_dim},
                              truncation=_truncation(bases), error_estimate=est.error_estimate, **extra)


# runners: (cfg, sample seed, n, tol) -> VerificationReport -----------------------------


def _beta_runner(kind, lhs, rhs):
    def run(cfg, seed, n, tol):
        params = beta.sample_params(kind, seed, n=n, **_caps(cfg, kind))
        grid = _grid(cfg, params.n if hasattr(params, "n") else 1)
        est = lhs(params, grid)
        return _estimate_report(kind, params, est, rhs(params), cfg, grid.dims, grid, params.bases, tol)

    return run


_TAGS = ("constant", "laurent_symmetric", "newpair_f")


def _run_inversion(cfg, seed, n, tol):
    tag = _TAGS[seed % len(_TAGS)]
    smp = inversion.sample_rank_one(seed, tag, m_cap=cfg.m_cap or 0.2)
    grid = TorusGrid(2, cfg.grid or 256)
    est = inversion.invert_n1(smp.f, smp.x, smp.t, smp.bases, grid)
    target = smp.f.evaluate(smp.x, smp.t, smp.bases)
    params = {"tag": tag, "s": list(smp.f.s), "coeffs": list(smp.f.coeffs), "value": smp.f.value,
              "t": smp.t, "x": smp.x, "p": smp.bases.p, "q": smp.bases.q}
    return VerificationReport("inversion_n1", params, est.value, target, tol, grid={"n": 1, "N": grid.nodes_per_dim},
                              truncation=_truncation(smp.bases), error_estimate=est.error_estimate)


def _run_bailey(cfg, seed, n, tol):
    smp = inversion.sample_rank_one(seed, "newpair_f", m_cap=cfg.m_cap or 0.2)
    nodes = cfg.grid or 256
    res = inversion.bailey_pair_n1(smp.f.s, smp.t, smp.bases, TorusGrid(1, nodes))
    probe = inversion.default_probe_points(smp.t)
    sym = inversion.ffhat_symmetry_residual(smp.f.s, smp.t, smp.bases, probe)
    params = {"s": list(smp.f.s), "t": smp.t, "p": smp.bases.p, "q": smp.bases.q}
    return VerificationReport("bailey_n1", params, None, None, tol, grid={"n": 1, "N": nodes},
                              truncation=_truncation(smp.bases), residual=max(res),
                              notes=[f"fhat_residual={res.fhat_residual!r}",
                                     f"roundtrip_residual={res.roundtrip_residual!r}",
                                     f"symmetry_residual={sym!r}"])


def _series_box(cfg, seed, n):
    if cfg.big_n is not None:
        if len(cfg.big_n) != n:
            raise DomainError(f"--N needs {n} entries for n = {n}")
        return tuple(cfg.big_n)
    rng = np.random.default_rng([seed, 1])
    return tuple(int(k) for k in rng.integers(0, 3, size=n))


def _run_ros(cfg, seed, n, tol):
    box = _series_box(cfg, seed, n)
    params = series.sample_ros(n, box, seed, m_cap=cfg.m_cap or 0.3)
    return VerificationReport("ros", params_dict(params), series.ros_lhs(params), series.ros_rhs(params), tol,
                              grid={"lambda_box": list(box)}, truncation=_truncation(params.bases),
                              notes=[f"reversal_residual={series.reversal_residual(params)!r}"])


def _run_eb(cfg, seed, n, tol):
    box = _series_box(cfg, seed, n)
    params = series.sample_eb(n, box, seed, m_cap=cfg.m_cap or 0.3)
    return VerificationReport("eb", params_dict(params), series.eb_lhs(params), series.eb_rhs(params), tol,
                              grid={"lambda_box": list(box)}, truncation=_truncation(params.bases))


def _identity_runner(name, ident):
    def run(cfg, seed, n, tol):
        rng = np.random.default_rng(seed)
        case = identities.random_case(ident, n, rng, m_cap=cfg.m_cap or 0.4)
        lhs, rhs = identities.identity_sides(case)
        residual = abs(lhs - rhs) / (abs(lhs) + abs(rhs) + 1e-300)
        return VerificationReport(name, identities.case_params(case), lhs, rhs, tol, grid={"n": n},
                                  truncation=_truncation(case.bases), residual=residual)

    return run


def _random_points(rng, n, count, spread=0.2):
    pt = lambda: [complex(np.exp(rng.uniform(-spread, spread) + 1j * rng.uniform(-np.pi, np.pi)))  # noqa: E731
                  for _ in range(n)]
    return [(pt(), pt(), pt()) for _ in range(count)]


def _run_kernels(cfg, seed, n, tol):
    rng = np.random.default_rng(seed)
    m_cap = cfg.m_cap or 0.1
    bases = Bases(m_cap * np.exp(1j * rng.uniform(-np.pi, np.pi)), m_cap * np.exp(1j * rng.uniform(-np.pi, np.pi)))
    t = complex(0.8 * np.exp(1j * rng.uniform(-np.pi, np.pi)))
    parts = {}
    for family in ("Delta_AA", "Delta_AC", "Delta_CA"):
        parts[f"factorization_{family}"] = inversion.check_factorization(family, _random_points(rng, n, 5), n, t, bases)
    t1 = complex(0.6 * np.exp(1j * rng.uniform(-np.pi, np.pi)))
    parts["factorization_Delta_1"] = inversion.check_factorization("Delta_1", _random_points(rng, 1, 5), 1, t1, bases)
    for k, v in inversion.weyl_residuals(n, t, bases, seed=seed).items():
        parts[f"Delta_AC_{k}"] = v
    coincide = inversion.rank_one_coincidence([tuple(c[0] for c in pt) for pt in _random_points(rng, 1, 5)], t1, bases)
    for k, v in coincide.items():
        parts[f"rank_one_{k}"] = v
    x = complex(abs(t1) ** 0.5 * np.exp(1j * rng.uniform(-np.pi, np.pi)))
    zs = [complex(np.exp(1j * a)) for a in rng.uniform(0.1, 3.0, 4)]
    parts["exp2_annihilation"] = inversion.exp2_residual(x, t1, bases, zs, TorusGrid(1, cfg.grid or 256))
    params = {"t": t, "t_rank_one": t1, "p": bases.p, "q": bases.q, "n": n}
    return VerificationReport("kernels", params, None, None, tol, grid={"n": n}, truncation=_truncation(bases),
                              residual=max(parts.values()), notes=[f"{k}={v!r}" for k, v in sorted(parts.items())])


def _pair_runner(kind):
    def run(cfg, seed, n, tol):
        smp = inversion.sample_pair(kind, n, seed, m_cap=cfg.m_cap or 0.05)
        grid = TorusGrid(n, cfg.grid or {1: 256, 2: 128, 3: 40}[n])
        pc = inversion.pair_check(kind, n, smp.s, smp.t, smp.x, smp.bases, grid)
        notes = ["probe of the conjectural (C, A) direction; no claim is made for n >= 2"] if pc.conjecture else []
        return _estimate_report(f"pair_{kind.lower()}", smp, pc.value, pc.expected, cfg, n, grid, smp.bases, tol,
                                conjecture_flag=pc.conjecture, notes=notes)

    return run


def _const(v):
    return lambda n: v


REGISTRY: dict[str, Entry] = {}


def _register(*entries: Entry):
    for e in entries:
        REGISTRY[e.name] = e


_register(
    Entry("univariate", "univariate elliptic beta integral", _beta_runner("univariate", beta.univariate_lhs,
          beta.univariate_rhs), _const(1e-9), quadrature=True, ranks=(1,)),
    Entry("an", "A_n elliptic beta integral", _beta_runner("an", beta.an_lhs, beta.an_rhs),
          lambda n: {1: 1e-9, 2: 1e-7}.get(n, 1e-5), default_n=2, quadrature=True),
    Entry("cn", "C_n elliptic beta integral", _beta_runner("cn", beta.cn_lhs, beta.cn_rhs),
          lambda n: {1: 1e-9, 2: 1e-7}.get(n, 1e-5), default_n=2, quadrature=True),
    Entry("new_an", "the new A_n elliptic beta integral", _beta_runner("new_an", beta.new_an_lhs, beta.new_an_rhs),
          lambda n: {1: 1e-9, 2: 1e-7}.get(n, 1e-5), quadrature=True),
    Entry("new_an_qlimit", "p -> 0 limit of the new A_n integral",
          _beta_runner("new_an_qlimit", beta.new_an_qlimit_lhs, beta.new_an_qlimit_rhs),
          lambda n: {1: 1e-10, 2: 1e-8}.get(n, 1e-5), quadrature=True),
    Entry("inversion_n1", "rank-one integral inversion, residue-corrected inner contour", _run_inversion,
          _const(1e-7), quadrature=True, ranks=(1,)),
    Entry("bailey_n1", "rank-one integral Bailey pair: transform, closed form, round trip", _run_bailey,
          _const(1e-7), quadrature=True, ranks=(1,)),
    Entry("ros", "A_n Jackson-type sum from the residues at z_j = s_i q^lambda_i", _run_ros, _const(1e-11)),
    Entry("eb", "companion sum from the residues at z_j = 1/(t_i q^lambda_i)", _run_eb, _const(1e-11)),
    Entry("theta1", "theta identity with n+1 terms and S t_1^2", _identity_runner("theta1", "theta1"),
          _const(1e-10)),
    Entry("theta2", "theta identity summing to one in t_2..t_n", _identity_runner("theta2", "theta2"),
          _const(1e-10)),
    Entry("theta3", "generalised theta identity with B z_1...z_n = b_1...b_{n+2}",
          _identity_runner("theta3", "theta3"), _const(1e-10)),
    Entry("an_pf", "A_n elliptic partial fraction expansion",
          _identity_runner("an_pf", "an_partial_fraction"), _const(1e-10)),
    Entry("c_pf", "C-type elliptic partial fraction expansion",
          _identity_runner("c_pf", "c_partial_fraction"), _const(1e-10)),
    Entry("qdiff", "q-difference equation of the kernel rho", _identity_runner("qdiff", "qdiff_lemma"),
          _const(1e-10)),
    Entry("contiguous", "contiguous relation of the new A_n closed form",
          _identity_runner("contiguous", "contiguous_I"), _const(1e-9)),
    Entry("kernels", "kernel factorizations, Weyl symmetries, rank-one coincidence, outer annihilation",
          _run_kernels, _const(1e-9), default_n=2),
    Entry("pair_ac", "(A, C) transform pair, torus half", _pair_runner("AC"),
          lambda n: {1: 1e-9, 2: 1e-7}.get(n, 1e-4), quadrature=True),
    Entry("pair_aa", "(A, A) transform pair, torus half", _pair_runner("AA"),
          lambda n: {1: 1e-9, 2: 1e-7}.get(n, 1e-4), quadrature=True),
    Entry("pair_ca", "(C, A) transform pair, conjectural direction (probe)", _pair_runner("CA"),
          lambda n: {1: 1e-9, 2: 1e-7}.get(n, 1e-4), quadrature=True),
)


def run_sample(name: str, cfg: RunConfig, index: int) -> VerificationReport:
    """One sample of a run; errors become failing reports."""
    entry = REGISTRY[name]
    n = cfg.n or entry.default_n
    seed = cfg.seed + index
    tol = cfg.tol if cfg.tol is not None else entry.tol(n)
    start = time.perf_counter()
    try:
        rep = entry.runner(cfg, seed, n, tol)
    except EllintError as exc:
        rep = VerificationReport(name, {"n": n}, None, None, tol, error=(type(exc).__name__, str(exc)))
    rep.sample, rep.seed = index, seed
    if cfg.timing:
        rep.elapsed_ms = int(1000 * (time.perf_counter() - start))
    return rep
