"""Command-line harness: ``ellint verify`` and ``ellint sweep``.

Reports go to standard output as one JSON object per line, diagnostics to
standard error.  Exit status: 0 all checks pass, 1 a check failed, 2 usage
or configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Sequence

from .errors import DomainError
from .quadrature import TorusGrid, evaluation_budget
from .registry import REGISTRY, RunConfig, run_sample
from .report import SCHEMA, SCHEMA_VERSION, dec

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

# sweep reports an error as converged once it is below this floor
CONVERGED_FLOOR = 1e-13

_KEYS = ("identity", "n", "N", "seed", "grid", "tol", "m_cap", "modulus_cap", "samples", "jobs", "timing")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in str(text).split(",") if v.strip())
    except ValueError:
        raise UsageError(f"expected a comma-separated list of integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ellint", description="Verify elliptic beta integrals, inversion formulas, "
                     "elliptic hypergeometric sums and theta identities.")
    parser.add_argument("--schema", action="store_true", help="print the report schema and exit")
    parser.add_argument("--list", action="store_true", help="list registered identities with default tolerances")
    sub = parser.add_subparsers(dest="command")
    for name, text in (("verify", "check an identity on seeded samples"),
                       ("sweep", "run an identity over increasing grids and report the convergence")):
        p = sub.add_parser(name, help=text)
        p.add_argument("identity_pos", nargs="?", metavar="identity")
        p.add_argument("--identity", default=None)
        p.add_argument("--n", type=int, default=None, help="rank")
        p.add_argument("--N", default=None, help="comma list, index box of the series identities")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--grid", default=None,
                       help="nodes per dimension (verify) or comma list of them (sweep)")
        p.add_argument("--tol", type=float, default=None, help="rel_err pass threshold")
        p.add_argument("--m-cap", dest="m_cap", type=float, default=None, help="bound on max(|p|, |q|)")
        p.add_argument("--modulus-cap", dest="modulus_cap", type=float, default=None)
        p.add_argument("--samples", type=int, default=None)
        p.add_argument("--jobs", type=int, default=None, help="worker processes")
        p.add_argument("--config", default=None, help="file of key = value lines")
        p.add_argument("--timing", action="store_true", default=None, help="record elapsed_ms")
        p.add_argument("--schema", action="store_true", default=argparse.SUPPRESS, help="print the report schema and exit")
        p.add_argument("--list", action="store_true", default=argparse.SUPPRESS, help="list registered identities")
    return parser


def read_config(path: str) -> dict:
    """Flat ``key = value`` lines; '#' starts a comment; keys use the long flag names."""
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from None
    for num, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{num}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _KEYS:
            raise UsageError(f"{path}:{num}: unknown key {key!r}")
        out[key] = value
    return out


def _settings(args) -> dict:
    """Flags over config file over defaults."""
    merged = {"seed": 0, "samples": 1, "jobs": 1, "timing": False}
    if args.config:
        merged.update(read_config(args.config))
    for key in _KEYS:
        value = getattr(args, key, None)
        if key == "identity":
            value = args.identity or args.identity_pos
        if value is not None:
            merged[key] = value
    conv = {"n": int, "seed": int, "samples": int, "jobs": int, "tol": float, "m_cap": float, "modulus_cap": float}
    for key, fn in conv.items():
        if merged.get(key) is not None:
            try:
                merged[key] = fn(merged[key])
            except ValueError:
                raise UsageError(f"bad value for {key}: {merged[key]!r}") from None
    if isinstance(merged["timing"], str):
        merged["timing"] = merged["timing"].lower() in ("1", "true", "yes", "on")
    return merged


def _validate(s: dict, sweep: bool):
    name = s.get("identity")
    if not name:
        raise UsageError("no identity given")
    if name not in REGISTRY:
        raise UsageError(f"unknown identity {name!r}; see --list")
    entry = REGISTRY[name]
    n = s.get("n") or entry.default_n
    if n < 1 or (entry.quadrature and n not in entry.ranks):
        raise UsageError(f"{name} supports ranks {entry.ranks}, got n = {n}")
    if s["samples"] < 1 or s["jobs"] < 1:
        raise UsageError("--samples and --jobs must be positive")
    if s.get("tol") is not None and not s["tol"] > 0:
        raise UsageError("--tol must be positive")
    grids = _int_list(s["grid"]) if s.get("grid") is not None else ()
    if sweep:
        if not entry.quadrature:
            raise UsageError(f"{name} has no quadrature grid to sweep")
        if len(grids) < 2:
            raise UsageError("sweep needs at least two grid sizes, e.g. --grid 32,64,128")
    elif len(grids) > 1:
        raise UsageError("verify takes a single --grid value")
    dims = 2 if name == "inversion_n1" else n
    for g in grids:
        try:
            TorusGrid(dims, g, budget=evaluation_budget())
        except DomainError as exc:
            raise UsageError(f"--grid {g}: {exc}") from None
        if g**dims > evaluation_budget():
            raise UsageError(f"--grid {g} needs {g ** dims} evaluations, above the budget {evaluation_budget()}")
    big_n = _int_list(s["N"]) if s.get("N") is not None else None
    if big_n is not None and (len(big_n) != n or min(big_n) < 0):
        raise UsageError(f"--N needs {n} non-negative entries")
    return entry, n, grids, big_n


def _config(s, n, grid, big_n) -> RunConfig:
    return RunConfig(n=n, big_n=big_n, seed=s["seed"], grid=grid, tol=s.get("tol"), m_cap=s.get("m_cap"),
                     modulus_cap=s.get("modulus_cap"), timing=bool(s["timing"]))


def _run_all(name, cfgs_and_indices, jobs):
    if jobs == 1:
        return [run_sample(name, cfg, k) for cfg, k in cfgs_and_indices]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(run_sample, name, cfg, k) for cfg, k in cfgs_and_indices]
        return [f.result() for f in futures]  # ordered by sample index


def _emit(obj, out):
    out.write((obj if isinstance(obj, str) else json.dumps(obj, sort_keys=True, separators=(",", ":"))) + "\n")


def cmd_verify(s: dict, out) -> int:
    entry, n, grids, big_n = _validate(s, sweep=False)
    cfg = _config(s, n, grids[0] if grids else None, big_n)
    reports = _run_all(entry.name, [(cfg, k) for k in range(s["samples"])], s["jobs"])
    ok = True
    for rep in reports:
        _emit(rep.to_json(), out)
        if rep.error:
            print(f"sample {rep.sample}: {rep.error[0]}: {rep.error[1]}", file=sys.stderr)
        # conjecture probes are reported but do not decide the exit status
        if not rep.passed and not rep.conjecture_flag:
            ok = False
    return EXIT_OK if ok else EXIT_FAIL


def convergence_ok(errors: Sequence[float | None]) -> bool:
    """Errors decrease strictly until they reach the converged floor."""
    if any(e is None for e in errors):
        return False
    for a, b in zip(errors, errors[1:]):
        if a < CONVERGED_FLOOR:
            continue
        if not b < a:
            return False
    return True


def cmd_sweep(s: dict, out) -> int:
    entry, n, grids, big_n = _validate(s, sweep=True)
    jobs = [(_config(s, n, g, big_n), k) for k in range(s["samples"]) for g in grids]
    reports = _run_all(entry.name, jobs, s["jobs"])
    ok = True
    for k in range(s["samples"]):
        row = reports[k * len(grids):(k + 1) * len(grids)]
        for rep in row:
            _emit(rep.to_json(), out)
        errors = [r.rel_err if r.error is None else None for r in row]
        ratios = [None if a is None or b is None or a == 0 else b / a for a, b in zip(errors, errors[1:])]
        good = convergence_ok(errors)
        ok &= good or row[0].conjecture_flag
        _emit({"schema_version": SCHEMA_VERSION, "kind": "convergence", "identity_id": entry.name, "sample": k,
               "seed": s["seed"] + k, "N": list(grids), "rel_err": [None if e is None else dec(e) for e in errors],
               "ratio": [None if r is None else dec(r) for r in ratios], "pass": good}, out)
    return EXIT_OK if ok else EXIT_FAIL


def list_identities(out):
    for name, entry in REGISTRY.items():
        tol = entry.tol(entry.default_n)
        ranks = ",".join(map(str, entry.ranks)) if entry.quadrature else "any"
        out.write(f"{name:<14} tol={tol:<8.0e} n={entry.default_n} ranks={ranks:<6} {entry.description}\n")


def main(argv: Sequence[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.schema:
            _emit(SCHEMA, out)
            return EXIT_OK
        if args.list:
            list_identities(out)
            return EXIT_OK
        if args.command is None:
            raise UsageError("a command is required: verify or sweep")
        s = _settings(args)
        return cmd_verify(s, out) if args.command == "verify" else cmd_sweep(s, out)
    except UsageError as exc:
        print(f"ellint: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
