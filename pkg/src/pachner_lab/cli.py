"""Command-line entry point: configuration, fixtures, dispatch and JSON reports.

Exit codes: 0 when every assertion passes, 1 when an identity fails, 2 when
the numerical solve is inconclusive (and nothing failed), 3 for malformed
fixtures or reports, 64 for command-line usage errors.  Reports are
deterministic functions of the configuration and the fixture; wall-clock
timings are only included with ``--timings``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

from . import __version__

EXIT_PASS, EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_SCHEMA, EXIT_USAGE = 0, 1, 2, 3, 64

CHECKS = ("grassmann", "local", "pillow1", "pillow2", "rel33", "torsion")
FIXTURE_DIR = Path(__file__).with_name("fixtures")
DEFAULT_FIXTURE = FIXTURE_DIR / "s4.json"

# per-command defaults for the local tolerance
_LOCAL_TOL = {"local": 1e-40, "pillow1": 1e-50, "pillow2": 1e-50, "rel33": 1e-40}


class ConfigError(ValueError):
    """Invalid command-line configuration."""


@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration."""

    command: str
    target: str | None = None
    bits: int = 256
    tol_solve: float | None = None
    tol_local: float | None = None
    tol_global: float = 1e-35
    seed: int = 0
    trials: int = 1
    jobs: int = 1
    fixture: str | None = None
    out: str | None = None
    mode: str = "complex"
    timings: bool = False

    def __post_init__(self):
        for name in ("tol_solve", "tol_local", "tol_global"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ConfigError(f"{name.replace('_', '-')} must be positive, got {value}")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.jobs < 1:
            raise ConfigError(f"jobs must be >= 1, got {self.jobs}")
        if self.bits < 64:
            raise ConfigError(f"bits must be >= 64, got {self.bits}")
        if self.mode not in ("rational", "complex"):
            raise ConfigError(f"mode must be 'rational' or 'complex', got {self.mode!r}")

    def seeds(self) -> list[int]:
        return [self.seed + k for k in range(self.trials)]

    def local_tol(self) -> float:
        if self.tol_local is not None:
            return self.tol_local
        return _LOCAL_TOL.get(self.target, 1e-40)


# ---------------------------------------------------------------------------
# fixtures


class FixtureError(ValueError):
    """Unreadable or malformed fixture / report file."""


def load_json(path: str | os.PathLike) -> object:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise FixtureError(f"{path}: {exc.strerror}") from None
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise FixtureError(f"{path}: not valid JSON ({exc})") from None


def dump_json(data, path: str | os.PathLike | None) -> None:
    text = json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text, encoding="utf-8")


def load_fixture(path: str | os.PathLike | None):
    """``(triangulation, cochain_or_None)`` from a fixture file.

    A fixture is either a bare triangulation object or
    ``{"triangulation": {...}, "cochain": {...}}``.
    """
    from .cocycle import cochain_from_json
    from .triangulation import SchemaError, from_json, validate

    data = load_json(DEFAULT_FIXTURE if path is None else path)
    try:
        if isinstance(data, dict) and "triangulation" in data:
            tri = from_json(data["triangulation"])
            cochain = cochain_from_json(data["cochain"], tri) if data.get("cochain") is not None else None
        else:
            tri, cochain = from_json(data), None
        report = validate(tri)
    except SchemaError as exc:
        raise FixtureError(f"{path}: {exc}") from None
    if not report.ok:
        raise FixtureError(f"{path}: not a closed 4-manifold triangulation: {'; '.join(report.violations)}")
    return tri, cochain


def generate_fixtures() -> dict[str, dict]:
    """The boundary of the 5-simplex and the triangulations reached from it by single moves."""
    from .triangulation import (
        apply_move02_first,
        apply_pachner_15,
        apply_pachner_24,
        apply_pachner_33,
        boundary_of_5_simplex,
        find_33_clusters,
        to_json,
    )

    s4 = boundary_of_5_simplex()
    cx = s4.simplicial
    (u1, _), (u2, _) = cx.slots_of_tetra(0)
    moved = {
        "s4": s4,
        "s4_move33": apply_pachner_33(s4, find_33_clusters(s4)[0])[0],
        "s4_move24": apply_pachner_24(s4, [u1, u2])[0],
        "s4_move15": apply_pachner_15(s4, s4.pentachora[0].uid)[0],
        "s4_move02": apply_move02_first(s4, *_first_adjacent_tetra_pair(s4))[0],
    }
    return {name: to_json(tri) for name, tri in moved.items()}


def _first_adjacent_tetra_pair(tri):
    import itertools

    cx = tri.simplicial
    for t1, t2 in itertools.combinations(range(len(cx.tetrahedra)), 2):
        if set(cx.faces_of_tetra(t1)) & set(cx.faces_of_tetra(t2)):
            return t1, t2
    raise ValueError("no adjacent tetrahedra")


# ---------------------------------------------------------------------------
# trials


def _ctx(cfg: RunConfig, seed: int):
    from .numerics import PrecisionContext

    return PrecisionContext(cfg.bits, cfg.tol_solve, seed)


def _report(identity: str, seed: int, bits: int, passed: bool, residual, tolerance, details) -> dict:
    return {"identity": identity, "seed": seed, "bits": bits, "residual": residual, "tolerance": tolerance,
            "pass": bool(passed), "details": details}


def _check_grassmann(cfg: RunConfig, seed: int) -> dict:
    from .grassmann import identity_suite
    from .numerics import make_rng

    failures = identity_suite(make_rng(seed, 31))
    return _report("grassmann", seed, cfg.bits, not any(failures.values()), sum(failures.values()), 0,
                   {"failures": failures, "exact": True})


def _check_local(cfg: RunConfig, seed: int) -> dict:
    from .numerics import make_rng
    from .pentaweight import local_identity_suite
    from .relations import verify_H_consistency

    failures = local_identity_suite(make_rng(seed, 32))
    numeric = verify_H_consistency(_ctx(cfg, seed), cfg.local_tol()).to_json()
    passed = not any(failures.values()) and numeric["pass"]
    return _report("local", seed, cfg.bits, passed, numeric["residual"], cfg.local_tol(),
                   {"exact_failures": failures, "H_consistency": numeric["details"], "time_ms": numeric["time_ms"]})


def _check_identity(cfg: RunConfig, seed: int) -> dict:
    from .invariant import verify_torsion_routes
    from .relations import verify_pillow1, verify_pillow2, verify_relation33

    ctx = _ctx(cfg, seed)
    if cfg.target == "pillow1":
        report = verify_pillow1(ctx, cfg.local_tol())
    elif cfg.target == "pillow2":
        report = verify_pillow2(ctx, cfg.local_tol())
    elif cfg.target == "rel33":
        report = verify_relation33(ctx, cfg.local_tol())
    else:
        tri, _ = load_fixture(cfg.fixture)
        report = verify_torsion_routes(ctx, tri, cfg.tol_global)
    out = report.to_json()
    out["details"]["time_ms"] = out.pop("time_ms")
    return out


def _invariant_compute(cfg: RunConfig, seed: int) -> dict:
    from .cocycle import assign_q, random_signs, sample_cocycle
    from .invariant import invariant_from_cochain

    tri, cochain = load_fixture(cfg.fixture)
    ctx = _ctx(cfg, seed)
    rng = ctx.rng(41)
    if cochain is None:
        mode = "rational" if cfg.mode == "rational" else "unit-complex"
        _, omega = sample_cocycle(tri, ctx, mode, rng)
    else:
        omega = cochain[1]
    q = assign_q(omega, random_signs(tri, rng), tri, ctx)
    result, _ = invariant_from_cochain(tri, omega, q, ctx, rng, tol=cfg.tol_global)
    out = result.to_json(tri, seed, cfg.bits)
    route = result.diagnostics.get("matrix_route_residual")
    out["residual"] = float(route)
    out["tolerance"] = cfg.tol_global
    out["pass"] = float(route) <= cfg.tol_global
    out["identity"] = "invariant"
    return out


def _invariant_harness(cfg: RunConfig, seed: int) -> dict:
    from .invariant import harness

    tri, _ = load_fixture(cfg.fixture)
    out = harness(cfg.target, _ctx(cfg, seed), tri, cfg.tol_global, cfg.tol_local).to_json()
    out["details"]["time_ms"] = out.pop("time_ms")
    return out


def run_trial(cfg: RunConfig, seed: int) -> dict:
    """One trial; solver failures are reported as inconclusive instead of raising."""
    from .pentaweight import SolverError

    if cfg.command == "check":
        runner = {"grassmann": _check_grassmann, "local": _check_local}.get(cfg.target, _check_identity)
    elif cfg.target == "compute":
        runner = _invariant_compute
    else:
        runner = _invariant_harness
    try:
        out = runner(cfg, seed)
        out["status"] = "pass" if out["pass"] else "fail"
    except SolverError as exc:
        out = {"identity": cfg.target, "seed": seed, "bits": cfg.bits, "pass": False,
               "status": "inconclusive", "error": str(exc)}
    if not cfg.timings:
        _strip_timings(out)
    return out


def _strip_timings(obj):
    if isinstance(obj, dict):
        for key in [k for k in obj if k == "time_ms"]:
            del obj[key]
        for value in obj.values():
            _strip_timings(value)
    elif isinstance(obj, list):
        for value in obj:
            _strip_timings(value)


def _run_one(args):
    cfg, seed = args
    return run_trial(cfg, seed)


def dispatch(cfg: RunConfig) -> tuple[int, dict]:
    """Run all trials of ``cfg``; returns ``(exit_code, report)``."""
    if cfg.command == "fixtures":
        fixtures = generate_fixtures()
        target = Path(cfg.out) if cfg.out else Path(".")
        for name, data in fixtures.items():
            dump_json(data, target / f"{name}.json")
        return EXIT_PASS, {"command": "fixtures gen", "written": sorted(f"{n}.json" for n in fixtures)}
    if cfg.command == "report":
        return EXIT_PASS, summarize(cfg.target)
    if cfg.fixture is not None and cfg.command == "invariant":
        load_fixture(cfg.fixture)  # fail fast on malformed input
    jobs = [(cfg, s) for s in cfg.seeds()]
    if cfg.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            trials = list(pool.map(_run_one, jobs))
    else:
        trials = [_run_one(j) for j in jobs]
    trials.sort(key=lambda t: t["seed"])
    counts = {status: sum(t["status"] == status for t in trials) for status in ("pass", "fail", "inconclusive")}
    code = EXIT_FAIL if counts["fail"] else EXIT_INCONCLUSIVE if counts["inconclusive"] else EXIT_PASS
    config = {k: v for k, v in asdict(cfg).items() if k not in ("out", "jobs", "timings")}
    report = {"version": __version__, "command": _command_name(cfg), "config": config, "trials": trials,
              "summary": counts, "exit_code": code}
    return code, report


def _command_name(cfg: RunConfig) -> str:
    if cfg.command == "invariant" and cfg.target not in (None, "compute"):
        return f"invariant harness {cfg.target}"
    return f"{cfg.command} {cfg.target}"


def summarize(directory: str) -> dict:
    """Aggregate the reports found in ``directory`` into one row per report."""
    rows = []
    for path in sorted(Path(directory).glob("*.json")):
        data = load_json(path)
        if not isinstance(data, dict) or "trials" not in data or "summary" not in data:
            raise FixtureError(f"{path}: not a run report")
        residuals = [t["residual"] for t in data["trials"] if isinstance(t.get("residual"), (int, float))]
        rows.append({"file": path.name, "command": data.get("command"), "trials": len(data["trials"]),
                     **data["summary"], "max_residual": max(residuals, default=None)})
    return {"command": "report summarize", "rows": rows,
            "totals": {k: sum(r[k] for r in rows) for k in ("trials", "pass", "fail", "inconclusive")}}


def format_table(summary: dict) -> str:
    header = ("file", "command", "trials", "pass", "fail", "inconclusive", "max_residual")
    lines = ["\t".join(header)]
    for row in summary["rows"]:
        lines.append("\t".join(str(row[h]) for h in header))
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# argument parsing


def _env_seed() -> int:
    raw = os.environ.get("PACHNER_LAB_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"PACHNER_LAB_SEED must be an integer, got {raw!r}") from None


class _Parser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit with ``EXIT_USAGE`` (2 means inconclusive here)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--bits", type=int, default=256, help="working precision in bits (default 256)")
    common.add_argument("--tol-solve", type=float, default=None, help="relative tolerance of the weight solve")
    common.add_argument("--tol-local", type=float, default=None, help="tolerance of local identities")
    common.add_argument("--tol-global", type=float, default=1e-35, help="tolerance of global comparisons")
    common.add_argument("--seed", type=int, default=None, help="first seed (default: $PACHNER_LAB_SEED or 0)")
    common.add_argument("--trials", type=int, default=1, help="number of seeds, starting at --seed")
    common.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    common.add_argument("--fixture", default=None, help="triangulation fixture (default: bundled s4.json)")
    common.add_argument("--out", default=None, help="report file (directory for 'fixtures gen')")
    common.add_argument("--mode", choices=("rational", "complex"), default="complex",
                        help="sampling of cocycle values")
    common.add_argument("--timings", action="store_true", help="include wall-clock timings in reports")

    parser = _Parser(prog="pachner-lab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    check = sub.add_parser("check", parents=[common], help="verify an identity suite")
    check.add_argument("target", choices=CHECKS)

    inv = sub.add_parser("invariant", help="evaluate the invariant or run an invariance scenario")
    inv_sub = inv.add_subparsers(dest="action", required=True, parser_class=_Parser)
    inv_sub.add_parser("compute", parents=[common], help="invariant of a fixture with a sampled cocycle")
    from .invariant import SCENARIOS

    harness = inv_sub.add_parser("harness", parents=[common], help="compare the invariant across a move")
    harness.add_argument("scenario", choices=SCENARIOS)

    fixtures = sub.add_parser("fixtures", help="fixture management")
    fx_sub = fixtures.add_subparsers(dest="action", required=True, parser_class=_Parser)
    fx_sub.add_parser("gen", parents=[common], help="write the bundled fixtures to --out (directory)")

    report = sub.add_parser("report", help="report aggregation")
    rp_sub = report.add_subparsers(dest="action", required=True, parser_class=_Parser)
    summ = rp_sub.add_parser("summarize", parents=[common], help="summary table over a directory of reports")
    summ.add_argument("directory")
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    if ns.command == "check":
        target = ns.target
    elif ns.command == "invariant":
        target = ns.scenario if ns.action == "harness" else "compute"
    elif ns.command == "report":
        target = ns.directory
    else:
        target = ns.action
    seed = ns.seed if ns.seed is not None else _env_seed()
    return RunConfig(ns.command, target, ns.bits, ns.tol_solve, ns.tol_local, ns.tol_global, seed, ns.trials,
                     ns.jobs, ns.fixture, ns.out, ns.mode, ns.timings)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = config_from_args(ns)
    except ConfigError as exc:
        parser.error(str(exc))
    try:
        code, report = dispatch(cfg)
    except FixtureError as exc:
        print(f"pachner-lab: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    if cfg.command == "report":
        print(format_table(report))
        if cfg.out:
            dump_json(report, cfg.out)
        return code
    dump_json(report, cfg.out if cfg.command != "fixtures" else None)
    for trial in report.get("trials", []):
        print(f"{report['command']} seed={trial['seed']}: {trial['status']}", file=sys.stderr)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
