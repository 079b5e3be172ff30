"""``metric-forge`` command line.

Every run takes one JSON config document (``--config``), optionally
overridden by flags, and prints a JSON report.  Exit codes: 0 pass,
1 usage / I/O / validation error, 2 certificate failure, 3 degenerate.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import sys
import zlib
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import ValidationError

from . import __version__
from .config import CONFIGS, FORMAT_VERSION, InduceConfig
from .embedder import DistanceMatrix, distance_matrix, schoenberg_embed
from .errors import InsufficientDataError, MetricForgeError, SeedRequiredError
from .inducer import (
    check_separation,
    induce_distance,
    inner_product_space,
    verify_metric_axioms,
)
from .io import dumps, read_json, read_matrix_csv, read_points_csv, write_coordinates_csv, write_json, write_matrix_csv
from .kernels import (
    DEGENERATE,
    FAIL,
    PASS,
    check_negative_definite,
    check_strictly_negative_definite,
    get_kernel,
    squared_difference,
    squared_euclidean,
)
from .measures import IndexMeasure, make_family
from .mforms import MKernel, SignedDiscreteMeasure, check_m_negative_definite, check_strong_m_negative, get_mkernel

EXIT_OK, EXIT_USAGE, EXIT_CERT, EXIT_DEGENERATE = 0, 1, 2, 3
EMBED_RESIDUAL = 1e-8
IDENTITY_RTOL = 1e-10


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def stage_seed(seed: int, stage: str) -> int:
    """Deterministic per-stage seed fanned out from the run seed."""
    return int(np.random.SeedSequence([seed, zlib.crc32(stage.encode())]).generate_state(1)[0])


def _require_seed(cfg) -> int:
    if cfg.seed is None:
        raise SeedRequiredError("this command has stochastic steps; pass --seed or set 'seed' in the config")
    return cfg.seed


def _load_points(cfg, base_dir: Path) -> list:
    if cfg.points_file:
        path = Path(cfg.points_file)
        return read_points_csv(path if path.is_absolute() else base_dir / path)
    if cfg.points:
        return list(cfg.points)
    raise InsufficientDataError("no points given (use --points, 'points' or 'points_file')")


def _status(verdicts) -> tuple[str, int]:
    verdicts = list(verdicts)
    if FAIL in verdicts:
        return FAIL, EXIT_CERT
    if DEGENERATE in verdicts:
        return DEGENERATE, EXIT_DEGENERATE
    return PASS, EXIT_OK


def _build_metric(cfg: InduceConfig):
    family = make_family(cfg.family.name, cfg.family.params)
    measure = IndexMeasure.from_json(cfg.measure.as_json())
    base = get_kernel(cfg.base.name, cfg.base.params)
    return induce_distance(family, measure, base, mc_samples=cfg.mc_samples, quotient=cfg.quotient)


def _labels(n):
    return [f"p{i}" for i in range(n)]


def cmd_check_ndk(cfg, args, base_dir):
    seed = _require_seed(cfg)
    pts = _load_points(cfg, base_dir)
    results: dict[str, Any] = {}
    if cfg.m == 2:
        k = get_kernel(cfg.kernel.name, cfg.kernel.params)
        checker = check_strictly_negative_definite if cfg.strict else check_negative_definite
        report = checker(k, pts, cfg.trials, stage_seed(seed, "check"), cfg.tolerance)
        L = MKernel.from_kernel(k)
    else:
        L = get_mkernel(cfg.kernel.name, cfg.m, cfg.kernel.params)
        report = check_m_negative_definite(L, pts, cfg.trials, stage_seed(seed, "check"), cfg.tolerance,
                                           strict=cfg.strict)
    results["check"] = report.to_dict()
    verdicts = [report.verdict]
    if cfg.strong:
        measures = [SignedDiscreteMeasure(s.points, s.q, s.h) for s in cfg.strong]
        strong = check_strong_m_negative(L, measures, trials=min(cfg.trials, 100),
                                         seed=stage_seed(seed, "strong"), tolerance=cfg.tolerance)
        results["strong"] = strong.to_dict()
        verdicts.append(strong.verdict)
    status, code = _status(verdicts)
    return status, code, results, {}


def _induce_results(cfg: InduceConfig, pts, require_metric: bool):
    metric = _build_metric(cfg)
    labels = _labels(len(pts))
    D = distance_matrix(metric, pts, labels)
    separation = check_separation(metric, pts, cfg.support_count, tolerance=cfg.separation_tolerance)
    triple_trials = cfg.triple_trials if len(pts) >= 3 else 0
    if triple_trials:
        seed = _require_seed(cfg)
        axioms = verify_metric_axioms(metric, pts, triple_trials, stage_seed(seed, "axioms"), cfg.tolerance)
    else:
        axioms = verify_metric_axioms(metric, pts, 0, 0, cfg.tolerance)
    results = {
        "separation": separation.to_dict(),
        "axioms": axioms.to_dict(),
        "distance_matrix": D.to_json(),
        "measure_kind": metric.measure.kind,
        "max_stderr": axioms.details["max_stderr"],
    }
    verdicts = [axioms.verdict]
    if require_metric:
        verdicts.append(separation.verdict)
    return metric, D, results, verdicts


def cmd_induce(cfg, args, base_dir):
    pts = _load_points(cfg, base_dir)
    _, D, results, verdicts = _induce_results(cfg, pts, args.require_metric)
    status, code = _status(verdicts)
    return status, code, results, {"distances.csv": lambda p: write_matrix_csv(p, D)}


def cmd_embed(cfg, args, base_dir):
    results: dict[str, Any] = {}
    if cfg.matrix_file:
        path = Path(cfg.matrix_file)
        D = read_matrix_csv(path if path.is_absolute() else base_dir / path)
    elif cfg.matrix is not None:
        D = DistanceMatrix(np.asarray(cfg.matrix, dtype=float), cfg.labels or [])
    elif cfg.induce is not None:
        sub = cfg.induce
        if sub.seed is None and cfg.seed is not None:
            sub = sub.model_copy(update={"seed": cfg.seed})
        pts = _load_points(sub, base_dir)
        _, D, induced, _ = _induce_results(sub, pts, False)
        results["induce"] = induced
    else:
        raise InsufficientDataError("no distance matrix given (use --matrix, 'matrix', 'matrix_file' or 'induce')")
    if D.n < 2:
        raise InsufficientDataError("embedding needs at least a 2x2 matrix")
    emb = schoenberg_embed(D, cfg.tol_rel)
    results["embedding"] = emb.to_json()
    code = EXIT_OK if emb.embeddable else EXIT_CERT
    outputs = {
        "coordinates.csv": lambda p: write_coordinates_csv(p, emb),
        "embedding.json": lambda p: write_json(p, emb.to_json()),
    }
    return (PASS if code == EXIT_OK else FAIL), code, results, outputs


def cmd_demo_example1(cfg, args, base_dir):
    family = make_family(cfg.family.name, cfg.family.params)
    measure = IndexMeasure.from_json(cfg.measure.as_json())
    if cfg.random_points is not None:
        rp = cfg.random_points
        rng = np.random.default_rng(stage_seed(_require_seed(cfg), "points"))
        pts = list(rng.uniform(rp.low, rp.high, size=(rp.count, rp.dim)))
    else:
        pts = [np.asarray(p, dtype=float) if isinstance(p, list) else float(p) for p in _load_points(cfg, base_dir)]
    space = inner_product_space(family, measure, mc_samples=cfg.mc_samples)
    base = squared_difference if family.codomain == "real" else squared_euclidean
    metric = induce_distance(family, measure, base, mc_samples=cfg.mc_samples)
    n = len(pts)
    if n < 2:
        raise InsufficientDataError("need at least 2 points")

    G = space.gram_matrix(pts)
    polar = norm_gap = rho_gap = 0.0
    for i in range(n):
        zero = space.origin(pts[i])
        norm_gap = max(norm_gap, abs(space.norm(pts[i]) - metric.dist(pts[i], zero)))
        for j in range(n):
            a, b = pts[i], pts[j]
            pol = 0.25 * (space.norm(a + b) ** 2 - space.norm(a - b) ** 2)
            polar = max(polar, abs(G[i, j] - pol) / max(1.0, abs(G[i, j])))
            r2 = metric.dist(a, b) ** 2
            ip = space.inner(a - b, a - b)
            rho_gap = max(rho_gap, abs(r2 - ip) / max(1.0, abs(ip)))

    separation = check_separation(metric, pts)
    D = distance_matrix(metric, pts, _labels(n))
    emb = schoenberg_embed(D, cfg.tol_rel)
    bound = EMBED_RESIDUAL * (1.0 + float(np.max(D.entries)))
    checks = {
        "polarization": polar <= IDENTITY_RTOL,
        "norm_matches_distance_to_origin": norm_gap <= IDENTITY_RTOL,
        "distance_matches_inner_product": rho_gap <= IDENTITY_RTOL,
        "separation": separation.verdict == PASS,
        "embeddable": emb.embeddable,
        "isometry_residual": emb.residual <= bound,
    }
    results = {
        "points": pts,
        "inner_product_gram": G,
        "polarization_residual": polar,
        "norm_residual": norm_gap,
        "distance_inner_residual": rho_gap,
        "separation": separation.to_dict(),
        "distance_matrix": D.to_json(),
        "embedding": emb.to_json(),
        "residual_bound": bound,
        "checks": checks,
    }
    code = EXIT_OK if all(checks.values()) else EXIT_CERT
    return (PASS if code == EXIT_OK else FAIL), code, results, {
        "coordinates.csv": lambda p: write_coordinates_csv(p, emb)}


COMMANDS = {
    "check-ndk": cmd_check_ndk,
    "check-m": cmd_check_ndk,
    "induce": cmd_induce,
    "embed": cmd_embed,
    "demo-example1": cmd_demo_example1,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="metric-forge", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="JSON run configuration")
        p.add_argument("--points", help="CSV of points, one per row")
        p.add_argument("--matrix", help="CSV distance matrix with a header row of labels")
        p.add_argument("--out", type=Path, help="directory for report.json and CSV outputs")
        p.add_argument("--seed", type=int)
        p.add_argument("--trials", type=int)
        p.add_argument("--tolerance", type=float)
        p.add_argument("--m", type=int, help="even arity for m-form checks")
        p.add_argument("--require-metric", action="store_true",
                       help="exit 2 when the separation check finds a pseudometric")
        p.add_argument("--deterministic", action=argparse.BooleanOptionalAction, default=True,
                       help="omit timestamps so identical runs give identical reports (default)")
    return parser


def _load_config(args) -> tuple[Any, Path]:
    model = CONFIGS[args.command]
    raw: dict[str, Any] = {}
    base_dir = Path.cwd()
    if args.config is not None:
        raw = read_json(args.config)
        if not isinstance(raw, dict):
            raise UsageError("config must be a JSON object")
        base_dir = args.config.resolve().parent
    overrides = {"seed": args.seed, "tolerance": args.tolerance}
    if args.command in ("check-ndk", "check-m"):
        overrides.update(trials=args.trials, m=args.m)
    elif args.trials is not None or args.m is not None:
        raise UsageError(f"--trials/--m do not apply to {args.command}")
    if args.points is not None:
        overrides["points_file"] = str(Path(args.points).resolve())
        raw.pop("points", None)
    if args.matrix is not None:
        if args.command != "embed":
            raise UsageError("--matrix only applies to embed")
        overrides["matrix_file"] = str(Path(args.matrix).resolve())
    raw.update({k: v for k, v in overrides.items() if v is not None})
    cfg = model.model_validate(raw)
    if args.command == "check-m" and args.m is None and "m" not in raw:
        raise UsageError("check-m needs --m (or 'm' in the config)")
    if getattr(cfg, "m", 2) % 2 or getattr(cfg, "m", 2) < 2:
        raise UsageError("--m must be an even integer >= 2")
    return cfg, base_dir


def _emit(report: dict, out: Path | None) -> None:
    text = dumps(report)
    sys.stdout.write(text)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(text)


def main(argv=None) -> int:
    parser = build_parser()
    report: dict[str, Any] = {"format_version": FORMAT_VERSION, "command": None, "parameters": None,
                              "results": None, "error": None}
    out = None
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a command is required: " + ", ".join(COMMANDS))
        report["command"] = args.command
        out = args.out
        if not args.deterministic:
            report["generated_at"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
        cfg, base_dir = _load_config(args)
        report["parameters"] = cfg.model_dump(mode="json")
        if args.command == "induce":
            report["parameters"]["require_metric"] = args.require_metric
        status, code, results, outputs = COMMANDS[args.command](cfg, args, base_dir)
        report.update(status=status, exit_code=code, results=results)
        if out is not None:
            out.mkdir(parents=True, exist_ok=True)
            for fname, writer in outputs.items():
                writer(out / fname)
    except (UsageError, ValidationError, MetricForgeError, ValueError, OSError, KeyError, TypeError) as exc:
        code = EXIT_USAGE
        report.update(status="error", exit_code=code, results=None,
                      error={"type": type(exc).__name__, "message": str(exc)})
    _emit(report, out)
    return code


if __name__ == "__main__":
    sys.exit(main())
