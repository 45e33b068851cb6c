"""Command-line front end: mean, clt, cover, field subcommands.

Structured configuration goes in as JSON, tabular results come out as
CSV, and every run with an output directory also writes a manifest with
the tool version, config hash and produced files.  Identical arguments
and seed produce byte-identical primary outputs; only the manifest
carries timestamps.

Exit codes: 0 ok, 2 statistical failure, 3 input/precondition failure,
4 internal numerical inconsistency.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from . import fields as fl
from . import geometry as geo
from . import harness as hz
from . import measures as mz
from . import regularity as rg
from .errors import (
    AmbiguousGeodesicError,
    ConfigError,
    ConvergenceError,
    DomainError,
    LocalizationError,
    NumericalConsistencyError,
    SpaceMismatchError,
    StratcltError,
)
from .rng import substream

EXIT_OK = 0
EXIT_STATISTICAL = 2
EXIT_INPUT = 3
EXIT_NUMERICAL = 4

_PURPOSE_GAUSSIAN = 20
_PURPOSE_FIELD_EMPIRICAL = 21

_F = fl.format_float


def _load_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc


def _sha256_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()


def _resolve_threads(value: int | None) -> int:
    if value is None:
        env = os.environ.get("STRATCLT_THREADS")
        value = int(env) if env else 1
    if value == 0:
        value = os.cpu_count() or 1
    if value < 0:
        raise ConfigError("--threads must be >= 0")
    return value


def _write_manifest(outdir: Path, command: str, config_path: str | None,
                    seed: int | None, outputs: list[str]):
    manifest = {
        "tool": "stratclt",
        "version": __version__,
        "command": command,
        "config_path": config_path,
        "config_sha256": _sha256_file(config_path) if config_path else None,
        "seed": seed,
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "outputs": sorted(outputs),
    }
    with open(outdir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _dump_json(path: Path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv(path: Path, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(",".join(str(c) for c in row) + "\n")


# ---------------------------------------------------------------------------
# mean


def cmd_mean(args) -> int:
    raw = _load_json(args.config)
    measure = mz.DiscreteMeasure.from_json(raw)
    solver = mz.SolverConfig(**raw.get("solver", {}))
    diag = mz.frechet_mean(measure, solver)
    print(json.dumps(diag.to_json(), sort_keys=True))
    if args.grid_csv:
        _, _, _, blocks = mz._grid_certificate(measure, diag.mean, solver)
        rows = [("stratum", "coords", "frechet_value")]
        for blk in blocks:
            for i in range(blk.size):
                coords = ";".join(_F(float(c)) for c in blk.point_at(i).coords)
                rows.append((blk.label, coords, _F(float(blk.values[i]))))
        _write_csv(Path(args.grid_csv), rows)
    return EXIT_OK


# ---------------------------------------------------------------------------
# clt


def _report_csvs(report: hz.CLTReport, outdir: Path) -> list[str]:
    outputs = []
    net_desc = report.net.descriptors()

    def emit(name, rows):
        _write_csv(outdir / name, rows)
        outputs.append(name)

    fl.write_cov_csv(outdir / "cov_matrix.csv", report.analytic_cov)
    outputs.append("cov_matrix.csv")

    cov_rows = [("n", "sup_error", "frobenius_rel", "threshold", "passed")]
    ks_rows = [("n", "direction", "descriptor", "variance", "ks", "max_abs", "passed")]
    mah_rows = [("n", "dof", "ks", "max_abs", "passed")]
    mom_rows = [("n", "direction", "descriptor", "mc_fourth_moment", "mc_se",
                 "exact_fourth_moment", "bound", "ratio", "exact_ok", "passed")]
    inc_rows = [("n", "i", "j", "angular_distance", "mc_fourth_moment", "mc_se",
                 "exact_fourth_moment", "bound", "exact_ok", "passed")]
    for n, tests in report.per_n.items():
        if "cov" in tests:
            t = tests["cov"]
            cov_rows.append((n, _F(t["sup_error"]), _F(t["frobenius_rel"]),
                             _F(t["threshold"]), t["passed"]))
        if "ks" in tests:
            for r in tests["ks"]["directions"]:
                ks_rows.append((n, r["direction"], net_desc[r["direction"]],
                                _F(r["variance"]),
                                "" if r["ks"] is None else _F(r["ks"]),
                                "" if r["max_abs"] is None else _F(r["max_abs"]),
                                r["passed"]))
        if "mahalanobis" in tests:
            t = tests["mahalanobis"]
            mah_rows.append((n, t["dof"],
                             "" if t["ks"] is None else _F(t["ks"]),
                             "" if t["max_abs"] is None else _F(t["max_abs"]),
                             t["passed"]))
        if "moments" in tests:
            for r in tests["moments"]["directions"]:
                mom_rows.append((n, r["direction"], net_desc[r["direction"]],
                                 _F(r["mc_fourth_moment"]), _F(r["mc_se"]),
                                 _F(r["exact_fourth_moment"]), _F(r["bound"]),
                                 _F(r["ratio"]), r["exact_ok"], r["passed"]))
        if "increments" in tests:
            for r in tests["increments"]["pairs"]:
                inc_rows.append((n, r["i"], r["j"], _F(r["angular_distance"]),
                                 _F(r["mc_fourth_moment"]), _F(r["mc_se"]),
                                 _F(r["exact_fourth_moment"]), _F(r["bound"]),
                                 r["exact_ok"], r["passed"]))
    if len(cov_rows) > 1:
        emit("cov.csv", cov_rows)
    if len(ks_rows) > 1:
        emit("ks.csv", ks_rows)
    if len(mah_rows) > 1:
        emit("mahalanobis.csv", mah_rows)
    if len(mom_rows) > 1:
        emit("moments.csv", mom_rows)
    if len(inc_rows) > 1:
        emit("increments.csv", inc_rows)

    if report.martingale is not None:
        rows = [("direction", "descriptor", "residual", "bound", "passed")]
        for r in report.martingale["directions"]:
            rows.append((r["direction"], net_desc[r["direction"]],
                         _F(r["residual"]), _F(r["bound"]), r["passed"]))
        emit("martingale.csv", rows)

    if report.modulus is not None:
        emit("modulus.csv", list(report.modulus["table"].to_csv_rows()))
    return outputs


def cmd_clt(args) -> int:
    threads = _resolve_threads(args.threads)
    raw = _load_json(args.config)
    cfg = hz.config_from_json(raw, seed=args.seed, threads=threads)
    try:
        report = hz.run_clt_experiment(cfg)
    except LocalizationError as exc:
        refusal = {
            "error": "localization failure",
            "detail": str(exc),
            "report": exc.report.to_json() if exc.report is not None else None,
        }
        print(json.dumps(refusal, sort_keys=True), file=sys.stderr)
        return EXIT_INPUT
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    outputs = []
    if args.format in ("json", "both"):
        _dump_json(outdir / "report.json", report.to_json())
        outputs.append("report.json")
    if args.format in ("csv", "both"):
        outputs.extend(_report_csvs(report, outdir))
    _write_manifest(outdir, "clt", args.config, args.seed, outputs)
    print(json.dumps({"passed": report.passed, "out": str(outdir)},
                     sort_keys=True))
    return EXIT_OK if report.passed else EXIT_STATISTICAL


# ---------------------------------------------------------------------------
# cover


def cmd_cover(args) -> int:
    if args.config:
        raw = _load_json(args.config)
        space = geo.SpaceSpec.from_json(raw["space"])
        base = geo.Point.of(space, raw["base"])
        n_max = int(raw.get("n_max", args.n_max))
    else:
        if not args.space or args.base is None:
            raise ConfigError("cover needs --config or both --space and --base")
        space = geo.SpaceSpec.from_json(json.loads(args.space))
        base = geo.Point.of(space, json.loads(args.base))
        n_max = args.n_max
    profile = rg.dimension_constant(base, n_max)
    summary = {
        "d_estimate": profile.d_estimate,
        "stratum_dim_bound": profile.stratum_dim_bound,
        "counts": list(profile.counts),
    }
    print(json.dumps(summary, sort_keys=True))
    if args.out:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        _write_csv(outdir / "covering.csv", profile.to_csv_rows())
        _dump_json(outdir / "covering.json", summary)
        _write_manifest(outdir, "cover", args.config, None,
                        ["covering.csv", "covering.json"])
    return EXIT_OK


# ---------------------------------------------------------------------------
# field


def cmd_field(args) -> int:
    raw = _load_json(args.config)
    if "net" not in raw:
        raise ConfigError("field config needs a net spec")
    measure = mz.DiscreteMeasure.from_json(raw["measure"])
    if raw.get("base") is not None:
        base = geo.Point.of(measure.space, raw["base"])
    else:
        solver = mz.SolverConfig(**raw.get("solver", {}))
        base = mz.frechet_mean(measure, solver).mean
    net_spec = raw["net"]
    if isinstance(net_spec, dict) and "epsilon" in net_spec:
        net = rg.build_net(base, float(net_spec["epsilon"]))
    else:
        net = geo.net_from_directions(base, hz._directions_from_spec(base, net_spec))
    cov = fl.cov_matrix(measure, base, net)
    sampler = fl.GaussianFieldSampler.build(cov)
    draws = sampler.draw_matrix(substream(args.seed, _PURPOSE_GAUSSIAN),
                                args.draws)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    outputs = ["gaussian_draws.csv", "cov_matrix.csv"]
    fl.write_fields_csv(outdir / "gaussian_draws.csv", net, draws)
    fl.write_cov_csv(outdir / "cov_matrix.csv", cov)
    if args.empirical_n:
        sim = hz._FieldSimulator(measure, base, net)
        emp = sim.field_rows(args.seed, _PURPOSE_FIELD_EMPIRICAL, 0,
                             args.empirical_n, args.draws, 1)
        fl.write_fields_csv(outdir / "empirical_draws.csv", net, emp)
        outputs.append("empirical_draws.csv")
    _write_manifest(outdir, "field", args.config, args.seed, outputs)
    print(json.dumps({"out": str(outdir), "draws": args.draws}, sort_keys=True))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser / dispatch


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stratclt",
        description="Tangent-field statistics on stratified CAT(0) model spaces",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_mean = sub.add_parser("mean", help="Fréchet mean with grid certificate")
    p_mean.add_argument("--config", required=True, help="measure JSON file")
    p_mean.add_argument("--grid-csv", default=None,
                        help="write certificate grid values to this CSV")
    p_mean.set_defaults(func=cmd_mean)

    p_clt = sub.add_parser("clt", help="run a CLT verification experiment")
    p_clt.add_argument("--config", required=True, help="experiment JSON file")
    p_clt.add_argument("--seed", required=True, type=int)
    p_clt.add_argument("--out", required=True, help="output directory")
    p_clt.add_argument("--threads", type=int, default=None,
                       help="worker threads (0 = auto)")
    p_clt.add_argument("--format", choices=("json", "csv", "both"),
                       default="both")
    p_clt.set_defaults(func=cmd_clt)

    p_cover = sub.add_parser("cover", help="covering-number profile")
    p_cover.add_argument("--config", default=None)
    p_cover.add_argument("--space", default=None, help="space spec JSON")
    p_cover.add_argument("--base", default=None, help="base point coords JSON")
    p_cover.add_argument("--n-max", type=int, default=8)
    p_cover.add_argument("--out", default=None)
    p_cover.set_defaults(func=cmd_cover)

    p_field = sub.add_parser("field", help="Gaussian tangent field draws")
    p_field.add_argument("--config", required=True)
    p_field.add_argument("--seed", required=True, type=int)
    p_field.add_argument("--out", required=True)
    p_field.add_argument("--draws", type=int, default=1000)
    p_field.add_argument("--empirical-n", type=int, default=None,
                         help="also draw empirical fields at this sample size")
    p_field.set_defaults(func=cmd_field)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DomainError, SpaceMismatchError,
            AmbiguousGeodesicError, LocalizationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericalConsistencyError, ConvergenceError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except StratcltError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
