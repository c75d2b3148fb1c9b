# Levy positivity toolkit - command-line entry point
#
#   python levy_cli.py analyze  --spec catalog:positive_alpha05_no_drift --out out/
#   python levy_cli.py classify --spec model.json --out out/ --grid 4:40
#   python levy_cli.py simulate --spec model.json --out out/ --t 1e-2,1e-3 --n 100000
#   python levy_cli.py verify   --out out/            (full acceptance suite)

import argparse
import logging
import os
import sys
from dataclasses import dataclass, field
from typing import Optional
import pandas as pd
from acceptance import AcceptanceSettings, acceptance_report, run_acceptance, run_model_checks
from config import DEFAULT_SEED, LOG_LEVEL, OUTPUT_DIR, WORKERS
from criterion import GridConfig, classify
from errors import LevyError, ModelValidationError, SpecParseError
from levy_model import (
    MINUS,
    SIDES,
    bounded_variation,
    density_cross_check,
    functional_table,
    require_valid,
    side_has_infinite_activity,
    side_is_zero,
)
from quadrature_helpers import dyadic_grid
from report_helpers import (
    batch_frame,
    ensure_output_dir,
    functional_frame,
    kolmogorov_frame,
    ratio_frame,
    run_metadata,
    write_csv,
    write_json,
    witness_frame,
    write_workbook,
)
from simulator import SimConfig, estimate_along
from spec_helpers import load_model, load_run_config, parse_grid, parse_t_values


COMMANDS = ("analyze", "classify", "simulate", "verify")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INPUT = 2
EXIT_VALIDATION = 3
EXIT_ACCEPTANCE = 4

ANALYZE_GRID = (0, 30)
FULL_SUITE = "catalog:all"


##### RUN MANIFEST #####


@dataclass
class RunManifest:

    """Everything one invocation needs; echo() feeds the config hash"""

    command: str
    spec: Optional[str]
    out_dir: str
    seed: int = DEFAULT_SEED
    grid: Optional[tuple] = None
    t_values: list = field(default_factory=list)
    n: int = 100_000
    M: float = 10.0
    epsilon: Optional[float] = None
    h_plus: float = 1.0
    h_minus: float = 1.0
    gaussian_surrogate: bool = True
    kappa: float = 1.0
    C: float = 1.0
    r_max: Optional[float] = None
    s_min: Optional[float] = None
    workers: int = WORKERS
    xlsx: bool = False

    def echo(self):
        return {
            "command": self.command,
            "spec": self.spec,
            "seed": self.seed,
            "grid": list(self.grid) if self.grid else None,
            "t": self.t_values,
            "n": self.n,
            "M": self.M,
            "epsilon": self.epsilon,
            "h_plus": self.h_plus,
            "h_minus": self.h_minus,
            "gaussian_surrogate": self.gaussian_surrogate,
            "kappa": self.kappa,
            "C": self.C,
            "r_max": self.r_max,
            "s_min": self.s_min,
        }

    def sim_config(self):
        return SimConfig(
            h_plus=self.h_plus,
            h_minus=self.h_minus,
            epsilon=self.epsilon,
            gaussian_surrogate=self.gaussian_surrogate,
            n_samples=self.n,
            master_seed=self.seed,
            t_values=list(self.t_values),
            workers=self.workers,
        )

    def grid_config(self):
        defaults = GridConfig()
        j_min, j_max = self.grid or (defaults.j_min, defaults.j_max)
        return GridConfig(
            j_min=j_min,
            j_max=j_max,
            r_max=self.r_max if self.r_max is not None else defaults.r_max,
            s_min=self.s_min if self.s_min is not None else defaults.s_min,
        )

    def metadata(self, label):
        return run_metadata(label, self.seed, self.echo())


##### ARGUMENTS #####


def build_parser():
    parser = argparse.ArgumentParser(
        prog="levy_cli",
        description="Small-time positivity of Levy processes: functionals, verdicts, simulation",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--spec", help="process spec JSON path or catalog:<name>")
    parser.add_argument("--out", default=None, help=f"output directory (default {OUTPUT_DIR})")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--grid", default=None, help="dyadic grid jmin:jmax")
    parser.add_argument("--t", dest="t_values", default=None, help="comma-separated times")
    parser.add_argument("--n", type=int, default=None, help="samples per estimate")
    parser.add_argument("--M", type=float, default=None, help="ratio / linear event multiplier")
    parser.add_argument("--config", default=None, help="versioned JSON run config")
    parser.add_argument("--xlsx", action="store_true", help="also bundle every table into one workbook")
    return parser


def build_manifest(args):

    """
    Merge a run config with command-line flags; flags win

    Raises:
        SpecParseError: bad config file, grid or t values
    """

    config = load_run_config(args.config) if args.config else {}

    def pick(flag, key, default):
        if flag is not None:
            return flag
        return config.get(key, default)

    grid = pick(args.grid, "grid", None)
    t_values = pick(args.t_values, "t", None)

    manifest = RunManifest(
        command=args.command,
        spec=args.spec,
        out_dir=args.out or OUTPUT_DIR,
        seed=int(pick(args.seed, "seed", DEFAULT_SEED)),
        grid=parse_grid(grid) if grid is not None else None,
        t_values=parse_t_values(t_values) if t_values is not None else [],
        n=int(pick(args.n, "n", 100_000)),
        M=float(pick(args.M, "M", 10.0)),
        epsilon=config.get("epsilon"),
        h_plus=float(config.get("h_plus", 1.0)),
        h_minus=float(config.get("h_minus", 1.0)),
        gaussian_surrogate=bool(config.get("gaussian_surrogate", True)),
        kappa=float(config.get("kappa", 1.0)),
        C=float(config.get("C", 1.0)),
        r_max=config.get("r_max"),
        s_min=config.get("s_min"),
        workers=int(config.get("workers", WORKERS)),
        xlsx=args.xlsx or bool(config.get("xlsx", False)),
    )

    if manifest.spec is None and manifest.command != "verify":
        raise SpecParseError(f"'{manifest.command}' needs --spec")

    return manifest


##### COMMANDS #####


def run_analyze(manifest):

    """Functionals on the dyadic grid plus a JSON summary of the model"""

    model = load_model(manifest.spec)
    report = require_valid(model, allow_analytic_only=True)

    j_min, j_max = manifest.grid or ANALYZE_GRID
    table = functional_table(model, dyadic_grid(j_min, j_max))
    frame = functional_frame(table)
    metadata = manifest.metadata(model.label)

    summary = {
        "model_label": model.label,
        "spec": model.spec,
        "grid": {"j_min": j_min, "j_max": j_max, "points": len(table.grid)},
        "validation": report.to_dict(),
        "sides": {
            side: {
                "zero": side_is_zero(model, side),
                "infinite_activity": side_has_infinite_activity(model, side),
                "bounded_variation": bounded_variation(model, side),
                "tail": model.tail(side).describe(),
            }
            for side in SIDES
        },
    }

    if not report.analytic_only:
        checks = [density_cross_check(model, x) for x in (0.5, 0.25, 0.125)]
        if all(c is not None for c in checks):
            summary["density_cross_check"] = checks

    out = manifest.out_dir
    write_csv(frame, os.path.join(out, "functionals.csv"), metadata)
    write_json(summary, os.path.join(out, "summary.json"), metadata)
    return {"functionals": frame}, EXIT_OK, metadata


def run_classify(manifest):
    model = load_model(manifest.spec)
    report = classify(model, manifest.grid_config())
    metadata = manifest.metadata(model.label)

    frame = ratio_frame(report.ratio_table)
    out = manifest.out_dir
    write_csv(frame, os.path.join(out, "ratios.csv"), metadata)
    write_json(report.to_dict(), os.path.join(out, "criterion.json"), metadata)

    logging.info(f"Verdict: {report.verdict.value} (oracle agrees: {report.oracle_agrees})")
    return {"ratios": frame}, EXIT_OK, metadata


def run_simulate(manifest):

    """P(X_t >= 0), the jump-ratio event and the linear event at every t"""

    if not manifest.t_values:
        raise SpecParseError("simulate needs --t (or 't' in the run config)")

    model = load_model(manifest.spec)
    require_valid(model, allow_analytic_only=True)
    cfg = manifest.sim_config()

    estimators = ["positive", "linear"]
    if side_is_zero(model, MINUS):
        logging.warning(f"'{model.label}' has no negative jumps; skipping the jump-ratio event")
    else:
        estimators.insert(1, "ratio")

    series = [
        estimate_along(model, manifest.t_values, name, cfg, M=None if name == "positive" else manifest.M)
        for name in estimators
    ]

    metadata = manifest.metadata(model.label)
    frame = batch_frame(series)
    report = {
        "model_label": model.label,
        "seed": manifest.seed,
        "t": manifest.t_values,
        "n": manifest.n,
        "M": manifest.M,
        "config": cfg.echo(),
        "estimates": {s.estimator: [e.to_dict() for e in s.estimates] for s in series},
        "trends": {s.estimator: s.trend for s in series},
    }

    out = manifest.out_dir
    write_csv(frame, os.path.join(out, "simulation.csv"), metadata)
    write_json(report, os.path.join(out, "simulation.json"), metadata)
    return {"simulation": frame}, EXIT_OK, metadata


def run_verify(manifest):

    """Full acceptance suite, or the per-model checks when --spec names one model"""

    settings = AcceptanceSettings(
        seed=manifest.seed,
        n_samples=manifest.n,
        workers=manifest.workers,
        kappa=manifest.kappa,
        C=manifest.C,
    )

    if manifest.spec in (None, FULL_SUITE):
        label = "catalog"
        results = run_acceptance(settings)
    else:
        model = load_model(manifest.spec)
        label = model.label
        results = run_model_checks(model, settings, manifest.t_values or None)

    for result in results:
        print(result.line())

    frame = pd.DataFrame(
        [[r.number, r.name, r.status, r.detail] for r in results],
        columns=["criterion", "name", "status", "detail"],
    )
    tables = {"acceptance": frame}
    for result in results:
        if "sequence" in result.data:
            tables["witness"] = witness_frame(result.data)
        elif "rows" in result.data:
            tables["kolmogorov"] = kolmogorov_frame(result.data)

    out = manifest.out_dir
    metadata = manifest.metadata(label)
    for name, table in tables.items():
        write_csv(table, os.path.join(out, f"{name}.csv"), metadata)
    write_json(acceptance_report(results), os.path.join(out, "acceptance.json"), metadata)

    failures = [r for r in results if r.hard_failure]
    if failures:
        logging.error(f"{len(failures)} acceptance criteria failed: {[r.number for r in failures]}")
        return tables, EXIT_ACCEPTANCE, metadata
    return tables, EXIT_OK, metadata


RUNNERS = {
    "analyze": run_analyze,
    "classify": run_classify,
    "simulate": run_simulate,
    "verify": run_verify,
}


##### ENTRY POINT #####


def main(argv=None):

    """
    Run one command

    Returns:
        Exit code: 0 success, 1 other error, 2 input error,
        3 validation error, 4 acceptance failure
    """

    logging.basicConfig(level=LOG_LEVEL, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)

    logging.info("=" * 60)
    logging.info(f"levy_cli {args.command} (spec: {args.spec})")
    logging.info("=" * 60)

    try:
        manifest = build_manifest(args)
        ensure_output_dir(manifest.out_dir)
        tables, code, metadata = RUNNERS[manifest.command](manifest)

        if manifest.xlsx:
            write_workbook(tables, os.path.join(manifest.out_dir, f"{manifest.command}.xlsx"), metadata)

    except SpecParseError as e:
        logging.error(f"Input error: {e}")
        return EXIT_INPUT
    except ModelValidationError as e:
        logging.error(f"Validation error: {e}")
        return EXIT_VALIDATION
    except ValueError as e:
        logging.error(f"Input error: {e}")
        return EXIT_INPUT
    except LevyError as e:
        logging.error(f"{type(e).__name__}: {e}")
        return EXIT_ERROR

    logging.info("=" * 60)
    logging.info(f"Finished {manifest.command} with exit code {code}; outputs in {manifest.out_dir}")
    logging.info("=" * 60)
    return code


if __name__ == "__main__":
    sys.exit(main())
