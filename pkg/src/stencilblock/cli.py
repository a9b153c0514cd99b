"""Command-line front end.

Exit codes: 0 success, 1 verification mismatch, 2 parse error,
3 validation error, 4 infeasible configuration.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .emulator import emulate
from .experiment import (
    Experiment,
    ExperimentParseError,
    ExperimentValidationError,
    parse_experiment,
)
from .geometry import InvalidConfig, lumped_read_volume, tiling_geometry, validate_config
from .model import estimate, model_accuracy
from .report import ReportError, emit_report, emulate_row, estimate_row, load_report
from .stencils import Grid, reference_run
from .tuner import (
    InfeasibleConfig,
    ProjectionSpec,
    default_area,
    default_calibration,
    enumerate_candidates,
    estimate_area,
    is_feasible,
    project,
    rank_candidates,
)

log = logging.getLogger("stencilblock")

EXIT_OK, EXIT_MISMATCH, EXIT_PARSE, EXIT_VALIDATION, EXIT_INFEASIBLE = range(5)


def _warnings(exp: Experiment, config) -> list[str]:
    out = [str(v) for v in validate_config(config, exp.stencil, exp.dims, exp.device)
           if v.severity == "warning"]
    if exp.stencil.rank == 2:
        clipped = tiling_geometry(exp.dims, exp.stencil, config).t_read
        lumped = lumped_read_volume(exp.dims, exp.stencil, config)
        if clipped != lumped:
            out.append(f"warning: [t_read_formula] per-block clipping gives {clipped} reads, "
                       f"lumped out-of-bound subtraction gives {lumped}")
    return out


def _require_config(exp: Experiment):
    if exp.config is None:
        raise ExperimentValidationError(["config: this command needs a single config"])
    return exp.config


def _area_columns(exp, config):
    area = exp.area or default_area(exp.stencil, exp.device)
    dsp, bits = estimate_area(config, exp.stencil, area)
    return dsp, bits, {"dsp_pct": 100.0 * dsp / exp.device.dsp_count,
                       "bram_bits_pct": 100.0 * bits / exp.device.bram_bits}


def cmd_model(exp: Experiment, args):
    config = _require_config(exp)
    est = estimate(exp.stencil, config, exp.device, exp.dims, exp.iterations, exp.f_max)
    extra = {"warnings": _warnings(exp, config),
             "used_bw_pct": 100.0 * est.th_mem * 1e9 / exp.device.th_max}
    if exp.area is not None:
        dsp, bits, cols = _area_columns(exp, config)
        extra.update(cols)
        if not is_feasible(dsp, bits, exp.device):
            raise InfeasibleConfig(f"{config.to_dict()} does not fit {exp.device.name}")
    if exp.measured_gbps is not None:
        extra["measured_gbps"] = exp.measured_gbps
        extra["model_accuracy"] = 100.0 * model_accuracy(exp.measured_gbps, est.eff_gbps)
    return [estimate_row(config, exp.dims, est, **extra)], EXIT_OK


def cmd_emulate(exp: Experiment, args):
    config = _require_config(exp)
    spec = exp.stencil
    geom = tiling_geometry(exp.dims, spec, config)
    if exp.dry_run:
        _, counters = emulate(spec, None, config, exp.iterations, dims=exp.dims, dry_run=True)
        verified = None
    else:
        grid = Grid.load(exp.grid) if exp.grid else Grid.random(exp.dims, exp.seed)
        aux = None
        if spec.has_aux_grid:
            aux = Grid.load(exp.aux_grid) if exp.aux_grid else Grid.random(exp.dims, exp.seed + 1)
        out, counters = emulate(spec, grid, config, exp.iterations, aux=aux)
        verified = None
        if exp.verify:
            ref = reference_run(spec, grid, aux, exp.iterations)
            verified = bool(np.array_equal(out.data.view(np.uint32), ref.data.view(np.uint32)))
    row = emulate_row(config, exp.dims, exp.iterations, counters, geom.t_read, geom.t_write,
                      dry_run=exp.dry_run, verified=verified, seed=exp.seed,
                      warnings=_warnings(exp, config))
    return [row], EXIT_MISMATCH if verified is False else EXIT_OK


def cmd_tune(exp: Experiment, args):
    if exp.search is None:
        raise ExperimentValidationError(["search: the tune command needs search bounds"])
    area = exp.area or default_area(exp.stencil, exp.device)
    f = exp.f_max or exp.device.f_max_default
    cands = enumerate_candidates(exp.stencil, exp.dims, exp.search)
    shortlist = rank_candidates(cands, exp.stencil, exp.device, exp.dims, exp.iterations, f, area, exp.k)
    if not shortlist:
        raise InfeasibleConfig("no candidate configuration fits the device")
    rows = []
    for c in shortlist:
        rows.append(estimate_row(
            c.config, exp.dims, c.estimate,
            dsp_pct=c.dsp_pct(exp.device), bram_bits_pct=c.bram_pct(exp.device),
            used_bw_pct=100.0 * c.estimate.th_mem * 1e9 / exp.device.th_max,
            warnings=[str(w) for w in c.warnings],
        ))
    return rows, EXIT_OK


def cmd_project(exp: Experiment, args):
    config = _require_config(exp)
    area = exp.area or default_area(exp.stencil, exp.device)
    cal = exp.calibration if exp.calibration is not None else default_calibration(exp.stencil)
    proj = ProjectionSpec(exp.device, exp.f_max or exp.device.f_max_default, cal,
                          exp.iterations, exp.dims)
    p = project(exp.stencil, proj, config, area)
    row = estimate_row(config, exp.dims, p.estimate,
                       dsp_pct=100.0 * p.dsp_used / exp.device.dsp_count,
                       bram_bits_pct=100.0 * p.bram_bits_used / exp.device.bram_bits,
                       used_bw_pct=p.used_bandwidth_pct, warnings=_warnings(exp, config))
    return [row], EXIT_OK


COMMANDS = {"model": cmd_model, "emulate": cmd_emulate, "tune": cmd_tune, "project": cmd_project}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stencilblock",
                                     description="Blocked stencil accelerator model and emulator")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--format", choices=["json", "csv", "table"], default="table")
        p.add_argument("--out", type=Path, help="write the report here instead of stdout")
        p.add_argument("-v", "--verbose", action="store_true")

    for name, helptext in (("model", "estimate one configuration"),
                           ("emulate", "run the functional emulator"),
                           ("tune", "enumerate, rank and prune configurations"),
                           ("project", "calibrated projection onto another device")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--experiment", required=True,
                       help="experiment JSON path or shipped fixture name")
        p.add_argument("--fmax", type=float, help="kernel frequency in MHz")
        common(p)
        if name == "emulate":
            p.add_argument("--seed", type=int, help="seed for the random initial grid")
            p.add_argument("--dry-run", action="store_true", help="counters only, no cell data")
            p.add_argument("--verify", action="store_true", help="compare against the reference solver")
        if name == "project":
            p.add_argument("--calibration", type=float, help="calibration factor in (0, 1]")

    p = sub.add_parser("report", help="re-render a saved JSON report")
    p.add_argument("input", type=Path)
    common(p)
    return parser


def _apply_overrides(exp: Experiment, args) -> Experiment:
    changes = {}
    if getattr(args, "fmax", None) is not None:
        if args.fmax <= 0:
            raise ExperimentValidationError(["--fmax: must be positive"])
        changes["f_max_mhz"] = args.fmax
    if getattr(args, "seed", None) is not None:
        if args.seed < 0:
            raise ExperimentValidationError(["--seed: must be non-negative"])
        changes["seed"] = args.seed
    if getattr(args, "dry_run", False):
        changes["dry_run"] = True
    if getattr(args, "verify", False):
        changes["verify"] = True
    if getattr(args, "calibration", None) is not None:
        if not 0 < args.calibration <= 1:
            raise ExperimentValidationError(["--calibration: must be in (0, 1]"])
        changes["calibration"] = args.calibration
    return replace(exp, **changes) if changes else exp


def _write(text: str, out: Path | None):
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "report":
            try:
                kind, experiment, rows = load_report(args.input.read_text())
            except (OSError, ValueError) as exc:
                print(f"parse error: {exc}", file=sys.stderr)
                return EXIT_PARSE
            _write(emit_report(rows, args.format, kind, experiment), args.out)
            return EXIT_OK

        exp = _apply_overrides(parse_experiment(args.experiment), args)
        log.debug("experiment: %s", exp)
        rows, code = COMMANDS[args.command](exp, args)
        _write(emit_report(rows, args.format, args.command, exp.to_dict()), args.out)
        if code == EXIT_MISMATCH:
            print("verification failed: emulator output differs from the reference", file=sys.stderr)
        return code
    except ExperimentParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ExperimentValidationError as exc:
        for problem in exc.problems:
            print(f"validation error: {problem}", file=sys.stderr)
        return EXIT_VALIDATION
    except InvalidConfig as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except InfeasibleConfig as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ReportError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
