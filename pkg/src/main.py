"""Command-line interface for clock precision analysis.

Every subcommand runs one stage with JSON/CSV input and output so runs can be
composed or replayed; ``run`` executes the whole pipeline and ``report``
merges stage outputs into one report.
"""

import argparse
import hashlib
import json
import sys
from collections.abc import Sequence
from pathlib import Path

import numpy as np

from . import __version__
from .config import get_settings
from .errors import ClockworkError
from .identification.classifier import StateSequence
from .inference.full_matrix import GeneratorEstimate
from .inference.mle import RateEstimate
from .ingestion.loader import TraceLoader, load_artifact
from .logger import configure_logging, get_logger
from .markov.generator import cycle_affinity
from .output.schemas import (
    BudgetSection,
    DriftScanFile,
    GeneratorFile,
    IdentificationSection,
    JumpRecordFile,
    LevelModelFile,
    PrecisionFile,
    PrecisionReport,
    Provenance,
    RatesFile,
    TheoryFile,
    TickSection,
    state_from_label,
)
from .output.writer import write_frame, write_json, write_sequence, write_trace
from .processor import (
    ClockPipeline,
    PipelineConfig,
    drift_file,
    drift_frame,
    histogram_frame,
    identify,
    infer_rates,
    precision_sections,
    resolve_calibration,
    scan_drift,
    simulate,
    theory_sections,
    thermo_section,
    tick_section,
    tur_sections,
    waiting_time_frame,
)
from .simulation.telegraph import Channel
from .thermo.budget import ThermoConfig, dbm_to_watts, entropy_per_tick
from .ticks.counting import count_net_transfers, extract_jumps

logger = get_logger(__name__)

EXIT_USAGE = 2


# ============== Argument Parsing ==============

def _state_map(text: str) -> dict[str, int]:
    """Parse ``0=0,R=1,L=2`` into a label-to-component mapping."""
    mapping = {}
    try:
        for item in text.split(","):
            label, component = item.split("=")
            state_from_label(label.strip())
            mapping[label.strip()] = int(component)
    except (ValueError, KeyError):
        raise argparse.ArgumentTypeError(f"invalid state map {text!r}") from None
    return mapping


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    common.add_argument("--log-format", choices=["console", "json"])
    common.add_argument("--output-dir", type=Path, help="Directory for written artifacts")

    columns = argparse.ArgumentParser(add_help=False)
    columns.add_argument("--column-time", default="time_s")
    columns.add_argument("--column-signal", default="signal")
    columns.add_argument("--channel", type=Channel, choices=list(Channel), default=Channel.DC)

    parser = argparse.ArgumentParser(
        prog="clockwork",
        description="Precision and entropy budget of stochastic clocks from telegraph traces",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="Draw a trajectory and a noisy trace")
    p.add_argument("--generator", type=Path, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--duration-s", type=float, default=1800.0)
    p.add_argument("--dt-s", type=float, default=0.005)
    p.add_argument("--noise-sigma", type=float, default=0.1)
    p.add_argument("--channel", type=Channel, choices=list(Channel), default=Channel.DC)

    p = sub.add_parser("identify", parents=[common, columns], help="Fit levels and classify")
    p.add_argument("--trace", type=Path, required=True)
    p.add_argument("--bins", type=int)
    p.add_argument("--debounce-k", type=int)
    p.add_argument("--state-map", type=_state_map)

    p = sub.add_parser("ticks", parents=[common], help="Extract jumps and count ticks")
    p.add_argument("--sequence", type=Path, required=True)

    p = sub.add_parser("rates", parents=[common], help="Maximum-likelihood rate matrix")
    p.add_argument("--jumps", type=Path, required=True)
    p.add_argument("--with-deadtime", action="store_true")
    p.add_argument("--bootstrap", action="store_true")
    p.add_argument("--bootstrap-subsets", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--drift", action="store_true", help="Also run the sliding-window scan")
    p.add_argument("--drift-window-s", type=float)
    p.add_argument("--drift-shift", type=float)

    p = sub.add_parser("precision", parents=[common], help="Empirical precision of both estimators")
    p.add_argument("--sequence", type=Path, required=True)
    p.add_argument("--slices", type=int)
    p.add_argument("--calibration", choices=["truth", "fitted"], default="fitted")
    p.add_argument("--generator", type=Path, help="True generator for truth calibration")

    p = sub.add_parser("theory", parents=[common], help="Counting-statistics predictions")
    p.add_argument("--generator", type=Path)
    p.add_argument("--rates", type=Path, help="Fitted rates; their errors are propagated")
    p.add_argument("--weights", choices=["net", "opt", "both"], default="both")

    p = sub.add_parser("thermo", parents=[common, columns], help="Entropy budget of the readout")
    p.add_argument("--trace", type=Path, required=True)
    p.add_argument("--tick-rate-hz", type=float)
    p.add_argument("--precision", type=Path, help="Precision JSON providing the tick rate")
    p.add_argument("--generator", type=Path, help="Generator providing the cycle affinity")
    p.add_argument("--temperature-k", type=float)
    p.add_argument("--v-dqd-mv", type=float)
    p.add_argument("--v-cs-mv", type=float)
    p.add_argument("--p-in-dbm", type=float)
    p.add_argument("--p-out-dbm", type=float)

    p = sub.add_parser("report", parents=[common], help="Merge stage outputs into one report")
    p.add_argument("--identification", type=Path)
    p.add_argument("--ticks", type=Path)
    p.add_argument("--rates", type=Path)
    p.add_argument("--precision", type=Path)
    p.add_argument("--theory", type=Path)
    p.add_argument("--budget", type=Path)
    p.add_argument("--drift", type=Path)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("run", parents=[common, columns], help="Run the full pipeline")
    p.add_argument("--config", type=Path, help="PipelineConfig JSON; flags override its keys")
    p.add_argument("--generator", type=Path)
    p.add_argument("--trace", type=Path, dest="trace_path")
    p.add_argument("--trace-y", type=Path, dest="trace_y_path", help="Second rf quadrature")
    p.add_argument("--seed", type=int)
    p.add_argument("--duration-s", type=float)
    p.add_argument("--dt-s", type=float)
    p.add_argument("--noise-sigma", type=float)
    p.add_argument("--bins", type=int)
    p.add_argument("--debounce-k", type=int)
    p.add_argument("--state-map", type=_state_map)
    p.add_argument("--slices", type=int)
    p.add_argument("--calibration", choices=["truth", "fitted"])
    p.add_argument("--with-deadtime", action="store_true", default=None)
    p.add_argument("--bootstrap", action="store_true", default=None)
    p.add_argument("--bootstrap-subsets", type=int)
    p.add_argument("--no-drift", action="store_false", dest="drift", default=None)
    p.add_argument("--drift-window-s", type=float)
    p.add_argument("--drift-shift", type=float)
    p.add_argument("--temperature-k", type=float)
    p.add_argument("--v-dqd-mv", type=float)
    p.add_argument("--v-cs-mv", type=float)
    p.add_argument("--p-in-dbm", type=float)
    p.add_argument("--p-out-dbm", type=float)
    return parser


# ============== Subcommands ==============

def _output_dir(args: argparse.Namespace) -> Path:
    return Path(args.output_dir or get_settings().output_dir)


def _emit(payload: dict) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = PipelineConfig(
        generator=load_artifact(args.generator, GeneratorFile),
        seed=args.seed,
        duration_s=args.duration_s,
        dt_s=args.dt_s,
        noise_sigma=args.noise_sigma,
        channel=args.channel,
    )
    rec, trace = simulate(cfg)
    out = _output_dir(args)
    write_json(out / "truth_jumps.json", JumpRecordFile.from_record(rec))
    write_trace(out / "trace.csv", trace)
    _emit({"jumps": rec.n_jumps, "samples": len(trace), "output_dir": str(out)})
    return 0


def cmd_identify(args: argparse.Namespace) -> int:
    loader = TraceLoader(args.column_time, args.column_signal)
    trace = loader.load(args.trace, channel=args.channel)
    state_map = None
    if args.state_map:
        state_map = {state_from_label(k): v for k, v in args.state_map.items()}
    result = identify(trace, args.bins, args.debounce_k, state_map)
    out = _output_dir(args)
    write_json(out / "level_model.json", LevelModelFile.from_model(result.model))
    write_sequence(out / "sequence.csv", result.sequence)
    write_json(out / "identification.json", result.section)
    write_frame(out / "histogram_fit.csv", histogram_frame(result.histogram, result.model))
    _emit(result.section.model_dump(by_alias=True))
    return 0


def _load_sequence(path: Path) -> StateSequence:
    return TraceLoader().load_sequence(path)


def cmd_ticks(args: argparse.Namespace) -> int:
    rec = extract_jumps(_load_sequence(args.sequence))
    section = tick_section(count_net_transfers(rec))
    out = _output_dir(args)
    write_json(out / "jumps.json", JumpRecordFile.from_record(rec))
    write_json(out / "ticks.json", section)
    _emit(section.model_dump(by_alias=True))
    return 0


def cmd_rates(args: argparse.Namespace) -> int:
    rec = load_artifact(args.jumps, JumpRecordFile).to_record()
    result = infer_rates(
        rec,
        with_deadtime=args.with_deadtime,
        bootstrap=args.bootstrap,
        bootstrap_subsets=args.bootstrap_subsets,
        seed=args.seed,
    )
    out = _output_dir(args)
    write_json(out / "rates.json", result.file)
    frame = waiting_time_frame(result.waiting_times, args.with_deadtime)
    write_frame(out / "waiting_times.csv", frame)
    if args.drift:
        scan = drift_file(
            scan_drift(rec, result.estimate, args.drift_window_s, args.drift_shift)
        )
        write_json(out / "drift_scan.json", scan)
        write_frame(out / "drift_scan.csv", drift_frame(scan))
    _emit({state: entry.model_dump() for state, entry in result.file.exit.items()})
    return 0


def cmd_precision(args: argparse.Namespace) -> int:
    seq = _load_sequence(args.sequence)
    truth = load_artifact(args.generator, GeneratorFile).to_generator() if args.generator else None
    if args.calibration == "truth" and truth is None:
        logger.error("truth_calibration_needs_generator")
        return EXIT_USAGE
    calibration = resolve_calibration(args.calibration, extract_jumps(seq), truth)
    sections = precision_sections(seq, calibration, args.slices)
    write_json(_output_dir(args) / "precision.json", PrecisionFile(sections=sections))
    _emit({s.estimator: {"S_hz": s.S_hz, "S_stderr_hz": s.S_stderr_hz} for s in sections})
    return 0


def cmd_theory(args: argparse.Namespace) -> int:
    if args.generator is None and args.rates is None:
        logger.error("theory_needs_generator_or_rates")
        return EXIT_USAGE
    estimate = None
    if args.rates is not None:
        rates = load_artifact(args.rates, RatesFile)
        estimate = _estimate_from_rates(rates)
    g = (
        load_artifact(args.generator, GeneratorFile).to_generator()
        if args.generator is not None
        else estimate.generator
    )
    sections = theory_sections(g, estimate)
    write_json(_output_dir(args) / "theory.json", TheoryFile(sections=sections))
    wanted = {"net", "opt"} if args.weights == "both" else {args.weights}
    _emit(
        {
            s.estimator: {"S_theory_hz": s.S_theory_hz, "S_opt_hz": s.S_opt_hz}
            for s in sections
            if s.estimator in wanted
        }
    )
    return 0


def _estimate_from_rates(rates: RatesFile) -> GeneratorEstimate:
    """Rebuild the fitted generator with its error matrix from a rates file."""
    g = rates.generator.to_generator()
    n = g.n_states
    errors = np.zeros((n, n))
    counts = np.zeros((n, n), dtype=np.int64)
    for key, entry in rates.pairs.items():
        target, source = (state_from_label(s) for s in key.split("|"))
        errors[target, source] = entry.stderr_hz
        counts[target, source] = entry.n
    exits = []
    for label, entry in sorted(rates.exit.items(), key=lambda kv: state_from_label(kv[0])):
        errors[state_from_label(label), state_from_label(label)] = entry.stderr_hz
        exits.append(
            RateEstimate(
                gamma_hat=entry.gamma_hz,
                n=entry.n,
                deadtime_hat=entry.deadtime_s,
                alpha=entry.alpha,
                eta_hat=entry.eta_s,
            )
        )
    return GeneratorEstimate(
        generator=g, std_errors=errors, counts=counts, exit_estimates=tuple(exits)
    )


def cmd_thermo(args: argparse.Namespace) -> int:
    loader = TraceLoader(args.column_time, args.column_signal)
    trace = loader.load(args.trace, channel=args.channel)

    tick_rate = args.tick_rate_hz
    if tick_rate is None and args.precision is not None:
        sections = load_artifact(args.precision, PrecisionFile).sections
        tick_rate = abs(sections[0].nu_hz)
    if tick_rate is None:
        logger.error("thermo_needs_tick_rate")
        return EXIT_USAGE

    overrides = {}
    if args.temperature_k is not None:
        overrides["temperature_k"] = args.temperature_k
    if args.v_dqd_mv is not None:
        overrides["v_dqd"] = args.v_dqd_mv * 1e-3
    if args.v_cs_mv is not None:
        overrides["v_cs"] = args.v_cs_mv * 1e-3
    if args.p_in_dbm is not None:
        overrides["p_in_w"] = dbm_to_watts(args.p_in_dbm)
    thermo = ThermoConfig.from_settings(**overrides)

    if args.v_dqd_mv is not None:
        sigma_tick = entropy_per_tick(thermo.v_dqd, thermo.temperature_k)
    elif args.generator is not None:
        sigma_tick = cycle_affinity(load_artifact(args.generator, GeneratorFile).to_generator())
    else:
        logger.error("thermo_needs_v_dqd_or_generator")
        return EXIT_USAGE

    p_out = dbm_to_watts(args.p_out_dbm) if args.p_out_dbm is not None else None
    budget = thermo_section(trace, thermo, tick_rate, sigma_tick, p_out)
    write_json(_output_dir(args) / "budget.json", budget)
    _emit(budget.model_dump(by_alias=True))
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    inputs = {
        "identification": (args.identification, IdentificationSection),
        "ticks": (args.ticks, TickSection),
        "rates": (args.rates, RatesFile),
        "precision": (args.precision, PrecisionFile),
        "theory": (args.theory, TheoryFile),
        "budget": (args.budget, BudgetSection),
        "drift": (args.drift, DriftScanFile),
    }
    loaded = {}
    digest = hashlib.sha256()
    for name, (path, model) in inputs.items():
        if path is None:
            continue
        loaded[name] = load_artifact(path, model)
        digest.update(name.encode("utf-8"))
        digest.update(Path(path).read_bytes())

    precision = loaded["precision"].sections if "precision" in loaded else []
    theory = loaded["theory"].sections if "theory" in loaded else []
    report = PrecisionReport(
        provenance=Provenance(
            config_hash=digest.hexdigest(), seed=args.seed, tool_version=__version__
        ),
        identification=loaded.get("identification"),
        ticks=loaded.get("ticks"),
        rates=loaded.get("rates"),
        precision=precision,
        theory=theory,
        tur=tur_sections(precision, theory),
        budget=loaded.get("budget"),
        drift=loaded.get("drift"),
    )
    path = write_json(_output_dir(args) / "report.json", report)
    _emit({"report": str(path), "sections": sorted(loaded)})
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    values = {}
    if args.config is not None:
        values = json.loads(args.config.read_text(encoding="utf-8"))
    flags = {
        key: getattr(args, key)
        for key in (
            "trace_path", "trace_y_path", "seed", "duration_s", "dt_s", "noise_sigma", "bins",
            "debounce_k", "state_map", "slices", "calibration", "with_deadtime", "bootstrap",
            "bootstrap_subsets", "drift", "drift_window_s", "drift_shift", "temperature_k",
            "v_dqd_mv", "v_cs_mv", "p_in_dbm", "p_out_dbm", "output_dir",
        )
        if getattr(args, key) is not None
    }
    values.update(flags)
    if args.generator is not None:
        values["generator"] = load_artifact(args.generator, GeneratorFile)
    if "trace_path" in flags or args.channel is not Channel.DC:
        values.update(
            channel=args.channel,
            column_time=args.column_time,
            column_signal=args.column_signal,
        )
    cfg = PipelineConfig.model_validate(values)
    result = ClockPipeline(cfg).run()
    _emit({name: str(path) for name, path in sorted(result.files.items())})
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "identify": cmd_identify,
    "ticks": cmd_ticks,
    "rates": cmd_rates,
    "precision": cmd_precision,
    "theory": cmd_theory,
    "thermo": cmd_thermo,
    "report": cmd_report,
    "run": cmd_run,
}


def main(argv: Sequence[str] | None = None) -> int:
    """Entry point; returns the process exit code.

    0 on success, 2 for usage errors, 3 for bad data and 4 for numerical
    failures.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    settings = get_settings()
    configure_logging(args.log_level or settings.log_level, args.log_format or settings.log_format)

    try:
        return COMMANDS[args.command](args)
    except ClockworkError as e:
        logger.error("command_failed", command=args.command, error=str(e), exit_code=e.exit_code)
        return e.exit_code
    except ValueError as e:
        # pydantic ValidationError included
        logger.error("invalid_input", command=args.command, error=str(e))
        return EXIT_USAGE
    except FileNotFoundError as e:
        logger.error("file_not_found", command=args.command, path=e.filename)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
