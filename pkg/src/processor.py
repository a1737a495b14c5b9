"""End-to-end clock analysis pipeline."""

import hashlib
import json
import math
from collections.abc import Iterator
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, model_validator

from . import __version__
from .config import get_settings
from .errors import ClockworkError, FitDiverged, StageError, TooFewSamples, ZeroRate
from .identification.classifier import StateSequence, classify, readout_snr
from .identification.histogram import Histogram, build_histogram
from .identification.level_model import (
    DEFAULT_STATE_MAP,
    LevelModel,
    fallback_level_model,
    fit_level_model,
    identification_error,
    mixture_density,
)
from .identification.quadrature import combine_quadratures
from .inference.bootstrap import bootstrap_alpha, intrinsic_spread
from .inference.drift import DriftScan, drift_scan
from .inference.full_matrix import GeneratorEstimate, destination_consistency, full_matrix_mle
from .inference.mle import RateEstimate
from .inference.waiting_times import WaitingTimes, collect_waiting_times, waiting_time_histogram
from .ingestion.loader import TraceLoader
from .logger import get_logger
from .markov.generator import Generator, cycle_affinity, exit_rates, steady_state
from .output.schemas import (
    BudgetSection,
    DriftScanFile,
    DriftWindowEntry,
    GeneratorFile,
    IdentificationSection,
    JumpRecordFile,
    LevelModelFile,
    PrecisionFile,
    PrecisionReport,
    PrecisionSection,
    Provenance,
    RateEntry,
    RatesFile,
    TheoryFile,
    TheorySection,
    TickSection,
    TurSection,
    finite_or_none,
    sentinel,
    state_from_label,
    state_label,
)
from .output.writer import write_frame, write_json, write_sequence
from .precision.stats import (
    build_ensemble,
    calibration_uncertainty,
    empirical_precision,
    slice_record,
)
from .simulation.telegraph import Channel, LevelTruth, TelegraphTrace, synthesize_trace
from .simulation.trajectory import JumpRecord, sample_trajectory
from .theory.bounds import check_tur, optimal_precision, renewal_moments, tur_bound
from .theory.fcs import asymptotic_moments, net_current, net_weights, opt_weights
from .theory.propagation import precision_error_propagation
from .thermo.budget import (
    ThermoConfig,
    dbm_to_watts,
    dc_dissipation,
    entropy_budget,
    entropy_per_tick,
    rf_dissipation,
    rf_output_power,
)
from .ticks.counting import TickCount, count_net_transfers, extract_jumps
from .ticks.estimators import (
    Calibration,
    EstimatorKind,
    calibrate,
    truth_calibration,
)

logger = get_logger(__name__)


class PipelineConfig(BaseModel):
    """Inputs and parameters of one analysis run."""

    # Sources: a generator to simulate from, or a trace file
    generator: GeneratorFile | None = None
    trace_path: Path | None = None
    trace_y_path: Path | None = Field(
        default=None, description="Second rf quadrature; merged with trace_path by PCA"
    )
    channel: Channel = Channel.DC
    column_time: str = "time_s"
    column_signal: str = "signal"

    # Synthetic traces
    seed: int | None = None
    duration_s: float = Field(default=1800.0, gt=0)
    dt_s: float = Field(default=0.005, gt=0)
    levels: dict[str, float] = Field(default_factory=lambda: {"0": 0.0, "R": 1.0, "L": 2.0})
    noise_sigma: float = Field(default=0.1, ge=0)

    # Identification
    bins: int | None = Field(default=None, ge=10)
    debounce_k: int | None = Field(default=None, ge=1)
    state_map: dict[str, int] | None = None

    # Rates and precision
    slices: int | None = Field(default=None, ge=2)
    calibration: Literal["truth", "fitted"] = "fitted"
    with_deadtime: bool = False
    bootstrap: bool = False
    bootstrap_subsets: int | None = Field(default=None, ge=2)
    drift: bool = True
    drift_window_s: float | None = Field(default=None, gt=0)
    drift_shift: float | None = Field(default=None, gt=0, le=1)

    # Thermodynamics
    temperature_k: float | None = Field(default=None, gt=0)
    v_dqd_mv: float | None = None
    v_cs_mv: float | None = None
    p_in_dbm: float | None = None
    p_out_dbm: float | None = None

    output_dir: Path | None = None

    @model_validator(mode="after")
    def check_sources(self) -> "PipelineConfig":
        synthetic = self.trace_path is None
        if synthetic and self.generator is None:
            raise ValueError("either a generator or a trace_path is required")
        if synthetic and self.seed is None:
            raise ValueError("a seed is required for synthetic traces")
        if self.trace_y_path is not None and synthetic:
            raise ValueError("trace_y_path needs trace_path")
        if self.calibration == "truth" and self.generator is None:
            raise ValueError("truth calibration needs a generator")
        return self

    @property
    def synthetic(self) -> bool:
        return self.trace_path is None

    def config_hash(self) -> str:
        """sha256 of the canonical JSON form, output directory excluded."""
        payload = self.model_dump(mode="json", exclude={"output_dir"})
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def resolved_state_map(self) -> dict[int, int]:
        if self.state_map is None:
            return dict(DEFAULT_STATE_MAP)
        return {state_from_label(k): v for k, v in self.state_map.items()}


@dataclass
class IdentificationResult:
    histogram: Histogram
    model: LevelModel
    sequence: StateSequence
    section: IdentificationSection


@dataclass
class RatesResult:
    estimate: GeneratorEstimate
    waiting_times: WaitingTimes
    file: RatesFile


@dataclass
class PipelineResult:
    """Everything one run produced, with the report that summarizes it."""

    report: PrecisionReport
    trace: TelegraphTrace
    record: JumpRecord
    identification: IdentificationResult
    rates: RatesResult | None
    drift: DriftScan | None
    files: dict[str, Path]


@contextmanager
def stage(name: str) -> Iterator[None]:
    """Tag analysis errors raised inside a pipeline stage with its name."""
    logger.debug("stage_start", stage=name)
    try:
        yield
    except StageError:
        raise
    except ClockworkError as e:
        logger.error("stage_failed", stage=name, error=str(e))
        raise StageError(name, e) from e
    logger.debug("stage_done", stage=name)


# ============== Stages ==============

def simulate(cfg: PipelineConfig) -> tuple[JumpRecord, TelegraphTrace]:
    """Draw a trajectory from the steady state and render it as a noisy trace."""
    g = cfg.generator.to_generator()
    rec = sample_trajectory(g, steady_state(g), cfg.duration_s, cfg.seed)
    truth = LevelTruth(
        level_values={state_from_label(k): v for k, v in cfg.levels.items()},
        noise_sigma=cfg.noise_sigma,
    )
    trace = synthesize_trace(rec, truth, cfg.dt_s, cfg.seed, channel=cfg.channel)
    logger.info("simulated", jumps=rec.n_jumps, samples=len(trace), seed=cfg.seed)
    return rec, trace


def identify(
    trace: TelegraphTrace,
    bins: int | None = None,
    debounce_k: int | None = None,
    state_map: dict[int, int] | None = None,
) -> IdentificationResult:
    """Calibrate the levels and classify every sample.

    Unresolved fits are still classified, flagged non-authoritative. A fit
    that diverges falls back to heuristic levels around the sample mean.
    """
    settings = get_settings()
    hist = build_histogram(trace, bins or settings.histogram_bins)
    try:
        model = fit_level_model(hist, state_map=state_map)
    except FitDiverged as e:
        logger.warning("level_fit_diverged", reason=str(e))
        model = fallback_level_model(trace, state_map)
    seq = classify(trace, model, debounce_k or settings.debounce_k, force=True)
    snr = readout_snr(trace, seq, model)
    epsilon = float(np.mean(identification_error(model, trace.samples)))
    rec = extract_jumps(seq)
    section = IdentificationSection(
        **sentinel("snr", snr),
        mean_epsilon=epsilon,
        unresolved=model.unresolved,
        authoritative=seq.authoritative,
        samples=len(seq),
        jumps=rec.n_jumps,
    )
    logger.info("identified", snr=snr, mean_epsilon=epsilon, jumps=rec.n_jumps)
    return IdentificationResult(histogram=hist, model=model, sequence=seq, section=section)


def tick_section(count: TickCount) -> TickSection:
    return TickSection(
        forward=count.forward,
        backward=count.backward,
        net=count.net,
        excursions=count.excursions,
        incomplete=count.incomplete,
    )


def _rate_entry(est: RateEstimate) -> RateEntry:
    return RateEntry(
        gamma_hz=est.gamma_hat,
        stderr_hz=est.std_error,
        n=est.n,
        deadtime_s=est.deadtime_hat,
        alpha=est.alpha,
        eta_s=est.eta_hat,
    )


def infer_rates(
    rec: JumpRecord,
    with_deadtime: bool = False,
    bootstrap: bool = False,
    bootstrap_subsets: int | None = None,
    seed: int = 0,
) -> RatesResult:
    """Full-matrix fit, optionally with bootstrap-inflated errors.

    The bootstrap alpha (never below one) and eta replace the exit error model
    and every entry error is recomputed from them, so the rate pairs, the
    theory error propagation and the drift scan all see the inflated errors.
    """
    estimate = full_matrix_mle(rec, with_deadtime=with_deadtime)
    wt = collect_waiting_times(rec)

    exits = list(estimate.exit_estimates)
    if bootstrap:
        for i, est in enumerate(exits):
            pooled = wt.pooled(i)
            try:
                alpha = bootstrap_alpha(pooled, bootstrap_subsets, seed=seed).alpha
                eta = intrinsic_spread(pooled, bootstrap_subsets, seed=seed).eta_hat
            except TooFewSamples as e:
                logger.warning("bootstrap_skipped", state=state_label(i), reason=str(e))
                continue
            exits[i] = RateEstimate(
                gamma_hat=est.gamma_hat,
                n=est.n,
                deadtime_hat=est.deadtime_hat,
                alpha=max(alpha, 1.0),
                eta_hat=eta,
            )
        estimate = estimate.with_exit_estimates(exits)

    g = estimate.generator
    n = g.n_states
    pairs = {}
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            pairs[f"{state_label(j)}|{state_label(i)}"] = RateEntry(
                gamma_hz=g.rate(j, i),
                stderr_hz=float(estimate.std_errors[j, i]),
                n=int(estimate.counts[j, i]),
                deadtime_s=exits[i].deadtime_hat,
            )

    consistency: dict[str, float | None] = {}
    for i in range(n):
        try:
            consistency[state_label(i)] = finite_or_none(destination_consistency(wt, i))
        except TooFewSamples:
            consistency[state_label(i)] = None

    file = RatesFile(
        generator=GeneratorFile.from_generator(g),
        pairs=pairs,
        exit={state_label(i): _rate_entry(est) for i, est in enumerate(exits)},
        destination_z=consistency,
    )
    logger.info("rates_inferred", exit_rates_hz=exit_rates(g).round(6).tolist(), states=n)
    return RatesResult(estimate=estimate, waiting_times=wt, file=file)


def resolve_calibration(
    kind: str,
    rec: JumpRecord,
    generator: Generator | None = None,
) -> Calibration:
    if kind == "truth":
        if generator is None:
            raise ValueError("truth calibration needs a generator")
        return truth_calibration(generator)
    return calibrate(rec)


def precision_sections(
    seq: StateSequence,
    calibration: Calibration,
    slices: int | None = None,
) -> list[PrecisionSection]:
    """Empirical precision of both estimators on M slices of the sequence.

    The net estimator is reported as undefined when nu is zero or, for a
    fitted calibration, no larger than its own standard error.
    """
    m = slices or get_settings().slices
    parts = slice_record(seq, m)
    horizon = len(parts[0]) * seq.dt
    sections = []
    for kind in EstimatorKind:
        reason = None
        if kind is EstimatorKind.NET and calibration.nu != 0.0 and not calibration.nu_resolved:
            reason = (
                f"net-transfer rate {calibration.nu:.3g} Hz within its error "
                f"{calibration.nu_std_error:.3g} Hz"
            )
        else:
            try:
                ens = build_ensemble(parts, kind, calibration)
            except ZeroRate as e:
                reason = str(e)
        if reason is not None:
            logger.warning("estimator_undefined", estimator=kind.value, reason=reason)
            sections.append(
                PrecisionSection(
                    estimator=kind.value,
                    defined=False,
                    M=m,
                    t_s=horizon,
                    mean_s=None,
                    var_s2=None,
                    S_hz=None,
                    S_stderr_hz=None,
                    calibration=calibration.source.value,
                    nu_hz=calibration.nu,
                    nu_stderr_hz=calibration.nu_std_error,
                    undefined_reason=reason,
                )
            )
            continue
        prec = empirical_precision(ens)
        sections.append(
            PrecisionSection(
                estimator=kind.value,
                M=m,
                t_s=ens.horizon,
                mean_s=prec.mean,
                var_s2=prec.variance,
                **sentinel("S_hz", prec.precision),
                **sentinel("S_stderr_hz", prec.std_error),
                calibration=calibration.source.value,
                nu_hz=calibration.nu,
                nu_stderr_hz=calibration.nu_std_error,
                **sentinel("calibration_rel_var", calibration_uncertainty(prec, seq.duration)),
            )
        )
        logger.info(
            "precision", estimator=kind.value, S_hz=prec.precision, stderr_hz=prec.std_error
        )
    return sections


def theory_sections(
    g: Generator,
    estimate: GeneratorEstimate | None = None,
) -> list[TheorySection]:
    """Full-counting-statistics predictions for both estimators."""
    s_opt = optimal_precision(g)
    nu = net_current(g)
    bound = tur_bound(g, nu=nu)

    opt = asymptotic_moments(g, opt_weights(g))
    sections = [
        TheorySection(
            estimator=EstimatorKind.OPT.value,
            **sentinel("S_theory_hz", opt.precision),
            S_opt_hz=s_opt,
            nu_hz=nu,
            **sentinel("tur_bound_hz", bound),
            sigma_S_hz=_propagated(g, estimate, "opt"),
        )
    ]

    if nu != 0.0:
        net = asymptotic_moments(g, net_weights(g, nu))
        count_diffusion = nu**2 * net.diffusion
        renewal = renewal_moments(abs(nu), count_diffusion)
        sections.append(
            TheorySection(
                estimator=EstimatorKind.NET.value,
                **sentinel("S_theory_hz", net.precision),
                S_opt_hz=s_opt,
                nu_hz=nu,
                D=count_diffusion,
                **sentinel("N_inf", renewal.n_inf),
                **sentinel("tur_bound_hz", bound),
                sigma_S_hz=_propagated(g, estimate, "net"),
            )
        )
    else:
        logger.warning("net_estimator_undefined", reason="zero net current")
        sections.append(
            TheorySection(
                estimator=EstimatorKind.NET.value,
                S_theory_hz=0.0,
                S_opt_hz=s_opt,
                nu_hz=0.0,
                **sentinel("tur_bound_hz", bound),
            )
        )
    return sections


def _propagated(g: Generator, estimate: GeneratorEstimate | None, estimator: str) -> float | None:
    if estimate is None:
        return None
    try:
        return finite_or_none(precision_error_propagation(g, estimate.std_errors, estimator))
    except ZeroRate:
        return None


def tur_sections(
    precision: list[PrecisionSection],
    theory: list[TheorySection],
) -> list[TurSection]:
    """Compare every empirical precision with the uncertainty bound."""
    if not theory:
        return []
    # every theory section carries the same generator-level bound
    bound = math.inf if theory[0].tur_bound_hz_infinite else theory[0].tur_bound_hz
    checks = []
    for section in precision:
        if not section.defined or section.S_hz is None:
            continue
        result = check_tur(
            bound,
            section.S_hz,
            section.S_stderr_hz or 0.0,
            antisymmetric=section.estimator == EstimatorKind.NET.value,
        )
        checks.append(
            TurSection(
                estimator=section.estimator,
                **sentinel("bound_hz", result.bound_hz),
                precision_hz=result.precision_hz,
                satisfied=result.satisfied,
                applicable=result.applicable,
            )
        )
    return checks


def thermo_section(
    trace: TelegraphTrace,
    thermo: ThermoConfig,
    tick_rate: float,
    sigma_tick: float,
    p_out_w: float | None = None,
) -> BudgetSection:
    """Entropy budget of the readout that was actually used.

    rf traces need the output power; without it the dissipation is unknown.
    """
    if trace.channel is Channel.DC:
        power = dc_dissipation(trace, thermo.v_cs)
    elif p_out_w is None:
        raise ValueError("rf dissipation needs the output power")
    else:
        power = rf_dissipation(thermo.p_in_w, p_out_w)
    budget = entropy_budget(power, tick_rate, thermo.temperature_k, sigma_tick)
    return BudgetSection(
        sigma_tick_kb=budget.sigma_tick,
        sigma_meas_per_tick_kb=budget.sigma_meas_per_tick,
        power_w=budget.power_diss,
        tick_rate_hz=budget.tick_rate,
        **sentinel("ratio", budget.ratio),
    )


def scan_drift(
    rec: JumpRecord,
    estimate: GeneratorEstimate | None,
    width: float | None = None,
    shift: float | None = None,
) -> DriftScan:
    """Drift scan using the error model (alpha, eta) of the whole-record fit."""
    if estimate is None:
        return drift_scan(rec, width=width, shift=shift)
    exits = estimate.exit_estimates
    return drift_scan(
        rec,
        width=width,
        shift=shift,
        alpha=[e.alpha for e in exits],
        eta=[e.eta_hat for e in exits],
    )


def drift_file(scan: DriftScan) -> DriftScanFile:
    windows = []
    for w in scan.windows:
        windows.append(
            DriftWindowEntry(
                start_s=w.start_s,
                flagged=w.flagged,
                **sentinel("max_deviation", w.max_deviation),
                exit_rates_hz=(
                    exit_rates(w.estimate.generator).tolist() if w.estimate is not None else None
                ),
            )
        )
    return DriftScanFile(
        window_s=scan.window_width,
        shift=scan.shift,
        threshold=scan.threshold,
        windows=windows,
    )


# ============== Plot Data ==============

def histogram_frame(hist: Histogram, model: LevelModel) -> pd.DataFrame:
    total, components = mixture_density(model, hist.centers)
    frame = pd.DataFrame({"signal": hist.centers, "density": hist.densities, "fit_total": total})
    for state, component in sorted(model.state_map.items()):
        frame[f"fit_{state_label(state)}"] = components[component]
    return frame


def waiting_time_frame(wt: WaitingTimes, with_deadtime: bool = False) -> pd.DataFrame:
    parts = []
    for (j, i), times in sorted(wt.lists.items()):
        try:
            hist = waiting_time_histogram(times, with_deadtime=with_deadtime)
        except TooFewSamples:
            continue
        parts.append(
            pd.DataFrame(
                {
                    "pair": f"{state_label(j)}|{state_label(i)}",
                    "tau_s": hist.centers,
                    "density": hist.densities,
                    "model": hist.model,
                }
            )
        )
    if not parts:
        return pd.DataFrame(columns=["pair", "tau_s", "density", "model"])
    return pd.concat(parts, ignore_index=True)


def drift_frame(scan: DriftScanFile) -> pd.DataFrame:
    rows = []
    for w in scan.windows:
        row = {"start_s": w.start_s, "flagged": w.flagged, "max_deviation": w.max_deviation}
        for k, rate in enumerate(w.exit_rates_hz or []):
            row[f"gamma_{state_label(k)}_hz"] = rate
        rows.append(row)
    return pd.DataFrame(rows)


def precision_dissipation_frame(
    precision: list[PrecisionSection],
    budget: BudgetSection | None,
    theory: list[TheorySection],
) -> pd.DataFrame:
    bound = next((t.tur_bound_hz for t in theory), None)
    rows = []
    for section in precision:
        rows.append(
            {
                "estimator": section.estimator,
                "power_w": budget.power_w if budget else None,
                "sigma_meas_per_tick_kb": budget.sigma_meas_per_tick_kb if budget else None,
                "sigma_tick_kb": budget.sigma_tick_kb if budget else None,
                "S_hz": section.S_hz,
                "S_stderr_hz": section.S_stderr_hz,
                "tur_bound_hz": bound,
            }
        )
    return pd.DataFrame(rows)


# ============== Orchestration ==============

class ClockPipeline:
    """Run every stage of the analysis for one configuration."""

    def __init__(self, cfg: PipelineConfig):
        """Initialize pipeline with a validated configuration.

        Args:
            cfg: Pipeline configuration.
        """
        self.cfg = cfg
        self.settings = get_settings()
        self.output_dir = cfg.output_dir or self.settings.output_dir
        self.quadratures: tuple[TelegraphTrace, TelegraphTrace] | None = None

    def load_trace(self) -> tuple[JumpRecord | None, TelegraphTrace]:
        if self.cfg.synthetic:
            return simulate(self.cfg)
        loader = TraceLoader(self.cfg.column_time, self.cfg.column_signal)
        if self.cfg.trace_y_path is None:
            return None, loader.load(self.cfg.trace_path, channel=self.cfg.channel)
        x = loader.load(self.cfg.trace_path, channel=Channel.RF_X)
        y = loader.load(self.cfg.trace_y_path, channel=Channel.RF_Y)
        self.quadratures = (x, y)
        return None, combine_quadratures(x, y)

    def thermo_config(self) -> ThermoConfig:
        cfg = self.cfg
        overrides = {}
        if cfg.temperature_k is not None:
            overrides["temperature_k"] = cfg.temperature_k
        if cfg.v_dqd_mv is not None:
            overrides["v_dqd"] = cfg.v_dqd_mv * 1e-3
        if cfg.v_cs_mv is not None:
            overrides["v_cs"] = cfg.v_cs_mv * 1e-3
        if cfg.p_in_dbm is not None:
            overrides["p_in_w"] = dbm_to_watts(cfg.p_in_dbm)
        return ThermoConfig.from_settings(**overrides)

    def run(self) -> PipelineResult:
        """Execute all stages and write the report with its plot data.

        Returns:
            PipelineResult holding the report and intermediate results.

        Raises:
            StageError: Wrapping the first analysis error, tagged with its stage.
        """
        cfg = self.cfg
        truth = cfg.generator.to_generator() if cfg.generator is not None else None

        with stage("trace"):
            truth_record, trace = self.load_trace()
        with stage("identify"):
            ident = identify(trace, cfg.bins, cfg.debounce_k, cfg.resolved_state_map())
        with stage("jumps"):
            rec = extract_jumps(ident.sequence)
            ticks = tick_section(count_net_transfers(rec))

        rates: RatesResult | None = None
        with stage("rates"):
            try:
                rates = infer_rates(
                    rec,
                    with_deadtime=cfg.with_deadtime,
                    bootstrap=cfg.bootstrap,
                    bootstrap_subsets=cfg.bootstrap_subsets,
                    seed=cfg.seed or 0,
                )
            except ClockworkError as e:
                if truth is None:
                    raise
                logger.warning("rates_unavailable", reason=str(e))

        with stage("calibration"):
            calibration = resolve_calibration(cfg.calibration, rec, truth)
        with stage("precision"):
            precision = precision_sections(ident.sequence, calibration, cfg.slices)

        theory_generator = truth if truth is not None else rates.estimate.generator
        with stage("theory"):
            theory = theory_sections(theory_generator, rates.estimate if rates else None)
            tur = tur_sections(precision, theory)

        budget = None
        thermo = self.thermo_config()
        tick_rate = abs(calibration.nu)
        if trace.channel is Channel.DC:
            readout_known = cfg.v_cs_mv is not None
        else:
            readout_known = cfg.p_in_dbm is not None and (
                cfg.p_out_dbm is not None or self.quadratures is not None
            )
        if readout_known and tick_rate > 0:
            with stage("thermo"):
                sigma_tick = (
                    entropy_per_tick(thermo.v_dqd, thermo.temperature_k)
                    if cfg.v_dqd_mv is not None
                    else cycle_affinity(theory_generator)
                )
                if cfg.p_out_dbm is not None:
                    p_out = dbm_to_watts(cfg.p_out_dbm)
                elif self.quadratures is not None:
                    p_out = rf_output_power(*self.quadratures, gain_chain=thermo.gain_chain)
                else:
                    p_out = None
                budget = thermo_section(trace, thermo, tick_rate, sigma_tick, p_out)

        scan = None
        drift = None
        if cfg.drift:
            width = cfg.drift_window_s or self.settings.drift_window_s
            if width <= rec.duration:
                with stage("drift"):
                    try:
                        scan = scan_drift(
                            rec, rates.estimate if rates else None, width, cfg.drift_shift
                        )
                        drift = drift_file(scan)
                    except ClockworkError as e:
                        logger.warning("drift_scan_skipped", reason=str(e))
            else:
                logger.warning("drift_scan_skipped", reason="record shorter than window")

        report = PrecisionReport(
            provenance=Provenance(
                config_hash=cfg.config_hash(),
                seed=cfg.seed,
                tool_version=__version__,
            ),
            identification=ident.section,
            ticks=ticks,
            rates=rates.file if rates else None,
            precision=precision,
            theory=theory,
            tur=tur,
            budget=budget,
            drift=drift,
        )

        with stage("report"):
            files = self.write(report, ident, rec, truth_record, rates, precision, theory, budget)
        logger.info("pipeline_done", output_dir=str(self.output_dir), files=len(files))
        return PipelineResult(
            report=report,
            trace=trace,
            record=rec,
            identification=ident,
            rates=rates,
            drift=scan,
            files=files,
        )

    def write(
        self,
        report: PrecisionReport,
        ident: IdentificationResult,
        rec: JumpRecord,
        truth_record: JumpRecord | None,
        rates: RatesResult | None,
        precision: list[PrecisionSection],
        theory: list[TheorySection],
        budget: BudgetSection | None,
    ) -> dict[str, Path]:
        out = Path(self.output_dir)
        files = {
            "report": write_json(out / "report.json", report),
            "level_model": write_json(
                out / "level_model.json", LevelModelFile.from_model(ident.model)
            ),
            "sequence": write_sequence(out / "sequence.csv", ident.sequence),
            "jumps": write_json(out / "jumps.json", JumpRecordFile.from_record(rec)),
            "precision": write_json(
                out / "precision.json", PrecisionFile(sections=precision, tur=report.tur)
            ),
            "theory": write_json(out / "theory.json", TheoryFile(sections=theory)),
            "histogram_fit": write_frame(
                out / "histogram_fit.csv", histogram_frame(ident.histogram, ident.model)
            ),
            "precision_dissipation": write_frame(
                out / "precision_dissipation.csv",
                precision_dissipation_frame(precision, budget, theory),
            ),
        }
        if truth_record is not None:
            files["truth_jumps"] = write_json(
                out / "truth_jumps.json", JumpRecordFile.from_record(truth_record)
            )
        if rates is not None:
            files["rates"] = write_json(out / "rates.json", rates.file)
            files["waiting_times"] = write_frame(
                out / "waiting_times.csv",
                waiting_time_frame(rates.waiting_times, self.cfg.with_deadtime),
            )
        if budget is not None:
            files["budget"] = write_json(out / "budget.json", budget)
        if report.drift is not None:
            files["drift_scan"] = write_json(out / "drift_scan.json", report.drift)
            files["drift_scan_csv"] = write_frame(out / "drift_scan.csv", drift_frame(report.drift))
        return files


def run_pipeline(cfg: PipelineConfig) -> PrecisionReport:
    """Run the full analysis and return its report."""
    return ClockPipeline(cfg).run().report
