"""Monte-Carlo experiment harness: scenario generation, scheme sweep, output.

Each trial owns a random stream derived from (master seed, trial id), so a
fixed configuration reproduces byte-identical results regardless of execution
order.  Precoders are always built from the estimated angles; rates are always
evaluated on the true channels.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import cancellation, digital, errorstats, geometry, hybrid, metrics
from .errors import (
    DegenerateChannelError,
    IllConditionedFactorizationError,
    InfeasibleGeometryError,
    RankDeficiencyError,
    RobustPrecodingError,
)

__all__ = [
    "SystemConfig",
    "TrialRecord",
    "run_experiment",
    "emit_results",
    "records_from_json",
    "emit_beampattern",
    "convergence_traces",
    "summarize",
]

DIGITAL_FAMILIES = ("CDP", "FM", "ES")


@dataclass
class SystemConfig:
    """Everything a reproducible experiment run needs."""

    m_t: int = 128
    m_r: int = 32
    n_rf: int = 8
    k: int = 4
    path_count: int = 3
    delta_deg: float = 1.154
    grid_samples: int = 8
    snr_db_grid: list[float] = field(default_factory=lambda: [0.0])
    trial_count: int = 100
    seed: int = 0
    schemes: list[str] = field(
        default_factory=lambda: ["CDP-GP", "FM-GP", "ES-GP", "FM-LSP", "ES-LSP"]
    )
    es_backend: str = "quadrature"
    gain_var: float = 1.0
    power: float = 1.0
    no_bd: bool = False
    record_no_bd: bool = False
    fixed_geometry: bool = False
    fm_tol: float = 1e-4
    fm_max_iter: int = 50
    fm_solver_max_iter: int = 600
    hybrid_tol: float = 1e-3
    hybrid_max_iter: int = 30
    gp_tol: float = 1e-4
    gp_max_iter: int = 100
    quad_nodes: int = 96

    def __post_init__(self):
        if not self.k <= self.n_rf <= self.m_t:
            raise ValueError(
                f"need K <= N_RF <= M_t, got K={self.k}, N_RF={self.n_rf}, M_t={self.m_t}"
            )
        if self.trial_count < 1:
            raise ValueError("trial_count must be >= 1")
        if not self.snr_db_grid:
            raise ValueError("SNR grid must be non-empty")
        if self.es_backend not in ("series", "quadrature"):
            raise ValueError(f"unknown es_backend {self.es_backend!r}")
        for tag in self.schemes:
            _parse_scheme(tag)

    @property
    def half_width_deg(self) -> float:
        return math.sqrt(3.0) * self.delta_deg

    @classmethod
    def from_file(cls, path: str | Path, **overrides) -> "SystemConfig":
        """Read a plain key = value config file; keyword overrides win."""
        mapping: dict[str, str] = {}
        for raw in Path(path).read_text().splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"bad config line (expected key = value): {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            mapping[key] = value
        return cls.from_mapping(mapping, **overrides)

    @classmethod
    def from_mapping(cls, mapping: dict[str, str], **overrides) -> "SystemConfig":
        kwargs = {}
        defaults = cls()
        for key, raw in mapping.items():
            if not hasattr(defaults, key):
                raise ValueError(f"unknown config key {key!r}")
            current = getattr(defaults, key)
            if isinstance(current, bool):
                kwargs[key] = raw.strip().lower() in ("1", "true", "yes", "on")
            elif isinstance(current, int):
                kwargs[key] = int(raw)
            elif isinstance(current, float):
                kwargs[key] = float(raw)
            elif key == "snr_db_grid":
                kwargs[key] = [float(v) for v in raw.replace(",", " ").split()]
            elif key == "schemes":
                kwargs[key] = [v.strip() for v in raw.split(",") if v.strip()]
            else:
                kwargs[key] = raw
        kwargs.update(overrides)
        return cls(**kwargs)


@dataclass
class TrialRecord:
    """One (trial, scheme, SNR, second-stage variant) result row."""

    trial_id: int
    scheme: str
    snr_db: float
    second_stage: bool
    status: str
    per_user_rates: list[float]
    sum_rate: float
    hybrid_residual: float
    outer_iterations: int
    gp_iterations: int
    min_grid_gain: float


def _parse_scheme(tag: str) -> tuple[str, str]:
    parts = tag.split("-")
    if len(parts) != 2 or parts[0] not in DIGITAL_FAMILIES or parts[1] not in hybrid.ANALOG_SOLVERS:
        raise ValueError(
            f"bad scheme tag {tag!r}; expected FAMILY-SOLVER with FAMILY in "
            f"{DIGITAL_FAMILIES} and SOLVER in {hybrid.ANALOG_SOLVERS}"
        )
    return parts[0], parts[1]


def _wrapped_u_gap(center_a: float, center_b: float, half_width_deg: float) -> float:
    """Clearance between two angular windows in the cos-angle domain.

    A half-wavelength array sees direction cos(theta) modulo the spatial
    period 2, so windows near 0 and 180 degrees alias onto each other; the
    gap is therefore measured both directly and around the +-1 edges.
    """
    edges = []
    for center in (center_a, center_b):
        lo = math.cos(math.radians(center + half_width_deg))
        hi = math.cos(math.radians(center - half_width_deg))
        edges.append((min(lo, hi), max(lo, hi)))
    (lo_a, hi_a), (lo_b, hi_b) = edges
    if hi_a >= lo_b and hi_b >= lo_a:
        return 0.0
    direct = max(lo_a, lo_b) - min(hi_a, hi_b)
    around = (2.0 - max(hi_a, hi_b)) + min(lo_a, lo_b)
    return min(direct, around)


def _draw_separated_angles(
    rng: np.random.Generator,
    k: int,
    min_gap_deg: float,
    guard_u: float = 0.0,
    max_tries: int = 500,
) -> np.ndarray:
    """Strongest-path departure angles with pairwise separation.

    Directions are isotropic, i.e. uniform in cos(angle), over
    [margin, 180 - margin] with margin = min_gap / 2, which keeps every
    receiver's angular grid inside [0, 180].  A draw is rejected when it sits
    closer than ``min_gap_deg`` to an accepted one, or when its angular
    window clears an accepted one by less than ``guard_u`` in the aliased
    cos-angle domain, where windows near opposite array ends can coincide
    even though their angles are far apart.
    """
    margin = min_gap_deg / 2.0
    u_hi = math.cos(math.radians(margin))
    u_lo = math.cos(math.radians(180.0 - margin))
    accepted: list[float] = []
    tries = 0
    while len(accepted) < k:
        candidate = math.degrees(math.acos(float(rng.uniform(u_lo, u_hi))))
        if all(
            abs(candidate - a) >= min_gap_deg
            and _wrapped_u_gap(candidate, a, margin) >= guard_u
            for a in accepted
        ):
            accepted.append(candidate)
        tries += 1
        if tries > max_tries:
            raise InfeasibleGeometryError(
                f"could not place {k} receivers with {min_gap_deg:.2f} deg separation"
            )
    return np.array(accepted)


def _draw_trial_channels(
    config: SystemConfig,
    rng: np.random.Generator,
    fixed_aods: np.ndarray | None,
    fixed_aoas: np.ndarray | None,
) -> list[geometry.ChannelRealization]:
    bs = geometry.ArrayGeometry(config.m_t)
    ru = geometry.ArrayGeometry(config.m_r)
    model = geometry.MisalignmentModel(config.delta_deg)
    beta = config.half_width_deg
    # Estimated AoDs can move by up to beta each, so true strongest paths need
    # 4*beta separation to guarantee non-overlapping grids.
    min_gap = 4.0 * beta + 1e-3 if beta > 0 else 1.0
    if fixed_aods is None:
        strong_aods = _draw_separated_angles(rng, config.k, min_gap, 2.0 / config.m_t)
        strong_aoas = rng.uniform(0.0, 180.0, config.k)
    else:
        strong_aods = fixed_aods
        strong_aoas = fixed_aoas

    channels = []
    sigma = math.sqrt(config.gain_var / 2.0)
    for user in range(config.k):
        gains = sigma * (
            rng.standard_normal(config.path_count)
            + 1j * rng.standard_normal(config.path_count)
        )
        # The separated angles belong to the strongest path; weaker paths
        # scatter uniformly.
        strongest = int(np.argmax(np.abs(gains)))
        aods = rng.uniform(0.0, 180.0, config.path_count)
        aoas = rng.uniform(0.0, 180.0, config.path_count)
        aods[strongest] = strong_aods[user]
        aoas[strongest] = strong_aoas[user]
        paths = [
            geometry.PathParams(complex(g), float(aod), float(aoa))
            for g, aod, aoa in zip(gains, aods, aoas)
        ]
        matrix = geometry.channel_from_paths(bs, ru, paths)
        est_aod = paths[strongest].aod_deg + geometry.sample_misalignment(model, rng)
        est_aoa = paths[strongest].aoa_deg + geometry.sample_misalignment(model, rng)
        channels.append(
            geometry.ChannelRealization(matrix, paths, strongest, est_aod, est_aoa)
        )
    return channels


def _digital_target(
    family: str,
    channels: list[geometry.ChannelRealization],
    config: SystemConfig,
) -> digital.DigitalPrecoder:
    bs = geometry.ArrayGeometry(config.m_t)
    est_aods = [ch.est_aod_deg for ch in channels]
    beta = config.half_width_deg
    if family == "CDP":
        return digital.conventional_dp(est_aods, bs)
    if family == "ES":
        responses = [
            errorstats.expected_array_response(
                errorstats.ExpectedResponseParams(a, math.radians(beta), config.m_t),
                backend=config.es_backend,
                node_count=config.quad_nodes,
            )
            for a in est_aods
        ]
        return digital.es_precoder(responses)
    grids = [digital.AngleGrid(a, beta, config.grid_samples) for a in est_aods]
    return digital.fm_precoder(
        grids,
        bs,
        tol=config.fm_tol,
        max_iter=config.fm_max_iter,
        solver_max_iter=config.fm_solver_max_iter,
    )


def _excluded_records(config: SystemConfig, trial_id: int, tags) -> list[TrialRecord]:
    records = []
    variants = [not config.no_bd] + ([False] if config.record_no_bd and not config.no_bd else [])
    for tag in tags:
        for snr in config.snr_db_grid:
            for second_stage in variants:
                records.append(
                    TrialRecord(
                        trial_id, tag, float(snr), second_stage, "excluded",
                        [math.nan] * config.k, math.nan, math.nan, 0, 0, math.nan,
                    )
                )
    return records


def run_experiment(config: SystemConfig) -> list[TrialRecord]:
    """Run every configured scheme over the SNR grid for every trial.

    Per-trial failures (infeasible geometry, rank collapse) are recorded as
    excluded rows rather than aborting the batch.
    """
    ru = geometry.ArrayGeometry(config.m_r)
    bs = geometry.ArrayGeometry(config.m_t)
    beta = config.half_width_deg

    fixed_aods = fixed_aoas = None
    if config.fixed_geometry:
        geom_rng = np.random.default_rng([config.seed, 0x6E0])
        min_gap = 4.0 * beta + 1e-3 if beta > 0 else 1.0
        fixed_aods = _draw_separated_angles(geom_rng, config.k, min_gap, 2.0 / config.m_t)
        fixed_aoas = geom_rng.uniform(0.0, 180.0, config.k)

    records: list[TrialRecord] = []
    for trial_id in range(config.trial_count):
        trial_rng = np.random.default_rng([config.seed, trial_id])
        try:
            channels = _draw_trial_channels(config, trial_rng, fixed_aods, fixed_aoas)
        except InfeasibleGeometryError:
            records.extend(_excluded_records(config, trial_id, config.schemes))
            continue
        combiners = [geometry.receive_combiner(ch, ru) for ch in channels]
        grids = [
            digital.AngleGrid(ch.est_aod_deg, beta if beta > 0 else 0.0, config.grid_samples)
            for ch in channels
        ]

        targets: dict[str, digital.DigitalPrecoder] = {}
        for scheme_index, tag in enumerate(config.schemes):
            family, solver = _parse_scheme(tag)
            try:
                if family not in targets:
                    targets[family] = _digital_target(family, channels, config)
                factor_rng = np.random.default_rng([config.seed, trial_id, scheme_index])
                hp = hybrid.approximate_hybrid(
                    targets[family],
                    config.n_rf,
                    analog_solver=solver,
                    tol=config.hybrid_tol,
                    max_iter=config.hybrid_max_iter,
                    rng=factor_rng,
                    gp_tol=config.gp_tol,
                    gp_max_iter=config.gp_max_iter,
                )
                effective = cancellation.effective_channels(channels, combiners, hp)
                variants: list[tuple[bool, cancellation.CompositePrecoder]] = []
                if config.no_bd:
                    variants.append((False, cancellation.compose_hybrid(hp, np.eye(config.k), tag)))
                else:
                    bd = cancellation.bd_precoder(effective)
                    variants.append((True, cancellation.compose_hybrid(hp, bd, tag)))
                    if config.record_no_bd:
                        variants.append(
                            (False, cancellation.compose_hybrid(hp, np.eye(config.k), tag))
                        )
            except (
                InfeasibleGeometryError,
                RankDeficiencyError,
                DegenerateChannelError,
                IllConditionedFactorizationError,
            ):
                records.extend(_excluded_records(config, trial_id, [tag]))
                continue

            for second_stage, composite in variants:
                min_gain = min(
                    float(np.min(metrics.beampattern(composite.matrix[:, u], grids[u].samples, bs).gains))
                    for u in range(config.k)
                )
                for snr in config.snr_db_grid:
                    sigma_sq = 10.0 ** (-snr / 10.0)
                    report = metrics.rate_report(
                        channels, combiners, composite, config.power, sigma_sq, snr
                    )
                    records.append(
                        TrialRecord(
                            trial_id=trial_id,
                            scheme=tag,
                            snr_db=float(snr),
                            second_stage=second_stage,
                            status="ok",
                            per_user_rates=[float(r) for r in report.per_user_bps_hz],
                            sum_rate=report.sum_bps_hz,
                            hybrid_residual=hp.residual,
                            outer_iterations=hp.iterations_used,
                            gp_iterations=hp.gp_iterations,
                            min_grid_gain=min_gain,
                        )
                    )
    records.sort(key=lambda r: (r.trial_id, r.scheme, r.snr_db, not r.second_stage))
    return records


def summarize(records: list[TrialRecord]) -> list[dict]:
    """Mean/std sum-rate per (scheme, snr, second-stage) with exclusion counts."""
    groups: dict[tuple, list[TrialRecord]] = {}
    for record in records:
        groups.setdefault((record.scheme, record.snr_db, record.second_stage), []).append(record)
    rows = []
    for (scheme, snr, second_stage), members in sorted(groups.items()):
        ok = [m.sum_rate for m in members if m.status == "ok"]
        excluded = sum(1 for m in members if m.status != "ok")
        rows.append(
            {
                "scheme": scheme,
                "snr_db": snr,
                "second_stage": second_stage,
                "count": len(ok),
                "excluded": excluded,
                "mean_sum_rate": float(np.mean(ok)) if ok else math.nan,
                "std_sum_rate": float(np.std(ok, ddof=1)) if len(ok) > 1 else 0.0,
            }
        )
    return rows


def _csv_header(k: int) -> list[str]:
    return (
        ["trial_id", "scheme", "snr_db", "second_stage", "status"]
        + [f"rate_{i + 1}" for i in range(k)]
        + ["sum_rate", "hybrid_residual", "outer_iterations", "gp_iterations", "min_grid_gain"]
    )


def _summary_path(path: Path) -> Path:
    return path.with_suffix(".summary.csv")


def emit_results(
    records: list[TrialRecord], format: str = "csv", path: str | Path = "results.csv"
) -> Path:
    """Write records (CSV or a JSON array) plus a mean/std summary file."""
    path = Path(path)
    k = max((len(r.per_user_rates) for r in records), default=0)
    try:
        if format == "csv":
            with path.open("w", newline="") as handle:
                writer = csv.writer(handle)
                writer.writerow(_csv_header(k))
                for r in records:
                    rates = list(r.per_user_rates) + [math.nan] * (k - len(r.per_user_rates))
                    writer.writerow(
                        [r.trial_id, r.scheme, r.snr_db, r.second_stage, r.status]
                        + rates
                        + [r.sum_rate, r.hybrid_residual, r.outer_iterations,
                           r.gp_iterations, r.min_grid_gain]
                    )
        elif format == "json":
            path.write_text(json.dumps([asdict(r) for r in records], indent=1))
        else:
            raise ValueError(f"unknown output format {format!r}")

        summary = summarize(records)
        with _summary_path(path).open("w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(
                ["scheme", "snr_db", "second_stage", "count", "excluded",
                 "mean_sum_rate", "std_sum_rate"]
            )
            for row in summary:
                writer.writerow([row[c] for c in (
                    "scheme", "snr_db", "second_stage", "count", "excluded",
                    "mean_sum_rate", "std_sum_rate")])
    except OSError as exc:
        raise OSError(f"failed writing results to {path}: {exc}") from exc
    return path


def records_from_json(path: str | Path) -> list[TrialRecord]:
    data = json.loads(Path(path).read_text())
    return [TrialRecord(**item) for item in data]


def emit_beampattern(
    config: SystemConfig,
    scheme: str,
    angle_step_deg: float = 0.5,
    path: str | Path = "beampattern.csv",
) -> Path:
    """Per-receiver (angle, gain) sweep over [0, 180] for one scheme.

    A bare family tag (CDP, FM, ES) evaluates the fully-digital precoder; a
    FAMILY-SOLVER tag evaluates the composed hybrid precoder.
    """
    bs = geometry.ArrayGeometry(config.m_t)
    ru = geometry.ArrayGeometry(config.m_r)
    trial_rng = np.random.default_rng([config.seed, 0])
    channels = _draw_trial_channels(config, trial_rng, None, None)

    if "-" in scheme:
        family, solver = _parse_scheme(scheme)
    else:
        if scheme not in DIGITAL_FAMILIES:
            raise ValueError(f"unknown scheme {scheme!r}")
        family, solver = scheme, None

    target = _digital_target(family, channels, config)
    if solver is None:
        matrix = target.matrix
    else:
        combiners = [geometry.receive_combiner(ch, ru) for ch in channels]
        hp = hybrid.approximate_hybrid(
            target, config.n_rf, analog_solver=solver,
            tol=config.hybrid_tol, max_iter=config.hybrid_max_iter,
            rng=np.random.default_rng([config.seed, 0, 0]),
            gp_tol=config.gp_tol, gp_max_iter=config.gp_max_iter,
        )
        bd = cancellation.bd_precoder(
            cancellation.effective_channels(channels, combiners, hp)
        )
        matrix = cancellation.compose_hybrid(hp, bd, scheme).matrix

    angles = np.arange(0.0, 180.0 + angle_step_deg / 2.0, angle_step_deg)
    path = Path(path)
    try:
        with path.open("w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["receiver", "angle_deg", "gain"])
            for user in range(config.k):
                pattern = metrics.beampattern(matrix[:, user], angles, bs)
                for angle, gain in zip(pattern.angles_deg, pattern.gains):
                    writer.writerow([user, float(angle), float(gain)])
    except OSError as exc:
        raise OSError(f"failed writing beampattern to {path}: {exc}") from exc
    return path


def convergence_traces(config: SystemConfig, scheme: str = "FM-GP") -> dict:
    """Inner (gradient projection) and outer (alternating) objective traces."""
    family, solver = _parse_scheme(scheme)
    trial_rng = np.random.default_rng([config.seed, 0])
    channels = _draw_trial_channels(config, trial_rng, None, None)
    target = _digital_target(family, channels, config)

    rng = np.random.default_rng([config.seed, 0, 0])
    traces: dict = {"scheme": scheme}
    if solver == "GP":
        analog = np.exp(
            1j * rng.uniform(0.0, 2.0 * np.pi, (config.m_t, config.n_rf))
        ) / math.sqrt(config.m_t)
        baseband = hybrid.digital_ls_step(analog, target.matrix)
        problem = hybrid.CmlsProblem(baseband, target.matrix)
        result = hybrid.gp_analog_step(
            problem, analog.ravel(order="F"), tol=0.0, max_iter=config.gp_max_iter
        )
        traces["gp_objective"] = result.objectives
    hp = hybrid.approximate_hybrid(
        target, config.n_rf, analog_solver=solver,
        tol=config.hybrid_tol, max_iter=config.hybrid_max_iter,
        rng=np.random.default_rng([config.seed, 0, 0]),
        gp_tol=config.gp_tol, gp_max_iter=config.gp_max_iter,
    )
    traces["outer_residual"] = hp.residual_trace
    if target.objective_trace is not None:
        traces["digital_objective"] = target.objective_trace
    return traces
