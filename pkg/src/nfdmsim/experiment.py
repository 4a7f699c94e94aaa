"""Experiment orchestration: configuration, unit normalization, the
rate-vs-power sweep, Monte Carlo scheduling and result persistence.

All simulation internals are dimensionless; this module owns the only
physical-to-normalized conversions.  With normalization time T_n = 1/B
(B the target bandwidth) the normalized bandwidth target is exactly 1, the
normalization length is L_n = 2 T_n^2 / |beta2| and the normalization power
is P_n = |beta2| / (gamma T_n^2).  Fiber constants default to common
standard-single-mode-fiber reference values; they are configuration inputs,
not measured truth.
"""

from __future__ import annotations

import hashlib
import json
import subprocess
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from .capacity import (
    RingConstellation,
    arimoto_blahut,
    estimate_transitions,
    estimate_transitions_ring_folded,
    make_ring_constellation,
    memory_diagnostic,
    MemoryReport,
    spectral_efficiency,
)
from .channel import LinkConfig, ssfm_propagate
from .nfdm import (
    CalibrationError,
    FrameTemplate,
    SymbolFrame,
    calibrate,
    nfdm_receive,
    nfdm_transmit,
)
from .signals import TimeGrid, average_power, bandwidth_99, duration_99
from .wdm import wdm_receive, wdm_transmit

PLANCK = 6.62607015e-34
LIGHT_SPEED = 299792458.0


class ConfigError(ValueError):
    """Invalid or unparseable experiment configuration."""


# ---------------------------------------------------------------------------
# configuration schema
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridConfig:
    n_samples: int = 4096
    dt: float = 0.0390625


@dataclass(frozen=True)
class FrameConfig:
    n_users: int = 5
    n_slots: int = 1
    rolloff: float = 0.25
    widened_spacing: bool = False


@dataclass(frozen=True)
class ConstellationConfig:
    n_rings: int = 48
    n_phases: int = 128
    max_radius: float = 1.0


@dataclass(frozen=True)
class FiberConfig:
    """Physical reference constants (labeled defaults, not paper data)."""

    length_km: float = 2000.0
    bandwidth_ghz: float = 100.0
    beta2_ps2_km: float = -21.7
    gamma_w_km: float = 1.27
    loss_db_km: float = 0.2
    spont_factor: float = 1.0
    center_wavelength_nm: float = 1550.0


@dataclass(frozen=True)
class StepConfig:
    n_steps: int = 1000


@dataclass(frozen=True)
class SweepConfig:
    powers_dbm: tuple = (-10.0, -8.0, -6.0, -4.0, -2.0, 0.0, 2.0, 4.0)
    n_realizations: int = 500


@dataclass(frozen=True)
class ExperimentConfig:
    system: str = "nfdm"
    seed: int = 2026
    grid: GridConfig = field(default_factory=GridConfig)
    frame: FrameConfig = field(default_factory=FrameConfig)
    constellation: ConstellationConfig = field(default_factory=ConstellationConfig)
    fiber: FiberConfig = field(default_factory=FiberConfig)
    link: StepConfig = field(default_factory=StepConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    estimator: str = "ring_folded"
    dbp: str = "full"
    output_dir: str = "results"

    def __post_init__(self) -> None:
        if self.system not in ("nfdm", "wdm"):
            raise ConfigError(f"system must be 'nfdm' or 'wdm', got {self.system!r}")
        if self.estimator not in ("ring_folded", "joint"):
            raise ConfigError(f"unknown estimator {self.estimator!r}")
        if self.dbp not in ("full", "filtered"):
            raise ConfigError(f"dbp must be 'full' or 'filtered', got {self.dbp!r}")
        if len(self.sweep.powers_dbm) == 0:
            raise ConfigError("power sweep must not be empty")
        if self.sweep.n_realizations < 1:
            raise ConfigError("n_realizations must be >= 1")


_SECTION_TYPES = {
    "grid": GridConfig,
    "frame": FrameConfig,
    "constellation": ConstellationConfig,
    "fiber": FiberConfig,
    "link": StepConfig,
    "sweep": SweepConfig,
}


def _build_section(cls, data: dict, path: str):
    allowed = set(cls.__dataclass_fields__)
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in section '{path}'")
    coerced = {}
    for key, value in data.items():
        if key == "powers_dbm":
            value = tuple(float(v) for v in value)
        coerced[key] = value
    try:
        return cls(**coerced)
    except TypeError as exc:
        raise ConfigError(f"section '{path}': {exc}") from exc


def config_from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration root must be a mapping")
    allowed = set(ExperimentConfig.__dataclass_fields__)
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {sorted(unknown)}")
    kwargs = {}
    for key, value in data.items():
        if key in _SECTION_TYPES:
            if not isinstance(value, dict):
                raise ConfigError(f"section '{key}' must be a mapping")
            kwargs[key] = _build_section(_SECTION_TYPES[key], value, key)
        else:
            kwargs[key] = value
    return ExperimentConfig(**kwargs)


def config_to_dict(config: ExperimentConfig) -> dict:
    data = asdict(config)
    data["sweep"]["powers_dbm"] = list(data["sweep"]["powers_dbm"])
    return data


def load_config(path: str | Path) -> ExperimentConfig:
    """Parse and validate a YAML experiment file (unknown keys rejected)."""
    path = Path(path)
    try:
        with path.open() as fh:
            data = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}" if mark is not None else ""
        raise ConfigError(f"{path}: YAML parse error{where}: {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if data is None:
        raise ConfigError(f"{path}: empty configuration")
    return config_from_dict(data)


def write_config(config: ExperimentConfig, path: str | Path) -> None:
    path = Path(path)
    with path.open("w") as fh:
        yaml.safe_dump(config_to_dict(config), fh, sort_keys=False)


def config_hash(config: ExperimentConfig) -> str:
    canonical = json.dumps(config_to_dict(config), sort_keys=True)
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# physical-to-normalized conversion
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Normalization:
    """Scale factors between physical and normalized quantities."""

    t_scale_s: float       # T_n
    length_scale_m: float  # L_n
    power_scale_w: float   # P_n

    @classmethod
    def from_fiber(cls, fiber: FiberConfig) -> "Normalization":
        t_n = 1.0 / (fiber.bandwidth_ghz * 1e9)
        beta2 = abs(fiber.beta2_ps2_km) * 1e-27  # s^2/m
        if fiber.beta2_ps2_km >= 0:
            raise ConfigError("focusing regime requires anomalous dispersion (beta2 < 0)")
        l_n = 2.0 * t_n**2 / beta2
        gamma = fiber.gamma_w_km * 1e-3  # 1/(W m)
        p_n = beta2 / (gamma * t_n**2)
        return cls(t_scale_s=t_n, length_scale_m=l_n, power_scale_w=p_n)

    def length_norm(self, km: float) -> float:
        return km * 1e3 / self.length_scale_m

    def power_norm(self, dbm: float) -> float:
        return 10 ** ((dbm - 30.0) / 10.0) / self.power_scale_w

    def noise_psd_norm(self, fiber: FiberConfig) -> float:
        nu = LIGHT_SPEED / (fiber.center_wavelength_nm * 1e-9)
        alpha = fiber.loss_db_km * np.log(10.0) / 10.0 / 1e3  # 1/m
        psd_phys = fiber.spont_factor * PLANCK * nu * alpha   # W/(m Hz)
        return psd_phys * self.length_scale_m / (self.power_scale_w * self.t_scale_s)


def normalized_link(config: ExperimentConfig) -> LinkConfig:
    norm = Normalization.from_fiber(config.fiber)
    return LinkConfig(
        length=norm.length_norm(config.fiber.length_km),
        n_steps=config.link.n_steps,
        noise_psd=norm.noise_psd_norm(config.fiber),
        seed=config.seed,
    )


# ---------------------------------------------------------------------------
# Monte Carlo workers
# ---------------------------------------------------------------------------

def _realization_rng(seed: int, power_idx: int, realization: int) -> np.random.Generator:
    ss = np.random.SeedSequence((seed, power_idx, 2, realization))
    return np.random.Generator(np.random.Philox(ss))


def _calibration_rng(seed: int, power_idx: int) -> np.random.Generator:
    ss = np.random.SeedSequence((seed, power_idx, 1))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class _WorkItem:
    config: ExperimentConfig
    power_idx: int
    realization: int
    scale: float
    w0: float


def _draw_experiment_frame(
    config: ExperimentConfig,
    constellation: RingConstellation,
    w0: float,
    rng: np.random.Generator,
    realization: int,
) -> tuple[SymbolFrame, int]:
    """Random frame; the central symbol's ring index is stratified over
    realizations (variance reduction; the estimator conditions on it)."""
    frame_cfg = config.frame
    template = FrameTemplate(
        frame_cfg.n_users, frame_cfg.n_slots, frame_cfg.rolloff, frame_cfg.widened_spacing
    )
    idx = rng.integers(0, constellation.size, size=(frame_cfg.n_users, frame_cfg.n_slots))
    ring = realization % constellation.n_rings
    phase = rng.integers(0, constellation.n_phases)
    central_idx = ring * constellation.n_phases + phase
    idx[frame_cfg.n_users // 2, frame_cfg.n_slots // 2] = central_idx
    points = constellation.points
    shape = template.make_shape(w0)
    frame = SymbolFrame(points[idx], shape, template.spacing(w0))
    return frame, int(central_idx)


def _run_realization(item: _WorkItem) -> dict:
    """One transmit/propagate/receive pass; returns measurements or a failure."""
    config = item.config
    try:
        rng = _realization_rng(config.seed, item.power_idx, item.realization)
        grid = TimeGrid.centered(config.grid.n_samples, config.grid.dt)
        constellation = make_ring_constellation(
            config.constellation.n_rings,
            config.constellation.n_phases,
            config.constellation.max_radius,
        )
        frame, central_idx = _draw_experiment_frame(
            config, constellation, item.w0, rng, item.realization
        )
        frame = frame.scaled(item.scale)
        link = normalized_link(config)
        if config.system == "nfdm":
            tx_signal, _diag = nfdm_transmit(frame, grid, strict=False)
        else:
            tx_signal = wdm_transmit(frame, grid)
        t99_in = duration_99(tx_signal)
        b99_in = bandwidth_99(tx_signal)
        rx_signal = ssfm_propagate(tx_signal, link, noise_on=True, rng=rng)
        b99_out = bandwidth_99(rx_signal)
        if config.system == "nfdm":
            symbols = nfdm_receive(
                rx_signal,
                link.length,
                frame.shape,
                frame.n_users,
                frame.n_slots,
                frame.carrier_spacing,
            )
            rx_central = complex(symbols[frame.n_users // 2, frame.n_slots // 2])
        else:
            central = wdm_receive(
                rx_signal,
                link,
                frame.shape,
                frame.n_slots,
                frame.carrier_spacing,
                filtered_dbp=(config.dbp == "filtered"),
            )
            rx_central = complex(central[frame.n_slots // 2])
        tx_central = frame.central_symbol
        if not (np.isfinite(rx_central) and np.isfinite(tx_central)):
            raise FloatingPointError("non-finite symbol estimate")
        return {
            "ok": True,
            "realization": item.realization,
            "tx_index": central_idx,
            "tx_value": tx_central,
            "rx_value": rx_central,
            "t99_in": t99_in,
            "b99_in": b99_in,
            "b99_out": b99_out,
        }
    except Exception as exc:  # dropped realizations are counted by the caller
        return {"ok": False, "realization": item.realization, "error": f"{type(exc).__name__}: {exc}"}


# ---------------------------------------------------------------------------
# sweep driver
# ---------------------------------------------------------------------------

RESULT_COLUMNS = (
    "power_dbm",
    "mi_bits_2d",
    "se_bits_s_hz",
    "alpha",
    "t_avg",
    "b_max",
    "n_realizations",
    "seed",
    "status",
)

CLOUD_COLUMNS = ("power_dbm", "realization", "re_tx", "im_tx", "re_rx", "im_rx")


@dataclass
class SweepRow:
    power_dbm: float
    mi_bits_2d: float
    se_bits_s_hz: float
    alpha: float
    t_avg: float
    b_max: float
    n_realizations: int
    seed: int
    status: str
    wall_time_s: float = 0.0


@dataclass
class SweepResult:
    config: ExperimentConfig
    rows: list
    cloud: list  # tuples matching CLOUD_COLUMNS


def _map_items(items, workers: int):
    if workers <= 1:
        return [_run_realization(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        chunk = max(1, len(items) // (workers * 8))
        return list(pool.map(_run_realization, items, chunksize=chunk))


def run_sweep(
    config: ExperimentConfig,
    workers: int = 1,
    progress: bool = False,
) -> SweepResult:
    """Run the full rate-vs-power experiment.

    For each power: calibrate amplitude scale and w0, run the noise
    realizations, estimate the central-symbol transition matrix, maximize the
    mutual information and convert to spectral efficiency.  Calibration
    failures mark the row 'failed' and the sweep continues; more than 1%
    dropped realizations at a power point aborts the run.
    """
    norm = Normalization.from_fiber(config.fiber)
    constellation = make_ring_constellation(
        config.constellation.n_rings,
        config.constellation.n_phases,
        config.constellation.max_radius,
    )
    template = FrameTemplate(
        config.frame.n_users,
        config.frame.n_slots,
        config.frame.rolloff,
        config.frame.widened_spacing,
    )
    grid = TimeGrid.centered(config.grid.n_samples, config.grid.dt)
    rows: list[SweepRow] = []
    cloud: list[tuple] = []
    w0_warm: float | None = None
    for p_idx, p_dbm in enumerate(config.sweep.powers_dbm):
        t_start = time.perf_counter()
        target_power = norm.power_norm(p_dbm)
        cal_rng = _calibration_rng(config.seed, p_idx)
        try:
            cal = calibrate(
                target_power,
                1.0,  # normalized bandwidth target by construction of T_n
                constellation.points,
                template,
                grid,
                cal_rng,
                system=config.system,
                w0_init=w0_warm,
            )
        except CalibrationError as exc:
            if progress:
                print(f"[{p_dbm:+.1f} dBm] calibration failed: {exc}")
            rows.append(
                SweepRow(p_dbm, np.nan, np.nan, np.nan, np.nan, np.nan,
                         0, config.seed, "failed:calibration",
                         time.perf_counter() - t_start)
            )
            continue
        w0_warm = cal.w0
        items = [
            _WorkItem(config, p_idx, r, cal.scale, cal.w0)
            for r in range(config.sweep.n_realizations)
        ]
        results = _map_items(items, workers)
        results.sort(key=lambda d: d["realization"])
        good = [r for r in results if r["ok"]]
        dropped = len(results) - len(good)
        if dropped > 0.01 * len(results):
            errors = {r["error"] for r in results if not r["ok"]}
            raise RuntimeError(
                f"{dropped}/{len(results)} realizations dropped at {p_dbm} dBm: {errors}"
            )
        tx_idx = np.array([r["tx_index"] for r in good])
        rx_val = np.array([r["rx_value"] for r in good])
        scaled_const = RingConstellation(
            constellation.radii * cal.scale, constellation.n_phases, constellation.prior
        )
        estimator = (
            estimate_transitions_ring_folded
            if config.estimator == "ring_folded"
            else estimate_transitions
        )
        tm = estimator(tx_idx, rx_val, scaled_const)
        mi_bits, _prior = arimoto_blahut(tm)
        t_avg = float(np.mean([r["t99_in"] for r in good]))
        b_max = float(
            max(max(r["b99_in"] for r in good), max(r["b99_out"] for r in good))
        )
        rate = spectral_efficiency(
            mi_bits, b_max, t_avg, config.frame.n_users, config.frame.n_slots
        )
        rows.append(
            SweepRow(
                p_dbm,
                rate.mutual_info_bits_2d,
                rate.se_bits_s_hz,
                rate.alpha,
                rate.t_avg,
                rate.b_max,
                len(good),
                config.seed,
                "ok",
                time.perf_counter() - t_start,
            )
        )
        for r in good:
            cloud.append(
                (
                    p_dbm,
                    r["realization"],
                    r["tx_value"].real,
                    r["tx_value"].imag,
                    r["rx_value"].real,
                    r["rx_value"].imag,
                )
            )
        if progress:
            print(
                f"[{p_dbm:+.1f} dBm] MI = {mi_bits:.3f} bits/2D, "
                f"SE = {rate.se_bits_s_hz:.3f} bits/s/Hz "
                f"({len(good)} realizations, {rows[-1].wall_time_s:.1f} s)"
            )
    return SweepResult(config, rows, cloud)


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def _git_revision() -> str:
    try:
        out = subprocess.run(
            ["git", "rev-parse", "--short", "HEAD"],
            capture_output=True, text=True, timeout=5, cwd=Path(__file__).parent,
        )
        return out.stdout.strip() or "unknown"
    except Exception:
        return "unknown"


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def write_results(result: SweepResult, out_dir: str | Path, stem: str | None = None) -> dict:
    """Write the results CSV, the point-cloud CSV and a provenance sidecar.

    Returns the paths written.  The results and cloud CSVs are byte-level
    deterministic for a fixed (config, seed); wall-clock times go to the
    sidecar only.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if stem is None:
        stem = f"{result.config.system}_sweep"
    results_path = out_dir / f"{stem}.csv"
    cloud_path = out_dir / f"{stem}_cloud.csv"
    sidecar_path = out_dir / f"{stem}.provenance.jsonl"
    with results_path.open("w", newline="") as fh:
        fh.write(",".join(RESULT_COLUMNS) + "\n")
        for row in result.rows:
            fh.write(
                ",".join(
                    [
                        _fmt(row.power_dbm),
                        _fmt(row.mi_bits_2d),
                        _fmt(row.se_bits_s_hz),
                        _fmt(row.alpha),
                        _fmt(row.t_avg),
                        _fmt(row.b_max),
                        str(row.n_realizations),
                        str(row.seed),
                        row.status,
                    ]
                )
                + "\n"
            )
    with cloud_path.open("w", newline="") as fh:
        fh.write(",".join(CLOUD_COLUMNS) + "\n")
        for tup in result.cloud:
            fh.write(
                ",".join([_fmt(tup[0]), str(tup[1])] + [_fmt(v) for v in tup[2:]]) + "\n"
            )
    with sidecar_path.open("w") as fh:
        record = {
            "config_hash": config_hash(result.config),
            "seed": result.config.seed,
            "git_revision": _git_revision(),
            "wall_times_s": {
                _fmt(row.power_dbm): round(row.wall_time_s, 3) for row in result.rows
            },
            "config": config_to_dict(result.config),
        }
        fh.write(json.dumps(record) + "\n")
    return {"results": results_path, "cloud": cloud_path, "provenance": sidecar_path}


# ---------------------------------------------------------------------------
# stochastic-memory study
# ---------------------------------------------------------------------------

def run_memory_study(
    config: ExperimentConfig,
    workers: int = 1,
) -> list[tuple[float, MemoryReport]]:
    """Multi-slot leakage diagnostics across the configured power sweep.

    Requires frame.n_slots > 1; reuses the sweep machinery but collects all
    central-user slots instead of the transition matrix.
    """
    if config.frame.n_slots < 2:
        raise ValueError("memory study needs n_slots > 1")
    norm = Normalization.from_fiber(config.fiber)
    constellation = make_ring_constellation(
        config.constellation.n_rings,
        config.constellation.n_phases,
        config.constellation.max_radius,
    )
    template = FrameTemplate(
        config.frame.n_users,
        config.frame.n_slots,
        config.frame.rolloff,
        config.frame.widened_spacing,
    )
    grid = TimeGrid.centered(config.grid.n_samples, config.grid.dt)
    out = []
    w0_warm = None
    for p_idx, p_dbm in enumerate(config.sweep.powers_dbm):
        cal = calibrate(
            norm.power_norm(p_dbm),
            1.0,
            constellation.points,
            template,
            grid,
            _calibration_rng(config.seed, p_idx),
            system=config.system,
            w0_init=w0_warm,
        )
        w0_warm = cal.w0
        items = [
            _WorkItem(config, p_idx, r, cal.scale, cal.w0)
            for r in range(config.sweep.n_realizations)
        ]
        results = _map_memory_items(items, workers)
        results.sort(key=lambda d: d["realization"])
        good = [r for r in results if r["ok"]]
        dropped = len(results) - len(good)
        if dropped > 0.01 * len(results):
            raise RuntimeError(f"{dropped} dropped realizations at {p_dbm} dBm")
        tx = np.array([r["tx_central"] for r in good])
        rx = np.array([r["rx_slots"] for r in good])
        out.append((p_dbm, memory_diagnostic(tx, rx)))
    return out


def _run_memory_realization(item: _WorkItem) -> dict:
    config = item.config
    try:
        rng = _realization_rng(config.seed, item.power_idx, item.realization)
        grid = TimeGrid.centered(config.grid.n_samples, config.grid.dt)
        constellation = make_ring_constellation(
            config.constellation.n_rings,
            config.constellation.n_phases,
            config.constellation.max_radius,
        )
        frame, _ = _draw_experiment_frame(config, constellation, item.w0, rng, item.realization)
        frame = frame.scaled(item.scale)
        link = normalized_link(config)
        if config.system == "nfdm":
            tx_signal, _diag = nfdm_transmit(frame, grid, strict=False)
        else:
            tx_signal = wdm_transmit(frame, grid)
        rx_signal = ssfm_propagate(tx_signal, link, noise_on=True, rng=rng)
        if config.system == "nfdm":
            symbols = nfdm_receive(
                rx_signal, link.length, frame.shape,
                frame.n_users, frame.n_slots, frame.carrier_spacing,
            )
            rx_slots = symbols[frame.n_users // 2, :]
        else:
            rx_slots = wdm_receive(
                rx_signal, link, frame.shape, frame.n_slots, frame.carrier_spacing,
                filtered_dbp=(config.dbp == "filtered"),
            )
        return {
            "ok": True,
            "realization": item.realization,
            "tx_central": frame.central_symbol,
            "rx_slots": np.asarray(rx_slots),
        }
    except Exception as exc:
        return {"ok": False, "realization": item.realization, "error": str(exc)}


def _map_memory_items(items, workers: int):
    if workers <= 1:
        return [_run_memory_realization(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        chunk = max(1, len(items) // (workers * 8))
        return list(pool.map(_run_memory_realization, items, chunksize=chunk))
