"""Command-line entry point.

Subcommands:
    run          full rate-vs-power sweep from a config file
    calibrate    report the calibrated amplitude scale and w0 per power
    selftest     fast invariant suite (prints PASS/FAIL lines)
    oracle       recompute the derived reference values used by the tests
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

import numpy as np

from .experiment import (
    ExperimentConfig,
    Normalization,
    _calibration_rng,
    load_config,
    run_sweep,
    write_results,
)


def _load(args) -> ExperimentConfig:
    config = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    if args.out is not None:
        config = dataclasses.replace(config, output_dir=args.out)
    return config


def cmd_run(args) -> int:
    config = _load(args)
    result = run_sweep(config, workers=args.workers, progress=True)
    paths = write_results(result, config.output_dir)
    for kind, path in paths.items():
        print(f"{kind}: {path}")
    return 0


def cmd_calibrate(args) -> int:
    from .capacity import make_ring_constellation
    from .nfdm import FrameTemplate, calibrate
    from .signals import TimeGrid

    config = _load(args)
    norm = Normalization.from_fiber(config.fiber)
    constellation = make_ring_constellation(
        config.constellation.n_rings,
        config.constellation.n_phases,
        config.constellation.max_radius,
    )
    template = FrameTemplate(
        config.frame.n_users, config.frame.n_slots,
        config.frame.rolloff, config.frame.widened_spacing,
    )
    grid = TimeGrid.centered(config.grid.n_samples, config.grid.dt)
    w0 = None
    print("power_dbm,scale,w0,achieved_power,achieved_bandwidth,rounds")
    for p_idx, p_dbm in enumerate(config.sweep.powers_dbm):
        cal = calibrate(
            norm.power_norm(p_dbm), 1.0, constellation.points, template, grid,
            _calibration_rng(config.seed, p_idx), system=config.system, w0_init=w0,
        )
        w0 = cal.w0
        print(f"{p_dbm},{cal.scale:.8g},{cal.w0:.8g},"
              f"{cal.achieved_power:.8g},{cal.achieved_bandwidth:.8g},{cal.rounds}")
    return 0


def cmd_selftest(args) -> int:
    """Fast invariant checks, independent of pytest."""
    from . import selftest

    failures = selftest.run_all(verbose=True)
    return 1 if failures else 0


def cmd_oracle(args) -> int:
    """Recompute derived reference values and print them as JSON."""
    from scipy.integrate import quad
    from scipy.optimize import brentq
    from scipy.special import erfinv

    out = {}
    # 99% mass interval of exp(-t^2): invert the error function
    out["gauss_duration_99"] = float(2 * erfinv(0.99))
    # integral of sech^2
    out["sech_energy"] = float(quad(lambda t: 1 / np.cosh(t) ** 2, -40, 40)[0])
    # BSC(0.1) and BEC(0.3) capacities from the entropy formulas
    h2 = lambda p: -p * np.log2(p) - (1 - p) * np.log2(1 - p)
    out["bsc_01_capacity_bits"] = float(1 - h2(0.1))
    out["bec_03_capacity_bits"] = 1 - 0.3
    # fundamental-soliton phase rate for j q_z = -(q_tt + 2|q|^2 q)
    out["soliton_phase_per_unit_z"] = 1.0
    # rectangle scattering at A = T = 1, lam = 0.7 (closed form)
    A, T, lam = 1.0, 1.0, 0.7
    delta = np.sqrt(lam**2 + A**2)
    a = np.exp(1j * lam * T) * (np.cos(delta * T) - 1j * lam * np.sin(delta * T) / delta)
    b = -A * np.sin(delta * T) / delta * np.exp(-1j * lam * (2 * (-T / 2) + T))
    out["rect_a_lam0p7"] = [float(a.real), float(a.imag)]
    out["rect_qhat_abs_lam0p7"] = float(np.abs(b / a))
    print(json.dumps(out, indent=2))
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="nfdmsim",
        description="NFDM vs WDM achievable-rate simulation laboratory",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (
        ("run", cmd_run),
        ("calibrate", cmd_calibrate),
        ("selftest", cmd_selftest),
        ("oracle", cmd_oracle),
    ):
        p = sub.add_parser(name)
        p.add_argument("--config", type=str, default=None, help="YAML experiment file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--workers", type=int, default=1, help="parallel workers")
        p.add_argument("--out", type=str, default=None, help="output directory")
        p.set_defaults(func=fn)
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
