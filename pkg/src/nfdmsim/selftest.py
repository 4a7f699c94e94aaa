"""Fast invariant suite behind the `nfdmsim selftest` subcommand.

Each check is a cheap property with a hard threshold; the full evidence, with
oracles and tolerances, lives in the pytest suite.
"""

from __future__ import annotations

import numpy as np

from .capacity import TransitionMatrix, arimoto_blahut, make_ring_constellation
from .channel import LinkConfig, back_propagate, ssfm_propagate
from .nfdm import qhat_to_u, u_to_qhat
from .nft import LambdaGrid, NonlinearSpectrum, forward_nft, inverse_nft, nonlinear_parseval_energy
from .signals import ComplexSignal, TimeGrid, energy, fourier, inverse_fourier


def _rel(a, b) -> float:
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


def check_fourier_roundtrip() -> float:
    grid = TimeGrid.centered(1024, 0.05)
    rng = np.random.default_rng(0)
    sig = ComplexSignal(grid, rng.normal(size=1024) + 1j * rng.normal(size=1024))
    back = inverse_fourier(fourier(sig), grid)
    return _rel(back.samples, sig.samples)


def check_parseval_linear() -> float:
    grid = TimeGrid.centered(1024, 0.05)
    rng = np.random.default_rng(1)
    sig = ComplexSignal(grid, (rng.normal(size=1024) + 1j * rng.normal(size=1024))
                        * np.exp(-grid.times**2 / 40))
    return abs(energy(fourier(sig)) - energy(sig)) / energy(sig)


def check_su2_scattering() -> float:
    from .nft import scattering_coefficients

    grid = TimeGrid.centered(512, 30 / 512)
    sig = ComplexSignal(grid, 0.4 * np.exp(-grid.times**2 / 4) * np.exp(0.3j * grid.times))
    lam = np.linspace(-3, 3, 17)
    a, b = scattering_coefficients(sig, lam)
    return float(np.max(np.abs(np.abs(a) ** 2 + np.abs(b) ** 2 - 1.0)))


def check_nft_roundtrip() -> float:
    # amplitude keeps the L1 area at ~55% of the soliton threshold; closer to
    # it a(lam) develops a zero too near the real axis to invert accurately
    grid = TimeGrid.centered(1024, 40 / 1024)
    sig = ComplexSignal(grid, 0.2 * np.exp(-grid.times**2 / 6) * np.exp(0.2j * grid.times))
    spec = forward_nft(sig)
    back = inverse_nft(spec, grid)
    return _rel(back.samples, sig.samples)


def check_nonlinear_parseval() -> float:
    grid = TimeGrid.centered(1024, 40 / 1024)
    sig = ComplexSignal(grid, 0.3 * np.exp(-grid.times**2 / 6))
    return abs(nonlinear_parseval_energy(forward_nft(sig)) - energy(sig)) / energy(sig)


def check_soliton() -> float:
    grid = TimeGrid.centered(1024, 40 / 1024)
    sig = ComplexSignal(grid, 1 / np.cosh(grid.times))
    link = LinkConfig(length=1.0, n_steps=1000)
    out = ssfm_propagate(sig, link, noise_on=False)
    return _rel(out.samples, sig.samples * np.exp(1j))


def check_dbp_inverse() -> float:
    grid = TimeGrid.centered(1024, 40 / 1024)
    sig = ComplexSignal(grid, 0.5 * np.exp(-grid.times**2 / 8) * np.exp(0.4j * grid.times))
    link = LinkConfig(length=0.5, n_steps=400)
    out = back_propagate(ssfm_propagate(sig, link, noise_on=False), link)
    return _rel(out.samples, sig.samples)


def check_exp_log_maps() -> float:
    grid = LambdaGrid(256, 0.05, -6.0)
    rng = np.random.default_rng(2)
    U = NonlinearSpectrum(grid, rng.normal(size=256) + 1j * rng.normal(size=256))
    back = qhat_to_u(u_to_qhat(U))
    return float(np.max(np.abs(back.qhat - U.qhat)))


def check_arimoto_blahut() -> float:
    bsc = TransitionMatrix.from_probs(np.array([[0.9, 0.1], [0.1, 0.9]]))
    cap, _ = arimoto_blahut(bsc)
    h2 = -0.1 * np.log2(0.1) - 0.9 * np.log2(0.9)
    return abs(cap - (1 - h2))


def check_quantizer() -> float:
    constellation = make_ring_constellation(4, 8, 1.0)
    pts = constellation.points
    idx = constellation.quantize(pts)
    return float(np.max(np.abs(idx - np.arange(len(pts)))))


CHECKS = [
    ("fourier round trip", check_fourier_roundtrip, 1e-12),
    ("linear Parseval", check_parseval_linear, 1e-10),
    ("SU(2) scattering identity", check_su2_scattering, 1e-8),
    ("NFT round trip", check_nft_roundtrip, 1e-3),
    ("nonlinear Parseval", check_nonlinear_parseval, 5e-3),
    ("soliton invariance", check_soliton, 1e-3),
    ("back-propagation inverse", check_dbp_inverse, 1e-3),
    ("exp/log map inverses", check_exp_log_maps, 1e-12),
    ("Arimoto-Blahut BSC(0.1)", check_arimoto_blahut, 1e-6),
    ("ring quantizer fixed points", check_quantizer, 0.0),
]


def run_all(verbose: bool = True) -> list[str]:
    failures = []
    for name, fn, tol in CHECKS:
        value = fn()
        ok = value <= tol
        if verbose:
            print(f"{'PASS' if ok else 'FAIL'}  {name}: {value:.3e} (tol {tol:.0e})")
        if not ok:
            failures.append(name)
    return failures
