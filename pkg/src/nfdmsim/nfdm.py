"""NFDM transmitter, receiver and power/bandwidth calibration.

Transmit chain:  symbols -> u (root-raised-cosine multiplex) -> U = F(u)/sqrt2
-> exponential map to the nonlinear spectrum qhat -> inverse NFT -> q(t, 0).
Receive chain:   q(t, L) -> forward NFT -> exp(4j lam^2 L) equalizer -> log map
back to U -> u = sqrt2 F^-1(U) -> matched filter -> symbol estimates.

The multiplex is

    u(tau, 0) = sqrt(2) * sum_k sum_l  s[k, l] phi(tau - l T0) exp(2j pi k W u tau)

with user index k centered on zero and slot index l in
{-floor(Ns/2), ..., ceil(Ns/2)-1}; W u is the carrier spacing (the symbol-rate
bandwidth w0 by default).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np
from numpy.typing import NDArray

from .nft import LambdaGrid, NonlinearSpectrum, forward_nft, inverse_nft, assert_no_discrete_spectrum
from .channel import equalize_nfdm
from .signals import (
    ComplexSignal,
    PulseShape,
    Spectrum,
    TimeGrid,
    average_power,
    bandwidth_99,
    fourier,
    inverse_fourier,
    rrc_pulse,
)


class DiscreteSpectrumWarning(UserWarning):
    """Transmit-side diagnostic found probable soliton content."""


class CalibrationError(RuntimeError):
    """Power/bandwidth calibration did not converge within the budget."""

    def __init__(self, message: str, achieved_power: float, achieved_bandwidth: float):
        super().__init__(message)
        self.achieved_power = achieved_power
        self.achieved_bandwidth = achieved_bandwidth


def user_indices(n_users: int) -> NDArray[np.int64]:
    """Centered user indices {-floor(Nu/2), ..., ceil(Nu/2)-1}."""
    return np.arange(n_users) - n_users // 2


def slot_indices(n_slots: int) -> NDArray[np.int64]:
    return np.arange(n_slots) - n_slots // 2


@dataclass(frozen=True)
class SymbolFrame:
    """An (n_users x n_slots) block of complex symbols with its pulse shape.

    ``symbols[k_idx, l_idx]`` belongs to user ``user_indices(n_users)[k_idx]``
    and slot ``slot_indices(n_slots)[l_idx]``.
    """

    symbols: NDArray[np.complex128]
    shape: PulseShape
    carrier_spacing: float

    def __post_init__(self) -> None:
        symbols = np.atleast_2d(np.asarray(self.symbols, dtype=np.complex128))
        object.__setattr__(self, "symbols", symbols)
        if symbols.ndim != 2 or symbols.size == 0:
            raise ValueError("symbols must be a nonempty 2-D array")
        if not self.carrier_spacing > 0:
            raise ValueError("carrier_spacing must be positive")

    @property
    def n_users(self) -> int:
        return self.symbols.shape[0]

    @property
    def n_slots(self) -> int:
        return self.symbols.shape[1]

    @property
    def central_symbol(self) -> complex:
        return complex(self.symbols[self.n_users // 2, self.n_slots // 2])

    def scaled(self, factor: complex) -> "SymbolFrame":
        return replace(self, symbols=self.symbols * factor)


def frame_from_constellation(
    indices: NDArray[np.int64],
    points: NDArray[np.complex128],
    shape: PulseShape,
    carrier_spacing: float | None = None,
) -> SymbolFrame:
    """Build a frame from constellation point indices (validated)."""
    indices = np.asarray(indices)
    if np.any(indices < 0) or np.any(indices >= len(points)):
        raise ValueError("symbol index outside the constellation")
    spacing = shape.w0 if carrier_spacing is None else carrier_spacing
    return SymbolFrame(points[indices], shape, spacing)


def build_u(frame: SymbolFrame, grid: TimeGrid) -> ComplexSignal:
    """Evaluate the multiplex waveform u(tau, 0) on ``grid``."""
    t = grid.times
    t0 = frame.shape.t0
    u = np.zeros(grid.n_samples, dtype=np.complex128)
    pulses = {}
    for li, l in enumerate(slot_indices(frame.n_slots)):
        pulses[li] = rrc_pulse(grid, frame.shape, center=l * t0).samples.real
    for ki, k in enumerate(user_indices(frame.n_users)):
        carrier = np.exp(2j * np.pi * k * frame.carrier_spacing * t)
        acc = np.zeros_like(u)
        for li in range(frame.n_slots):
            acc += frame.symbols[ki, li] * pulses[li]
        u += acc * carrier
    return ComplexSignal(grid, np.sqrt(2.0) * u)


def u_spectrum(u: ComplexSignal) -> NonlinearSpectrum:
    """U(lam) = F(u)/sqrt2 mapped onto the canonical lambda grid (lam = -pi f)."""
    spec = fourier(u)
    lam_grid = LambdaGrid.conjugate_of(u.grid)
    return NonlinearSpectrum(lam_grid, spec.values[::-1] / np.sqrt(2.0))


def u_from_spectrum(u_spec: NonlinearSpectrum, grid: TimeGrid) -> ComplexSignal:
    """Inverse of :func:`u_spectrum`: u = sqrt2 * F^-1(U)."""
    from .signals import FrequencyGrid

    fgrid = FrequencyGrid.conjugate_of(grid)
    values = u_spec.qhat[::-1] * np.sqrt(2.0)
    return inverse_fourier(Spectrum(fgrid, values), grid)


def u_to_qhat(u_spec: NonlinearSpectrum) -> NonlinearSpectrum:
    """Exponential amplitude map qhat = sqrt(exp(|U|^2) - 1) exp(j angle(U))."""
    U = u_spec.qhat
    mag = np.sqrt(np.expm1(np.abs(U) ** 2))
    phase = np.exp(1j * np.angle(U))
    return NonlinearSpectrum(u_spec.grid, mag * phase)


def qhat_to_u(spectrum: NonlinearSpectrum) -> NonlinearSpectrum:
    """Logarithmic inverse of :func:`u_to_qhat` (phase preserved pointwise)."""
    qh = spectrum.qhat
    mag = np.sqrt(np.log1p(np.abs(qh) ** 2))
    phase = np.exp(1j * np.angle(qh))
    return NonlinearSpectrum(spectrum.grid, mag * phase)


@dataclass(frozen=True)
class TransmitDiagnostics:
    launch_power: float
    bandwidth: float
    spectrum_check_passed: bool
    spectrum_check_reason: str


def nfdm_transmit(
    frame: SymbolFrame,
    grid: TimeGrid,
    strict: bool = True,
) -> tuple[ComplexSignal, TransmitDiagnostics]:
    """Full NFDM TX pipeline; returns the launch signal and its diagnostics.

    With ``strict`` (default), probable discrete-spectrum content raises; set
    it False to downgrade to :class:`DiscreteSpectrumWarning`.
    """
    u = build_u(frame, grid)
    qhat = u_to_qhat(u_spectrum(u))
    q = inverse_nft(qhat, grid)
    check = assert_no_discrete_spectrum(q, spectrum=qhat)
    if not check.passed:
        if strict:
            raise ValueError(f"transmit signal failed the soliton check: {check.reason}")
        warnings.warn(check.reason, DiscreteSpectrumWarning, stacklevel=2)
    diag = TransmitDiagnostics(
        launch_power=average_power(q) if np.any(q.samples) else 0.0,
        bandwidth=bandwidth_99(q) if np.any(q.samples) else 0.0,
        spectrum_check_passed=check.passed,
        spectrum_check_reason=check.reason,
    )
    return q, diag


def matched_filter(u: ComplexSignal, frame_shape: PulseShape, n_users: int, n_slots: int,
                   carrier_spacing: float | None = None) -> NDArray[np.complex128]:
    """Project u onto every (user, slot) basis waveform.

    Implemented as frequency-domain multiply-and-integrate:
    s[k, l] = (1/sqrt2) sum_f  F(u)(f) conj(F_k(f)) exp(2j pi (f - k W) l T0) df,
    where F_k is the transform of the modulated pulse of user k.  The 1/sqrt2
    undoes the multiplex amplitude of :func:`build_u`, so on an orthogonal
    noiseless link the estimates equal the sent symbols.
    """
    spacing = frame_shape.w0 if carrier_spacing is None else carrier_spacing
    grid = u.grid
    t0 = frame_shape.t0
    spec_u = fourier(u)
    f = spec_u.grid.freqs
    df = spec_u.grid.df
    pulse = rrc_pulse(grid, frame_shape).samples.real
    out = np.empty((n_users, n_slots), dtype=np.complex128)
    for ki, k in enumerate(user_indices(n_users)):
        carrier = np.exp(2j * np.pi * k * spacing * grid.times)
        phi_k = fourier(ComplexSignal(grid, pulse * carrier))
        g = spec_u.values * np.conj(phi_k.values)
        for li, l in enumerate(slot_indices(n_slots)):
            shift = np.exp(2j * np.pi * (f - k * spacing) * (l * t0))
            out[ki, li] = np.sum(g * shift) * df
    return out / np.sqrt(2.0)


def nfdm_receive(
    signal: ComplexSignal,
    link_length: float,
    frame_shape: PulseShape,
    n_users: int,
    n_slots: int,
    carrier_spacing: float | None = None,
) -> NDArray[np.complex128]:
    """Full NFDM RX pipeline; returns the (n_users x n_slots) symbol estimates."""
    if not np.any(signal.samples):
        return np.zeros((n_users, n_slots), dtype=np.complex128)
    qhat_l = forward_nft(signal)
    qhat_0 = equalize_nfdm(qhat_l, link_length)
    u = u_from_spectrum(qhat_to_u(qhat_0), signal.grid)
    return matched_filter(u, frame_shape, n_users, n_slots, carrier_spacing)


# ---------------------------------------------------------------------------
# calibration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FrameTemplate:
    """Frame geometry used when drawing random calibration/experiment frames."""

    n_users: int
    n_slots: int
    rolloff: float
    widened_spacing: bool = False  # carrier spacing (1+r) w0 instead of w0

    def spacing(self, w0: float) -> float:
        return (1.0 + self.rolloff) * w0 if self.widened_spacing else w0

    def make_shape(self, w0: float) -> PulseShape:
        return PulseShape(w0=w0, rolloff=self.rolloff)


def draw_frame(
    template: FrameTemplate,
    points: NDArray[np.complex128],
    w0: float,
    rng: np.random.Generator,
) -> SymbolFrame:
    """Uniform random frame over the constellation points."""
    idx = rng.integers(0, len(points), size=(template.n_users, template.n_slots))
    shape = template.make_shape(w0)
    return SymbolFrame(points[idx], shape, template.spacing(w0))


@dataclass(frozen=True)
class CalibrationResult:
    scale: float
    w0: float
    achieved_power: float
    achieved_bandwidth: float
    rounds: int


def _mean_power_and_bandwidth(
    system: str,
    frames: list[SymbolFrame],
    scale: float,
    grid: TimeGrid,
) -> tuple[float, float]:
    powers, bws = [], []
    for frame in frames:
        scaled = frame.scaled(scale)
        if system == "nfdm":
            q, _ = nfdm_transmit(scaled, grid, strict=False)
        else:
            q = build_u(scaled, grid)
        powers.append(average_power(q))
        bws.append(bandwidth_99(q))
    return float(np.mean(powers)), float(np.mean(bws))


def calibrate(
    target_power: float,
    target_bandwidth: float,
    points: NDArray[np.complex128],
    template: FrameTemplate,
    grid: TimeGrid,
    rng: np.random.Generator,
    system: str = "nfdm",
    n_frames: int = 32,
    power_tol_db: float = 0.05,
    bandwidth_tol: float = 0.01,
    max_rounds: int = 10,
    w0_init: float | None = None,
) -> CalibrationResult:
    """Joint amplitude/bandwidth calibration.

    Finds a constellation amplitude scale hitting ``target_power`` within
    ``power_tol_db`` (mean over ``n_frames`` random frames) and a symbol-rate
    bandwidth w0 bringing the mean 99% bandwidth of q(t, 0) within
    ``bandwidth_tol`` of ``target_bandwidth``; alternates the two loops up to
    ``max_rounds``.

    Raises:
        CalibrationError: carrying the best (power, bandwidth) reached.
    """
    if target_power <= 0 or target_bandwidth <= 0:
        raise ValueError("calibration targets must be positive")
    if system not in ("nfdm", "wdm"):
        raise ValueError(f"unknown system {system!r}")
    # Start from the linear-regime estimate: n_users carriers of width w0
    # occupy about n_users * w0; leave the rolloff to the secant refinement.
    w0 = w0_init if w0_init is not None else target_bandwidth / template.n_users
    scale = 1.0
    mean_abs2 = float(np.mean(np.abs(points) ** 2))
    power, bw = np.nan, np.nan

    for round_idx in range(1, max_rounds + 1):
        # -- amplitude: secant on log power vs log scale, monotone map --
        frames = [draw_frame(template, points, w0, rng) for _ in range(n_frames)]
        # linear-regime warm start: power ~ scale^2 * symbol energy
        if round_idx == 1:
            probe = np.sqrt(target_power / max(mean_abs2, 1e-30)) * template.n_slots ** 0.5
            scale = probe / max(np.sqrt(template.n_slots), 1.0)
        converged_p = False
        log_s = np.log(scale)
        history: list[tuple[float, float]] = []
        for _ in range(40):
            power, bw = _mean_power_and_bandwidth(system, frames, float(np.exp(log_s)), grid)
            err_db = 10 * np.log10(power / target_power)
            history.append((log_s, np.log(power)))
            if abs(err_db) <= power_tol_db:
                converged_p = True
                break
            if len(history) >= 2 and history[-1][1] != history[-2][1]:
                (s0, p0), (s1, p1) = history[-2], history[-1]
                slope = (p1 - p0) / (s1 - s0)
                slope = min(max(slope, 0.5), 4.0)
            else:
                slope = 2.0
            log_s = log_s + (np.log(target_power) - np.log(power)) / slope
        scale = float(np.exp(log_s))
        if not converged_p:
            raise CalibrationError(
                f"power loop did not converge (reached {power:.4g})", power, bw
            )
        # -- bandwidth: secant on w0 --
        bw_err = (bw - target_bandwidth) / target_bandwidth
        if abs(bw_err) <= bandwidth_tol:
            return CalibrationResult(scale, w0, power, bw, round_idx)
        w0_prev, bw_prev = w0, bw
        w0 = w0 * target_bandwidth / bw
        for _ in range(8):
            frames = [draw_frame(template, points, w0, rng) for _ in range(n_frames)]
            power, bw = _mean_power_and_bandwidth(system, frames, scale, grid)
            if abs(bw - target_bandwidth) / target_bandwidth <= bandwidth_tol:
                break
            denom = bw - bw_prev
            if denom == 0:
                break
            w0_new = w0 - (bw - target_bandwidth) * (w0 - w0_prev) / denom
            w0_prev, bw_prev = w0, bw
            w0 = float(np.clip(w0_new, 0.2 * w0, 5 * w0))
        # loop back to re-trim the power at the new w0

    raise CalibrationError(
        f"calibration did not converge in {max_rounds} rounds "
        f"(power {power:.4g}, bandwidth {bw:.4g})",
        power,
        bw,
    )
