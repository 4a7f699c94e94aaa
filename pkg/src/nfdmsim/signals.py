"""Sampled complex envelopes, Fourier transforms, pulse shaping and 99%-energy metrics.

All quantities are in normalized (dimensionless) units.  Frequency axes are in
cycles per normalized time unit, with the unitary continuous-transform
convention F(f) = int q(t) exp(-2j pi f t) dt.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray


class EmptySignalError(ValueError):
    """Raised when an operation requires a signal with nonzero energy."""


class GridError(ValueError):
    """Raised when a grid cannot hold the requested waveform."""


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid with ``n_samples`` points spaced ``dt`` from ``origin``."""

    n_samples: int
    dt: float
    origin: float = 0.0

    def __post_init__(self) -> None:
        if not _is_power_of_two(self.n_samples):
            raise GridError(f"n_samples must be a power of two, got {self.n_samples}")
        if not self.dt > 0:
            raise GridError(f"dt must be positive, got {self.dt}")

    @property
    def span(self) -> float:
        return self.n_samples * self.dt

    @property
    def times(self) -> NDArray[np.float64]:
        return self.origin + self.dt * np.arange(self.n_samples)

    @property
    def center(self) -> float:
        """Midpoint between the first and last sample."""
        return self.origin + (self.n_samples - 1) * self.dt / 2

    @classmethod
    def centered(cls, n_samples: int, dt: float) -> "TimeGrid":
        """Grid with sample n_samples//2 sitting at t = 0."""
        return cls(n_samples, dt, origin=-(n_samples // 2) * dt)


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform frequency grid (cycles), ascending from ``origin``."""

    n_samples: int
    df: float
    origin: float

    @property
    def freqs(self) -> NDArray[np.float64]:
        return self.origin + self.df * np.arange(self.n_samples)

    @classmethod
    def conjugate_of(cls, grid: TimeGrid) -> "FrequencyGrid":
        df = 1.0 / (grid.n_samples * grid.dt)
        return cls(grid.n_samples, df, origin=-(grid.n_samples // 2) * df)


@dataclass(frozen=True)
class ComplexSignal:
    """Complex envelope sampled on a :class:`TimeGrid`."""

    grid: TimeGrid
    samples: NDArray[np.complex128]

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=np.complex128)
        object.__setattr__(self, "samples", samples)
        if samples.shape != (self.grid.n_samples,):
            raise ValueError(
                f"samples shape {samples.shape} does not match grid ({self.grid.n_samples},)"
            )
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples contain NaN or Inf")

    def scaled(self, factor: complex) -> "ComplexSignal":
        return ComplexSignal(self.grid, self.samples * factor)


@dataclass(frozen=True)
class Spectrum:
    """Complex spectrum sampled on a :class:`FrequencyGrid`."""

    grid: FrequencyGrid
    values: NDArray[np.complex128]

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.complex128)
        object.__setattr__(self, "values", values)
        if values.shape != (self.grid.n_samples,):
            raise ValueError("values length does not match grid")
        if not np.all(np.isfinite(values)):
            raise ValueError("spectrum contains NaN or Inf")


@dataclass(frozen=True)
class PulseShape:
    """Root-raised-cosine pulse parameters.

    ``w0`` is the Nyquist (symbol-rate) bandwidth in cycles; the symbol period
    is ``t0 = 1/w0`` and the occupied bandwidth is ``(1 + rolloff) * w0``.
    """

    w0: float
    rolloff: float

    def __post_init__(self) -> None:
        if not self.w0 > 0:
            raise ValueError(f"w0 must be positive, got {self.w0}")
        if not 0.0 <= self.rolloff <= 1.0:
            raise ValueError(f"rolloff must lie in [0, 1], got {self.rolloff}")

    @property
    def t0(self) -> float:
        return 1.0 / self.w0


def rrc_waveform(tau: NDArray[np.float64], t0: float, rolloff: float) -> NDArray[np.float64]:
    """Evaluate the analytic unit-energy root-raised-cosine at times ``tau``.

    Removable singularities (tau = 0 and tau = +-t0/(4 r)) are replaced by
    their limits.
    """
    x = tau / t0
    out = np.empty_like(x)
    if rolloff == 0.0:
        out = np.sinc(x)
    else:
        r = rolloff
        near0 = np.isclose(x, 0.0, atol=1e-12)
        nears = np.isclose(np.abs(x), 1.0 / (4 * r), atol=1e-12)
        general = ~(near0 | nears)
        xg = x[general]
        num = np.sin(np.pi * xg * (1 - r)) + 4 * r * xg * np.cos(np.pi * xg * (1 + r))
        den = np.pi * xg * (1 - (4 * r * xg) ** 2)
        out[general] = num / den
        out[near0] = 1 - r + 4 * r / np.pi
        out[nears] = (r / np.sqrt(2)) * (
            (1 + 2 / np.pi) * np.sin(np.pi / (4 * r))
            + (1 - 2 / np.pi) * np.cos(np.pi / (4 * r))
        )
    return out / np.sqrt(t0)


def rrc_pulse(grid: TimeGrid, shape: PulseShape, center: float = 0.0) -> ComplexSignal:
    """Unit-energy root-raised-cosine pulse centered at ``center`` on ``grid``.

    Raises:
        GridError: if the grid span is below 20 symbol periods or cannot hold
            99% of the pulse energy.
    """
    t0 = shape.t0
    if grid.span < 20 * t0:
        raise GridError(
            f"grid span {grid.span:.3g} is below the required 20*t0 = {20 * t0:.3g}"
        )
    vals = rrc_waveform(grid.times - center, t0, shape.rolloff)
    # The analytic waveform has unit energy; a short grid truncates it.
    truncated = float(np.sum(vals**2) * grid.dt)
    if truncated < 0.99:
        raise GridError(
            f"grid holds only {truncated:.4f} of the pulse energy (need >= 0.99)"
        )
    vals = vals / np.sqrt(truncated)
    return ComplexSignal(grid, vals.astype(np.complex128))


def fourier(signal: ComplexSignal) -> Spectrum:
    """Unitary continuous-Fourier-transform approximation of a sampled signal.

    Exact phase factors are applied so the result equals
    dt * sum q(t_k) exp(-2j pi f t_k) on the conjugate frequency grid.
    """
    grid = signal.grid
    fgrid = FrequencyGrid.conjugate_of(grid)
    n = grid.n_samples
    k = np.arange(n)
    pre = signal.samples * np.exp(-2j * np.pi * fgrid.origin * grid.dt * k)
    vals = np.fft.fft(pre)
    i = np.arange(n)
    post = grid.dt * np.exp(-2j * np.pi * (fgrid.origin + i * fgrid.df) * grid.origin)
    return Spectrum(fgrid, post * vals)


def inverse_fourier(spectrum: Spectrum, grid: TimeGrid | None = None) -> ComplexSignal:
    """Inverse of :func:`fourier`; returns the signal on ``grid``.

    If ``grid`` is None, a centered grid conjugate to the spectrum grid is used.
    """
    fgrid = spectrum.grid
    n = fgrid.n_samples
    if grid is None:
        dt = 1.0 / (n * fgrid.df)
        grid = TimeGrid.centered(n, dt)
    if grid.n_samples != n or not np.isclose(grid.dt * n * fgrid.df, 1.0):
        raise GridError("time grid is not conjugate to the spectrum grid")
    i = np.arange(n)
    pre = spectrum.values * np.exp(2j * np.pi * fgrid.df * i * grid.origin)
    vals = np.fft.ifft(pre) * n
    k = np.arange(n)
    post = fgrid.df * np.exp(2j * np.pi * fgrid.origin * (grid.origin + k * grid.dt))
    return ComplexSignal(grid, post * vals)


def energy(obj: ComplexSignal | Spectrum) -> float:
    """Signal energy: sum |samples|^2 * step (time or frequency domain)."""
    if isinstance(obj, ComplexSignal):
        return float(np.sum(np.abs(obj.samples) ** 2) * obj.grid.dt)
    return float(np.sum(np.abs(obj.values) ** 2) * obj.grid.df)


def _minimal_window(power: NDArray[np.float64], step: float, fraction: float) -> float:
    """Length of the shortest contiguous window holding ``fraction`` of the mass.

    Two-pointer scan over the cumulative profile with linear interpolation of
    the fractional end sample.
    """
    total = float(power.sum()) * step
    if total <= 0.0:
        raise EmptySignalError("signal has zero energy")
    target = fraction * total
    cum = np.concatenate(([0.0], np.cumsum(power) * step))
    n = len(power)
    best = np.inf
    j = 0
    for i in range(n):
        if j < i:
            j = i
        while j < n and cum[j + 1] - cum[i] < target:
            j += 1
        if j >= n:
            break
        # mass on [i, j+1) samples reaches target; shave the excess off the
        # last sample linearly
        mass = cum[j + 1] - cum[i]
        excess = mass - target
        length = (j + 1 - i) * step
        if power[j] > 0:
            length -= min(excess / (power[j] * step), 1.0) * step
        best = min(best, length)
    return float(best)


def duration_99(signal: ComplexSignal) -> float:
    """Length of the shortest interval containing 99% of the signal energy."""
    return _minimal_window(np.abs(signal.samples) ** 2, signal.grid.dt, 0.99)


def bandwidth_99(obj: ComplexSignal | Spectrum) -> float:
    """Width of the shortest linear-frequency interval with 99% of the energy."""
    if isinstance(obj, ComplexSignal):
        obj = fourier(obj)
    return _minimal_window(np.abs(obj.values) ** 2, obj.grid.df, 0.99)


def average_power(signal: ComplexSignal) -> float:
    """Energy divided by the 99% time duration."""
    return energy(signal) / duration_99(signal)
