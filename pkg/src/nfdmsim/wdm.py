"""WDM baseline: linear multiplexing of the same frames, digital
back-propagation plus central-user matched filtering at the receiver."""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray

from .channel import LinkConfig, back_propagate
from .nfdm import SymbolFrame, build_u, matched_filter, user_indices
from .signals import ComplexSignal, Spectrum, TimeGrid, fourier, inverse_fourier


def wdm_transmit(frame: SymbolFrame, grid: TimeGrid, scale: float = 1.0) -> ComplexSignal:
    """q(t, 0) = scale * u(t); the multiplex goes to the fiber directly."""
    return build_u(frame.scaled(scale), grid)


def _bandpass_central(signal: ComplexSignal, width: float) -> ComplexSignal:
    """Brick-wall filter keeping the central band |f| <= width/2."""
    spec = fourier(signal)
    keep = np.abs(spec.grid.freqs) <= width / 2
    return inverse_fourier(Spectrum(spec.grid, spec.values * keep), signal.grid)


def wdm_receive(
    signal: ComplexSignal,
    link: LinkConfig,
    frame_shape,
    n_slots: int,
    carrier_spacing: float | None = None,
    filtered_dbp: bool = False,
) -> NDArray[np.complex128]:
    """Central-user symbol estimates {s_hat[l]}.

    Full-field digital back-propagation by default; with ``filtered_dbp`` the
    central (1+r) w0 band is isolated before back-propagation (the weaker,
    single-channel receiver variant).
    """
    rx = signal
    if filtered_dbp:
        rx = _bandpass_central(rx, (1.0 + frame_shape.rolloff) * frame_shape.w0)
    rx = back_propagate(rx, link)
    # Matched filter only the central user (k = 0): a 1-user projection.
    sym = matched_filter(rx, frame_shape, n_users=1, n_slots=n_slots,
                         carrier_spacing=carrier_spacing)
    return sym[0]
