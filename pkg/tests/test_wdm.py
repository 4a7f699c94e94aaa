import numpy as np
import pytest

from nfdmsim import (
    ComplexSignal,
    LinkConfig,
    PulseShape,
    SymbolFrame,
    TimeGrid,
    build_u,
    nfdm_receive,
    nfdm_transmit,
    rrc_pulse,
    ssfm_propagate,
    wdm_receive,
    wdm_transmit,
)

SHAPE = PulseShape(w0=0.2, rolloff=0.25)
WIDE = SHAPE.w0 * (1 + SHAPE.rolloff)  # orthogonal carrier spacing


def wide_grid(n=4096, span=160.0):
    return TimeGrid.centered(n, span / n)


class TestTransmit:
    def test_zero_frame(self):
        frame = SymbolFrame(np.zeros((3, 1), complex), SHAPE, SHAPE.w0)
        q = wdm_transmit(frame, wide_grid())
        assert np.all(q.samples == 0)

    def test_single_symbol(self):
        grid = wide_grid()
        s = 0.8 - 0.2j
        frame = SymbolFrame(np.array([[s]]), SHAPE, SHAPE.w0)
        q = wdm_transmit(frame, grid, scale=1.3)
        phi = rrc_pulse(grid, SHAPE)
        np.testing.assert_allclose(
            q.samples, 1.3 * np.sqrt(2) * s * phi.samples, atol=1e-12
        )


class TestReceive:
    def test_zero_signal(self):
        grid = wide_grid()
        link = LinkConfig(length=1.0, n_steps=100)
        est = wdm_receive(ComplexSignal(grid, np.zeros(4096, complex)), link, SHAPE, 2)
        assert np.all(est == 0)

    def test_noiseless_single_user(self):
        grid = wide_grid()
        s = 0.4 * np.exp(0.5j)
        frame = SymbolFrame(np.array([[s]]), SHAPE, SHAPE.w0)
        q = wdm_transmit(frame, grid)
        link = LinkConfig(length=1.0, n_steps=1000)
        rx = ssfm_propagate(q, link, noise_on=False)
        est = wdm_receive(rx, link, SHAPE, 1)
        assert abs(est[0] - s) / abs(s) < 1e-2

    def test_noiseless_five_users_high_power(self, rng):
        # full-band DBP inverts the deterministic channel; with orthogonal
        # (widened) spacing the central projection recovers the symbol
        grid = wide_grid(8192, 320.0)
        sym = 0.5 * np.exp(2j * np.pi * rng.random((5, 1)))
        frame = SymbolFrame(sym, SHAPE, WIDE)
        q = wdm_transmit(frame, grid)
        link = LinkConfig(length=1.0, n_steps=2000)
        rx = ssfm_propagate(q, link, noise_on=False)
        est = wdm_receive(rx, link, SHAPE, 1, carrier_spacing=WIDE)
        s = sym[2, 0]
        assert abs(est[0] - s) / abs(s) < 1e-2

    def test_filtered_dbp_variant(self):
        grid = wide_grid()
        s = 0.3 * np.exp(1.0j)
        frame = SymbolFrame(np.array([[s]]), SHAPE, SHAPE.w0)
        q = wdm_transmit(frame, grid)
        link = LinkConfig(length=0.5, n_steps=500)
        rx = ssfm_propagate(q, link, noise_on=False)
        est = wdm_receive(rx, link, SHAPE, 1, filtered_dbp=True)
        # single user: the central-band filter passes the whole signal
        assert abs(est[0] - s) / abs(s) < 2e-2

    def test_dbp_convergence_vs_true_channel(self):
        grid = wide_grid()
        s = 0.45 * np.exp(0.3j)
        frame = SymbolFrame(np.array([[s]]), SHAPE, SHAPE.w0)
        q = wdm_transmit(frame, grid)
        truth = ssfm_propagate(q, LinkConfig(length=0.5, n_steps=6400), noise_on=False)

        def err(nsteps):
            out = wdm_receive(truth, LinkConfig(length=0.5, n_steps=nsteps), SHAPE, 1)
            return abs(out[0] - s)

        assert 2.5 < err(50) / err(100) < 7.0

    def test_nfdm_and_wdm_agree_noiseless_single_user(self):
        # both receivers invert a deterministic channel: identical recovery
        grid = wide_grid()
        s = 0.3 * np.exp(0.9j)
        link = LinkConfig(length=1.0, n_steps=1000)
        frame = SymbolFrame(np.array([[s]]), SHAPE, SHAPE.w0)
        q_n, _ = nfdm_transmit(frame, grid)
        est_n = nfdm_receive(
            ssfm_propagate(q_n, link, noise_on=False), link.length, SHAPE, 1, 1
        )[0, 0]
        q_w = wdm_transmit(frame, grid)
        est_w = wdm_receive(ssfm_propagate(q_w, link, noise_on=False), link, SHAPE, 1)[0]
        assert abs(est_n - s) / abs(s) < 1e-2
        assert abs(est_w - s) / abs(s) < 1e-2
        assert abs(est_n - est_w) / abs(s) < 1e-2
