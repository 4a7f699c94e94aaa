"""Ring constellations, Monte Carlo transition estimation, Arimoto-Blahut
capacity maximization, spectral-efficiency conversion and the stochastic
memory diagnostic."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.typing import NDArray
from scipy.special import xlogy

LOG2 = np.log(2.0)


@dataclass(frozen=True)
class RingConstellation:
    """Alphabet of n_rings amplitude rings with n_phases points per ring.

    Point index = ring_index * n_phases + phase_index, phases at
    2 pi l / n_phases.
    """

    radii: NDArray[np.float64]
    n_phases: int
    prior: NDArray[np.float64]

    def __post_init__(self) -> None:
        radii = np.asarray(self.radii, dtype=np.float64)
        prior = np.asarray(self.prior, dtype=np.float64)
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "prior", prior)
        if self.n_phases < 1:
            raise ValueError("n_phases must be >= 1")
        if len(radii) < 1:
            raise ValueError("need at least one ring")
        if radii[0] <= 0 or np.any(np.diff(radii) <= 0):
            raise ValueError("radii must be strictly increasing and positive")
        if prior.shape != (self.size,):
            raise ValueError("prior length must equal n_rings * n_phases")
        if np.any(prior < 0) or abs(prior.sum() - 1.0) > 1e-12:
            raise ValueError("prior must be a probability vector")

    @property
    def n_rings(self) -> int:
        return len(self.radii)

    @property
    def size(self) -> int:
        return self.n_rings * self.n_phases

    @property
    def phases(self) -> NDArray[np.float64]:
        return 2 * np.pi * np.arange(self.n_phases) / self.n_phases

    @property
    def points(self) -> NDArray[np.complex128]:
        return (self.radii[:, None] * np.exp(1j * self.phases)[None, :]).ravel()

    def mean_energy(self) -> float:
        return float(np.sum(self.prior * np.abs(self.points) ** 2))

    def quantize(self, values: NDArray[np.complex128]) -> NDArray[np.int64]:
        """Decision-cell index of each complex value.

        Ring boundaries sit at radii midpoints (innermost cell reaches 0, the
        outermost is unbounded); phase sectors of width 2 pi / n_phases are
        centered on the constellation phases, half-open for determinism.
        """
        values = np.asarray(values)
        if np.any(~np.isfinite(values)):
            raise ValueError("cannot quantize non-finite values")
        edges = 0.5 * (self.radii[1:] + self.radii[:-1])
        ring = np.searchsorted(edges, np.abs(values), side="right")
        sector = np.floor(
            np.angle(values) / (2 * np.pi) * self.n_phases + 0.5
        ).astype(np.int64) % self.n_phases
        return ring * self.n_phases + sector


def make_ring_constellation(
    n_rings: int, n_phases: int, max_radius: float = 1.0
) -> RingConstellation:
    """Radii uniformly spaced in amplitude on (0, max_radius]; uniform prior."""
    if n_rings < 1 or n_phases < 1:
        raise ValueError("n_rings and n_phases must be >= 1")
    if max_radius <= 0:
        raise ValueError("max_radius must be positive")
    radii = max_radius * np.arange(1, n_rings + 1) / n_rings
    prior = np.full(n_rings * n_phases, 1.0 / (n_rings * n_phases))
    return RingConstellation(radii, n_phases, prior)


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic transition probabilities with their raw counts.

    probs = (counts + eps) / (row_total + eps * n_out), eps = 1 / n_out.
    """

    counts: NDArray[np.float64]

    def __post_init__(self) -> None:
        counts = np.asarray(self.counts, dtype=np.float64)
        object.__setattr__(self, "counts", counts)
        if counts.ndim != 2 or counts.size == 0:
            raise ValueError("counts must be a nonempty 2-D array")
        if np.any(counts < 0):
            raise ValueError("counts must be nonnegative")

    @property
    def n_in(self) -> int:
        return self.counts.shape[0]

    @property
    def n_out(self) -> int:
        return self.counts.shape[1]

    @property
    def probs(self) -> NDArray[np.float64]:
        eps = 1.0 / self.n_out
        row_total = self.counts.sum(axis=1, keepdims=True)
        return (self.counts + eps) / (row_total + 1.0)

    @classmethod
    def from_probs(cls, probs: NDArray[np.float64]) -> "TransitionMatrix":
        """Wrap an exact row-stochastic matrix (bypasses smoothing).

        Used for analytic channels; rows must already sum to 1.
        """
        probs = np.asarray(probs, dtype=np.float64)
        if np.any(np.abs(probs.sum(axis=1) - 1.0) > 1e-9):
            raise ValueError("rows must sum to 1")
        obj = cls.__new__(cls)
        object.__setattr__(obj, "counts", np.full_like(probs, np.nan))
        object.__setattr__(obj, "_exact_probs", probs)
        return obj

    def row_stochastic(self) -> NDArray[np.float64]:
        exact = getattr(self, "_exact_probs", None)
        return exact if exact is not None else self.probs


def estimate_transitions(
    tx_indices: NDArray[np.int64],
    rx_values: NDArray[np.complex128],
    constellation: RingConstellation,
) -> TransitionMatrix:
    """Accumulate quantized (tx -> rx) hits over the full joint alphabet."""
    tx_indices = np.asarray(tx_indices)
    rx_values = np.asarray(rx_values)
    if tx_indices.size == 0:
        raise ValueError("no samples")
    if tx_indices.shape != rx_values.shape:
        raise ValueError("tx and rx lengths differ")
    if np.any(tx_indices < 0) or np.any(tx_indices >= constellation.size):
        raise ValueError("tx index outside the constellation")
    cells = constellation.quantize(rx_values)
    m = constellation.size
    counts = np.zeros((m, m))
    np.add.at(counts, (tx_indices, cells), 1.0)
    return TransitionMatrix(counts)


def estimate_transitions_ring_folded(
    tx_indices: NDArray[np.int64],
    rx_values: NDArray[np.complex128],
    constellation: RingConstellation,
) -> TransitionMatrix:
    """Phase-folded estimate tiled to the full joint alphabet.

    The channel is equivariant under a common phase rotation of the
    constellation, so each sample informs every phase of its ring: rx is
    rotated by the negative tx phase, counts are accumulated per
    (tx ring -> cell) and the joint matrix rows are circular shifts of the
    folded rows.  Far fewer samples are needed than for the raw joint
    estimate.
    """
    tx_indices = np.asarray(tx_indices)
    rx_values = np.asarray(rx_values)
    if tx_indices.size == 0:
        raise ValueError("no samples")
    if np.any(~np.isfinite(rx_values)):
        raise ValueError("rx contains non-finite values")
    n_ph = constellation.n_phases
    tx_ring = tx_indices // n_ph
    tx_phase = constellation.phases[tx_indices % n_ph]
    folded_rx = rx_values * np.exp(-1j * tx_phase)
    cells = constellation.quantize(folded_rx)
    folded = np.zeros((constellation.n_rings, constellation.size))
    np.add.at(folded, (tx_ring, cells), 1.0)
    # tile: row (r, l) is the folded row of ring r with the relative phase
    # axis rotated forward by l within every output ring
    m = constellation.size
    counts = np.zeros((m, m))
    folded3 = folded.reshape(constellation.n_rings, constellation.n_rings, n_ph)
    for l in range(n_ph):
        rolled = np.roll(folded3, l, axis=2).reshape(constellation.n_rings, m)
        counts[l::n_ph, :] = rolled
    return TransitionMatrix(counts)


def save_transitions(tm: TransitionMatrix, path: str | Path) -> None:
    """Plain-text format: header line 'n_in n_out', then counts row-major."""
    path = Path(path)
    with path.open("w") as fh:
        fh.write(f"{tm.n_in} {tm.n_out}\n")
        for row in tm.counts:
            fh.write(" ".join(f"{c:.10g}" for c in row))
            fh.write("\n")


def load_transitions(path: str | Path) -> TransitionMatrix:
    path = Path(path)
    with path.open() as fh:
        first = fh.readline().split()
        if len(first) != 2:
            raise ValueError(f"{path}: malformed header")
        n_in, n_out = int(first[0]), int(first[1])
        counts = np.loadtxt(fh, ndmin=2)
    if counts.shape != (n_in, n_out):
        raise ValueError(f"{path}: expected {n_in}x{n_out} counts, got {counts.shape}")
    return TransitionMatrix(counts)


class ArimotoBlahutError(RuntimeError):
    def __init__(self, message: str, lower_bits: float, upper_bits: float):
        super().__init__(message)
        self.lower_bits = lower_bits
        self.upper_bits = upper_bits


def arimoto_blahut(
    transitions: TransitionMatrix,
    tol: float = 1e-6,
    max_iter: int = 10_000,
) -> tuple[float, NDArray[np.float64]]:
    """Channel capacity (bits) and the maximizing input distribution.

    Alternating maximization with the standard capacity bounds
    lower = log sum_x r_x exp(D_x), upper = max_x D_x, where D_x is the KL
    divergence of row x from the output marginal; stops when the gap in bits
    drops below ``tol``.
    """
    p = transitions.row_stochastic()
    n_in = p.shape[0]
    r = np.full(n_in, 1.0 / n_in)
    lower = upper = np.nan
    for _ in range(max_iter):
        m_out = r @ p
        # D_x = KL(p_x || m); xlogy handles p == 0 entries
        with np.errstate(divide="ignore", invalid="ignore"):
            log_ratio = np.where(p > 0, np.log(np.where(p > 0, p, 1.0)) - np.log(m_out)[None, :], 0.0)
        d = np.sum(p * log_ratio, axis=1)
        dmax = float(d.max())
        z = r * np.exp(d - dmax)
        lower = (np.log(z.sum()) + dmax) / LOG2
        upper = dmax / LOG2
        r = z / z.sum()
        if upper - lower < tol:
            return float(lower), r
    raise ArimotoBlahutError(
        f"no convergence in {max_iter} iterations (bounds {lower:.8f}..{upper:.8f} bits)",
        float(lower),
        float(upper),
    )


def mutual_information_bits(
    transitions: TransitionMatrix, prior: NDArray[np.float64] | None = None
) -> float:
    """I(X;Y) in bits for a given input distribution (uniform by default)."""
    p = transitions.row_stochastic()
    n_in = p.shape[0]
    r = np.full(n_in, 1.0 / n_in) if prior is None else np.asarray(prior)
    m_out = r @ p
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = xlogy(p, p) - xlogy(p, m_out[None, :])
    return float(np.sum(r[:, None] * terms) / LOG2)


@dataclass(frozen=True)
class RateResult:
    """Rate and the time-bandwidth normalization it came from."""

    mutual_info_bits_2d: float
    alpha: float
    t_avg: float
    b_max: float
    se_bits_s_hz: float


def spectral_efficiency(
    mi_bits_2d: float, b_max: float, t_avg: float, n_users: int, n_slots: int
) -> RateResult:
    """Convert bits/2D to bits/s/Hz via alpha = B_max T_a / (N_u N_s)."""
    if b_max <= 0 or t_avg <= 0 or n_users < 1 or n_slots < 1:
        raise ValueError("all spectral-efficiency inputs must be positive")
    alpha = b_max * t_avg / (n_users * n_slots)
    return RateResult(
        mutual_info_bits_2d=mi_bits_2d,
        alpha=alpha,
        t_avg=t_avg,
        b_max=b_max,
        se_bits_s_hz=mi_bits_2d / alpha,
    )


@dataclass(frozen=True)
class MemoryReport:
    """Per-power stochastic-memory indicators for multi-slot frames."""

    amplitude_ratio: float
    leakage_fraction: float
    output_snr_db: float
    n_realizations: int
    undefined_ratio_count: int


def memory_diagnostic(
    tx_central: NDArray[np.complex128],
    rx_slots: NDArray[np.complex128],
) -> MemoryReport:
    """Slot-leakage statistics of the central user.

    Args:
        tx_central: transmitted central-slot symbols, shape (n_real,).
        rx_slots: received symbol estimates of all slots of the central
            user, shape (n_real, n_slots) with n_slots > 1.
    """
    tx_central = np.asarray(tx_central)
    rx_slots = np.atleast_2d(np.asarray(rx_slots))
    n_real, n_slots = rx_slots.shape
    if n_slots < 2:
        raise ValueError("memory diagnostic needs multi-slot frames (n_slots > 1)")
    if len(tx_central) != n_real:
        raise ValueError("tx/rx realization counts differ")
    central = n_slots // 2
    rx_c = rx_slots[:, central]
    nz = np.abs(tx_central) > 0
    undefined = int(np.sum(~nz))
    if np.any(nz):
        amp_ratio = float(np.mean(np.abs(rx_c[nz]) / np.abs(tx_central[nz])))
        gain = np.vdot(tx_central[nz], rx_c[nz]) / np.vdot(tx_central[nz], tx_central[nz])
        err = rx_c[nz] - gain * tx_central[nz]
        sig = np.abs(gain) ** 2 * np.mean(np.abs(tx_central[nz]) ** 2)
        noise = float(np.mean(np.abs(err) ** 2))
        snr_db = 10 * np.log10(sig / noise) if noise > 0 else np.inf
    else:
        amp_ratio = np.nan
        snr_db = np.nan
    e_all = np.sum(np.abs(rx_slots) ** 2, axis=1)
    e_side = e_all - np.abs(rx_c) ** 2
    valid = e_all > 0
    leakage = float(np.mean(e_side[valid] / e_all[valid])) if np.any(valid) else np.nan
    return MemoryReport(
        amplitude_ratio=amp_ratio,
        leakage_fraction=leakage,
        output_snr_db=float(snr_db),
        n_realizations=n_real,
        undefined_ratio_count=undefined,
    )
