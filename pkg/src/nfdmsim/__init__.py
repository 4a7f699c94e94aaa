"""Simulation laboratory for nonlinear frequency-division multiplexing over
the focusing nonlinear Schroedinger channel, with a WDM + digital
back-propagation baseline and achievable-rate estimation."""

from .signals import (
    ComplexSignal,
    EmptySignalError,
    FrequencyGrid,
    GridError,
    PulseShape,
    Spectrum,
    TimeGrid,
    average_power,
    bandwidth_99,
    duration_99,
    energy,
    fourier,
    inverse_fourier,
    rrc_pulse,
    rrc_waveform,
)
from .nft import (
    DiscreteSpectrumCheck,
    LambdaGrid,
    NearSingularScatteringError,
    NonlinearSpectrum,
    SpectrumNotAdmissibleError,
    assert_no_discrete_spectrum,
    forward_nft,
    inverse_nft,
    minimal_phase_a,
    nonlinear_parseval_energy,
    scattering_coefficients,
)
from .channel import (
    LinkConfig,
    StepSizeError,
    back_propagate,
    equalize_nfdm,
    ssfm_propagate,
)
from .nfdm import (
    CalibrationError,
    CalibrationResult,
    FrameTemplate,
    SymbolFrame,
    TransmitDiagnostics,
    build_u,
    calibrate,
    draw_frame,
    frame_from_constellation,
    matched_filter,
    nfdm_receive,
    nfdm_transmit,
    qhat_to_u,
    slot_indices,
    u_from_spectrum,
    u_spectrum,
    u_to_qhat,
    user_indices,
)
from .wdm import wdm_receive, wdm_transmit
from .capacity import (
    ArimotoBlahutError,
    MemoryReport,
    RateResult,
    RingConstellation,
    TransitionMatrix,
    arimoto_blahut,
    estimate_transitions,
    estimate_transitions_ring_folded,
    load_transitions,
    make_ring_constellation,
    memory_diagnostic,
    mutual_information_bits,
    save_transitions,
    spectral_efficiency,
)

__version__ = "0.1.0"
