"""Independent reference computations used by the test suite.

Everything here deliberately avoids the package's own numerical paths:
scattering via adaptive ODE integration, energies via quadrature, capacities
via entropy formulas, reference intervals via special functions.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.interpolate import CubicSpline


def ode_scattering(q_samples, t, lambdas, rtol=1e-10, atol=1e-12):
    """Jost coefficients by DOP853 integration of the Zakharov-Shabat system.

    The sampled signal is cubic-spline interpolated (zero outside the grid);
    integration runs across the full window edge to edge.
    """
    q_samples = np.asarray(q_samples, dtype=complex)
    t = np.asarray(t, dtype=float)
    dt = t[1] - t[0]
    spline_re = CubicSpline(t, q_samples.real)
    spline_im = CubicSpline(t, q_samples.imag)
    t_lo, t_hi = t[0] - dt / 2, t[-1] + dt / 2

    def qfun(x):
        if x < t[0] or x > t[-1]:
            return 0.0 + 0.0j
        return complex(spline_re(x), spline_im(x))

    a = np.empty(len(lambdas), dtype=complex)
    b = np.empty(len(lambdas), dtype=complex)
    for i, lam in enumerate(lambdas):
        def rhs(x, y):
            v1 = y[0] + 1j * y[1]
            v2 = y[2] + 1j * y[3]
            q = qfun(x)
            d1 = -1j * lam * v1 + q * v2
            d2 = -np.conj(q) * v1 + 1j * lam * v2
            return [d1.real, d1.imag, d2.real, d2.imag]

        v0 = np.exp(-1j * lam * t_lo)
        sol = solve_ivp(
            rhs, (t_lo, t_hi), [v0.real, v0.imag, 0.0, 0.0],
            method="DOP853", rtol=rtol, atol=atol, max_step=dt * 8,
        )
        v1 = sol.y[0, -1] + 1j * sol.y[1, -1]
        v2 = sol.y[2, -1] + 1j * sol.y[3, -1]
        a[i] = v1 * np.exp(1j * lam * t_hi)
        b[i] = v2 * np.exp(-1j * lam * t_hi)
    return a, b


def ode_qhat(q_samples, t, lambdas, **kw):
    a, b = ode_scattering(q_samples, t, lambdas, **kw)
    return -np.conj(b / a)


def rect_scattering(amplitude, width, t_start, lambdas):
    """Closed-form Jost coefficients of q(t) = A on [t_start, t_start+width].

    One constant segment: the transfer matrix is the exact exponential of the
    constant system matrix, exp of which has the cos/sinc form with
    Delta = sqrt(lam^2 + |A|^2).
    """
    lam = np.asarray(lambdas, dtype=float)
    delta = np.sqrt(lam**2 + abs(amplitude) ** 2)
    c = np.cos(delta * width)
    s = np.sin(delta * width) / delta
    a = np.exp(1j * lam * width) * (c - 1j * lam * s)
    b = -np.conj(amplitude) * s * np.exp(-1j * lam * (2 * t_start + width))
    return a, b


def rect_qhat(amplitude, width, t_start, lambdas):
    a, b = rect_scattering(amplitude, width, t_start, lambdas)
    return -np.conj(b / a)


def quad_energy(f, lo, hi):
    """Energy integral of a callable |f|^2 by adaptive quadrature."""
    return quad(lambda x: abs(f(x)) ** 2, lo, hi, limit=400)[0]


def gauss_duration_99():
    """99% interval length for |q|^2 = exp(-t^2), via the error function."""
    from scipy.special import erfinv

    return 2.0 * float(erfinv(0.99))


def minimal_mass_interval(f2, lo, hi, fraction=0.99, n=200_001):
    """Shortest interval holding ``fraction`` of the mass of callable f2 >= 0.

    Brute-force fine-grid two-pointer scan; independent of the package's
    implementation (different grid, no interpolation subtleties).
    """
    x = np.linspace(lo, hi, n)
    w = f2(x)
    cum = np.concatenate(([0.0], np.cumsum((w[1:] + w[:-1]) / 2 * np.diff(x))))
    total = cum[-1]
    target = fraction * total
    best = np.inf
    j = 0
    for i in range(n):
        while j < n and cum[j] - cum[i] < target:
            j += 1
        if j >= n:
            break
        best = min(best, x[j] - x[i])
    return float(best)


def bsc_capacity(p):
    h2 = -p * np.log2(p) - (1 - p) * np.log2(1 - p)
    return 1.0 - h2


def bec_capacity(e):
    return 1.0 - e


def awgn_ring_mi_reference(constellation_points, sigma, n_samples, seed):
    """Constrained-capacity reference: uniform input over the points, complex
    AWGN, quantized to nearest constellation point by the same ring/sector
    geometry, then exact Arimoto-Blahut on the empirical matrix.

    Returns capacity in bits.  Serves as the large-sample reference the
    smaller-sample estimate must approach.
    """
    from nfdmsim.capacity import RingConstellation, arimoto_blahut, estimate_transitions

    rng = np.random.default_rng(seed)
    m = len(constellation_points)
    tx = rng.integers(0, m, size=n_samples)
    noise = (rng.normal(size=n_samples) + 1j * rng.normal(size=n_samples)) * sigma / np.sqrt(2)
    rx = constellation_points[tx] + noise
    return tx, rx
