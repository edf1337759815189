"""Phonon-bath quantities: spectral density, polaron shifts, thermal
correlation function, discretized influence coefficients, and the exact
independent-boson decoherence function used as a validation oracle.

All frequencies are angular (rad/ps), times in ps, temperatures in K.
The bath enters only through the super-Ohmic spectral density

    J(w) = alpha * w^3 * exp(-(w/w_c)^2)

with alpha in ps^2 and w_c in rad/ps.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad, IntegrationWarning

from .constants import KB_OVER_HBAR, OMEGA_MAX_FACTOR, QUAD_RTOL


class QuadratureError(RuntimeError):
    """A frequency integral failed to converge to the requested tolerance."""


@dataclass(frozen=True)
class SpectralDensity:
    """Super-Ohmic bath description; all environment physics derives from it."""

    alpha: float  # coupling strength, ps^2
    omega_c: float  # cutoff frequency, rad/ps

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if self.omega_c <= 0:
            raise ValueError(f"omega_c must be > 0, got {self.omega_c}")

    @property
    def omega_max(self) -> float:
        """Upper cutoff for frequency integrals (integrand < 1e-14 of peak)."""
        return OMEGA_MAX_FACTOR * self.omega_c


@dataclass(frozen=True)
class BathConfig:
    """Thermal state of the bath. temperature = 0 selects coth -> 1 analytically."""

    temperature: float  # K
    kb_over_hbar: float = KB_OVER_HBAR  # rad/ps per K, fixed physical constant

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError(f"temperature must be >= 0, got {self.temperature}")

    @property
    def thermal_frequency(self) -> float:
        """k_B T / hbar in rad/ps (0 at zero temperature)."""
        return self.kb_over_hbar * self.temperature


@dataclass(frozen=True)
class InfluenceKernel:
    """Discretized influence coefficients eta[k], k = 0..n_c (dimensionless).

    eta[k] is the double time integral of the bath correlation C(t - t')
    over the k-lag cell pair: the ordered diagonal cell for k = 0 and the
    full off-diagonal rectangle for k >= 1.
    """

    dt: float
    n_c: int
    eta: np.ndarray  # complex, shape (n_c + 1,)

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.n_c < 1:
            raise ValueError(f"n_c must be >= 1, got {self.n_c}")
        if self.eta.shape != (self.n_c + 1,):
            raise ValueError(
                f"eta has shape {self.eta.shape}, expected ({self.n_c + 1},)")


def evaluate_spectral_density(sd: SpectralDensity, omega) -> np.ndarray | float:
    """J(omega) = alpha * omega^3 * exp(-(omega/omega_c)^2) for omega >= 0."""
    omega_arr = np.asarray(omega, dtype=float)
    if np.any(omega_arr < 0):
        raise ValueError("spectral density is defined for omega >= 0")
    out = sd.alpha * omega_arr**3 * np.exp(-((omega_arr / sd.omega_c) ** 2))
    return out if out.ndim else float(out)


def polaron_shift(sd: SpectralDensity, n_excitons: int) -> float:
    """Bath-induced transition-energy shift n^2 * integral J(w)/w dw.

    Closed form for the super-Ohmic Gaussian-cutoff density:
    n^2 * (sqrt(pi)/4) * alpha * omega_c^3.
    """
    if n_excitons not in (0, 1, 2):
        raise ValueError(f"n_excitons must be in {{0, 1, 2}}, got {n_excitons}")
    return n_excitons**2 * (np.sqrt(np.pi) / 4.0) * sd.alpha * sd.omega_c**3


def _coth(x: np.ndarray) -> np.ndarray:
    """Numerically stable coth for x > 0 (series below 1e-6)."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = np.abs(x) < 1e-6
    with np.errstate(divide="ignore"):
        out[small] = 1.0 / x[small] + x[small] / 3.0
    out[~small] = 1.0 / np.tanh(x[~small])
    return out


def _thermal_weight(sd: SpectralDensity, cfg: BathConfig, omega) -> np.ndarray:
    """J(omega) * coth(omega / (2 k_B T / hbar)); coth -> 1 at T = 0.

    Vanishes at omega = 0 for any temperature (the w^3 prefactor beats the
    1/w pole of coth).
    """
    omega = np.asarray(omega, dtype=float)
    j = np.asarray(evaluate_spectral_density(sd, omega))
    if cfg.temperature == 0.0:
        return j
    out = np.zeros_like(j)
    pos = omega > 0
    out[pos] = j[pos] * _coth(omega[pos] / (2.0 * cfg.thermal_frequency))
    return out


def _quad(f, a: float, b: float, **kwargs) -> float:
    # QUADPACK emits a roundoff warning when pushed to 1e-12 with oscillatory
    # weights; the explicit error-estimate check below is the real gate.
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        val, err = quad(f, a, b, epsabs=1e-14, epsrel=QUAD_RTOL, limit=500, **kwargs)
    if not np.isfinite(val):
        raise QuadratureError(f"integral returned {val} on [{a}, {b}]")
    if err > max(1e-8 * abs(val), 1e-12):
        raise QuadratureError(
            f"integral error estimate {err:.3e} too large for value {val:.6e}")
    return val


def bath_correlation(sd: SpectralDensity, cfg: BathConfig, t: float) -> complex:
    """Thermal autocorrelation C(t) in ps^-2:

    C(t) = int_0^inf dw J(w) [coth(w / 2 k_B T) cos(wt) - i sin(wt)].
    """
    if sd.alpha == 0.0:
        return 0.0 + 0.0j
    wmax = sd.omega_max

    def re_f(w):
        return _thermal_weight(sd, cfg, w)

    def im_f(w):
        return evaluate_spectral_density(sd, w)

    if t == 0.0:
        re = _quad(re_f, 0.0, wmax)
        return complex(re, 0.0)
    re = _quad(re_f, 0.0, wmax, weight="cos", wvar=t)
    im = _quad(im_f, 0.0, wmax, weight="sin", wvar=t)
    return complex(re, -im)


def ibm_decoherence(sd: SpectralDensity, cfg: BathConfig, t: float) -> float:
    """Exact coherence-decay exponent of an undriven two-level emitter:

    Gamma(t) = int_0^inf dw (J(w)/w^2) coth(w / 2 k_B T) (1 - cos wt) >= 0.
    """
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    if t == 0.0 or sd.alpha == 0.0:
        return 0.0
    wmax = sd.omega_max
    t_rad = cfg.thermal_frequency

    def f(w):
        if w < 1e-9:
            # J coth / w^2 -> 2 alpha T_rad (T > 0), 0 (T = 0)
            return 2.0 * sd.alpha * t_rad
        return float(_thermal_weight(sd, cfg, w)) / w**2

    plateau = _quad(f, 0.0, wmax)
    osc = _quad(f, 0.0, wmax, weight="cos", wvar=t)
    return plateau - osc


def ibm_coherence_phase(sd: SpectralDensity, t: float) -> float:
    """Phase of the undriven coherence <X|rho(t)|G>: arg = R*t - int J sin(wt)/w^2.

    Temperature independent; combined with ibm_decoherence it gives the
    complete IBM coherence rho_XG(t) = rho_XG(0) exp(-Gamma(t) + i*phase(t)).
    """
    if sd.alpha == 0.0 or t == 0.0:
        return 0.0
    shift = polaron_shift(sd, 1)

    def f(w):
        if w < 1e-9:
            return 0.0
        return float(evaluate_spectral_density(sd, w)) / w**2

    osc = _quad(f, 0.0, sd.omega_max, weight="sin", wvar=t)
    return shift * t - osc


def _frequency_grid(sd: SpectralDensity, n_panels: int, order: int = 24):
    """Composite Gauss-Legendre nodes/weights on [0, omega_max]."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, sd.omega_max, n_panels + 1)
    a, b = edges[:-1, None], edges[1:, None]
    x = (0.5 * (b - a) * (nodes[None, :] + 1.0) + a).ravel()
    w = (0.5 * (b - a) * np.broadcast_to(weights, (n_panels, order))).ravel()
    return x, w


def influence_coefficients(
        sd: SpectralDensity, cfg: BathConfig, dt: float, n_c: int) -> InfluenceKernel:
    """Discretized influence coefficients via frequency-domain closed forms.

    The double time integrals over each lag cell reduce to

        eta_0 = int dw J [coth * (1 - cos w dt) - i (w dt - sin w dt)] / w^2
        eta_k = int dw J [coth * cos(k w dt) - i sin(k w dt)] * 4 sin^2(w dt/2) / w^2

    evaluated on a panel-doubling Gauss-Legendre grid until converged.
    """
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if n_c < 1:
        raise ValueError(f"n_c must be >= 1, got {n_c}")
    if sd.alpha == 0.0:
        return InfluenceKernel(dt=dt, n_c=n_c, eta=np.zeros(n_c + 1, dtype=complex))

    def evaluate(n_panels: int) -> np.ndarray:
        w, wt = _frequency_grid(sd, n_panels)
        jw = evaluate_spectral_density(sd, w)
        therm = _thermal_weight(sd, cfg, w)
        eta = np.empty(n_c + 1, dtype=complex)
        # k = 0: ordered integral over the diagonal triangle.
        re0 = therm * (1.0 - np.cos(w * dt)) / w**2
        im0 = jw * (w * dt - np.sin(w * dt)) / w**2
        eta[0] = np.dot(wt, re0) - 1j * np.dot(wt, im0)
        # k >= 1: full rectangle at lag k.
        ks = np.arange(1, n_c + 1)
        cell = 4.0 * np.sin(w * dt / 2.0) ** 2 / w**2
        phases = w[None, :] * (ks[:, None] * dt)
        eta[1:] = (np.cos(phases) @ (wt * therm * cell)
                   - 1j * (np.sin(phases) @ (wt * jw * cell)))
        return eta

    # Resolve the fastest oscillation (k = n_c) with panels to spare, then
    # double until the result is stable.
    n_panels = max(16, int(np.ceil(n_c * dt * sd.omega_max / np.pi)))
    eta = evaluate(n_panels)
    for _ in range(12):
        n_panels *= 2
        eta_fine = evaluate(n_panels)
        scale = np.max(np.abs(eta_fine))
        if np.max(np.abs(eta_fine - eta)) <= QUAD_RTOL * scale:
            return InfluenceKernel(dt=dt, n_c=n_c, eta=eta_fine)
        eta = eta_fine
    raise QuadratureError("influence coefficients did not converge under panel doubling")
