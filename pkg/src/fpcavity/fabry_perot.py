"""Optical scattering amplitudes of a single-port Fabry-Perot cavity.

The end mirror is the test mass. Its displacement ``q`` modulates the
detected field; :func:`sideband_amplitude` and :func:`carrier_amplitude`
give the first- and second-order response kernels in the Fourier domain
(convention ``f(w) = int f(t) exp(-i w t) dt``).

All amplitude functions accept complex ``omega`` and are analytic there,
which is what the pole analysis in :mod:`fpcavity.dynamics` relies on.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize_scalar

HBAR = 1.054571817e-34  # J s
C_LIGHT = 299792458.0  # m / s


def cavity_gain(phi, rho):
    """Intracavity power gain ``|sin rho / (cos rho - exp(-2 i phi))|**2``.

    ``cos(rho)**2`` is the input-mirror power reflectivity. ``rho = pi/2``
    (no input mirror) gives unit gain at every tuning.
    """
    phi = np.asarray(phi, dtype=float)
    rho = np.asarray(rho, dtype=float)
    cr, sr = np.cos(rho), np.sin(rho)
    # |cos rho - e^{-2i phi}|^2 expanded to stay accurate near resonance
    den = (1.0 - cr) ** 2 + 4.0 * cr * np.sin(phi) ** 2
    return sr**2 / den


def half_width_phiF(rho):
    """Half-width-half-maximum of :func:`cavity_gain` in cavity phase (radians)."""
    cr = np.cos(np.asarray(rho, dtype=float))
    if np.any(cr <= 0):
        raise ValueError("half_width_phiF requires cos(rho) > 0")
    return 0.5 * np.sqrt(cr + 1.0 / cr - 2.0)


def finesse(rho):
    return np.pi / (2.0 * half_width_phiF(rho))


@dataclass(frozen=True)
class CavityDesign:
    """Physical parameters of the interferometer.

    Parameters
    ----------
    L : float
        Cavity length (m).
    wavelength : float
        Optical wavelength (m).
    m : float
        Test-mass mass (kg).
    P_detected : float
        Detected optical power (W). Equals the input power for this lossless
        single-port device.
    cos2rho : float
        Input-mirror power reflectivity, in (0, 1).
    phi_over_phiF : float
        Cavity tuning in units of the half-width ``phiF``.
    alpha_s : float
        Photon-count squeezing parameter (1 for shot noise).
    omega0_mech : float
        Optional mechanical suspension angular frequency (rad/s).
    """

    L: float = 4000.0
    wavelength: float = 1064e-9
    m: float = 40.0
    P_detected: float = 180.0
    cos2rho: float = 0.99913
    phi_over_phiF: float = 10.0
    alpha_s: float = 1.0
    omega0_mech: float = 0.0

    def __post_init__(self):
        for name in ("L", "wavelength", "m", "P_detected", "alpha_s"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ValueError(f"{name} must be finite and > 0, got {value!r}")
        if not 0.0 < self.cos2rho < 1.0:
            raise ValueError(f"cos2rho must lie in (0, 1), got {self.cos2rho!r}")
        if not np.isfinite(self.phi_over_phiF):
            raise ValueError("phi_over_phiF must be finite")
        if not np.isfinite(self.omega0_mech) or self.omega0_mech < 0:
            raise ValueError("omega0_mech must be finite and >= 0")

    @property
    def k(self) -> float:
        return 2.0 * np.pi / self.wavelength

    @property
    def tau(self) -> float:
        return self.L / C_LIGHT

    @property
    def rho(self) -> float:
        return float(np.arccos(np.sqrt(self.cos2rho)))

    @property
    def cos_rho(self) -> float:
        return float(np.sqrt(self.cos2rho))

    @property
    def phiF(self) -> float:
        return float(half_width_phiF(self.rho))

    @property
    def finesse(self) -> float:
        return float(finesse(self.rho))

    @property
    def phi(self) -> float:
        """Cavity tuning in radians."""
        return self.phi_over_phiF * self.phiF

    @property
    def r_in(self) -> float:
        """Input photon rate (1/s)."""
        return self.P_detected * self.wavelength / (2.0 * np.pi * HBAR * C_LIGHT)

    @property
    def photon_energy(self) -> float:
        """``hbar k c`` in joules."""
        return HBAR * self.k * C_LIGHT

    def gain(self) -> float:
        return float(cavity_gain(self.phi, self.rho))

    def with_tuning(self, phi_over_phiF: float) -> "CavityDesign":
        return replace(self, phi_over_phiF=float(phi_over_phiF))


REFERENCE_DESIGN = CavityDesign()


def _alpha(omega, k, tau, phi, cr):
    sr2 = 1.0 - cr * cr
    num = 2j * k * np.exp(1j * (3.0 * omega * tau - 2.0 * phi)) * sr2
    den = (np.exp(2j * (omega * tau - phi)) - cr) * (1.0 - np.exp(-2j * phi) * cr)
    return num / den


def sideband_amplitude(omega, design: CavityDesign):
    """First-order sideband kernel ``alpha(omega)`` (1/m)."""
    omega = np.asarray(omega, dtype=complex) if np.iscomplexobj(omega) else np.asarray(omega, dtype=float)
    return _alpha(omega, design.k, design.tau, design.phi, design.cos_rho)


def sideband_amplitude_conj(omega, design: CavityDesign):
    """Analytic continuation of ``conj(alpha(omega))`` off the real axis.

    Equal to ``conj(alpha(conj(omega)))``; coincides with the plain complex
    conjugate for real ``omega``.
    """
    return np.conj(sideband_amplitude(np.conj(omega), design))


def carrier_amplitude(omega, design: CavityDesign):
    """Second-order carrier kernel ``beta(omega, -omega)`` (1/m**2)."""
    cr = design.cos_rho
    sr2 = 1.0 - cr * cr
    if sr2 == 0.0:
        raise ValueError("carrier_amplitude requires sin(rho) != 0")
    ratio = (sr2 + 2j * np.sin(2.0 * design.phi) * cr) / (2.0 * sr2)
    return sideband_amplitude(omega, design) * sideband_amplitude(-np.asarray(omega), design) * ratio


def output_phase(design: CavityDesign) -> complex:
    """Unit-modulus phase factor ``exp(i zeta)`` of the output light."""
    e = np.exp(-2j * design.phi)
    cr = design.cos_rho
    return complex((e * cr - 1.0) / (cr - e))


def output_phase_raw(phi, rho):
    """:func:`output_phase` for raw ``(phi, rho)`` arrays."""
    e = np.exp(-2j * np.asarray(phi, dtype=float))
    cr = np.cos(np.asarray(rho, dtype=float))
    return (e * cr - 1.0) / (cr - e)


def conservation_residual(omega, design: CavityDesign):
    """Relative violation of photon-number conservation at second order.

    The time-averaged output flux at order ``q**2`` is proportional to
    ``|alpha(w)|**2 + |alpha(-w)|**2 + 4 Re beta(w, -w)``; both orderings
    ``beta(w, -w)`` and ``beta(-w, w)`` of the bilinear kernel contribute.
    Returns that sum divided by the sideband flux.
    """
    a_p = sideband_amplitude(omega, design)
    a_m = sideband_amplitude(-np.asarray(omega), design)
    b = carrier_amplitude(omega, design)
    side = np.abs(a_p) ** 2 + np.abs(a_m) ** 2
    return np.abs(side + 4.0 * b.real) / side


def sideband_resonance(design: CavityDesign, f_max: float = 1000.0) -> float:
    """Frequency (Hz) at which ``|alpha(2 pi f)|`` peaks for ``f > 0``."""
    f = np.linspace(f_max * 1e-4, f_max, 20001)
    mag = np.abs(sideband_amplitude(2 * np.pi * f, design))
    i = int(np.argmax(mag))
    lo, hi = f[max(i - 1, 0)], f[min(i + 1, f.size - 1)]
    res = minimize_scalar(
        lambda x: -np.abs(sideband_amplitude(2 * np.pi * x, design)),
        bounds=(lo, hi), method="bounded", options={"xatol": 1e-9 * f_max},
    )
    return float(res.x)
