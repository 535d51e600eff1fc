"""Measurement kernels of the Fabry-Perot meter and the static/energy checks.

The output ``y`` is the detected photon-flux fluctuation, so ``xi`` has units
of flux per metre and ``Gamma'`` units of newtons per unit flux. Kernels are
built from the optical amplitudes in :mod:`fpcavity.fabry_perot`:

=============  ===========================================================
``Gamma'(w)``  ``-(hbar/2i) [alpha(-w) - conj(alpha(w))]``
``theta(w)``   ``-Gamma'(-w)``
``psi(w)``     ``-hbar r_in Im[2 beta(w,-w) - alpha(w) alpha(-w)]``
``xi(w)``      ``r_in [alpha(w) + conj(alpha(-w))]``
``gamma2``     ``alpha_s r_in``
``1/G(w)``     ``m (w0^2 - w^2) + psi(w)``
=============  ===========================================================

Conjugates and ``Im`` are written through their analytic continuations, so
every kernel here may be evaluated at complex frequency.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .errors import MeasurementBlindError
from .fabry_perot import (
    HBAR,
    CavityDesign,
    carrier_amplitude,
    cavity_gain,
    sideband_amplitude,
    sideband_amplitude_conj,
)
from .loop_model import LoopKernels

PSI_LIMIT_OMEGA = 2 * np.pi * 1e-3
BLIND_EPS = 1e-12


@dataclass(frozen=True)
class KernelSet:
    """Closed-form measurement kernels for one :class:`CavityDesign`."""

    design: CavityDesign

    @property
    def gamma2(self) -> float:
        return self.design.alpha_s * self.design.r_in

    def GammaPrime(self, omega):
        a_m = sideband_amplitude(-np.asarray(omega), self.design)
        a_c = sideband_amplitude_conj(omega, self.design)
        return -(HBAR / 2j) * (a_m - a_c)

    def Theta(self, omega):
        return -self.GammaPrime(-np.asarray(omega))

    def _spring_arg(self, omega):
        omega = np.asarray(omega)
        return 2.0 * carrier_amplitude(omega, self.design) - (
            sideband_amplitude(omega, self.design) * sideband_amplitude(-omega, self.design)
        )

    def Psi(self, omega):
        """Optical spring ``psi(w, -w)`` (N/m); real on the real axis."""
        x = self._spring_arg(omega)
        x_conj = np.conj(self._spring_arg(np.conj(omega)))
        psi = -HBAR * self.design.r_in * (x - x_conj) / 2j
        if not np.iscomplexobj(omega):
            psi = psi.real
        return psi

    def Xi(self, omega):
        omega = np.asarray(omega)
        return self.design.r_in * (
            sideband_amplitude(omega, self.design) + sideband_amplitude_conj(-omega, self.design)
        )

    def Ginv(self, omega):
        omega = np.asarray(omega)
        d = self.design
        return d.m * (d.omega0_mech**2 - omega**2) + self.Psi(omega)

    def G(self, omega):
        return 1.0 / self.Ginv(omega)

    def Sq(self, omega):
        return noise_psds(self, omega)[0]

    def Sf(self, omega):
        return noise_psds(self, omega)[1]

    def loop_kernels(self, Gamma=0.0) -> LoopKernels:
        """Loop kernels for :mod:`fpcavity.loop_model`, with an optional controller."""
        return LoopKernels(Gamma=Gamma, GammaPrime=self.GammaPrime, Xi=self.Xi,
                           G=self.G, Sq=self.Sq, Sf=self.Sf)


@functools.lru_cache(maxsize=256)
def build_kernels(design: CavityDesign) -> KernelSet:
    return KernelSet(design)


def blind_mask(kernels: KernelSet, omega):
    """True where ``|xi|`` is negligible next to the sideband amplitudes."""
    omega = np.asarray(omega)
    scale = kernels.design.r_in * (
        np.abs(sideband_amplitude(omega, kernels.design))
        + np.abs(sideband_amplitude(-omega, kernels.design))
    )
    return np.abs(kernels.Xi(omega)) <= BLIND_EPS * scale


def noise_psds(kernels: KernelSet, omega):
    """Measurement and force noise ``(S_q, S_f)``; their product is ``hbar**2/4``.

    Raises :class:`MeasurementBlindError` where ``xi`` vanishes (the meter
    carries no position information there, e.g. at ``omega = 0``).
    """
    omega = np.asarray(omega)
    xi = kernels.Xi(omega)
    blind = blind_mask(kernels, omega)
    if np.any(blind):
        where = omega[blind] if omega.ndim else omega
        raise MeasurementBlindError(f"measurement kernel vanishes at omega = {where}")
    sq = kernels.gamma2 / np.abs(xi) ** 2
    return sq, HBAR**2 / (4.0 * sq)


def static_force(design: CavityDesign) -> float:
    """Radiation-pressure force on the mirror (N), as ``-r_in Gamma'(0)``."""
    ks = build_kernels(design)
    return float(np.real(-design.r_in * ks.GammaPrime(0.0)))


def light_pressure(design: CavityDesign) -> float:
    """Textbook light pressure ``2 hbar k r_in G(phi)``."""
    return 2.0 * HBAR * design.k * design.r_in * design.gain()


def spring_limit(kernels: KernelSet, h: float = PSI_LIMIT_OMEGA) -> float:
    """Zero-frequency limit of ``psi(w, -w)`` with one Richardson step.

    ``psi`` is even in ``omega``, so the leading error is ``O(h**2)``.
    """
    coarse = float(kernels.Psi(h))
    fine = float(kernels.Psi(h / 2))
    return (4.0 * fine - coarse) / 3.0


def static_spring(design: CavityDesign, h: float = PSI_LIMIT_OMEGA) -> float:
    """Static optical spring constant (N/m); positive values are restoring."""
    return spring_limit(build_kernels(design), h)


def gain_slope(design: CavityDesign, rel_step: float = 1e-6, rtol: float = 1e-7) -> float:
    """``dG/dphi`` by central differences, halving the step until it settles."""
    phi, rho, phiF = design.phi, design.rho, design.phiF
    h = rel_step * phiF

    def central(step):
        return (cavity_gain(phi + step, rho) - cavity_gain(phi - step, rho)) / (2 * step)

    prev = central(h)
    for _ in range(8):
        h /= 2
        cur = central(h)
        if abs(cur - prev) <= rtol * max(abs(cur), 1e-300) or cur == prev:
            return float(cur)
        prev = cur
    return float(prev)


def gain_spring(design: CavityDesign) -> float:
    """Spring constant predicted from the cavity gain, ``-2 hbar k^2 r_in dG/dphi``."""
    return -2.0 * HBAR * design.k**2 * design.r_in * gain_slope(design)


def peak_spring(design: CavityDesign, search_phiF: float = 5.0):
    """Largest static spring over ``0 < phi < search_phiF * phiF``.

    Returns ``(phi_over_phiF, spring)``.
    """
    from scipy.optimize import minimize_scalar

    grid = np.linspace(1e-3, search_phiF, 2001)
    values = np.array([static_spring(design.with_tuning(x)) for x in grid[::20]])
    i = int(np.argmax(values)) * 20
    lo, hi = grid[max(i - 20, 0)], grid[min(i + 20, grid.size - 1)]
    res = minimize_scalar(lambda x: -static_spring(design.with_tuning(x)),
                          bounds=(lo, hi), method="bounded", options={"xatol": 1e-9})
    return float(res.x), float(-res.fun)


def equivalent_modulus(spring: float, L: float, beam_diameter: float = 0.2) -> float:
    """Young's modulus of a bar of length ``L`` with the given stiffness (Pa)."""
    return spring * L / (np.pi * (beam_diameter / 2) ** 2)


@dataclass(frozen=True)
class EnergyBalance:
    """Mechanical power delivered to the mirror by an external drive.

    ``via_kernels`` comes from the backaction and measurement kernels,
    ``via_sidebands`` from the sideband photon imbalance. Negative values
    mean the light does work on the mirror, so the drive can extract power.
    """

    via_kernels: float
    via_sidebands: float

    @property
    def extracted(self) -> float:
        return -self.via_kernels

    @property
    def relative_mismatch(self) -> float:
        scale = max(abs(self.via_kernels), abs(self.via_sidebands))
        return 0.0 if scale == 0 else abs(self.via_kernels - self.via_sidebands) / scale


def energy_balance(design: CavityDesign, omega_m: float, q0: float) -> EnergyBalance:
    """Time-averaged ``<f_e dq/dt>`` for ``q(t) = q0 cos(omega_m t)``, by two routes."""
    if omega_m <= 0:
        raise ValueError("omega_m must be > 0")
    if q0 <= 0:
        raise ValueError("q0 must be > 0")
    ks = build_kernels(design)
    w = float(omega_m)
    route_k = 1j * w * q0**2 / 4 * (ks.GammaPrime(-w) * ks.Xi(-w) - ks.GammaPrime(w) * ks.Xi(w))
    a_p = sideband_amplitude(w, design)
    a_m = sideband_amplitude(-w, design)
    route_s = HBAR * w * design.r_in * q0**2 / 4 * (abs(a_m) ** 2 - abs(a_p) ** 2)
    return EnergyBalance(float(np.real(route_k)), float(route_s))
