"""Closed-loop algebra for a continuously measured, controlled test mass.

Signals and kernels follow the usual block diagram::

    f_c = Gamma (y_c - y) - Gamma' y        control + backaction force
    y   = xi (q + q_n)                      measured output
    q   = G (f_e + f_n + f_c)               test-mass response

Every kernel is a callable of angular frequency ``omega`` (rad/s) that
accepts numpy arrays. Spectral densities are two-sided throughout:
``S_x(w) = int <x(0) x(t)> exp(-i w t) dt``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from numbers import Number
from typing import Callable

import numpy as np

from .errors import SingularLoopError

Kernel = Callable[[np.ndarray], np.ndarray]

SINGULAR_EPS = 1e-12


def constant(value) -> Kernel:
    """Kernel that is independent of frequency."""

    def kernel(omega):
        return np.full(np.shape(omega), value, dtype=complex if np.iscomplexobj(value) else float)

    kernel.value = value
    return kernel


def _as_kernel(k) -> Kernel:
    if isinstance(k, Number):
        return constant(k)
    if not callable(k):
        raise TypeError(f"kernel must be callable or a number, got {type(k).__name__}")
    return k


@dataclass(frozen=True)
class LoopKernels:
    """Kernels of the measurement/control loop.

    Numbers are accepted in place of callables and promoted to constant
    kernels.
    """

    Gamma: Kernel = 0.0
    GammaPrime: Kernel = 0.0
    Xi: Kernel = 1.0
    G: Kernel = 1.0
    Sq: Kernel = 0.0
    Sf: Kernel = 0.0

    def __post_init__(self):
        for name in ("Gamma", "GammaPrime", "Xi", "G", "Sq", "Sf"):
            object.__setattr__(self, name, _as_kernel(getattr(self, name)))

    def with_controller(self, Gamma) -> "LoopKernels":
        return LoopKernels(Gamma, self.GammaPrime, self.Xi, self.G, self.Sq, self.Sf)


@dataclass(frozen=True)
class FrequencyGrid:
    """Strictly increasing, positive angular-frequency axis (rad/s)."""

    omegas: np.ndarray = field(repr=False)

    def __post_init__(self):
        w = np.array(self.omegas, dtype=float).ravel()
        if w.size == 0:
            raise ValueError("frequency grid is empty")
        if not np.all(np.isfinite(w)):
            raise ValueError("frequency grid has non-finite values")
        if np.any(w <= 0):
            raise ValueError("frequency grid values must be > 0")
        if w.size > 1 and np.any(np.diff(w) <= 0):
            raise ValueError("frequency grid must be strictly increasing")
        w.flags.writeable = False
        object.__setattr__(self, "omegas", w)

    @classmethod
    def log_hz(cls, f_min: float, f_max: float, n: int) -> "FrequencyGrid":
        """Log-spaced grid specified in hertz."""
        if not 0 < f_min < f_max:
            raise ValueError("need 0 < f_min < f_max")
        if n < 2:
            raise ValueError("need at least two grid points")
        return cls(2 * np.pi * np.logspace(np.log10(f_min), np.log10(f_max), int(n)))

    @property
    def hz(self) -> np.ndarray:
        return self.omegas / (2 * np.pi)

    def __len__(self):
        return self.omegas.size

    def __eq__(self, other):
        return isinstance(other, FrequencyGrid) and np.array_equal(self.omegas, other.omegas)

    def __hash__(self):
        return hash(self.omegas.tobytes())


def loop_gain(kernels: LoopKernels, omega):
    """Open-loop gain ``xi G (Gamma + Gamma')``."""
    return kernels.Xi(omega) * kernels.G(omega) * (kernels.Gamma(omega) + kernels.GammaPrime(omega))


def sensitivity(kernels: LoopKernels, omega, eps: float = SINGULAR_EPS):
    """Closed-loop sensitivity ``1 / (1 + xi G (Gamma + Gamma'))``.

    Raises :class:`SingularLoopError` where the denominator is smaller than
    ``eps`` times the open-loop gain.
    """
    lg = loop_gain(kernels, omega)
    den = 1.0 + lg
    bad = np.abs(den) <= eps * np.abs(lg)
    if np.any(bad):
        where = np.asarray(omega)[bad] if np.ndim(omega) else omega
        raise SingularLoopError(f"closed-loop denominator vanishes at omega = {where}")
    return 1.0 / den


def closed_loop_mean(kernels: LoopKernels, fe, yc, omega, eps: float = SINGULAR_EPS):
    """Mean output amplitude ``<y(omega)>`` for force drive ``fe`` and command ``yc``."""
    xg = kernels.Xi(omega) * kernels.G(omega)
    return xg * (fe + kernels.Gamma(omega) * yc) * sensitivity(kernels, omega, eps)


def closed_loop_psd(kernels: LoopKernels, omega, eps: float = SINGULAR_EPS):
    """Output spectral density ``S_y(omega)``."""
    xi2 = np.abs(kernels.Xi(omega)) ** 2
    noise = kernels.Sq(omega) + np.abs(kernels.G(omega)) ** 2 * kernels.Sf(omega)
    return xi2 * noise * np.abs(sensitivity(kernels, omega, eps)) ** 2


def referred_strain_psd(kernels: LoopKernels, m: float, L: float, omega):
    """Output noise referred to gravitational strain.

    ``S_f / (m w^2 L)^2 + S_q / ((m w^2 L)^2 |G|^2)``. The controller,
    backaction and measurement kernels drop out because they act on
    signal and noise alike.
    """
    omega = np.asarray(omega)
    if np.any(omega == 0):
        raise ValueError("strain referral is undefined at omega = 0")
    if m <= 0 or L <= 0:
        raise ValueError("m and L must be > 0")
    scale = (m * omega**2 * L) ** 2
    return kernels.Sf(omega) / scale + kernels.Sq(omega) / (scale * np.abs(kernels.G(omega)) ** 2)
