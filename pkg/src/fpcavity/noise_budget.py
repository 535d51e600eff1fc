"""Strain-noise budget, sprung-mass limit and standard quantum limit.

All densities are two-sided, in strain**2 per (rad/s)-normalised hertz as
produced by the loop model. :func:`rms_from_psd` converts to the
one-sided, one-hertz rms used for plotting.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import argrelmin

from .fabry_perot import HBAR, CavityDesign
from .loop_model import FrequencyGrid
from .measurement_map import blind_mask, build_kernels, noise_psds, static_force, static_spring

SATURATION_THRESHOLD = 1.05
BUDGET_F_MIN = 1.0
BUDGET_F_MAX = 1000.0
BUDGET_POINTS = 600


def _check_omega(omega):
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0):
        raise ValueError("omega must be > 0")
    return omega


def sql(design: CavityDesign, omega):
    """Free-mass standard quantum limit ``hbar / (m w^2 L^2)``."""
    omega = _check_omega(omega)
    return HBAR / (design.m * omega**2 * design.L**2)


def sprung_limit_from_G(G_abs, m: float, L: float, omega):
    """``hbar / (m^2 w^4 L^2 |G|)`` for a given dynamical-kernel magnitude."""
    omega = _check_omega(omega)
    G_abs = np.asarray(G_abs, dtype=float)
    if np.any(~np.isfinite(G_abs)) or np.any(G_abs <= 0):
        raise ValueError("dynamical kernel must be finite and nonzero")
    return HBAR / (m**2 * omega**4 * L**2 * G_abs)


def sprung_limit(design: CavityDesign, omega):
    """Minimum strain noise over noise mixes with ``S_f S_q = hbar**2/4``."""
    omega = _check_omega(omega)
    ginv = np.abs(build_kernels(design).Ginv(omega))
    if np.any(ginv == 0):
        raise ValueError("sprung limit undefined at a pole of the dynamical kernel")
    return sprung_limit_from_G(1.0 / ginv, design.m, design.L, omega)


@dataclass(frozen=True)
class NoiseBudget:
    """Per-frequency strain-noise terms on a :class:`FrequencyGrid`."""

    grid: FrequencyGrid
    Sf: np.ndarray
    Sh_process: np.ndarray
    Sq_referred: np.ndarray
    Sh_tot: np.ndarray
    Sh_sprung: np.ndarray
    Sh_SQL: np.ndarray

    @property
    def saturation_ratio(self) -> np.ndarray:
        return self.Sh_tot / self.Sh_sprung


def strain_budget(design: CavityDesign, grid: FrequencyGrid | None = None,
                  on_blind: str = "raise") -> NoiseBudget:
    """Strain budget on ``grid`` (1 to 1000 Hz by default).

    Parameters
    ----------
    on_blind : {"raise", "nan"}
        What to do where the measurement kernel vanishes: raise
        :class:`MeasurementBlindError`, or fill the measurement-dependent
        terms with ``nan``.
    """
    if on_blind not in ("raise", "nan"):
        raise ValueError("on_blind must be 'raise' or 'nan'")
    grid = grid or FrequencyGrid.log_hz(BUDGET_F_MIN, BUDGET_F_MAX, BUDGET_POINTS)
    w = grid.omegas
    ks = build_kernels(design)
    blind = blind_mask(ks, w) if on_blind == "nan" else np.zeros(w.shape, bool)
    sq = np.full(w.shape, np.nan)
    sf = np.full(w.shape, np.nan)
    if not np.all(blind):
        sq[~blind], sf[~blind] = noise_psds(ks, w[~blind])
    g_abs = 1.0 / np.abs(ks.Ginv(w))
    scale = (design.m * w**2 * design.L) ** 2
    process = sf / scale
    measurement = sq / (scale * g_abs**2)
    return NoiseBudget(
        grid=grid,
        Sf=sf,
        Sh_process=process,
        Sq_referred=measurement,
        Sh_tot=process + measurement,
        Sh_sprung=sprung_limit_from_G(g_abs, design.m, design.L, w),
        Sh_SQL=sql(design, w),
    )


def saturation_frequencies(budget: NoiseBudget, threshold: float = SATURATION_THRESHOLD):
    """Frequencies (Hz) of local minima of ``Sh_tot / Sh_sprung`` below ``threshold``."""
    ratio = budget.saturation_ratio
    idx = argrelmin(ratio)[0]
    idx = idx[ratio[idx] <= threshold]
    return budget.grid.hz[idx], ratio[idx]


def rms_from_psd(S):
    """``sqrt(2 S / 1 s)``: one-sided rms in a one-hertz bandwidth."""
    return np.sqrt(2.0 * np.asarray(S, dtype=float))


def rms_strain(budget: NoiseBudget) -> dict[str, np.ndarray]:
    return {
        "rms_h_tot": rms_from_psd(budget.Sh_tot),
        "rms_process": rms_from_psd(budget.Sh_process),
        "rms_measurement": rms_from_psd(budget.Sq_referred),
        "rms_sprung": rms_from_psd(budget.Sh_sprung),
        "rms_SQL": rms_from_psd(budget.Sh_SQL),
    }


@dataclass(frozen=True)
class StaticCurves:
    phi_over_phiF: np.ndarray
    force: np.ndarray
    spring: np.ndarray


def static_curves(design: CavityDesign, phis) -> StaticCurves:
    """Static force (N) and spring (N/m) over tunings given in units of ``phiF``."""
    phis = np.asarray(list(phis), dtype=float)
    if not np.all(np.isfinite(phis)):
        raise ValueError("tunings must be finite")
    force = np.array([static_force(design.with_tuning(p)) for p in phis])
    spring = np.array([static_spring(design.with_tuning(p)) for p in phis])
    return StaticCurves(phis, force, spring)

