"""Monte Carlo check of the closed-loop mean and spectral density.

At each frequency the loop relations are solved as a 3x3 linear system for
``(y, q, f_c)`` with random measurement and process noise amplitudes drawn
per realization. Nothing here uses the closed-form loop solution, so the
ensemble statistics are an independent check on it.

Random amplitudes come from a Philox stream keyed by ``(seed, frequency
index)``, so results do not depend on how frequencies are scheduled.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientRealizationsWarning, SingularLoopError
from .loop_model import FrequencyGrid, LoopKernels

REL_STDERR_LIMIT = 0.10


@dataclass(frozen=True)
class VelocityFeedback:
    """Control kernel ``g i w / (1 + i w / w_c)``.

    With ``damping`` set, the roll-off becomes second order:
    ``g i w / (1 + 2 zeta i w / w_c - (w / w_c)**2)``.
    """

    gain: float
    corner: float
    damping: float | None = None

    def __call__(self, omega):
        omega = np.asarray(omega)
        x = 1j * omega / self.corner
        if self.damping is None:
            return self.gain * 1j * omega / (1 + x)
        return self.gain * 1j * omega / (1 + 2 * self.damping * x + x * x)


@dataclass(frozen=True)
class SimConfig:
    seed: int
    realizations: int
    grid: FrequencyGrid

    def __post_init__(self):
        if self.realizations < 2:
            raise ValueError("realizations must be >= 2")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class SimResult:
    omegas: np.ndarray
    estimate: np.ndarray
    stderr: np.ndarray


def _rng(seed: int, index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.Philox(ss))


def _circular(rng, variance, n):
    # E|z|^2 = variance
    z = rng.standard_normal((2, n))
    return np.sqrt(variance / 2.0) * (z[0] + 1j * z[1])


def _loop_matrix(kernels: LoopKernels, w):
    xi = complex(kernels.Xi(np.asarray(w)))
    g = complex(kernels.G(np.asarray(w)))
    gam = complex(kernels.Gamma(np.asarray(w)))
    gamp = complex(kernels.GammaPrime(np.asarray(w)))
    a = np.array([
        [1.0, -xi, 0.0],
        [0.0, 1.0, -g],
        [gam + gamp, 0.0, 1.0],
    ], dtype=complex)
    return a, xi, g, gam


def _solve(a, rhs, w, eps: float = 1e-12):
    # compare det(a) with the magnitudes of its permutation terms so badly
    # scaled but regular systems are not mistaken for singular ones
    terms = [a[0, i] * a[1, j] * a[2, k] * np.sign(np.linalg.det(np.eye(3)[[i, j, k]]))
             for i, j, k in itertools.permutations(range(3))]
    if abs(sum(terms)) <= eps * sum(abs(t) for t in terms):
        raise SingularLoopError(f"loop equations are singular at omega = {w}")
    return np.linalg.solve(a, rhs)


def _omegas(config: SimConfig, omegas):
    w = config.grid.omegas if omegas is None else np.asarray(omegas, dtype=float)
    if np.any(w == 0):
        raise ValueError("simulation frequencies must be nonzero")
    return w


def _warn_if_noisy(estimate, stderr):
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(np.abs(estimate) > 0, stderr / np.abs(estimate), 0.0)
    if np.nanmax(rel) > REL_STDERR_LIMIT:
        warnings.warn(
            f"relative standard error reaches {np.nanmax(rel):.2g}; increase realizations",
            InsufficientRealizationsWarning, stacklevel=3,
        )


def simulate_output(kernels: LoopKernels, config: SimConfig, fe=0.0, yc=0.0, omegas=None):
    """Per-realization output amplitudes, shape ``(n_freq, realizations)``."""
    w_all = _omegas(config, omegas)
    n = config.realizations
    fe = np.broadcast_to(np.asarray(fe, dtype=complex), w_all.shape)
    yc = np.broadcast_to(np.asarray(yc, dtype=complex), w_all.shape)
    out = np.empty((w_all.size, n), dtype=complex)
    for i, w in enumerate(w_all):
        a, xi, g, gam = _loop_matrix(kernels, w)
        sq = float(np.real(kernels.Sq(np.asarray(w))))
        sf = float(np.real(kernels.Sf(np.asarray(w))))
        rng = _rng(config.seed, i)
        qn = _circular(rng, sq, n)
        fn = _circular(rng, sf, n)
        rhs = np.vstack([
            xi * qn,
            g * (fe[i] + fn),
            np.full(n, gam * yc[i]),
        ])
        out[i] = _solve(a, rhs, w)[0]
    return out


def simulate_psd(kernels: LoopKernels, config: SimConfig, omegas=None) -> SimResult:
    """Ensemble estimate of ``S_y`` with standard errors."""
    w = _omegas(config, omegas)
    p = np.abs(simulate_output(kernels, config, omegas=w)) ** 2
    est = p.mean(axis=1)
    se = p.std(axis=1, ddof=1) / np.sqrt(config.realizations)
    _warn_if_noisy(est, se)
    return SimResult(w, est, se)


def simulate_mean(kernels: LoopKernels, fe, yc, config: SimConfig, omegas=None) -> SimResult:
    """Ensemble mean of ``y`` under deterministic drives; ``stderr`` is per component."""
    w = _omegas(config, omegas)
    y = simulate_output(kernels, config, fe=fe, yc=yc, omegas=w)
    est = y.mean(axis=1)
    se = np.sqrt(y.real.var(axis=1, ddof=1) + y.imag.var(axis=1, ddof=1)) / np.sqrt(
        2 * config.realizations)
    _warn_if_noisy(est, se)
    return SimResult(w, est, se)


def force_response(kernels: LoopKernels, omegas):
    """Noise-free output per unit external force, from the same linear solve."""
    w_all = np.asarray(omegas, dtype=float)
    out = np.empty(w_all.shape, dtype=complex)
    for i, w in enumerate(w_all):
        a, xi, g, gam = _loop_matrix(kernels, w)
        out[i] = _solve(a, np.array([0.0, g, 0.0], dtype=complex), w)[0]
    return out


def z_scores(estimate, expected, stderr):
    return (np.asarray(estimate) - np.asarray(expected)) / np.asarray(stderr)
