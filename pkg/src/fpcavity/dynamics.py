"""Closed-loop transfer function of the cavity and its pole-zero structure.

The transfer function maps an external force on the mirror to detected
optical power (W/N). Its dominant dynamics are extracted by fitting a
low-order rational model on a log-spaced grid; fitted poles can then be
polished against the exact characteristic function, which is available in
closed form at complex frequency.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import bisect, newton

from .errors import FitError, NoBracketError, SingularLoopError
from .fabry_perot import CavityDesign
from .loop_model import SINGULAR_EPS, FrequencyGrid
from .measurement_map import KernelSet, build_kernels

logger = logging.getLogger(__name__)

FIT_F_MIN = 0.5
FIT_F_MAX = 500.0
FIT_POINTS = 400
FIT_RESIDUAL_BOUND = 0.15
RESONANCE_OMEGA_MAX = 2 * np.pi * 1e4
MARKED_TUNINGS = (0.01, 0.1, 1.0, 10.0)


def _transfer(kernels: KernelSet, omega, eps: float):
    omega = np.asarray(omega)
    xi = kernels.Xi(omega)
    g = kernels.G(omega)
    lg = xi * g * kernels.GammaPrime(omega)
    den = 1.0 + lg
    return kernels.design.photon_energy * xi * g / den, np.abs(den) <= eps * np.abs(lg)


def transfer_function(kernels: KernelSet, omega, eps: float = SINGULAR_EPS):
    """``hbar k c xi G / (1 + xi G Gamma')`` in watts per newton.

    Works at complex ``omega`` as well; the Laplace variable is ``s = i omega``.
    """
    t, singular = _transfer(kernels, omega, eps)
    if np.any(singular):
        raise SingularLoopError("transfer function denominator vanishes on the grid")
    return t


def characteristic(kernels: KernelSet, s):
    """``1/G + xi Gamma'`` at Laplace frequency ``s``; its zeros are the poles of T."""
    omega = -1j * np.asarray(s, dtype=complex)
    return kernels.Ginv(omega) + kernels.Xi(omega) * kernels.GammaPrime(omega)


@dataclass(frozen=True)
class PoleReport:
    """Natural frequency (Hz), signed quality factor and stability of a pole."""

    natural_frequency: float
    quality: float
    stable: bool

    @classmethod
    def from_pole(cls, s: complex) -> "PoleReport":
        s = complex(s)
        mag = abs(s)
        q = -mag / (2 * s.real) if s.real != 0 else np.inf
        return cls(mag / (2 * np.pi), q, s.real < 0)


@dataclass
class PoleZeroModel:
    """Rational model ``gain * prod(s - z) / prod(s - p)`` in the Laplace variable."""

    zeros: np.ndarray
    poles: np.ndarray
    gain: float
    fit_residual: float
    polished: np.ndarray = field(default=None, repr=False)

    def __call__(self, s):
        s = np.asarray(s, dtype=complex)
        num = np.ones_like(s)
        for z in self.zeros:
            num = num * (s - z)
        den = np.ones_like(s)
        for p in self.poles:
            den = den * (s - p)
        return self.gain * num / den

    def reports(self) -> list[PoleReport]:
        """One report per pole, upper half-plane member of each conjugate pair."""
        return [PoleReport.from_pole(p) for p in self.poles if p.imag >= 0]

    @property
    def unstable_count(self) -> int:
        return int(np.sum(self.poles.real > 0))

    @property
    def max_growth_rate(self) -> float:
        return float(np.max(self.poles.real))


def _pair_conjugates(roots, tol=1e-9):
    """Symmetrise roots of a real polynomial so pairs are exact conjugates."""
    roots = np.asarray(roots, dtype=complex)
    out = []
    used = np.zeros(roots.size, dtype=bool)
    for i, r in enumerate(roots):
        if used[i]:
            continue
        used[i] = True
        scale = max(abs(r), 1e-300)
        if abs(r.imag) <= tol * scale:
            out.append(complex(r.real, 0.0))
            continue
        cand = [j for j in range(roots.size) if not used[j]]
        j = min(cand, key=lambda j: abs(roots[j] - np.conj(r)))
        used[j] = True
        mid = 0.5 * (r + np.conj(roots[j]))
        out.extend([complex(mid.real, abs(mid.imag)), complex(mid.real, -abs(mid.imag))])
    return np.array(out, dtype=complex)


def fit_rational(omega, response, num_zeros: int = 1, num_poles: int = 4,
                 iterations: int = 50, residual_bound: float = FIT_RESIDUAL_BOUND,
                 trust_factor: float = 100.0) -> PoleZeroModel:
    """Fit a real rational function to complex frequency-response samples.

    Sanathanan-Koerner iteration: each pass solves a linearised least-squares
    problem for real numerator and monic denominator coefficients, reweighted
    by the previous denominator and by ``1/|H|`` so the error is relative.
    The frequency variable is scaled by the geometric-mean grid frequency.

    Parameters
    ----------
    omega : array_like
        Positive angular frequencies (rad/s) or a :class:`FrequencyGrid`.
    response : array_like
        Complex samples ``H(i omega)``.

    Raises
    ------
    FitError
        If the maximum relative residual exceeds ``residual_bound`` or a pole
        lies more than ``trust_factor`` times outside the sampled band.
    """
    if isinstance(omega, FrequencyGrid):
        omega = omega.omegas
    omega = np.asarray(omega, dtype=float)
    h = np.asarray(response, dtype=complex)
    if omega.shape != h.shape:
        raise ValueError("omega and response must have the same shape")
    if num_poles < num_zeros:
        raise ValueError("num_poles must be >= num_zeros")
    if np.any(h == 0) or not np.all(np.isfinite(h)):
        raise FitError("response samples must be finite and nonzero")
    if omega.size < num_zeros + num_poles + 1:
        raise ValueError("too few samples for the requested order")

    w_ref = float(np.exp(np.mean(np.log(omega))))
    x = 1j * omega / w_ref
    vb = x[:, None] ** np.arange(num_zeros + 1)
    va = x[:, None] ** np.arange(num_poles)
    xn = x**num_poles
    weight = 1.0 / np.abs(h)
    for _ in range(iterations):
        a_mat = np.hstack([vb, -h[:, None] * va]) * weight[:, None]
        rhs = h * xn * weight
        a_real = np.vstack([a_mat.real, a_mat.imag])
        b_real = np.concatenate([rhs.real, rhs.imag])
        col = np.linalg.norm(a_real, axis=0)
        col[col == 0] = 1.0
        sol = np.linalg.lstsq(a_real / col, b_real, rcond=None)[0] / col
        b = sol[: num_zeros + 1]
        a = np.r_[sol[num_zeros + 1:], 1.0]
        den = np.polyval(a[::-1], x)
        new_weight = 1.0 / (np.abs(den) * np.abs(h))
        if np.allclose(new_weight, weight, rtol=1e-13, atol=0):
            break
        weight = new_weight

    num = np.polyval(b[::-1], x)
    model = num / den
    residual = float(np.max(np.abs(model - h) / np.abs(h)))

    zeros = _pair_conjugates(np.roots(b[::-1]) * w_ref) if num_zeros else np.array([], complex)
    poles = _pair_conjugates(np.roots(a[::-1]) * w_ref)
    gain = float(b[-1] * w_ref ** (num_poles - num_zeros))
    fit = PoleZeroModel(zeros=zeros, poles=poles, gain=gain, fit_residual=residual)

    if residual > residual_bound:
        raise FitError(f"fit residual {residual:.3g} exceeds bound {residual_bound:.3g}")
    band = (omega.min() / trust_factor, omega.max() * trust_factor)
    mags = np.abs(poles)
    if np.any((mags < band[0]) | (mags > band[1])):
        raise FitError("fitted poles lie far outside the sampled band")
    return fit


def polish_poles(kernels: KernelSet, poles, max_shift: float = 0.25):
    """Refine fitted poles on the exact characteristic function.

    Each pole is used as a secant-method starting point. A refined value is
    accepted only if the iteration converged within ``max_shift * |p|`` of
    the start; otherwise ``nan`` marks the pole as unpolished.
    """
    out = np.full(len(poles), np.nan + 0j)
    for i, p in enumerate(poles):
        p = complex(p)
        if p.imag < 0:
            continue
        try:
            root = newton(lambda s: characteristic(kernels, s), p,
                          tol=1e-11 * abs(p), maxiter=100)
        except (RuntimeError, ZeroDivisionError, OverflowError):
            continue
        root = complex(root)
        if abs(root - p) <= max_shift * abs(p) and np.isfinite(root):
            out[i] = root
    # mirror the upper-half-plane results onto their conjugates
    for i, p in enumerate(poles):
        if complex(p).imag < 0:
            j = int(np.argmin(np.abs(np.asarray(poles) - np.conj(p))))
            if j != i and np.isfinite(out[j]):
                out[i] = np.conj(out[j])
    return out


def fit_transfer_function(design: CavityDesign, num_zeros: int = 1, num_poles: int = 4,
                          grid: FrequencyGrid | None = None, polish: bool = True) -> PoleZeroModel:
    """Sample the transfer function on ``grid`` and fit a rational model."""
    grid = grid or FrequencyGrid.log_hz(FIT_F_MIN, FIT_F_MAX, FIT_POINTS)
    ks = build_kernels(design)
    model = fit_rational(grid.omegas, transfer_function(ks, grid.omegas), num_zeros, num_poles)
    if polish:
        model.polished = polish_poles(ks, model.poles)
    return model


def effective_poles(model: PoleZeroModel) -> np.ndarray:
    """Polished poles where available, fitted poles elsewhere."""
    if model.polished is None:
        return model.poles
    return np.where(np.isfinite(model.polished), model.polished, model.poles)


@dataclass
class TuningResult:
    phi_over_phiF: float
    model: PoleZeroModel | None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.model is not None

    @property
    def poles(self) -> np.ndarray:
        return effective_poles(self.model) if self.ok else np.array([], complex)


def pole_trajectories(design: CavityDesign, tunings, num_zeros: int = 1, num_poles: int = 4,
                      grid: FrequencyGrid | None = None, polish: bool = True,
                      workers: int | None = None) -> list[TuningResult]:
    """Fit the transfer function at each tuning (in units of ``phiF``).

    Fit failures are recorded per tuning and do not abort the sweep.
    """
    tunings = [float(t) for t in tunings]
    if any(t <= 0 for t in tunings):
        raise ValueError("tunings must be > 0")

    def one(t):
        try:
            return TuningResult(t, fit_transfer_function(design.with_tuning(t), num_zeros,
                                                         num_poles, grid, polish))
        except (FitError, SingularLoopError, np.linalg.LinAlgError) as exc:
            logger.warning("fit failed at phi/phiF = %g: %s", t, exc)
            return TuningResult(t, None, str(exc))

    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(one, tunings))
    return [one(t) for t in tunings]


def mechanical_resonance(design: CavityDesign, omega_max: float = RESONANCE_OMEGA_MAX,
                         rtol: float = 1e-10, scan_points: int = 4000) -> float:
    """Lowest ``omega`` with ``psi(w, -w) + m w0^2 = m w^2`` (rad/s), by bisection."""
    ks = build_kernels(design)
    d = design

    def g(w):
        return float(ks.Psi(w)) + d.m * d.omega0_mech**2 - d.m * w**2

    w = np.geomspace(omega_max * 1e-7, omega_max, scan_points)
    vals = ks.Psi(w) + d.m * d.omega0_mech**2 - d.m * w**2
    change = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
    if change.size == 0:
        raise NoBracketError("optical spring cannot support a resonance at this tuning")
    i = int(change[0])
    lo, hi = float(w[i]), float(w[i + 1])
    return float(bisect(g, lo, hi, xtol=1e-300, rtol=max(rtol, 4 * np.finfo(float).eps),
                        maxiter=500))


def bode_data(kernels: KernelSet, freqs_hz):
    """Magnitude in dB re 1 uW/N and unwrapped phase in degrees.

    Points where the loop is singular come back as ``nan`` in both columns.
    """
    f = np.asarray(freqs_hz, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        t, singular = _transfer(kernels, 2 * np.pi * f, SINGULAR_EPS)
    t = np.where(singular | ~np.isfinite(t), np.nan + 0j, t)
    if np.any(singular):
        logger.warning("loop singular at %s Hz; leaving blank", f[singular])
    mag = 20 * np.log10(np.abs(t) / 1e-6)
    phase = np.full(f.shape, np.nan)
    ok = np.isfinite(t)
    phase[ok] = np.degrees(np.unwrap(np.angle(t[ok])))
    return mag, phase
