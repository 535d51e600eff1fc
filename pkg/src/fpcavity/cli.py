"""Command-line front end.

Every command reads a config (``--config`` on top of ``--preset``), writes
one CSV plus any JSON sidecars into ``--out`` and, on request, a matplotlib
script that turns the CSV into a PNG.

Exit statuses: 0 success, 1 invalid input, 2 computation error, 3 the
Monte Carlo check failed its acceptance threshold.
"""

from __future__ import annotations

import json
import logging
import math
import os
import sys
import tempfile
import warnings
from dataclasses import replace
from pathlib import Path

import click
import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, dump_config, load_config
from .dynamics import PoleReport, bode_data, pole_trajectories
from .errors import FPCavityError
from .loop_model import FrequencyGrid, closed_loop_psd
from .measurement_map import build_kernels
from .noise_budget import rms_strain, saturation_frequencies, static_curves, strain_budget
from .plotting import plot_script, render
from .simulator import SimConfig, VelocityFeedback, simulate_psd, z_scores

logger = logging.getLogger("fpcavity")

EXIT_OK, EXIT_INVALID, EXIT_COMPUTE, EXIT_ACCEPTANCE = 0, 1, 2, 3
POLES_MIN_SUCCESS = 0.8


class CommandFailed(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


# --- output helpers -------------------------------------------------------

def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, str):
        return value.replace(",", ";").replace("\n", " ")
    value = float(value)
    if not math.isfinite(value):
        return ""
    return f"{value:.8e}"


def _atomic_write(path: Path, text: str) -> None:
    try:
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise CommandFailed(f"cannot write {path}: {exc.strerror or exc}", EXIT_COMPUTE) from None


def write_csv(path: Path, header, rows) -> None:
    lines = [",".join(header)]
    lines += [",".join(_cell(v) for v in row) for row in rows]
    _atomic_write(path, "\n".join(lines) + "\n")


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def write_json(path: Path, payload) -> None:
    _atomic_write(path, json.dumps(_json_safe(payload), indent=2, sort_keys=True) + "\n")


# --- commands -------------------------------------------------------------

def run_statics(cfg: RunConfig, out: Path) -> int:
    phis = cfg.statics.values()
    curves = static_curves(cfg.design, phis)
    write_csv(out / "statics.csv", ["phi_over_phiF", "force_N", "spring_N_per_m"],
              zip(curves.phi_over_phiF, curves.force, curves.spring))
    return EXIT_OK


def run_poles(cfg: RunConfig, out: Path) -> int:
    p = cfg.poles
    grid = FrequencyGrid.log_hz(p.f_min, p.f_max, p.n_points)
    results = pole_trajectories(cfg.design, p.values(), p.num_zeros, p.num_poles, grid, p.polish)

    rows, tunings = [], []
    for res in results:
        if not res.ok:
            rows.append([res.phi_over_phiF, None, None, None, None, None, res.error])
            tunings.append({"phi_over_phiF": res.phi_over_phiF, "error": res.error})
            continue
        poles = sorted(res.poles, key=lambda s: (s.imag, s.real))
        reports = [PoleReport.from_pole(s) for s in poles]
        for s, rep in zip(poles, reports):
            rows.append([res.phi_over_phiF, s.real, s.imag, rep.natural_frequency,
                         rep.quality, rep.stable, None])
        unstable = sum(not r.stable for r in reports)
        tunings.append({
            "phi_over_phiF": res.phi_over_phiF,
            "fit_residual": res.model.fit_residual,
            "zeros": [[z.real, z.imag] for z in res.model.zeros],
            "unstable_poles": unstable,
            "max_growth_rate": max(s.real for s in poles),
            "poles": [{"freq_Hz": r.natural_frequency, "Q": r.quality, "stable": r.stable}
                      for s, r in zip(poles, reports) if s.imag >= 0],
        })

    write_csv(out / "poles.csv",
              ["phi_over_phiF", "pole_re", "pole_im", "freq_Hz", "Q", "stable", "error"], rows)
    ok = [t for t in tunings if "error" not in t]
    write_json(out / "poles_summary.json", {
        "tunings": tunings,
        "succeeded": len(ok),
        "attempted": len(tunings),
        "all_tunings_unstable": bool(ok) and all(t["unstable_poles"] > 0 for t in ok),
    })
    if tunings and len(ok) < POLES_MIN_SUCCESS * len(tunings):
        raise CommandFailed(f"only {len(ok)} of {len(tunings)} tunings could be fitted",
                            EXIT_COMPUTE)
    return EXIT_OK


def run_bode(cfg: RunConfig, out: Path) -> int:
    b = cfg.bode
    hz = FrequencyGrid.log_hz(b.f_min, b.f_max, b.n_points).hz
    mag, phase = bode_data(build_kernels(cfg.design), hz)
    if np.any(np.isnan(mag)):
        warnings.warn(f"{int(np.isnan(mag).sum())} singular grid point(s) left blank", stacklevel=2)
    write_csv(out / "bode.csv", ["freq_Hz", "mag_dB_re_1uW_per_N", "phase_deg"],
              zip(hz, mag, phase))
    return EXIT_OK


def run_noise(cfg: RunConfig, out: Path) -> int:
    n = cfg.noise
    grid = FrequencyGrid.log_hz(n.f_min, n.f_max, n.n_points)
    budget = strain_budget(cfg.design, grid, on_blind="nan")
    blind = np.isnan(budget.Sq_referred)
    if np.any(blind):
        warnings.warn(f"measurement blind at {int(blind.sum())} grid point(s); left blank",
                      stacklevel=2)
    cols = rms_strain(budget)
    header = ["freq_Hz", "rms_h_tot", "rms_process", "rms_measurement", "rms_sprung", "rms_SQL"]
    write_csv(out / "noise.csv", header, zip(grid.hz, *(cols[h] for h in header[1:])))
    freqs, ratios = saturation_frequencies(budget, n.threshold)
    write_json(out / "noise_saturation.json", {
        "threshold": n.threshold,
        "frequencies_Hz": list(freqs),
        "ratio": list(ratios),
    })
    return EXIT_OK


def run_simulate(cfg: RunConfig, out: Path) -> int:
    s = cfg.simulate
    grid = FrequencyGrid.log_hz(s.f_min, s.f_max, s.n_points)
    ks = build_kernels(cfg.design)
    gamma = 0.0
    if s.controller == "velocity":
        gamma = VelocityFeedback(s.gain, s.corner, s.damping)
    loop = ks.loop_kernels(gamma)
    analytic = np.real(closed_loop_psd(loop, grid.omegas))
    sim = simulate_psd(loop, SimConfig(s.seed, s.realizations, grid))
    z = z_scores(sim.estimate, analytic, sim.stderr)
    write_csv(out / "simulate.csv", ["freq_Hz", "Sy_analytic", "Sy_sim", "stderr", "z_score"],
              zip(grid.hz, analytic, sim.estimate, sim.stderr, z))
    frac = float(np.mean(np.abs(z) > s.z_limit))
    if frac > s.max_outlier_fraction:
        raise CommandFailed(f"{frac:.1%} of points have |z| > {s.z_limit:g} "
                            f"(limit {s.max_outlier_fraction:.0%})", EXIT_ACCEPTANCE)
    return EXIT_OK


COMMANDS = {
    "statics": run_statics,
    "poles": run_poles,
    "bode": run_bode,
    "noise": run_noise,
    "simulate": run_simulate,
}


def _plot(kind: str, out: Path, do_render: bool) -> None:
    script = out / f"{kind}_plot.py"
    _atomic_write(script, plot_script(kind, f"{kind}.csv", f"{kind}.png"))
    if do_render:
        try:
            render(script)
        except ImportError as exc:
            raise CommandFailed(f"--render needs matplotlib ({exc})", EXIT_COMPUTE) from None


# --- click wiring ---------------------------------------------------------

def _resolve(config, preset, seed, out) -> tuple[RunConfig, Path]:
    cfg = load_config(config, preset)
    if seed is not None:
        if not 0 <= seed < 2**64:
            raise ConfigError("--seed: must fit in 64 bits")
        cfg = replace(cfg, simulate=replace(cfg.simulate, seed=seed))
    out = Path(out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"--out: cannot create {out}: {exc.strerror}") from None
    return cfg, out


def _common(fn):
    opts = [
        click.option("--config", "config", type=click.Path(dir_okay=False), default=None,
                     help="INI file applied on top of the preset."),
        click.option("--preset", default="reference", show_default=True,
                     help="Named base design."),
        click.option("--out", type=click.Path(file_okay=False), envvar="FPCAVITY_OUT",
                     default=".", show_default=True,
                     help="Output directory (env: FPCAVITY_OUT)."),
        click.option("--seed", type=int, default=None, help="Override the simulation seed."),
        click.option("--dump-config", is_flag=True,
                     help="Print the effective config and exit."),
        click.option("--plot-script", is_flag=True,
                     help="Also write a matplotlib script next to the CSV."),
        click.option("--render", "do_render", is_flag=True,
                     help="Write the plot script and run it to produce a PNG."),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def _execute(kinds, config, preset, out, seed, dump_config_, plot_script_, do_render) -> int:
    cfg, out_dir = _resolve(config, preset, seed, out)
    if dump_config_:
        click.echo(dump_config(cfg), nl=False)
        return EXIT_OK
    worst = EXIT_OK
    for kind in kinds:
        try:
            code = COMMANDS[kind](cfg, out_dir)
        except CommandFailed as exc:
            click.echo(f"error: {kind}: {exc}", err=True)
            code = exc.code
        if plot_script_ or do_render:
            _plot(kind, out_dir, do_render)
        worst = max(worst, code)
    return worst


@click.group()
@click.version_option(__version__, prog_name="fpcavity")
def cli():
    """Dynamics and quantum noise of a Fabry-Perot cavity test mass."""


def _make_command(kind: str, doc: str):
    @_common
    def command(config, preset, out, seed, dump_config, plot_script, do_render):
        return _execute([kind], config, preset, out, seed, dump_config, plot_script, do_render)

    command.__doc__ = doc
    return cli.command(name=kind)(command)


_make_command("statics", "Static force and spring constant versus tuning.")
_make_command("poles", "Pole-zero fits of the transfer function over a tuning sweep.")
_make_command("bode", "Magnitude and phase of the force-to-output transfer function.")
_make_command("noise", "Strain-noise budget with sprung-mass and free-mass limits.")
_make_command("simulate", "Monte Carlo check of the closed-loop output spectrum.")


@cli.command()
@_common
def report(config, preset, out, seed, dump_config, plot_script, do_render):
    """Run every command and render all figures."""
    return _execute(list(COMMANDS), config, preset, out, seed, dump_config, True, True)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        code = cli.main(args=argv, prog_name="fpcavity", standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return EXIT_INVALID
    except click.ClickException as exc:
        exc.show()
        return EXIT_INVALID
    except ConfigError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_INVALID
    except CommandFailed as exc:
        click.echo(f"error: {exc}", err=True)
        return exc.code
    except (FPCavityError, ValueError, ArithmeticError) as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        return EXIT_COMPUTE
    return code if isinstance(code, int) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
