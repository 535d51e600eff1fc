"""Plot scripts written next to the CSV outputs.

Each command can emit a small standalone matplotlib script that reads its
CSV and saves a PNG beside it. The package itself never imports matplotlib;
:func:`render` runs a script in-process when the caller asks for images.
"""

from __future__ import annotations

import runpy
from pathlib import Path

_HEADER = '''\
"""Generated by fpcavity: renders {png} from {csv}."""
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

HERE = Path(__file__).resolve().parent
data = np.genfromtxt(HERE / "{csv}", delimiter=",", names=True, dtype=None, encoding="utf-8")
data = np.atleast_1d(data)
plt.rcParams.update({{"font.size": 9, "axes.grid": True, "grid.alpha": 0.3}})
'''

_FOOTER = '''
fig.tight_layout()
fig.savefig(HERE / "{png}", dpi=150)
plt.close(fig)
'''

_BODIES = {
    "statics": '''
fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(5, 5))
ax1.plot(data["phi_over_phiF"], data["force_N"] * 1e3)
ax1.set_ylabel("static force [mN]")
ax2.plot(data["phi_over_phiF"], data["spring_N_per_m"] * 1e-6)
ax2.axhline(0, color="k", lw=0.5)
ax2.set_ylabel("spring constant [N/um]")
ax2.set_xlabel("tuning phi / phiF")
''',
    "poles": '''
fig, ax = plt.subplots(figsize=(5, 5))
ok = np.isfinite(data["pole_re"])
sc = ax.scatter(data["pole_re"][ok] / (2 * np.pi), data["pole_im"][ok] / (2 * np.pi),
                c=np.log10(data["phi_over_phiF"][ok]), s=12, cmap="viridis")
ax.plot([0], [0], "o", mfc="none", mec="k", label="fixed zero")
ax.axvline(0, color="k", lw=0.5)
fig.colorbar(sc, ax=ax, label="log10(phi / phiF)")
ax.set_xlabel("Re s / 2pi [Hz]")
ax.set_ylabel("Im s / 2pi [Hz]")
ax.legend(loc="best")
''',
    "bode": '''
fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(5, 5))
ax1.semilogx(data["freq_Hz"], data["mag_dB_re_1uW_per_N"])
ax1.set_ylabel("|T| [dB re 1 uW/N]")
ax2.semilogx(data["freq_Hz"], data["phase_deg"])
ax2.set_ylabel("phase [deg]")
ax2.set_xlabel("frequency [Hz]")
''',
    "noise": '''
fig, ax = plt.subplots(figsize=(5, 4))
for col, label, style in [("rms_h_tot", "total", "k-"), ("rms_process", "process", "C0--"),
                          ("rms_measurement", "measurement", "C1--"),
                          ("rms_sprung", "sprung-mass limit", "C2-"), ("rms_SQL", "SQL", "C3:")]:
    ax.loglog(data["freq_Hz"], data[col], style, label=label)
ax.set_xlabel("frequency [Hz]")
ax.set_ylabel("strain noise [1/sqrt(Hz)]")
ax.legend(loc="best")
''',
    "simulate": '''
fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(5, 5))
ax1.loglog(data["freq_Hz"], data["Sy_analytic"], "k-", label="closed form")
ax1.loglog(data["freq_Hz"], data["Sy_sim"], "C1.", ms=3, label="Monte Carlo")
ax1.set_ylabel("S_y")
ax1.legend(loc="best")
ax2.semilogx(data["freq_Hz"], data["z_score"], "C0.", ms=3)
ax2.axhline(4, color="r", lw=0.5)
ax2.axhline(-4, color="r", lw=0.5)
ax2.set_ylabel("z score")
ax2.set_xlabel("frequency [Hz]")
''',
}


def plot_script(kind: str, csv_name: str, png_name: str) -> str:
    if kind not in _BODIES:
        raise KeyError(f"no plot script for {kind!r}")
    fmt = {"csv": csv_name, "png": png_name}
    return _HEADER.format(**fmt) + _BODIES[kind] + _FOOTER.format(**fmt)


def render(script_path) -> Path:
    """Run a generated script; returns the directory it wrote into."""
    script_path = Path(script_path)
    runpy.run_path(str(script_path), run_name="__main__")
    return script_path.parent
