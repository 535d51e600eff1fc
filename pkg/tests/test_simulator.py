import numpy as np
import pytest

from fpcavity.errors import InsufficientRealizationsWarning, SingularLoopError
from fpcavity.loop_model import FrequencyGrid, LoopKernels, closed_loop_mean, closed_loop_psd
from fpcavity.simulator import (
    SimConfig,
    VelocityFeedback,
    force_response,
    simulate_mean,
    simulate_output,
    simulate_psd,
    z_scores,
)

GRID = FrequencyGrid.log_hz(1, 100, 20)


def toy():
    return LoopKernels(
        Gamma=lambda w: 0.5 + 0.1j * w,
        GammaPrime=0.2,
        Xi=lambda w: 2.0 + 0j * w,
        G=lambda w: 1.0 / (1.0 + 1j * w),
        Sq=0.3,
        Sf=1.7,
    )


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(1, 1, GRID)
    with pytest.raises(ValueError):
        SimConfig(-1, 10, GRID)


def test_deterministic_per_seed():
    a = simulate_output(toy(), SimConfig(7, 50, GRID))
    b = simulate_output(toy(), SimConfig(7, 50, GRID))
    c = simulate_output(toy(), SimConfig(8, 50, GRID))
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_psd_matches_closed_form():
    k = toy()
    res = simulate_psd(k, SimConfig(11, 4000, GRID))
    z = z_scores(res.estimate, np.real(closed_loop_psd(k, GRID.omegas)), res.stderr)
    assert np.mean(np.abs(z) > 4) <= 0.05
    assert abs(np.mean(z)) < 1.0


def test_mean_matches_closed_form():
    k = toy()
    fe, yc = 0.4 - 0.2j, 1.1
    res = simulate_mean(k, fe, yc, SimConfig(5, 4000, GRID))
    expected = closed_loop_mean(k, fe, yc, GRID.omegas)
    assert np.all(np.abs(res.estimate - expected) < 5 * res.stderr)


def test_force_response_matches_closed_form():
    k = toy()
    resp = force_response(k, GRID.omegas)
    assert resp == pytest.approx(closed_loop_mean(k, 1.0, 0.0, GRID.omegas), rel=1e-12)


def test_few_realizations_warn():
    with pytest.warns(InsufficientRealizationsWarning):
        simulate_psd(toy(), SimConfig(1, 2, GRID))


def test_singular_system_raises():
    k = LoopKernels(GammaPrime=-1.0, Xi=1.0, G=1.0, Sq=1.0, Sf=1.0)
    with pytest.raises(SingularLoopError):
        simulate_output(k, SimConfig(1, 4, GRID))


def test_rejects_dc():
    with pytest.raises(ValueError):
        simulate_output(toy(), SimConfig(1, 4, GRID), omegas=[0.0, 1.0])


def test_velocity_feedback_shape():
    c = VelocityFeedback(2.0, 10.0)
    assert c(10.0) == pytest.approx(2.0 * 10j / (1 + 1j))
    c2 = VelocityFeedback(2.0, 10.0, damping=0.5)
    assert c2(10.0) == pytest.approx(2.0 * 10j / (1 + 1j - 1))
