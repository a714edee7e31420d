import numpy as np
import pytest

from phasekit.errors import FocusingRegime, StabilityViolation
from phasekit.models import HonlsParams, honls_front
from phasekit.pdesim import (
    GridSpec,
    _crossings,
    front_parameters,
    honls_stable_dt,
    integrate_honls,
    integrate_reduced,
    invariants,
    kdv_soliton,
    kink_pair_initial,
    stable_dt,
    track_front_speed,
)
from phasekit.reduction import normalized_coefficients


def test_grid_validation():
    g = GridSpec(10.0, 128, 0.01, 1.0)
    assert g.dx == pytest.approx(20.0 / 128)
    assert g.x[0] == -10.0 and g.x[-1] < 10.0
    with pytest.raises(ValueError):
        GridSpec(10.0, 100, 0.01, 1.0)
    with pytest.raises(ValueError):
        GridSpec(10.0, 32, 0.01, 1.0)
    with pytest.raises(ValueError):
        GridSpec(-1.0, 128, 0.01, 1.0)


def test_kdv_soliton_keeps_shape():
    co = normalized_coefficients(1.0, 0.0, 1.0)
    grid = GridSpec(40.0, 512, 0.01, 2.0)
    u0, v = kdv_soliton(co, 2.0, grid.x, -10.0)
    assert v == pytest.approx(2.0 / 3.0)
    traj = integrate_reduced(co, u0, grid)
    exact, _ = kdv_soliton(co, 2.0, grid.x, -10.0, grid.t_end)
    assert np.max(np.abs(traj.snapshots[-1].u - exact)) <= 1e-6
    drift = traj.drift()
    assert drift["mass"] < 1e-12 and drift["momentum"] < 1e-8


def test_gardner_invariants_conserved():
    co = normalized_coefficients(0.6, -1.0, 1.0)
    grid = GridSpec(30.0, 256, 0.005, 1.0)
    u0 = 0.8 * np.exp(-(grid.x**2) / 4.0)
    traj = integrate_reduced(co, u0, grid, log_every=20)
    m, p, h = traj.invariants_log.T
    assert np.ptp(m) <= 1e-12 * max(1.0, abs(m[0]))
    assert np.ptp(p) <= 1e-7 * abs(p[0])
    assert np.ptp(h) <= 1e-5 * max(1.0, abs(h[0]))
    assert invariants(u0, co, grid)[0] == pytest.approx(m[0])


def test_stability_bound_enforced():
    co = normalized_coefficients(0.0, -1.0, 1.0)
    grid = GridSpec(20.0, 256, 1.0, 1.0)
    u0 = np.tanh(grid.x)
    assert stable_dt(co, grid, 1.0) < 1.0
    with pytest.raises(StabilityViolation):
        integrate_reduced(co, u0, grid)


def test_front_parameters_and_focusing():
    co = normalized_coefficients(0.0, -1.0, 1.0)
    fp = front_parameters(co, 1.0)
    assert fp.width == pytest.approx(np.sqrt(1.0 / 6.0))
    assert fp.speed == pytest.approx(-1.0 / 3.0)
    with pytest.raises(FocusingRegime):
        front_parameters(normalized_coefficients(0.0, 1.0, 1.0), 1.0)
    # HONLS reduction: beta/alpha = 15 a2 / 2, gamma/alpha = -3 a2 / 4
    a2 = 1.0
    w, v = honls_front(1.0, a2)
    fp = front_parameters(normalized_coefficients(0.0, 7.5 * a2, -0.75 * a2), 1.0)
    assert fp.width == pytest.approx(w) and fp.speed == pytest.approx(v)


def test_kink_pair_requires_separation():
    co = normalized_coefficients(0.0, -1.0, 1.0)
    grid = GridSpec(50.0, 512, 0.01, 1.0)
    with pytest.raises(ValueError):
        kink_pair_initial(1.0, 5.0, co, grid)
    u0 = kink_pair_initial(1.0, 50.0, co, grid)
    assert len(_crossings(grid.x, u0, 0.0, 2 * grid.L)) == 2


def test_periodic_crossings_include_wrap():
    x = np.linspace(-1, 1, 64, endpoint=False)
    u = np.cos(np.pi * (x - 0.98))
    cr = _crossings(x, u, 0.0, 2.0)
    assert len(cr) == 2
    # crossings that land exactly on a node are not lost
    assert len(_crossings(x, np.sin(np.pi * x), 0.0, 2.0)) == 2


def test_short_front_track():
    co = normalized_coefficients(0.0, -1.0, 1.0)
    grid = GridSpec(40.0, 512, 0.005, 2.0)
    u0 = kink_pair_initial(1.0, 40.0, co, grid)
    traj = integrate_reduced(co, u0, grid, snapshot_times=np.linspace(0, 2.0, 21))
    track = track_front_speed(traj, level=float(np.mean([u0.max(), u0.min()])))
    v = front_parameters(co, 1.0).speed
    np.testing.assert_allclose(track.speeds, v, rtol=1e-3)


def test_honls_plane_wave_exact():
    p = HonlsParams(1.0, 0.5, -1.0, 0.0, 0.0)
    grid = GridSpec(20.0, 128, 0.001, 1.0)
    a = 0.7
    traj = integrate_honls(p, a * np.ones(grid.n, dtype=complex), grid)
    np.testing.assert_allclose(traj.modulus[-1], a, atol=1e-12)
    np.testing.assert_allclose(traj.local_wavenumber[-1], 0.0, atol=1e-10)


def test_honls_split_step_bound():
    p = HonlsParams(1.0, 0.5, -1.0, 0.0, 0.0)
    grid = GridSpec(20.0, 256, 1.0, 1.0)
    assert honls_stable_dt(p, grid) < 1.0
    with pytest.raises(StabilityViolation):
        integrate_honls(p, np.ones(grid.n, dtype=complex), grid)
