"""Periodic pseudo-spectral integrators.

* :func:`integrate_reduced` solves
  U_T + d U U_X + b U^2 U_X + g U_XXX = 0 (d, b, g the alpha-normalized
  coefficients) with an integrating-factor RK4 scheme and 2/3 dealiasing.
* :func:`integrate_honls` solves the higher-order NLS with Strang splitting,
  used to compare the full dynamics against the reduced equation.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import AliasWarning, Blowup, CrossingLost, FocusingRegime, InvalidAmplitude, StabilityViolation
from .models import HonlsParams, _honls_parts
from .reduction import ReducedCoefficients

BLOWUP_LIMIT = 1e6
# RK4 stability along the imaginary axis is |z| <= 2.83; keep a margin
ADVECTIVE_CFL = 1.0


@dataclass(frozen=True)
class GridSpec:
    """Periodic grid on [-L, L) with n points, time step dt up to t_end."""

    L: float
    n: int
    dt: float
    t_end: float

    def __post_init__(self):
        if self.n < 64 or self.n & (self.n - 1):
            raise ValueError("n must be a power of two and at least 64")
        if self.L <= 0 or self.dt <= 0 or self.t_end < 0:
            raise ValueError("L and dt must be positive, t_end non-negative")

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.n

    @property
    def x(self) -> np.ndarray:
        return -self.L + self.dx * np.arange(self.n)

    @property
    def wavenumbers(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dx)

    def dealias_mask(self) -> np.ndarray:
        k = np.abs(np.fft.fftfreq(self.n) * self.n)
        return k < self.n / 3.0


@dataclass
class SimState:
    u: np.ndarray
    t: float


@dataclass
class Trajectory:
    grid: GridSpec
    times: np.ndarray
    snapshots: list
    invariant_times: np.ndarray
    invariants_log: np.ndarray  # columns: mass, momentum, hamiltonian
    meta: dict = field(default_factory=dict)

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def drift(self) -> dict:
        """Max deviation from the initial value and the same divided by elapsed time."""
        inv = self.invariants_log
        T = max(self.invariant_times[-1] - self.invariant_times[0], 1e-300)
        dev = np.max(np.abs(inv - inv[0]), axis=0)
        return {
            "mass": float(dev[0]),
            "momentum": float(dev[1]),
            "hamiltonian": float(dev[2]),
            "mass_per_time": float(dev[0] / T),
            "momentum_per_time": float(dev[1] / T),
            "hamiltonian_per_time": float(dev[2] / T),
        }


def _normalized(coeffs: ReducedCoefficients) -> tuple:
    if coeffs.alpha == 0:
        raise ValueError("alpha must be nonzero")
    r = coeffs.ratios()
    g = r["gamma"] if r["gamma"] is not None else 0.0
    return r["delta"], r["beta"], g


def invariants(u: np.ndarray, coeffs: ReducedCoefficients, grid: GridSpec) -> tuple:
    """(mass, momentum, hamiltonian) with density (g/2) u_x^2 - (d/6) u^3 - (b/12) u^4."""
    d, b, g = _normalized(coeffs)
    k = 2.0 * np.pi * np.fft.rfftfreq(grid.n, d=grid.dx)
    ux = np.fft.irfft(1j * k * np.fft.rfft(u), grid.n)
    dx = grid.dx
    mass = float(np.sum(u) * dx)
    mom = float(np.sum(u * u) * dx)
    ham = float(np.sum(0.5 * g * ux * ux - d * u**3 / 6.0 - b * u**4 / 12.0) * dx)
    return mass, mom, ham


def stable_dt(coeffs: ReducedCoefficients, grid: GridSpec, umax: float) -> float:
    """Largest dt for which the explicit (nonlinear) part of IF-RK4 is stable.

    The dispersive term is integrated exactly by the integrating factor, so the
    bound is advective: dt <= C dx / max|d u + b u^2| over the data range.
    """
    d, b, _ = _normalized(coeffs)
    speed = abs(d) * umax + abs(b) * umax * umax
    if speed == 0:
        return math.inf
    return ADVECTIVE_CFL * grid.dx / speed


def integrate_reduced(
    coeffs: ReducedCoefficients,
    u0: np.ndarray,
    grid: GridSpec,
    snapshot_times: Optional[Sequence[float]] = None,
    *,
    log_every: int = 1,
) -> Trajectory:
    """Integrating-factor RK4 for the normalized KdV / Gardner / mKdV equation."""
    d, b, g = _normalized(coeffs)
    u0 = np.asarray(u0, dtype=float)
    if u0.shape != (grid.n,):
        raise ValueError("initial field does not match the grid")
    umax = float(np.max(np.abs(u0))) if u0.size else 0.0
    dt_max = stable_dt(coeffs, grid, umax)
    if grid.dt > dt_max:
        raise StabilityViolation(f"dt = {grid.dt} exceeds the advective bound {dt_max:.3e}")
    # real fields: half-spectrum transforms keep u exactly real
    k = 2.0 * np.pi * np.fft.rfftfreq(grid.n, d=grid.dx)
    mask = np.arange(k.size) < grid.n / 3.0
    lin = 1j * g * k**3  # u_t = -g u_xxx  ->  +i g k^3 u_hat
    dt = grid.dt
    E = np.exp(lin * dt)
    E2 = np.exp(lin * dt / 2)
    ik = 1j * k * mask
    n = grid.n

    def N(v_hat):
        v = np.fft.irfft(v_hat, n)
        return -ik * np.fft.rfft(d * v * v / 2.0 + b * v**3 / 3.0)

    n_steps = int(round(grid.t_end / dt))
    if abs(n_steps * dt - grid.t_end) > 1e-9 * max(1.0, grid.t_end):
        raise ValueError("t_end must be an integer multiple of dt")
    if snapshot_times is None:
        snapshot_times = [0.0, grid.t_end]
    snap_steps = sorted({int(round(t / dt)) for t in snapshot_times})
    v_hat = np.fft.rfft(u0) * mask
    snaps, times = [], []
    inv_t, inv = [], []
    for step in range(n_steps + 1):
        if step in snap_steps or step % log_every == 0 or step == n_steps:
            u = np.fft.irfft(v_hat, n)
            if not np.all(np.isfinite(u)) or np.max(np.abs(u)) > BLOWUP_LIMIT:
                raise Blowup(f"|u| exceeded {BLOWUP_LIMIT:g} at t = {step * dt:g}")
            if step in snap_steps:
                snaps.append(SimState(u.copy(), step * dt))
                times.append(step * dt)
            if step % log_every == 0 or step == n_steps:
                inv_t.append(step * dt)
                inv.append(invariants(u, coeffs, grid))
        if step == n_steps:
            break
        k1 = N(v_hat)
        k2 = N(E2 * (v_hat + 0.5 * dt * k1))
        k3 = N(E2 * v_hat + 0.5 * dt * k2)
        k4 = N(E * v_hat + dt * E2 * k3)
        v_hat = E * v_hat + dt / 6.0 * (E * k1 + 2.0 * E2 * (k2 + k3) + k4)
    return Trajectory(
        grid,
        np.array(times),
        snaps,
        np.array(inv_t),
        np.array(inv),
        {"scheme": "IF-RK4", "dealias": "2/3", "coefficients": {"delta": d, "beta": b, "gamma": g}},
    )


# ---------------------------------------------------------------------------
# fronts


@dataclass(frozen=True)
class FrontParameters:
    amplitude: float
    width: float  # w in tanh(w (x - v t))
    speed: float
    offset: float  # U = offset + amplitude * tanh(...)


def front_parameters(coeffs: ReducedCoefficients, a0: float) -> FrontParameters:
    """Front U = m + a0 tanh(w (X - v T)) of the normalized equation.

    With V = U + d / (2b) the Gardner equation becomes an mKdV equation with
    an extra advection -d^2/(4b); fronts need b/g < 0.
    """
    d, b, g = _normalized(coeffs)
    if b == 0 or g == 0 or b * g > 0:
        raise FocusingRegime("fronts require cubic and dispersive coefficients of opposite sign")
    w2 = -b * a0 * a0 / (6.0 * g)
    v = -2.0 * g * w2 - d * d / (4.0 * b)
    return FrontParameters(a0, math.sqrt(w2), v, -d / (2.0 * b))


def kink_pair_initial(a0: float, separation: float, coeffs: ReducedCoefficients, grid: GridSpec) -> np.ndarray:
    """Up-kink at -s/2 and down-kink at +s/2 on the level -a0 (offset included)."""
    fp = front_parameters(coeffs, a0)
    if a0 != 0 and separation < 10.0 / fp.width:
        raise ValueError("kinks must be at least 10 widths apart")
    if separation >= 2 * grid.L:
        raise ValueError("separation must be smaller than the period")
    x = grid.x
    s = separation / 2.0
    w = fp.width
    u = a0 * (np.tanh(w * (x + s)) - np.tanh(w * (x - s)) - 1.0)
    return fp.offset + u


def kdv_soliton(coeffs: ReducedCoefficients, amplitude: float, x: np.ndarray, x0: float = 0.0, t: float = 0.0):
    """A sech^2(kappa (x - x0 - v t)) for U_t + d U U_x + g U_xxx = 0."""
    d, _, g = _normalized(coeffs)
    kap2 = d * amplitude / (12.0 * g)
    if kap2 <= 0:
        raise ValueError("no soliton of that polarity: need d A / g > 0")
    v = d * amplitude / 3.0
    kap = math.sqrt(kap2)
    xi = x - x0 - v * t
    return amplitude / np.cosh(kap * xi) ** 2, v


def _crossings(x: np.ndarray, u: np.ndarray, level: float, period: float) -> np.ndarray:
    """Linear-interpolated level crossings, including the wrap-around segment."""
    f = np.append(u, u[0]) - level
    xx = np.append(x, x[0] + period)
    s = np.where(f >= 0, 1, -1)  # a node exactly on the level counts as above it
    idx = np.nonzero(s[:-1] != s[1:])[0]
    xc = xx[idx] - f[idx] * (xx[idx + 1] - xx[idx]) / (f[idx + 1] - f[idx])
    return xc


@dataclass(frozen=True)
class FrontTrack:
    speeds: np.ndarray
    r_squared: np.ndarray
    positions: np.ndarray  # (n_snapshots, n_fronts), unwrapped


def track_front_speed(trajectory, level: float = 0.0, frame_speed: float = 0.0, which: str = "u") -> FrontTrack:
    """Level-crossing positions per snapshot and a least-squares speed per front.

    Fronts are matched between snapshots in a frame moving at ``frame_speed``,
    so snapshots only need to be dense relative to the speed in that frame.
    ``which`` selects the snapshot array: ``"u"`` for :class:`Trajectory`,
    ``"local_wavenumber"`` or ``"modulus"`` for :class:`HonlsTrajectory`.
    """
    x = trajectory.x
    L2 = 2 * trajectory.grid.L
    if which == "u":
        fields = [st.u for st in trajectory.snapshots]
    else:
        fields = getattr(trajectory, which)
    t = np.asarray(trajectory.times, dtype=float)
    pos = []
    for f, ti in zip(fields, t):
        xc = _crossings(x, f, level, L2) - frame_speed * ti
        pos.append(np.sort(np.mod(xc + trajectory.grid.L, L2) - trajectory.grid.L))
    n_front = len(pos[0])
    if n_front == 0 or any(len(p) != n_front for p in pos):
        raise CrossingLost("number of level crossings changed between snapshots")
    P = np.array(pos)
    # match fronts across snapshots on the periodic line
    for i in range(1, len(P)):
        prev = P[i - 1]
        cur = P[i]
        matched = np.empty(n_front)
        for j in range(n_front):
            cand = cur + L2 * np.round((prev[j] - cur) / L2)
            matched[j] = cand[np.argmin(np.abs(cand - prev[j]))]
        P[i] = matched
    P = P + frame_speed * t[:, None]
    speeds, r2 = [], []
    for j in range(n_front):
        A = np.vstack([t, np.ones_like(t)]).T
        coef, *_ = np.linalg.lstsq(A, P[:, j], rcond=None)
        fit = A @ coef
        ss_res = np.sum((P[:, j] - fit) ** 2)
        ss_tot = np.sum((P[:, j] - P[:, j].mean()) ** 2)
        speeds.append(coef[0])
        r2.append(1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0)
    return FrontTrack(np.array(speeds), np.array(r2), P)


# ---------------------------------------------------------------------------
# higher-order NLS


@dataclass
class HonlsTrajectory:
    grid: GridSpec
    times: np.ndarray
    modulus: list
    local_wavenumber: list
    meta: dict = field(default_factory=dict)

    @property
    def x(self) -> np.ndarray:
        return self.grid.x


def local_wavenumber(A: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Im(conj(A) A_x) / |A|^2 with a spectral derivative."""
    Ax = np.fft.ifft(1j * grid.wavenumbers * np.fft.fft(A))
    return np.imag(np.conj(A) * Ax) / np.abs(A) ** 2


def modulated_plane_wave(p: HonlsParams, U0, c: float, eps: float, grid: GridSpec) -> np.ndarray:
    """Plane wave with local wavenumber k + eps U0(eps x) and frequency omega - eps c U0.

    ``U0`` is a callable of X = eps x with zero mean over the period; the
    phase is k x + integral of U0 dX, computed spectrally.
    """
    x = grid.x
    X = eps * x
    U = np.asarray(U0(X), dtype=float)
    kk = grid.wavenumbers
    Uh = np.fft.fft(U)
    Uh[0] = 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        Ph = np.where(kk != 0, Uh / (1j * kk), 0.0)
    # phase correction: integral over x of eps U0(eps x)
    phase = p.k * x + eps * np.real(np.fft.ifft(Ph))
    if abs(p.k * 2 * grid.L / (2 * np.pi) - round(p.k * 2 * grid.L / (2 * np.pi))) > 1e-9:
        raise ValueError("carrier wavenumber is not periodic on the grid")
    U = U - np.mean(U)
    _, _, _, amp2 = _honls_parts(p, p.k + eps * U, p.omega - eps * c * U)
    if np.any(amp2 <= 0):
        raise InvalidAmplitude("modulation drives |A0|^2 negative")
    return np.sqrt(amp2) * np.exp(1j * phase)


def honls_stable_dt(p: HonlsParams, grid: GridSpec) -> float:
    """pi / max |a1 xi^2 + a2 xi^3| over the grid modes.

    Above this step the linear phase of some mode wraps within one step and the
    split-step scheme resonates with the plane-wave background.
    """
    k = grid.wavenumbers
    top = float(np.max(np.abs(p.alpha1 * k**2 + p.alpha2 * k**3)))
    return math.pi / top if top > 0 else math.inf


def integrate_honls(
    p: HonlsParams,
    A0: np.ndarray,
    grid: GridSpec,
    snapshot_times: Optional[Sequence[float]] = None,
    *,
    alias_tol: float = 1e-6,
) -> HonlsTrajectory:
    """Strang split-step for i A_t + a1 A_xx - i a2 A_xxx + beta |A|^2 A = 0."""
    k = grid.wavenumbers
    dt = grid.dt
    dt_max = honls_stable_dt(p, grid)
    if dt >= dt_max:
        raise StabilityViolation(f"dt = {dt} exceeds the split-step bound {dt_max:.3e}")
    half = np.exp(-1j * (p.alpha1 * k**2 + p.alpha2 * k**3) * dt / 2)
    n_steps = int(round(grid.t_end / dt))
    if snapshot_times is None:
        snapshot_times = [0.0, grid.t_end]
    snap_steps = sorted({int(round(t / dt)) for t in snapshot_times})
    A = np.asarray(A0, dtype=complex).copy()
    mods, qs, times = [], [], []
    top = np.abs(np.fft.fftfreq(grid.n) * grid.n) >= grid.n / 3.0
    for step in range(n_steps + 1):
        if step in snap_steps:
            if not np.all(np.isfinite(A)) or np.max(np.abs(A)) > BLOWUP_LIMIT:
                raise Blowup(f"|A| exceeded {BLOWUP_LIMIT:g} at t = {step * dt:g}")
            Ah = np.fft.fft(A)
            e = np.abs(Ah) ** 2
            if np.sum(e[top]) > alias_tol * np.sum(e):
                warnings.warn(f"spectral tail fraction {np.sum(e[top]) / np.sum(e):.2e}", AliasWarning, stacklevel=2)
            mods.append(np.abs(A))
            qs.append(local_wavenumber(A, grid))
            times.append(step * dt)
        if step == n_steps:
            break
        A = np.fft.ifft(half * np.fft.fft(A))
        A = A * np.exp(1j * p.beta_nl * np.abs(A) ** 2 * dt)
        A = np.fft.ifft(half * np.fft.fft(A))
    return HonlsTrajectory(grid, np.array(times), mods, qs, {"scheme": "Strang split-step"})


@dataclass(frozen=True)
class ModulationRun:
    eps: float
    predicted_speed: float  # c + eps^2 v
    measured_speeds: np.ndarray
    reduced_speeds: np.ndarray  # (measured - c) / eps^2, one per front
    relative_errors: np.ndarray  # |reduced - v| / |v|
    r_squared: np.ndarray

    @property
    def error(self) -> float:
        return float(np.max(self.relative_errors))


def honls_modulation_run(
    p: HonlsParams,
    c: float,
    coeffs: ReducedCoefficients,
    eps: float,
    *,
    a0: float = 1.0,
    half_period_X: float = 10.0,
    T: float = 2.0,
    points_per_unit_x: float = 1.28,
    n_snapshots: int = 81,
) -> ModulationRun:
    """Kink-pair modulated plane wave, tracked in the local wavenumber.

    The initial wavenumber is k + eps U0(eps x) with U0 the reduced kink pair
    of zero mean; the run lasts T / eps^3 and the front speed is compared with
    c + eps^2 v where v is the reduced front speed.
    """
    fp = front_parameters(coeffs, a0)
    L = half_period_X / eps
    n = 1 << int(math.ceil(math.log2(max(64, 2 * L * points_per_unit_x))))
    t_end = T / eps**3
    probe = GridSpec(L, n, 1.0, 1.0)
    dt = 0.5 * honls_stable_dt(p, probe)
    steps = int(math.ceil(t_end / dt))
    grid = GridSpec(L, n, t_end / steps, t_end)
    s = half_period_X / 2.0

    def U0(X):
        return fp.offset + a0 * (np.tanh(fp.width * (X + s)) - np.tanh(fp.width * (X - s)) - 1.0)

    A0 = modulated_plane_wave(p, U0, c, eps, grid)
    traj = integrate_honls(p, A0, grid, snapshot_times=np.linspace(0.0, t_end, n_snapshots))
    track = track_front_speed(traj, level=p.k + eps * fp.offset, frame_speed=c, which="local_wavenumber")
    reduced = (track.speeds - c) / eps**2
    rel = np.abs(reduced - fp.speed) / abs(fp.speed)
    return ModulationRun(eps, c + eps**2 * fp.speed, track.speeds, reduced, rel, track.r_squared)
