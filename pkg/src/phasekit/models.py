"""Built-in wave systems: higher-order NLS, Stokes-type waves, three-layer flow.

Each model provides A and B, exact partial derivatives, a linear dispersion
relation in implicit form, and closed-form reference values that the tests
compare the generic pipeline against.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from typing import Callable, Optional

import numpy as np
from numpy.polynomial import Polynomial
from scipy import optimize

from .characteristics import find_characteristics
from .errors import (
    EllipticRegime,
    InvalidAmplitude,
    LidViolation,
    NoDispersionRelation,
    PhasekitError,
    UnstableStratification,
)
from .reduction import assemble_gardner, attach_dispersion, track_dispersion_branch
from .tensors import ConservationModel, PhasePoint, build_pencil, evaluate_bundle


def _sym_fill(T, idx, val):
    """Write val at every permutation of the variable indices idx (axis 0 fixed)."""
    import itertools

    for perm in set(itertools.permutations(idx)):
        T[(slice(None),) + perm] = val


# ===========================================================================
# higher-order NLS:  i A_t + a1 A_xx - i a2 A_xxx + beta |A|^2 A = 0


@dataclass(frozen=True)
class HonlsParams:
    alpha1: float
    alpha2: float
    beta_nl: float
    k: float = 0.0
    omega: float = 0.0

    def point(self) -> PhasePoint:
        return PhasePoint([self.k], [self.omega])


def _honls_parts(p: HonlsParams, k, w):
    f = p.alpha1 * k * k + p.alpha2 * k**3
    s = 2 * p.alpha1 * k + 3 * p.alpha2 * k * k
    q = p.alpha1 + 3 * p.alpha2 * k
    amp2 = (w + f) / p.beta_nl
    return f, s, q, amp2


def honls_amplitude_sq(p: HonlsParams, k=None, omega=None) -> float:
    k = p.k if k is None else k
    omega = p.omega if omega is None else omega
    return _honls_parts(p, k, omega)[3]


def honls_model(p: HonlsParams) -> ConservationModel:
    """A = |A0|^2 / 2,  B = k (a1 + 3 a2 k / 2) |A0|^2."""
    if p.beta_nl == 0:
        raise InvalidAmplitude("beta_nl must be nonzero")
    if honls_amplitude_sq(p) <= 0:
        raise InvalidAmplitude(f"|A0|^2 = {honls_amplitude_sq(p):.6g} <= 0 at the default point")
    b = p.beta_nl

    def eval_A(pt):
        return np.array([0.5 * _honls_parts(p, pt.k[0], pt.omega[0])[3]])

    def eval_B(pt):
        k = pt.k[0]
        amp2 = _honls_parts(p, k, pt.omega[0])[3]
        return np.array([k * (p.alpha1 + 1.5 * p.alpha2 * k) * amp2])

    def partials(pt, order):
        k, w = pt.k[0], pt.omega[0]
        f, s, q, _ = _honls_parts(p, k, w)
        theta = w + f
        f2, f3 = 2 * q, 6 * p.alpha2
        if order == 1:
            dA = np.array([[s, 1.0]]) / (2 * b)
            dB = np.array([[f2 * theta + s * s, s]]) / (2 * b)
            return dA, dB
        if order == 2:
            dA = np.zeros((1, 2, 2))
            dB = np.zeros((1, 2, 2))
            dA[0, 0, 0] = f2 / (2 * b)
            dB[0, 0, 0] = (f3 * theta + 3 * s * f2) / (2 * b)
            _sym_fill(dB, (0, 1), f2 / (2 * b))
            return dA, dB
        if order == 3:
            dA = np.zeros((1, 2, 2, 2))
            dB = np.zeros((1, 2, 2, 2))
            dA[0, 0, 0, 0] = f3 / (2 * b)
            dB[0, 0, 0, 0] = (4 * s * f3 + 3 * f2 * f2) / (2 * b)
            _sym_fill(dB, (0, 0, 1), f3 / (2 * b))
            return dA, dB
        return None

    def dispersion(sigma, nu, pt):
        k, w = pt.k[0], pt.omega[0]
        f, s, q, amp2 = _honls_parts(p, k, w)
        return (sigma - s * nu - p.alpha2 * nu**3) ** 2 - nu * nu * (-2 * b * q * amp2 + q * q * nu * nu)

    return ConservationModel(
        n_phases=1,
        eval_A=eval_A,
        eval_B=eval_B,
        analytic_partials=partials,
        dispersion_implicit=dispersion,
        validity=lambda pt: _honls_parts(p, pt.k[0], pt.omega[0])[3] > 0,
        name="honls",
        default_point=p.point(),
        metadata={"params": asdict(p)},
    )


def honls_characteristics(p: HonlsParams) -> tuple:
    """c = s +- sqrt(-2 beta q |A0|^2), sorted ascending (complex if elliptic)."""
    _, s, q, amp2 = _honls_parts(p, p.k, p.omega)
    disc = -2 * amp2 * p.beta_nl * q
    r = np.sqrt(complex(disc)) if disc < 0 else math.sqrt(disc)
    roots = sorted([s - r, s + r], key=lambda z: (np.real(z), np.imag(z)))
    return tuple(roots)


def honls_gn_scalar(p: HonlsParams, c: float) -> float:
    """Exact GN scalar for zeta = 1: 3 a2 |A0|^2 - 3 q (c - s) / beta."""
    _, s, q, amp2 = _honls_parts(p, p.k, p.omega)
    return 3 * p.alpha2 * amp2 - 3 * q * (c - s) / p.beta_nl


def honls_gn_quoted(p: HonlsParams, c: float) -> float:
    """The commonly quoted form 3 a2 beta |A0|^2 - 3 q (c - s).

    It equals beta times :func:`honls_gn_scalar`, so the zero sets agree.
    """
    _, s, q, amp2 = _honls_parts(p, p.k, p.omega)
    return 3 * p.alpha2 * p.beta_nl * amp2 - 3 * q * (c - s)


def honls_degeneracy_locus(p: HonlsParams) -> float:
    """a2^2 |A0|^2 + 2 q^3 / beta; zero where one characteristic is degenerate."""
    _, _, q, amp2 = _honls_parts(p, p.k, p.omega)
    return p.alpha2**2 * amp2 + 2 * q**3 / p.beta_nl


def honls_degenerate_speed(p: HonlsParams) -> float:
    """The characteristic that loses genuine nonlinearity on the locus.

    c - s = a2 beta |A0|^2 / q, i.e. the root whose offset has the sign of a2 beta / q.
    """
    _, s, q, amp2 = _honls_parts(p, p.k, p.omega)
    return s + p.alpha2 * p.beta_nl * amp2 / q


def honls_degenerate_point(alpha1: float, alpha2: float, beta_nl: float, k: float = 0.0) -> HonlsParams:
    """Frequency that puts (k, omega) on the degeneracy locus."""
    q = alpha1 + 3 * alpha2 * k
    amp2 = -2 * q**3 / (beta_nl * alpha2**2)
    if amp2 <= 0:
        raise InvalidAmplitude("no degenerate wavetrain: need beta * q < 0")
    f = alpha1 * k * k + alpha2 * k**3
    return HonlsParams(alpha1, alpha2, beta_nl, k, beta_nl * amp2 - f)


def honls_dispersion(p: HonlsParams, nu, sign: int = 1):
    """sigma = s nu + a2 nu^3 + sign * nu sqrt(-2 beta q |A0|^2 + q^2 nu^2)."""
    _, s, q, amp2 = _honls_parts(p, p.k, p.omega)
    nu = np.asarray(nu, dtype=float)
    rad = (-2 * p.beta_nl * q * amp2 + q * q * nu * nu).astype(complex)
    out = s * nu + p.alpha2 * nu**3 + sign * nu * np.sqrt(rad)
    return np.real(out) if np.all(rad.real >= 0) else out


def honls_sigma3_over6(p: HonlsParams, c: float) -> float:
    """(1/6) sigma'''(0) on the branch through c: a2 + q^2 / (2 (c - s))."""
    _, s, q, _ = _honls_parts(p, p.k, p.omega)
    return p.alpha2 + q * q / (2 * (c - s))


def honls_mkdv_ratios(p: HonlsParams) -> tuple:
    """(beta/alpha, gamma/alpha) at a degenerate point: (15 a2 / 2, -3 a2 / 4)."""
    return 7.5 * p.alpha2, -0.75 * p.alpha2


def honls_front(a0: float, alpha2: float) -> tuple:
    """Width parameter and speed of U = a0 tanh(w (X - v T)) for the reduced mKdV."""
    return math.sqrt(5.0 / 3.0) * abs(a0), 2.5 * alpha2 * a0 * a0


# ===========================================================================
# Stokes-type waves:  L = Omega(k, omega)^2 / (4 Gamma)


def polynomial_omega0(coeffs) -> Callable[[float, int], float]:
    """omega0(k) = sum_i coeffs[i] k^i, as a callable (k, n) -> n-th derivative."""
    poly = Polynomial(np.asarray(coeffs, dtype=float))
    derivs = [poly] + [poly.deriv(m) for m in range(1, 5)]

    def omega0(k, n=0):
        return float(derivs[n](k)) if n < len(derivs) else 0.0

    return omega0


@dataclass(frozen=True)
class StokesParams:
    """Carrier dispersion omega0 (callable (k, n) -> d^n omega0 / dk^n), the
    nonlinear frequency correction omega2, amplitude a and wavenumber k.

    Omega(k, omega) = theta + mu theta^2 with theta = omega + omega0(k); the
    nonlinear coefficient is Gamma = -omega2 / Omega_omega so that hyperbolicity
    is omega0'' omega2 > 0.  mu = 0 is the linear-in-frequency branch.

    The dispersion relation about the wave is that of the higher-order NLS
    built from the cubic Taylor polynomial of omega0 (``full_dispersion=False``)
    or, with ``full_dispersion=True``, of the NLS carrying all of omega0.
    """

    omega0: Callable[[float, int], float]
    omega2: float
    a: float
    k: float = 0.0
    omega_curvature: float = 0.0
    full_dispersion: bool = False

    @property
    def Gamma(self) -> float:
        return -self.omega2

    def theta_star(self) -> float:
        target = self.Gamma * self.a * self.a
        mu = self.omega_curvature
        if mu == 0:
            return target
        return (-1.0 + math.sqrt(1.0 + 4.0 * mu * target)) / (2.0 * mu)

    def point(self) -> PhasePoint:
        return PhasePoint([self.k], [self.theta_star() - self.omega0(self.k, 0)])


def stokes_model(p: StokesParams) -> ConservationModel:
    """A = Omega Omega_omega / (2 Gamma), B = Omega Omega_k / (2 Gamma)."""
    if p.omega2 == 0:
        raise EllipticRegime("omega2 must be nonzero")
    w0 = p.omega0
    if w0(p.k, 2) * p.omega2 < 0:
        raise EllipticRegime("omega0'' omega2 < 0: modulationally unstable (elliptic) carrier")
    G = p.Gamma
    mu = p.omega_curvature

    def parts(pt):
        k, w = pt.k[0], pt.omega[0]
        th = w + w0(k, 0)
        Om = th + mu * th * th
        Om_th = 1.0 + 2.0 * mu * th
        return k, th, Om, Om_th

    def eval_A(pt):
        _, _, Om, Om_th = parts(pt)
        return np.array([Om * Om_th / (2 * G)])

    def eval_B(pt):
        k, _, Om, Om_th = parts(pt)
        return np.array([Om * Om_th * w0(k, 1) / (2 * G)])

    def validity(pt):
        _, _, Om, Om_th = parts(pt)
        return Om / G > 0 and Om_th > 0

    def partials(pt, order):
        if mu != 0:
            return None
        k, th, _, _ = parts(pt)
        d1, d2, d3, d4 = (w0(k, n) for n in (1, 2, 3, 4))
        s = 1.0 / (2 * G)
        if order == 1:
            return np.array([[d1, 1.0]]) * s, np.array([[d1 * d1 + th * d2, d1]]) * s
        if order == 2:
            dA = np.zeros((1, 2, 2))
            dB = np.zeros((1, 2, 2))
            dA[0, 0, 0] = d2 * s
            dB[0, 0, 0] = (3 * d1 * d2 + th * d3) * s
            _sym_fill(dB, (0, 1), d2 * s)
            return dA, dB
        if order == 3:
            dA = np.zeros((1, 2, 2, 2))
            dB = np.zeros((1, 2, 2, 2))
            dA[0, 0, 0, 0] = d3 * s
            dB[0, 0, 0, 0] = (3 * d2 * d2 + 4 * d1 * d3 + th * d4) * s
            _sym_fill(dB, (0, 0, 1), d3 * s)
            return dA, dB
        return None

    dispersion = None
    if mu == 0:

        def dispersion(sigma, nu, pt):
            k, th, _, _ = parts(pt)
            a2 = th / G
            if p.full_dispersion:
                odd = 0.5 * (w0(k + nu, 0) - w0(k - nu, 0))
                even = 0.5 * (w0(k + nu, 0) + w0(k - nu, 0)) - w0(k, 0)
            else:
                odd = w0(k, 1) * nu + w0(k, 3) * nu**3 / 6.0
                even = 0.5 * w0(k, 2) * nu * nu
            return (sigma - odd) ** 2 - even * (even + 2 * p.omega2 * a2)

    return ConservationModel(
        n_phases=1,
        eval_A=eval_A,
        eval_B=eval_B,
        analytic_partials=partials,
        dispersion_implicit=dispersion,
        validity=validity,
        name="stokes",
        default_point=p.point(),
        metadata={"omega2": p.omega2, "a": p.a, "k": p.k, "omega_curvature": mu, "full_dispersion": p.full_dispersion},
    )


def stokes_characteristics_small_a(p: StokesParams) -> tuple:
    """Leading-order splitting c = omega0' -+ sqrt(omega0'' omega2) a."""
    d1, d2 = p.omega0(p.k, 1), p.omega0(p.k, 2)
    r = math.sqrt(d2 * p.omega2) * p.a
    return d1 - r, d1 + r


def stokes_degeneracy_residual(p: StokesParams) -> float:
    """omega2 (omega0''')^2 a^2 - 9 (omega0'')^3, zero at the degenerate amplitude."""
    d2, d3 = p.omega0(p.k, 2), p.omega0(p.k, 3)
    return p.omega2 * d3 * d3 * p.a * p.a - 9 * d2**3


def stokes_degenerate_amplitude(omega0, omega2: float, k: float = 0.0) -> float:
    d2, d3 = omega0(k, 2), omega0(k, 3)
    return 3.0 * math.sqrt(d2**3 / omega2) / abs(d3)


def stokes_degenerate_speed(p: StokesParams) -> float:
    """The root whose offset from omega0' has the sign of -omega2 omega0''' / omega0''."""
    d1, d2, d3 = (p.omega0(p.k, n) for n in (1, 2, 3))
    r = math.sqrt(d2 * p.omega2) * p.a
    return d1 + math.copysign(r, -p.omega2 * d3 * d2)


def stokes_gn_expansion(p: StokesParams, sign: int) -> float:
    """GN scalar to O(a^3): (1/2)(omega0''' a^2 + sign * 3 omega0'' sqrt(omega0'' omega2) a / omega2)."""
    d2, d3 = p.omega0(p.k, 2), p.omega0(p.k, 3)
    return 0.5 * (d3 * p.a**2 + sign * 3 * d2 * math.sqrt(d2 * p.omega2) * p.a / p.omega2)


def stokes_mkdv_ratios(omega0, k: float = 0.0) -> tuple:
    """(beta/alpha, gamma/alpha) at the degenerate amplitude, linear branch.

    beta/alpha = 5 w''' / 4 - 3 w'' w'''' / (4 w'''),  gamma/alpha = -w''' / 8.
    """
    d2, d3, d4 = omega0(k, 2), omega0(k, 3), omega0(k, 4)
    return 1.25 * d3 - 0.75 * d2 * d4 / d3, -d3 / 8.0


def stokes_gamma_ratio_full(omega0, k: float = 0.0) -> float:
    """gamma/alpha at the degenerate amplitude when all of omega0 enters the dispersion.

    -w'''/8 + w'' w''''/(8 w'''); reduces to -w'''/8 for a cubic omega0.
    """
    d2, d3, d4 = omega0(k, 2), omega0(k, 3), omega0(k, 4)
    return -d3 / 8.0 + d2 * d4 / (8.0 * d3)


def stokes_mkdv_ratios_quoted(omega0, k: float = 0.0) -> tuple:
    """The widely quoted form (1/2)(5 w'''/3 - 3 w'''' w''/w''') and -w'''/8."""
    d2, d3, d4 = omega0(k, 2), omega0(k, 3), omega0(k, 4)
    return 0.5 * (5 * d3 / 3 - 3 * d4 * d2 / d3), -d3 / 8.0


# ===========================================================================
# three-layer rigid-lid shallow water


@dataclass(frozen=True)
class StratParams:
    rho1: float
    rho2: float
    rho3: float
    H1: float
    H2: float
    H3: float
    g: float = 9.81

    def __post_init__(self):
        if not (self.rho1 < self.rho2 < self.rho3):
            raise UnstableStratification(f"need rho1 < rho2 < rho3, got {self.rho1}, {self.rho2}, {self.rho3}")
        if min(self.H1, self.H2, self.H3) <= 0:
            raise LidViolation("layer thicknesses must be positive")
        if self.g <= 0:
            raise UnstableStratification("gravity must be positive")

    @property
    def rho(self) -> np.ndarray:
        return np.array([self.rho1, self.rho2, self.rho3])

    @property
    def H(self) -> np.ndarray:
        return np.array([self.H1, self.H2, self.H3])

    @property
    def depth(self) -> float:
        return self.H1 + self.H2 + self.H3

    @property
    def g1(self) -> float:
        return self.g * (self.rho2 - self.rho1)

    @property
    def g2(self) -> float:
        return self.g * (self.rho3 - self.rho2)

    def static_head(self) -> np.ndarray:
        """Bernoulli heads omega at rest that reproduce thicknesses H."""
        return np.array([self.g1 * (self.H2 + self.H3) / self.rho1, 0.0, -self.g2 * self.H3 / self.rho3])

    def static_point(self) -> PhasePoint:
        return PhasePoint(np.zeros(3), self.static_head())

    def mass_matrix(self) -> np.ndarray:
        """K = dA/db (constant): -v1 v1^T / g1 - v2 v2^T / g2."""
        v1 = np.array([self.rho1, -self.rho2, 0.0])
        v2 = np.array([0.0, self.rho2, -self.rho3])
        return -np.outer(v1, v1) / self.g1 - np.outer(v2, v2) / self.g2


def stratified_thicknesses(p: StratParams, point: PhasePoint) -> np.ndarray:
    """Uniform-flow layer thicknesses from heads b_i = omega_i + U_i^2 / 2."""
    b = point.omega + 0.5 * point.k**2
    h1 = p.depth - (p.rho1 * b[0] - p.rho2 * b[1]) / p.g1
    h3 = (p.rho2 * b[1] - p.rho3 * b[2]) / p.g2
    return np.array([h1, p.depth - h1 - h3, h3])


def _product_rule(dA: list, U: np.ndarray, n: int, order: int) -> np.ndarray:
    """Order-`order` partials of B_i = A_i U_i, given partials of A up to that order."""
    import itertools

    dim = 2 * n
    T = np.zeros((n,) + (dim,) * order)
    for idx in itertools.product(range(dim), repeat=order):
        for i in range(n):
            val = dA[order][(i,) + idx] * U[i]
            # one factor of U differentiated: variable U_i appears in slot j
            for j, v in enumerate(idx):
                if v == i:
                    rest = idx[:j] + idx[j + 1 :]
                    val += dA[order - 1][(i,) + rest] if order > 1 else dA[0][i]
            T[(i,) + idx] = val
    return T


def stratified_model(p: StratParams) -> ConservationModel:
    """A_i = rho_i h_i(U, omega), B_i = A_i U_i with U_i in the role of k_i."""
    K = p.mass_matrix()
    rho = p.rho

    def eval_A(pt):
        return rho * stratified_thicknesses(p, pt)

    def eval_B(pt):
        return eval_A(pt) * pt.k

    def partials(pt, order):
        U = pt.k
        A0 = eval_A(pt)
        # partials of A up to `order` (A is affine in b = omega + U^2/2)
        dA = [A0]
        dA1 = np.concatenate([K * U[None, :], K], axis=1)
        dA.append(dA1)
        dA2 = np.zeros((3, 6, 6))
        for j in range(3):
            dA2[:, j, j] = K[:, j]
        dA.append(dA2)
        dA.append(np.zeros((3, 6, 6, 6)))
        dB = _product_rule(dA, U, 3, order)
        return dA[order], dB

    def dispersion(sigma, nu, pt):
        if np.any(pt.k != 0):
            raise NoDispersionRelation("three-layer dispersion relation is implemented at the static state only")
        h = stratified_thicknesses(p, pt)
        r1, r2, r3 = rho
        H1, H2, H3 = h
        s2, n2 = sigma * sigma, nu * nu
        t1 = s2 * (r2 / H2 + r1 / H1 + n2 * (r1 * H1 + r2 * H2) / 3) - p.g1 * n2
        t2 = s2 * (r2 / H2 + r3 / H3 + n2 * (r2 * H2 + r3 * H3) / 3) - p.g2 * n2
        return t1 * t2 - s2 * s2 * r2 * r2 / H2**2 * (1 - n2 * H2 * H2 / 6) ** 2

    def validity(pt):
        return bool(np.all(stratified_thicknesses(p, pt) > 0))

    return ConservationModel(
        n_phases=3,
        eval_A=eval_A,
        eval_B=eval_B,
        analytic_partials=partials,
        dispersion_implicit=dispersion,
        validity=validity,
        name="stratified3",
        default_point=p.static_point(),
        metadata={"params": asdict(p), "off_static": "experimental"},
    )


# --- closed forms at the static state


def biquadratic_coefficients(p: StratParams) -> tuple:
    """(a4, a2, a0) with a4 c^4 - a2 c^2 + a0 = 0 for the static characteristics."""
    r1, r2, r3 = p.rho
    H1, H2, H3 = p.H
    a4 = r1 * r2 * H3 + r1 * r3 * H2 + r2 * r3 * H1
    a2 = p.g * (r2 * (r3 - r1) * H1 * H3 + r3 * (r2 - r1) * H1 * H2 + r1 * (r3 - r2) * H2 * H3)
    a0 = p.g * p.g * H1 * H2 * H3 * (r3 - r2) * (r2 - r1)
    return a4, a2, a0


def biquadratic_coefficients_quoted(p: StratParams) -> tuple:
    """The middle coefficient as it is commonly transcribed (no factor g, wrong
    density combinations).  Kept only to document why it is not used."""
    r1, r2, r3 = p.rho
    H1, H2, H3 = p.H
    a4 = r1 * r2 * H3 + r1 * r3 * H2 + r2 * r3 * H1
    a2 = r2 * (r2 - r1) * H1 * H2 + r2 * (r2 - r1) * H1 * H3 + r1 * (r3 - r2) * H2 * H3
    a0 = p.g * H1 * H2 * H3 * (r3 - r2) * (r2 - r1)
    return a4, a2, a0


def static_characteristics(p: StratParams, quoted: bool = False) -> np.ndarray:
    """The four roots of the biquadratic, ascending (complex if the form allows)."""
    a4, a2, a0 = biquadratic_coefficients_quoted(p) if quoted else biquadratic_coefficients(p)
    c2 = np.roots([a4, -a2, a0]).astype(complex)
    roots = np.concatenate([np.sqrt(c2), -np.sqrt(c2)])
    if np.all(np.abs(roots.imag) <= 1e-12 * (1 + np.abs(roots.real))):
        return np.sort(roots.real)
    return roots[np.lexsort((roots.imag, roots.real))]


def mode_speed(p: StratParams, mode: int, sign: int = 1) -> float:
    """Mode-1 is the larger |c| pair, mode-2 the smaller."""
    roots = static_characteristics(p)
    pos = np.sort(np.abs(roots))[::2]
    c = pos[1] if mode == 1 else pos[0]
    return float(sign * c)


def gamma_ratio(p: StratParams, c: float) -> float:
    """Ratio of the two interface deflections for the root c (direct form)."""
    return 1 + p.rho1 * p.H2 / (p.rho2 * p.H1) - p.g1 * p.H2 / (p.rho2 * c * c)


def gamma_ratio_reciprocal(p: StratParams, c: float) -> float:
    """The same ratio from the lower interface (reciprocal form)."""
    return 1.0 / (1 + p.rho3 * p.H2 / (p.rho2 * p.H3) - p.g2 * p.H2 / (p.rho2 * c * c))


def zeta_closed_form(p: StratParams, c: float) -> np.ndarray:
    gm = gamma_ratio(p, c)
    return np.array([1 / p.H1, (gm - 1) / p.H2, -gm / p.H3])


def _P(p: StratParams, gm: float) -> float:
    return p.rho1 / p.H1 + p.rho2 * (1 - gm) ** 2 / p.H2 + p.rho3 * gm * gm / p.H3


def _S(p: StratParams, gm: float) -> float:
    return p.rho1 / p.H1**2 + p.rho2 * (gm - 1) ** 3 / p.H2**2 - p.rho3 * gm**3 / p.H3**2


def gn_condition_quoted(p: StratParams, c: float) -> float:
    """(3/c^2)(rho1/H1^2 + rho2 (gm-1)^3/H2^2 - rho3 gm^3/H3^2)."""
    return 3.0 / (c * c) * _S(p, gamma_ratio(p, c))


def gn_condition_exact(p: StratParams, c: float) -> float:
    """GN scalar for the closed-form zeta: (3/c)(...) with the same bracket."""
    return 3.0 / c * _S(p, gamma_ratio(p, c))


def alpha_closed_form(p: StratParams, c: float) -> float:
    """zeta^T E'(c) zeta = -(2/c) P for the closed-form zeta."""
    return -2.0 / c * _P(p, gamma_ratio(p, c))


def sigma3_over6_closed_form(p: StratParams, c: float) -> float:
    gm = gamma_ratio(p, c)
    num = p.rho1 * p.H1 + p.rho2 * p.H2 * (1 + gm + gm * gm) + p.rho3 * p.H3 * gm * gm
    return -c * num / (6.0 * _P(p, gm))


def kappa_quoted(p: StratParams, c: float) -> np.ndarray:
    """The kappa vector (mod zeta) as usually transcribed."""
    gm = gamma_ratio(p, c)
    r1, r2, r3 = p.rho
    H1, H2, H3 = p.H
    pre = H2 / (c * c * r2 * (1 - gm))
    k1 = -3 * p.g1 / (r1 * H1**2) + c * c * r2 * (1 - gm) / (H1 * H2) * ((gm - 1) / H2 - 1 / H1)
    k3 = -3 * gm**3 * p.g2 / (r3 * H3**2) + c * c * r2 * (1 - gm) / (H2 * H3) * ((gm - 1) / H2 + gm / H3)
    return pre * np.array([k1, 0.0, k3])


def gardner_quoted(p: StratParams, c: float) -> dict:
    """Normalized Gardner coefficients as usually transcribed.

    The quoted list names the dispersive coefficient "beta" a second time;
    here it is returned as "gamma".
    """
    gm = gamma_ratio(p, c)
    r1, r2, r3 = p.rho
    H1, H2, H3 = p.H
    P = _P(p, gm)
    quad = 3 * (r3 * gm**3 / H3**2 + r2 * (1 - gm) ** 3 / H2**2 - r1 / H1**2) / (2 * c * P)
    X = 9 * H2 / r2 * (r3 * gm**2 / H3**2 - r2 * (1 - gm) ** 2 / H2**2) * (r2 * (1 - gm) ** 2 / H2**2 - r1 / H1**2)
    X += 4 * (r1 / H1**3 + r2 * (1 - gm) ** 4 / H2**3 + r3 * gm**4 / H3**3)
    cubic = -3 * X / (8 * c**3 * P)
    disp = c * (r3 * H3 * gm**2 + r2 * H2 * (gm * gm + gm + 1) + r1 * H1) / (6 * P)
    return {"delta": quad, "beta": cubic, "gamma": disp}


# --- pipeline evaluation and classification maps

MARGINAL_STABILITY_M = 6.0
THICKNESS_AXES = ("H1", "H2", "H3")


def stratified_coefficients(p: StratParams, mode: int, sign: int = 1, *, nu_max=None, n_samples: int = 15):
    """Gardner coefficients of the chosen mode from the generic pipeline."""
    model = stratified_model(p)
    bundle = evaluate_bundle(model, model.default_point, 3)
    pencil = build_pencil(bundle)
    chars = [ch for ch in find_characteristics(pencil) if ch.is_real]
    target = mode_speed(p, mode, sign)
    ch = min(chars, key=lambda x: abs(x.speed - target))
    coeffs = assemble_gardner(bundle, ch.speed, ch.zeta)
    nu_max = nu_max if nu_max is not None else 0.05 / p.depth
    branch = track_dispersion_branch(model, None, ch.speed, nu_max, n_samples)
    return attach_dispersion(coeffs, branch)


def _apply_axes(p_base: StratParams, names, values) -> StratParams:
    upd = dict(zip(names, values))
    thick = [n for n in names if n in THICKNESS_AXES]
    if len(thick) == 2:
        (free,) = [h for h in THICKNESS_AXES if h not in thick]
        upd[free] = p_base.depth - sum(upd[t] for t in thick)
    return replace(p_base, **upd)


@dataclass(frozen=True)
class ClassificationRecord:
    params: dict
    valid: bool
    reason: str = ""
    regime: str = ""
    c: Optional[float] = None
    gn_scalar: Optional[float] = None
    degenerate: Optional[bool] = None
    alpha: Optional[float] = None
    delta: Optional[float] = None
    beta: Optional[float] = None
    gamma: Optional[float] = None
    focusing: Optional[bool] = None

    @property
    def tag(self) -> str:
        if not self.valid:
            return "invalid"
        return "focusing" if self.focusing else "defocusing"


def classify_stratified_cell(p: StratParams, mode: int, sign: int = 1) -> ClassificationRecord:
    params = asdict(p)
    try:
        co = stratified_coefficients(p, mode, sign)
    except PhasekitError as exc:
        return ClassificationRecord(params, False, f"{exc.code}: {exc}")
    return ClassificationRecord(
        params,
        True,
        regime="Hyperbolic",
        c=co.c,
        gn_scalar=co.gn_scalar,
        degenerate=co.kind == "mKdV",
        alpha=co.alpha,
        delta=co.delta,
        beta=co.beta,
        gamma=co.gamma,
        focusing=bool(co.focusing),
    )


def _cell(args):
    p_base, names, vals, mode, sign = args
    try:
        p = _apply_axes(p_base, names, vals)
    except PhasekitError as exc:
        params = dict(zip(names, vals))
        return ClassificationRecord(params, False, f"{exc.code}: {exc}")
    return classify_stratified_cell(p, mode, sign)


def _coefficient_at(p_base, names, vals, mode, sign, which):
    p = _apply_axes(p_base, names, vals)
    co = stratified_coefficients(p, mode, sign)
    return co.beta / co.alpha if which == "beta" else co.gamma / co.alpha


def classification_map(
    p_base: StratParams,
    axis1: tuple,
    axis2: tuple,
    *,
    mode: int = 2,
    sign: int = 1,
    threads: Optional[int] = None,
    boundaries: bool = True,
) -> dict:
    """Focusing/defocusing table over a 2-D grid of three-layer parameters.

    ``axis1``/``axis2`` are ``(name, values)`` with names of StratParams fields.
    When both are thicknesses the remaining thickness follows from the rigid
    lid (total depth of ``p_base`` is kept).  Returns records in row-major
    order (axis1 outer) and boundary points where beta or gamma change sign.
    """
    n1, v1 = axis1[0], list(map(float, axis1[1]))
    n2, v2 = axis2[0], list(map(float, axis2[1]))
    names = (n1, n2)
    jobs = [(p_base, names, (a, b), mode, sign) for a in v1 for b in v2]
    threads = threads or int(os.environ.get("PHASEKIT_THREADS", "1") or 1)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            records = list(ex.map(_cell, jobs))
    else:
        records = [_cell(j) for j in jobs]
    grid = np.array(records, dtype=object).reshape(len(v1), len(v2))
    curves = []
    if boundaries:
        for which in ("beta", "gamma"):
            for i in range(len(v1)):
                for j in range(len(v2)):
                    r0 = grid[i, j]
                    for di, dj in ((1, 0), (0, 1)):
                        if i + di >= len(v1) or j + dj >= len(v2):
                            continue
                        r1 = grid[i + di, j + dj]
                        if not (r0.valid and r1.valid):
                            continue
                        f0 = getattr(r0, which) / r0.alpha
                        f1 = getattr(r1, which) / r1.alpha
                        if f0 * f1 >= 0:
                            continue
                        a0, b0 = v1[i], v2[j]
                        a1, b1 = v1[i + di], v2[j + dj]

                        def fn(t):
                            vals = (a0 + t * (a1 - a0), b0 + t * (b1 - b0))
                            return _coefficient_at(p_base, names, vals, mode, sign, which)

                        try:
                            t = optimize.brentq(fn, 0.0, 1.0, xtol=1e-12)
                        except (ValueError, PhasekitError):
                            continue
                        curves.append({"coefficient": which, n1: a0 + t * (a1 - a0), n2: b0 + t * (b1 - b0)})
    return {
        "axes": {n1: v1, n2: v2},
        "mode": mode,
        "records": records,
        "boundaries": curves,
        "metadata": {"marginal_stability_M": MARGINAL_STABILITY_M, "marginal_line": "1 - M c / a = 0"},
    }
