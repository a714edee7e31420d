"""KdV / Gardner / mKdV coefficients and the long-wave dispersion check.

All coefficients use the convention

    alpha U_T + delta U U_X + beta U^2 U_X + gamma U_XXX = 0,

with alpha = zeta^T E'(c) zeta.  The dispersive coefficient is not computed
from A and B (it needs information beyond the averaged conservation laws);
it comes from the long-wave expansion of the linear dispersion relation via
gamma = -(1/6) sigma'''(0) alpha.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy import optimize

from .characteristics import default_gn_threshold, genuine_nonlinearity_scalar, solve_kappa
from .errors import AlphaVanishes, BranchJump, NoConvergence, NoDispersionRelation, NotDegenerate, PoorFit
from .tensors import ConservationModel, DerivativeBundle, PhasePoint, build_pencil, directional_pencil_derivative

FLAG_DEGENERATE_LINEAR = "DegenerateLinearModel"
FLAG_GAMMA_UNSET = "gamma_unset"
FLAG_GN_NOT_SMALL = "gn_not_small"


@dataclass(frozen=True)
class ReducedCoefficients:
    kind: str  # "KdV" | "Gardner" | "mKdV"
    alpha: float
    delta: float
    beta: float
    gamma: Optional[float]
    c: float
    zeta: np.ndarray
    kappa: Optional[np.ndarray]
    sigma3: Optional[float] = None
    gn_scalar: float = 0.0
    flags: tuple = ()

    def ratios(self) -> dict:
        """Coefficients of U_T + (delta/alpha) U U_X + ... = 0."""
        g = None if self.gamma is None else self.gamma / self.alpha
        return {"delta": self.delta / self.alpha, "beta": self.beta / self.alpha, "gamma": g}

    @property
    def focusing(self) -> Optional[bool]:
        """True when beta and gamma share a sign (bright mKdV solitons)."""
        if self.gamma is None or self.beta == 0 or self.gamma == 0:
            return None
        return bool(self.beta * self.gamma > 0)

    def with_gamma(self, gamma: float, sigma3: Optional[float] = None) -> "ReducedCoefficients":
        flags = tuple(f for f in self.flags if f != FLAG_GAMMA_UNSET)
        return replace(self, gamma=float(gamma), sigma3=sigma3, flags=flags)

    def as_dict(self) -> dict:
        r = self.ratios()
        return {
            "kind": self.kind,
            "c": self.c,
            "alpha": self.alpha,
            "delta": self.delta,
            "beta": self.beta,
            "gamma": self.gamma,
            "delta_over_alpha": r["delta"],
            "beta_over_alpha": r["beta"],
            "gamma_over_alpha": r["gamma"],
            "sigma3": self.sigma3,
            "gn_scalar": self.gn_scalar,
            "zeta": [float(z) for z in self.zeta],
            "kappa": None if self.kappa is None else [float(z) for z in self.kappa],
            "focusing": self.focusing,
            "flags": list(self.flags),
        }


def normalized_coefficients(delta_over_alpha=0.0, beta_over_alpha=0.0, gamma_over_alpha=0.0, kind=None):
    """Coefficients for an already normalized equation (alpha = 1)."""
    if kind is None:
        kind = "KdV" if beta_over_alpha == 0 else ("mKdV" if delta_over_alpha == 0 else "Gardner")
    return ReducedCoefficients(
        kind=kind,
        alpha=1.0,
        delta=float(delta_over_alpha),
        beta=float(beta_over_alpha),
        gamma=float(gamma_over_alpha),
        c=0.0,
        zeta=np.ones(1),
        kappa=None,
    )


# ---------------------------------------------------------------------------
# assembly


def _alpha(bundle: DerivativeBundle, c: float, zeta) -> float:
    pencil = build_pencil(bundle)
    Ep = pencil.e_prime(c)
    a = float(zeta @ Ep @ zeta)
    scale = np.linalg.norm(Ep, 2) * float(zeta @ zeta)
    if abs(a) <= 1e-12 * max(scale, 1e-300):
        raise AlphaVanishes(f"zeta^T E'(c) zeta = {a:.3e}: characteristics coalesce at c = {c}")
    return a


def _gamma_from(alpha: float, sigma3: Optional[float]):
    if sigma3 is None:
        return None, (FLAG_GAMMA_UNSET,)
    return -sigma3 * alpha / 6.0, ()


def cubic_coefficient(bundle: DerivativeBundle, c: float, zeta, kappa) -> float:
    """beta = -(1/2)[zeta^T F2(zeta,zeta,zeta) + 3 zeta^T F1(zeta,kappa)]."""
    F2 = directional_pencil_derivative(bundle, c, 2)
    F1 = directional_pencil_derivative(bundle, c, 1)
    t3 = np.einsum("aijk,a,i,j,k->", F2, zeta, zeta, zeta, zeta)
    t1 = np.einsum("aij,a,i,j->", F1, zeta, zeta, kappa)
    return float(-0.5 * (t3 + 3.0 * t1))


def quadratic_coefficient(bundle: DerivativeBundle, c: float, zeta) -> float:
    """delta = -zeta^T (D_k - c D_omega) E(c)(zeta, zeta)."""
    return -genuine_nonlinearity_scalar(bundle, c, zeta)


def _prepare(bundle, c, zeta, kappa):
    bundle.require(3)
    zeta = np.asarray(zeta, dtype=float)
    if kappa is None:
        kappa, _ = solve_kappa(build_pencil(bundle), bundle, c, zeta)
    return zeta, np.asarray(kappa, dtype=float)


def assemble_mkdv(bundle, c, zeta, kappa=None, *, sigma3=None, gn_threshold=None) -> ReducedCoefficients:
    """mKdV coefficients at a point where genuine nonlinearity fails."""
    zeta, kappa = _prepare(bundle, c, zeta, kappa)
    gn = genuine_nonlinearity_scalar(bundle, c, zeta)
    thr = gn_threshold if gn_threshold is not None else default_gn_threshold(bundle, c, zeta)
    if abs(gn) > thr:
        raise NotDegenerate(f"GN scalar {gn:.3e} exceeds threshold {thr:.3e}; use assemble_gardner")
    alpha = _alpha(bundle, c, zeta)
    beta = cubic_coefficient(bundle, c, zeta, kappa)
    gamma, flags = _gamma_from(alpha, sigma3)
    beta_scale = np.linalg.norm(directional_pencil_derivative(bundle, c, 2).ravel()) * np.linalg.norm(zeta) ** 4
    if abs(beta) <= 1e-12 * max(beta_scale, 1e-300) or beta_scale == 0:
        beta = 0.0
        flags = flags + (FLAG_DEGENERATE_LINEAR,)
    return ReducedCoefficients("mKdV", alpha, 0.0, beta, gamma, float(c), zeta, kappa, sigma3, gn, flags)


def assemble_gardner(bundle, c, zeta, kappa=None, *, sigma3=None, gn_threshold=None) -> ReducedCoefficients:
    """Gardner coefficients; reduces to mKdV when delta is below threshold."""
    zeta, kappa = _prepare(bundle, c, zeta, kappa)
    gn = genuine_nonlinearity_scalar(bundle, c, zeta)
    thr = gn_threshold if gn_threshold is not None else default_gn_threshold(bundle, c, zeta)
    alpha = _alpha(bundle, c, zeta)
    beta = cubic_coefficient(bundle, c, zeta, kappa)
    gamma, flags = _gamma_from(alpha, sigma3)
    if abs(gn) <= thr:
        return ReducedCoefficients("mKdV", alpha, 0.0, beta, gamma, float(c), zeta, kappa, sigma3, gn, flags)
    return ReducedCoefficients("Gardner", alpha, -gn, beta, gamma, float(c), zeta, kappa, sigma3, gn, flags)


def assemble_kdv(bundle, c, zeta, *, sigma3=None, gn_threshold=None) -> ReducedCoefficients:
    """KdV coefficients (cubic term dropped)."""
    bundle.require(2)
    zeta = np.asarray(zeta, dtype=float)
    gn = genuine_nonlinearity_scalar(bundle, c, zeta)
    thr = gn_threshold if gn_threshold is not None else default_gn_threshold(bundle, c, zeta)
    alpha = _alpha(bundle, c, zeta)
    gamma, flags = _gamma_from(alpha, sigma3)
    if abs(gn) <= thr:
        flags = flags + (FLAG_DEGENERATE_LINEAR if gn == 0 else FLAG_GN_NOT_SMALL,)
    return ReducedCoefficients("KdV", alpha, -gn, 0.0, gamma, float(c), zeta, None, sigma3, gn, flags)


def kdv_quadratic_ratio_single_phase(bundle: DerivativeBundle, c: float) -> float:
    """The N = 1 KdV nonlinearity (d_k - c d_w)^2 (B - cA) / (B_w + A_k - 2c A_w).

    Numerator and denominator both flip sign relative to the general formula, so the
    ratio equals delta/alpha with zeta = 1 and no extra sign.
    """
    if bundle.n != 1:
        raise ValueError("single-phase formula")
    num = directional_pencil_derivative(bundle, c, 1)[0, 0, 0]
    den = bundle.B_w[0, 0] + bundle.A_k[0, 0] - 2 * c * bundle.A_w[0, 0]
    return float(num / den)


# ---------------------------------------------------------------------------
# dispersion branch


@dataclass(frozen=True)
class DispersionBranch:
    nu_grid: np.ndarray
    sigma_values: np.ndarray
    c_anchor: complex
    meta: dict = field(default_factory=dict)

    @property
    def is_real(self) -> bool:
        return bool(np.all(np.abs(np.imag(self.sigma_values)) <= 1e-10 * (1 + np.abs(self.sigma_values))))


@dataclass(frozen=True)
class BranchFit:
    c1: float
    sigma2: float
    sigma3: float
    residual: float


def _solve_sigma(F, nu, seed, scale):
    f = lambda s: F(s, nu)  # noqa: E731
    x1 = seed + 1e-6 * scale
    try:
        s = optimize.newton(f, seed, x1=x1, tol=1e-15 * scale, maxiter=200)
    except (RuntimeError, OverflowError, ZeroDivisionError) as exc:
        raise NoConvergence(f"dispersion Newton failed at nu={nu}: {exc}") from exc
    return s


def track_dispersion_branch(
    model: ConservationModel,
    point: Optional[PhasePoint],
    c,
    nu_max: float = 0.05,
    n_samples: int = 21,
) -> DispersionBranch:
    """Continue the branch sigma(nu) with sigma/nu -> c on Chebyshev nodes."""
    if model.dispersion_implicit is None:
        raise NoDispersionRelation(f"model {model.name!r} has no dispersion relation")
    if n_samples < 7:
        raise ValueError("need at least 7 samples")
    point = point if point is not None else model.default_point
    F = lambda s, nu: model.dispersion_implicit(s, nu, point)  # noqa: E731
    j = np.arange(n_samples)
    nodes = nu_max * np.cos(np.pi * (2 * j + 1) / (2 * n_samples))
    # an odd count puts one node at nu ~ 1e-17, where sigma/nu is meaningless
    nodes = nodes[np.abs(nodes) > 1e-8 * nu_max]
    n_samples = nodes.size
    complex_mode = not np.isreal(c)
    sigma = np.zeros(n_samples, dtype=complex if complex_mode else float)
    cscale = max(abs(c), 1e-12)
    for side in (1, -1):
        idx = [i for i in np.argsort(np.abs(nodes)) if np.sign(nodes[i]) == side]
        ratios = []
        nus = []
        for i in idx:
            nu = nodes[i]
            if len(ratios) >= 2:
                # ratio sigma/nu is even in nu: extrapolate linearly in nu^2
                r0, r1 = ratios[-2], ratios[-1]
                n0, n1 = nus[-2] ** 2, nus[-1] ** 2
                pred = r1 + (r1 - r0) * (nu * nu - n1) / (n1 - n0)
            elif ratios:
                pred = ratios[-1]
            else:
                pred = c
            s = _solve_sigma(F, nu, pred * nu, cscale * abs(nu))
            r = s / nu
            ref = ratios[-1] if ratios else c
            if abs(r - ref) > 0.1 * max(abs(ref), cscale):
                raise BranchJump(f"sigma/nu jumped from {ref} to {r} at nu={nu}")
            ratios.append(r)
            nus.append(nu)
            sigma[i] = s
    if not complex_mode:
        sigma = np.real(sigma)
    order = np.argsort(nodes)
    return DispersionBranch(nodes[order], sigma[order], c, {"nu_max": nu_max, "n_samples": n_samples})


def fit_branch(branch: DispersionBranch, n_odd: int = 4) -> BranchFit:
    """Least-squares fits: odd polynomial for sigma', sigma'''; full for sigma''."""
    nu = branch.nu_grid
    sig = branch.sigma_values
    h = np.max(np.abs(nu))
    t = nu / h
    V = np.stack([t ** (2 * i + 1) for i in range(n_odd)], axis=1)
    coef, *_ = np.linalg.lstsq(V, sig, rcond=None)
    resid = sig - V @ coef
    scale = max(np.max(np.abs(sig)), 1e-300)
    res = float(np.sqrt(np.mean(np.abs(resid) ** 2)) / scale)
    W = np.stack([t**p for p in range(2 * n_odd + 1)], axis=1)
    full, *_ = np.linalg.lstsq(W, sig, rcond=None)
    c1 = coef[0] / h
    s3 = coef[1] / h**3
    sigma2 = 2.0 * full[2] / h**2
    if np.isrealobj(sig):
        c1, s3, sigma2 = float(c1), float(s3), float(sigma2)
    return BranchFit(c1=c1, sigma2=sigma2, sigma3=6.0 * s3, residual=res)


def sigma_third_derivative(branch: DispersionBranch, *, max_residual: float = 1e-6) -> float:
    """sigma'''(0) from the odd fit sigma ~ c nu + s3 nu^3 + s5 nu^5 + s7 nu^7."""
    fit = fit_branch(branch)
    if fit.residual > max_residual:
        raise PoorFit(f"odd fit residual {fit.residual:.2e} exceeds {max_residual:.1e}")
    return fit.sigma3


def attach_dispersion(coeffs: ReducedCoefficients, branch: DispersionBranch) -> ReducedCoefficients:
    s3 = sigma_third_derivative(branch)
    return coeffs.with_gamma(-s3 * coeffs.alpha / 6.0, sigma3=s3)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    tolerance: float


@dataclass(frozen=True)
class ConsistencyReport:
    checks: tuple

    @property
    def passed(self) -> bool:
        return all(ch.passed for ch in self.checks)

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [
                {"name": ch.name, "passed": ch.passed, "value": ch.value, "tolerance": ch.tolerance}
                for ch in self.checks
            ],
        }


def consistency_report(
    coeffs: ReducedCoefficients,
    branch: DispersionBranch,
    *,
    tol_speed: float = 1e-6,
    tol_sigma2: float = 1e-7,
    tol_gamma: float = 1e-5,
) -> ConsistencyReport:
    """Checks sigma'(0) = c, sigma''(0) = 0 and gamma = -(1/6) sigma'''(0) alpha.

    ``coeffs.gamma`` should come from an independent source (a closed form);
    a gamma built from this same branch passes check (iii) trivially.
    """
    fit = fit_branch(branch)
    checks = []
    dc = abs(fit.c1 - coeffs.c) / max(1.0, abs(coeffs.c))
    checks.append(CheckResult("sigma_prime_equals_c", bool(dc <= tol_speed), float(dc), tol_speed))
    if branch.is_real:
        s2 = abs(fit.sigma2)
        checks.append(CheckResult("sigma_second_vanishes", bool(s2 <= tol_sigma2), float(s2), tol_sigma2))
    else:
        checks.append(CheckResult("sigma_second_vanishes", False, float("nan"), tol_sigma2))
    if coeffs.gamma is None:
        checks.append(CheckResult("gamma_sigma3_identity", False, float("nan"), tol_gamma))
    else:
        target = -fit.sigma3 * coeffs.alpha / 6.0
        rel = abs(coeffs.gamma - target) / max(abs(target), 1e-300)
        checks.append(CheckResult("gamma_sigma3_identity", bool(rel <= tol_gamma), float(rel), tol_gamma))
    return ConsistencyReport(tuple(checks))
