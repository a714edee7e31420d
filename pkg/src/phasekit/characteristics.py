"""Characteristic speeds, null vectors and genuine-nonlinearity diagnostics.

Characteristics are the roots of det E(c) = 0 for the quadratic pencil of
:mod:`phasekit.tensors`.  They are found from a companion linearization and
then polished by Newton's method on the determinant.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sla

from .errors import NearDoubleRoot, NearDoubleRootWarning, NoConvergence, NotARoot, SingularLeadingBlock
from .tensors import (
    ConservationModel,
    DerivativeBundle,
    Pencil,
    PhasePoint,
    build_pencil,
    directional_pencil_derivative,
    evaluate_bundle,
)

REAL_TOL = 1e-8
NEWTON_MAXITER = 50
NULL_TOL = 1e-6
GAP_WARN = 1e-6
KAPPA_COND_MAX = 1e10


def is_real_root(c: complex, tol: float = REAL_TOL) -> bool:
    return abs(np.imag(c)) <= tol * (1.0 + abs(np.real(c)))


@dataclass(frozen=True)
class Characteristic:
    c: complex
    zeta: np.ndarray
    simplicity_gap: float
    det_residual: float
    delta_prime: complex = 0.0  # zeta^T E'(c) zeta, the simplicity proxy

    @property
    def is_real(self) -> bool:
        return is_real_root(self.c)

    @property
    def speed(self) -> float:
        return float(np.real(self.c))


@dataclass(frozen=True)
class ClassificationResult:
    regime: str  # "Hyperbolic" | "Elliptic" | "Mixed"
    characteristics: list
    gn_scalars: list  # None for complex roots
    degenerate_flags: list
    n_infinite: int = 0
    point: Optional[PhasePoint] = None
    bundle: Optional[DerivativeBundle] = field(default=None, repr=False)


# ---------------------------------------------------------------------------
# roots


def _companion(pencil: Pencil):
    n = pencil.M.shape[0]
    I, Z = np.eye(n), np.zeros((n, n))
    lhs = np.block([[Z, I], [-pencil.K, -pencil.C]])
    rhs = np.block([[I, Z], [Z, pencil.M]])
    return lhs, rhs


def infinite_characteristics(pencil: Pencil) -> int:
    """Number of infinite roots, i.e. the nullity of D_omega A."""
    M = pencil.M
    s = np.linalg.svd(M, compute_uv=False)
    scale = max(np.linalg.norm(pencil.C, 2), np.linalg.norm(pencil.K, 2), s[0] if s.size else 0.0, 1e-300)
    return int(np.sum(s <= 1e-12 * scale))


def _newton_det(pencil: Pencil, c0: complex, real: bool):
    """Newton on det E(c) with the step 1 / tr(E^{-1} E').

    Stops when the step reaches round-off, or when it stagnates at a level
    below 1e-8 (relative), which happens when the pencil entries carry
    finite-difference noise.
    """
    c = float(np.real(c0)) if real else complex(c0)
    scale = 1.0 + abs(c)
    prev = np.inf
    for it in range(NEWTON_MAXITER):
        E = pencil.e_of_c(c)
        Ep = pencil.e_prime(c)
        try:
            tr = np.trace(np.linalg.solve(E, Ep))
        except np.linalg.LinAlgError:
            return c, it  # exactly singular: c is a root to machine precision
        if tr == 0 or not np.isfinite(tr):
            return c, it
        step = 1.0 / tr
        if real:
            step = float(np.real(step))
        if it > 2 and abs(step) >= 0.5 * prev and abs(step) <= 1e-8 * scale:
            return c, it
        c = c - step
        if abs(step) <= 4e-16 * scale:
            return c, it + 1
        prev = abs(step)
    raise NoConvergence(f"Newton refinement of characteristic near {c0} did not converge")


def pencil_scale(pencil: Pencil, c) -> float:
    """|c|^2 ||D_w A|| + |c| ||C|| + ||D_k B||, the size of E near c."""
    a = abs(c)
    return float(
        a * a * np.linalg.norm(pencil.M, 2) + a * np.linalg.norm(pencil.C, 2) + np.linalg.norm(pencil.K, 2)
    )


def _det_residual(pencil: Pencil, c) -> float:
    """|det E(c)| relative to (pencil scale)^N."""
    E = pencil.e_of_c(c)
    nrm = pencil_scale(pencil, c)
    if nrm == 0:
        return 0.0
    s = np.linalg.svd(E, compute_uv=False)
    return float(np.prod(s / nrm))


def extract_null_vector(pencil: Pencil, c) -> tuple:
    """Unit right null vector of E(c) and the singular-value gap s_{N-1}/s_0."""
    E = pencil.e_of_c(c)
    _, s, vh = np.linalg.svd(E)
    nrm = max(pencil_scale(pencil, c), 1e-300)
    if s[-1] > NULL_TOL * nrm:
        raise NotARoot(f"smallest singular value {s[-1]:.3e} is not small relative to ||E|| = {nrm:.3e}")
    zeta = vh[-1].conj()
    if np.isrealobj(E) or np.allclose(np.imag(zeta), 0):
        zeta = np.real(zeta)
    zeta = zeta / np.linalg.norm(zeta)
    # sign convention: first component that is not negligible is positive
    idx = int(np.argmax(np.abs(zeta) > 1e-12 * np.max(np.abs(zeta))))
    phase = zeta[idx] / abs(zeta[idx])
    zeta = zeta / phase
    if np.iscomplexobj(zeta) and np.allclose(np.imag(zeta), 0, atol=1e-14):
        zeta = np.real(zeta)
    gap = float(s[-2] / s[0]) if s.size > 1 else 1.0
    if s.size > 1 and gap < GAP_WARN:
        warnings.warn(f"near double root at c={c}: singular-value gap {gap:.2e}", NearDoubleRootWarning, stacklevel=2)
    return zeta, gap


def find_characteristics(pencil: Pencil, *, strict: bool = False) -> list:
    """All finite roots of det E(c), polished, with their null vectors.

    Infinite roots (singular D_omega A) are skipped; count them with
    :func:`infinite_characteristics`.  With ``strict=True`` a singular
    leading block raises :class:`SingularLeadingBlock` instead.
    """
    n_inf = infinite_characteristics(pencil)
    if strict and n_inf:
        raise SingularLeadingBlock(f"D_omega A is singular: {n_inf} infinite characteristic(s)")
    lhs, rhs = _companion(pencil)
    w = sla.eig(lhs, rhs, right=False, homogeneous_eigvals=True)
    alpha, beta = w[0], w[1]
    big = np.abs(beta) > 1e-10 * np.abs(alpha).max(initial=1.0)
    seeds = alpha[big] / beta[big]
    order = np.argsort(np.abs(beta[big]))[::-1]
    seeds = seeds[order][: 2 * pencil.M.shape[0] - n_inf]
    out = []
    for c0 in seeds:
        real = is_real_root(c0)
        c, _ = _newton_det(pencil, c0, real)
        if real:
            c = float(c)
        elif is_real_root(c):
            c = float(np.real(c))
        zeta, gap = extract_null_vector(pencil, c)
        dp = zeta.conj() @ pencil.e_prime(c) @ zeta
        out.append(
            Characteristic(
                c=c,
                zeta=zeta,
                simplicity_gap=gap,
                det_residual=_det_residual(pencil, c),
                delta_prime=float(np.real(dp)) if np.isrealobj(zeta) else complex(dp),
            )
        )
    out.sort(key=lambda ch: (float(np.real(ch.c)), float(np.imag(ch.c))))
    return out


# ---------------------------------------------------------------------------
# genuine nonlinearity and kappa


def genuine_nonlinearity_vector(bundle: DerivativeBundle, c: float, zeta) -> np.ndarray:
    """(D_k - c D_omega) E(c) contracted with (zeta, zeta)."""
    F = directional_pencil_derivative(bundle, c, 1)
    return np.einsum("aij,i,j->a", F, zeta, zeta)


def genuine_nonlinearity_scalar(bundle: DerivativeBundle, c: float, zeta) -> float:
    """zeta^T (D_k - c D_omega) E(c)(zeta, zeta); zero iff linearly degenerate."""
    return float(np.asarray(zeta) @ genuine_nonlinearity_vector(bundle, c, zeta))


def gn_natural_scale(bundle: DerivativeBundle, c: float, zeta) -> float:
    """Size of the GN scalar built from the magnitudes of its ingredients.

    The contracted tensor itself cannot serve as a scale: for N = 1 it is the
    GN scalar, which vanishes at exactly the points being tested.
    """
    dA2, dB2 = bundle.order2
    w = 1.0 + abs(c)
    return float((np.linalg.norm(dA2.ravel()) * w**3 + np.linalg.norm(dB2.ravel()) * w**2) * np.linalg.norm(zeta) ** 3)


def default_gn_threshold(bundle: DerivativeBundle, c: float, zeta) -> float:
    return 1e-8 * gn_natural_scale(bundle, c, zeta)


def solve_kappa(pencil: Pencil, bundle: DerivativeBundle, c: float, zeta) -> tuple:
    """Minimum-norm kappa with E(c) kappa = -(rhs minus its zeta component).

    Returns ``(kappa, residual_along_zeta)`` with ``kappa . zeta = 0``; the
    second entry is |zeta_hat . rhs|, which equals |GN scalar| for unit zeta.
    """
    zeta = np.asarray(zeta, dtype=float)
    zhat = zeta / np.linalg.norm(zeta)
    r = genuine_nonlinearity_vector(bundle, c, zeta)
    along = float(zhat @ r)
    r_perp = r - along * zhat
    E = pencil.e_of_c(c)
    u, s, vh = np.linalg.svd(E)
    if s.size > 1:
        if s[-2] == 0 or s[0] / s[-2] > KAPPA_COND_MAX:
            raise NearDoubleRoot(f"E(c) restricted to the complement of zeta has condition {s[0] / max(s[-2], 1e-300):.2e}")
        # pseudo-inverse dropping the smallest singular direction (the kernel)
        inv = (vh[:-1].T / s[:-1]) @ u[:, :-1].T
        kappa = -inv @ r_perp
    else:
        kappa = np.zeros(1)
    kappa = kappa - (kappa @ zhat) * zhat
    return kappa, abs(along)


# ---------------------------------------------------------------------------
# point classification


def classify_bundle(bundle: DerivativeBundle, gn_threshold: Optional[float] = None) -> ClassificationResult:
    pencil = build_pencil(bundle)
    chars = find_characteristics(pencil)
    n_inf = infinite_characteristics(pencil)
    real = [ch.is_real for ch in chars]
    if chars and all(real):
        regime = "Hyperbolic"
    elif not any(real):
        regime = "Elliptic"
    else:
        regime = "Mixed"
    gns, flags = [], []
    for ch in chars:
        if ch.is_real and bundle.max_order >= 2:
            gn = genuine_nonlinearity_scalar(bundle, ch.speed, ch.zeta)
            thr = gn_threshold if gn_threshold is not None else default_gn_threshold(bundle, ch.speed, ch.zeta)
            gns.append(gn)
            flags.append(abs(gn) <= thr)
        else:
            gns.append(None)
            flags.append(False)
    return ClassificationResult(regime, chars, gns, flags, n_inf, bundle.point, bundle)


def classify_point(
    model: ConservationModel,
    point: Optional[PhasePoint] = None,
    gn_threshold: Optional[float] = None,
    *,
    max_order: int = 3,
    use_analytic: bool = True,
) -> ClassificationResult:
    """Regime, roots, null vectors and GN scalars at one point."""
    point = point if point is not None else model.default_point
    bundle = evaluate_bundle(model, point, max_order, use_analytic=use_analytic)
    return classify_bundle(bundle, gn_threshold)


def nearest_characteristic(chars: list, target: complex) -> Characteristic:
    """The real characteristic closest to ``target`` (complex ones if none are real)."""
    pool = [ch for ch in chars if ch.is_real] or list(chars)
    if not pool:
        raise NotARoot("no finite characteristics")
    return min(pool, key=lambda ch: abs(ch.c - target))
