"""Conservation-law models, their derivative tensors and the quadratic pencil.

A wave system enters phasekit as a map (k, omega) -> (A, B), the wave action
and wave action flux of a family of periodic wavetrains.  Everything else in
the package is built from mixed partial derivatives of A and B with respect
to the 2N variables x = (k, omega), stored densely in "k then omega" order.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import EvaluationOutsideValidity, InsufficientOrder, NonFiniteValue

# default FD step per derivative order (multiplied by max(1, |x_i|)).
# Order 1 uses the documented 1e-4; higher orders need larger steps because
# round-off grows like eps / h**order.
DEFAULT_STEPS = {1: 1e-4, 2: 2e-3, 3: 1e-2}
MAX_STEP_HALVINGS = 6


@dataclass(frozen=True)
class PhasePoint:
    """A point (k, omega) in the 2N-dimensional modulation space."""

    k: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        k = np.atleast_1d(np.asarray(self.k, dtype=float)).copy()
        w = np.atleast_1d(np.asarray(self.omega, dtype=float)).copy()
        if k.ndim != 1 or k.shape != w.shape:
            raise ValueError(f"k and omega must be 1-D of equal length, got {k.shape} and {w.shape}")
        if not (np.all(np.isfinite(k)) and np.all(np.isfinite(w))):
            raise ValueError("PhasePoint entries must be finite")
        k.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "omega", w)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PhasePoint):
            return NotImplemented
        return bool(np.array_equal(self.k, other.k) and np.array_equal(self.omega, other.omega))

    def __hash__(self) -> int:
        return hash((self.k.tobytes(), self.omega.tobytes()))

    @property
    def n(self) -> int:
        return self.k.size

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.k, self.omega])

    @classmethod
    def from_vector(cls, x, n: int) -> "PhasePoint":
        x = np.asarray(x, dtype=float)
        return cls(x[:n], x[n:])


def _always_valid(point: PhasePoint) -> bool:
    return True


@dataclass(frozen=True)
class ConservationModel:
    """User-facing description of a wave system.

    ``analytic_partials(point, order)`` may return ``(dA, dB)`` with shapes
    ``(N,) + (2N,) * order``; when it is absent (or returns None for some
    order) finite differences of ``eval_A``/``eval_B`` are used instead.

    ``dispersion_implicit(sigma, nu, point)`` returns a scalar F whose zero set
    contains the linear dispersion relation about the wavetrain at ``point``.
    """

    n_phases: int
    eval_A: Callable[[PhasePoint], np.ndarray]
    eval_B: Callable[[PhasePoint], np.ndarray]
    analytic_partials: Optional[Callable[[PhasePoint, int], Optional[tuple]]] = None
    dispersion_implicit: Optional[Callable[[complex, float, PhasePoint], complex]] = None
    validity: Callable[[PhasePoint], bool] = _always_valid
    name: str = "external"
    default_point: Optional[PhasePoint] = None
    metadata: dict = field(default_factory=dict)

    def without_analytic_partials(self) -> "ConservationModel":
        """Copy of the model that forces the finite-difference path."""
        return ConservationModel(
            n_phases=self.n_phases,
            eval_A=self.eval_A,
            eval_B=self.eval_B,
            analytic_partials=None,
            dispersion_implicit=self.dispersion_implicit,
            validity=self.validity,
            name=self.name,
            default_point=self.default_point,
            metadata=dict(self.metadata),
        )


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class DerivativeBundle:
    """Mixed partials of A and B at one phase point.

    ``dA[m-1]`` holds the order-m tensor with shape ``(N,) + (2N,) * m``;
    the leading axis is the component of A, the others are variables in
    (k_1..k_N, omega_1..omega_N) order.  ``dB`` likewise.
    """

    point: PhasePoint
    dA: tuple
    dB: tuple
    scheme_meta: dict

    @property
    def n(self) -> int:
        return self.point.n

    @property
    def max_order(self) -> int:
        return len(self.dA)

    def require(self, order: int) -> None:
        if self.max_order < order:
            raise InsufficientOrder(f"bundle holds derivatives up to order {self.max_order}, need {order}")

    # first-order blocks
    @property
    def A_k(self) -> np.ndarray:
        return self.dA[0][:, : self.n]

    @property
    def A_w(self) -> np.ndarray:
        return self.dA[0][:, self.n :]

    @property
    def B_k(self) -> np.ndarray:
        return self.dB[0][:, : self.n]

    @property
    def B_w(self) -> np.ndarray:
        return self.dB[0][:, self.n :]

    @property
    def order1(self) -> dict:
        return {"D_omega A": self.A_w, "D_k A": self.A_k, "D_omega B": self.B_w, "D_k B": self.B_k}

    @property
    def order2(self) -> tuple:
        self.require(2)
        return self.dA[1], self.dB[1]

    @property
    def order3(self) -> tuple:
        self.require(3)
        return self.dA[2], self.dB[2]


# ---------------------------------------------------------------------------
# finite differences


def _fd_weights(offsets, deriv: int) -> np.ndarray:
    """Weights w with sum_j w_j f(o_j h) ~ h**deriv f^(deriv)(0)."""
    offsets = np.asarray(offsets, dtype=float)
    q = np.arange(offsets.size)
    V = offsets[None, :] ** q[:, None] / np.array([math.factorial(i) for i in q])[:, None]
    rhs = np.zeros(offsets.size)
    rhs[deriv] = 1.0
    return np.linalg.solve(V, rhs)


# 4th-order central stencils for derivatives 1..3
_STENCILS = {
    1: (np.array([-2, -1, 1, 2]), None),
    2: (np.array([-2, -1, 0, 1, 2]), None),
    3: (np.array([-3, -2, -1, 1, 2, 3]), None),
}
_STENCILS = {r: (o, _fd_weights(o, r)) for r, (o, _) in _STENCILS.items()}


class _Evaluator:
    """Caches model evaluations on an integer lattice x0 + offset * h / 2."""

    def __init__(self, model: ConservationModel, x0: np.ndarray, h: np.ndarray):
        self.model = model
        self.x0 = x0
        self.h = h
        self.n = model.n_phases
        self.cache = {}

    def __call__(self, offset: tuple) -> np.ndarray:
        val = self.cache.get(offset)
        if val is None:
            x = self.x0 + np.asarray(offset, dtype=float) * self.h / 2.0
            p = PhasePoint.from_vector(x, self.n)
            if not self.model.validity(p):
                raise EvaluationOutsideValidity(f"stencil point {x.tolist()} outside the model's validity region")
            val = np.concatenate([np.asarray(self.model.eval_A(p), float), np.asarray(self.model.eval_B(p), float)])
            if not np.all(np.isfinite(val)):
                raise NonFiniteValue(f"model returned non-finite values at {x.tolist()}")
            self.cache[offset] = val
        return val


def _fd_partial(ev: _Evaluator, multi_index: tuple, scale: int) -> np.ndarray:
    """One mixed partial by a tensor product of 1-D stencils, step = scale*h/2."""
    counts = {}
    for v in multi_index:
        counts[v] = counts.get(v, 0) + 1
    dim = ev.x0.size
    factors = [(v, _STENCILS[r]) for v, r in sorted(counts.items())]
    total = 0.0
    for combo in itertools.product(*[range(len(st[0])) for _, st in factors]):
        off = [0] * dim
        w = 1.0
        for (v, (offs, wts)), j in zip(factors, combo):
            off[v] = int(offs[j]) * scale
            w *= wts[j]
        total = total + w * ev(tuple(off))
    hh = np.prod([(ev.h[v] * scale / 2.0) for v in multi_index])
    return total / hh


def _fd_order(model, x0, order, base_step, richardson):
    dim = x0.size
    n = model.n_phases
    h = base_step * np.maximum(1.0, np.abs(x0))
    ev = _Evaluator(model, x0, h)
    T = np.zeros((2 * n,) + (dim,) * order)
    for mi in itertools.combinations_with_replacement(range(dim), order):
        coarse = _fd_partial(ev, mi, 2)
        if richardson:
            fine = _fd_partial(ev, mi, 1)
            val = (16.0 * fine - coarse) / 15.0
        else:
            val = coarse
        for perm in set(itertools.permutations(mi)):
            T[(slice(None),) + perm] = val
    return T, h, len(ev.cache)


def _fd_order_with_shrinking(model, x0, order, base_step, richardson):
    step = base_step
    for attempt in range(MAX_STEP_HALVINGS + 1):
        try:
            T, h, nevals = _fd_order(model, x0, order, step, richardson)
            return T, h, nevals, attempt
        except EvaluationOutsideValidity:
            if attempt == MAX_STEP_HALVINGS:
                raise
            step /= 2.0
    raise AssertionError("unreachable")


def evaluate_bundle(
    model: ConservationModel,
    point: PhasePoint,
    max_order: int = 3,
    *,
    use_analytic: bool = True,
    steps: Optional[dict] = None,
    richardson: int = 1,
) -> DerivativeBundle:
    """All mixed partials of A and B up to ``max_order`` at ``point``."""
    if max_order not in (1, 2, 3):
        raise ValueError("max_order must be 1, 2 or 3")
    if point.n != model.n_phases:
        raise ValueError(f"point has {point.n} phases, model expects {model.n_phases}")
    if not model.validity(point):
        raise EvaluationOutsideValidity("evaluation point outside the model's validity region")
    steps = {**DEFAULT_STEPS, **(steps or {})}
    n = model.n_phases
    x0 = point.to_vector()
    dA, dB = [], []
    meta = {"method": [], "steps": {}, "halvings": {}, "richardson": richardson, "evaluations": 0}
    for order in range(1, max_order + 1):
        analytic = None
        if use_analytic and model.analytic_partials is not None:
            analytic = model.analytic_partials(point, order)
        if analytic is not None:
            tA, tB = analytic
            tA, tB = np.asarray(tA, float), np.asarray(tB, float)
            if not (np.all(np.isfinite(tA)) and np.all(np.isfinite(tB))):
                raise NonFiniteValue(f"analytic partials of order {order} are not finite")
            meta["method"].append("analytic")
        else:
            T, h, nevals, halvings = _fd_order_with_shrinking(model, x0, order, steps[order], richardson)
            tA, tB = T[:n], T[n:]
            meta["method"].append("fd")
            meta["steps"][order] = h.tolist()
            meta["halvings"][order] = halvings
            meta["evaluations"] += nevals
        dA.append(_frozen(tA))
        dB.append(_frozen(tB))
    return DerivativeBundle(point=point, dA=tuple(dA), dB=tuple(dB), scheme_meta=meta)


# ---------------------------------------------------------------------------
# pencil


@dataclass(frozen=True)
class Pencil:
    """E(c) = c^2 D_w A - c (D_k A + D_w B) + D_k B."""

    bundle: DerivativeBundle

    @property
    def M(self) -> np.ndarray:
        return self.bundle.A_w

    @property
    def C(self) -> np.ndarray:
        return -(self.bundle.A_k + self.bundle.B_w)

    @property
    def K(self) -> np.ndarray:
        return self.bundle.B_k

    def e_of_c(self, c) -> np.ndarray:
        return c * c * self.M + c * self.C + self.K

    def e_prime(self, c) -> np.ndarray:
        return 2.0 * c * self.M + self.C

    __call__ = e_of_c


def build_pencil(bundle: DerivativeBundle) -> Pencil:
    bundle.require(1)
    return Pencil(bundle)


def lift_matrix(n: int, c: float) -> np.ndarray:
    """The 2N x N matrix v -> (v, -c v) used by the directional derivatives."""
    return np.vstack([np.eye(n), -c * np.eye(n)])


def directional_pencil_derivative(bundle: DerivativeBundle, c: float, m: int) -> np.ndarray:
    """The form (D_k - c D_omega)^m E(c) as an array of shape (N,) * (m + 2).

    Axis 0 is the output component, the remaining m + 1 axes are the
    arguments.  With G = B - c A and the lift v -> (v, -c v), the form is the
    (m+1)-th derivative of G along lifted directions; c is held fixed.
    """
    if m not in (1, 2):
        raise ValueError("m must be 1 or 2")
    bundle.require(m + 1)
    G = bundle.dB[m] - c * bundle.dA[m]
    L = lift_matrix(bundle.n, c)
    out = G
    for axis in range(1, m + 2):
        out = np.moveaxis(np.tensordot(out, L, axes=([axis], [0])), -1, axis)
    return out
