import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phasekit.errors import EvaluationOutsideValidity, InsufficientOrder
from phasekit.models import HonlsParams, honls_model, stratified_model
from phasekit.tensors import ConservationModel, PhasePoint, build_pencil, evaluate_bundle


def test_phase_point_validation():
    p = PhasePoint([1.0, 2.0], [3.0, 4.0])
    assert p.n == 2
    np.testing.assert_array_equal(p.to_vector(), [1, 2, 3, 4])
    assert PhasePoint.from_vector(p.to_vector(), 2) == p
    assert hash(PhasePoint([1.0, 2.0], [3.0, 4.0])) == hash(p)
    with pytest.raises(ValueError):
        PhasePoint([1.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        PhasePoint([np.nan], [0.0])
    with pytest.raises(ValueError):
        p.k[0] = 5.0


@pytest.mark.parametrize("order,tol", [(1, 1e-8), (2, 1e-6), (3, 1e-4)])
def test_fd_partials_match_analytic(honls_hyperbolic, order, tol):
    model = honls_model(honls_hyperbolic)
    pt = model.default_point
    exact = evaluate_bundle(model, pt, order)
    fd = evaluate_bundle(model, pt, order, use_analytic=False)
    for a, b in zip(exact.dA + exact.dB, fd.dA + fd.dB):
        scale = max(np.max(np.abs(a)), 1.0)
        assert np.max(np.abs(a - b)) <= tol * scale
    assert fd.scheme_meta["method"] == ["fd"] * order
    assert exact.scheme_meta["method"] == ["analytic"] * order


def test_fd_partials_three_layer(strat):
    model = stratified_model(strat)
    fd = evaluate_bundle(model, model.default_point, 3, use_analytic=False)
    exact = evaluate_bundle(model, model.default_point, 3)
    for a, b in zip(exact.dA, fd.dA):
        assert np.max(np.abs(a - b)) <= 1e-5 * max(np.max(np.abs(a)), 1.0)


@settings(max_examples=25, deadline=None)
@given(
    k=st.floats(-0.5, 0.5),
    a2=st.floats(-1.0, 1.0),
)
def test_higher_partials_symmetric(k, a2):
    model = honls_model(HonlsParams(1.0, a2, -1.0, k, -1.0))
    b = evaluate_bundle(model, model.default_point, 3, use_analytic=False)
    T2 = b.dA[1]
    assert np.allclose(T2, np.swapaxes(T2, 1, 2), atol=1e-9)
    T3 = b.dB[2]
    assert np.allclose(T3, np.swapaxes(T3, 1, 3), atol=1e-6 * max(1.0, np.max(np.abs(T3))))


def test_pencil_is_quadratic(honls_hyperbolic):
    b = evaluate_bundle(honls_model(honls_hyperbolic), honls_hyperbolic.point(), 1)
    pen = build_pencil(b)
    for c in (-1.3, 0.0, 2.7):
        expected = c * c * b.A_w - c * (b.A_k + b.B_w) + b.B_k
        np.testing.assert_allclose(pen.e_of_c(c), expected, atol=1e-14)
        h = 1e-6
        fd = (pen.e_of_c(c + h) - pen.e_of_c(c - h)) / (2 * h)
        np.testing.assert_allclose(pen.e_prime(c), fd, atol=1e-8)


def test_insufficient_order_and_validity(honls_hyperbolic):
    b = evaluate_bundle(honls_model(honls_hyperbolic), honls_hyperbolic.point(), 1)
    with pytest.raises(InsufficientOrder):
        b.require(2)
    model = ConservationModel(
        1,
        lambda p: p.k.copy(),
        lambda p: p.omega.copy(),
        validity=lambda p: p.k[0] > 0,
    )
    with pytest.raises(EvaluationOutsideValidity):
        evaluate_bundle(model, PhasePoint([-1.0], [0.0]), 1)
    with pytest.raises(ValueError):
        evaluate_bundle(model, PhasePoint([1.0, 1.0], [0.0, 0.0]), 1)


def test_bundle_arrays_read_only(honls_hyperbolic):
    b = evaluate_bundle(honls_model(honls_hyperbolic), honls_hyperbolic.point(), 2)
    with pytest.raises(ValueError):
        b.dA[0][0, 0] = 1.0
