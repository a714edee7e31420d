import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from phasekit.characteristics import (
    classify_point,
    extract_null_vector,
    find_characteristics,
    genuine_nonlinearity_scalar,
    infinite_characteristics,
    nearest_characteristic,
    solve_kappa,
)
from phasekit.errors import NotARoot, SingularLeadingBlock
from phasekit.models import (
    HonlsParams,
    honls_amplitude_sq,
    honls_characteristics,
    honls_degenerate_speed,
    honls_gn_quoted,
    honls_gn_scalar,
    honls_model,
)
from phasekit.tensors import ConservationModel, PhasePoint, build_pencil, evaluate_bundle


@settings(max_examples=40, deadline=None)
@given(
    a1=st.floats(0.3, 2.0),
    a2=st.floats(-1.0, 1.0),
    beta=st.floats(-2.0, 2.0).filter(lambda b: abs(b) > 0.1),
    k=st.floats(-0.3, 0.3),
    omega=st.floats(-3.0, 3.0),
)
def test_roots_match_closed_form(a1, a2, beta, k, omega):
    p = HonlsParams(a1, a2, beta, k, omega)
    assume(honls_amplitude_sq(p) > 1e-3)
    exact = honls_characteristics(p)
    assume(abs(exact[0] - exact[1]) > 1e-3)
    res = classify_point(honls_model(p))
    found = [ch.c for ch in res.characteristics]
    assert len(found) == 2
    for z in exact:
        assert min(abs(z - f) for f in found) <= 1e-9 * (1 + abs(z))
    if np.isreal(exact[0]):
        assert res.regime == "Hyperbolic"
    else:
        assert res.regime == "Elliptic"


def test_null_vector_properties(strat):
    from phasekit.models import stratified_model

    model = stratified_model(strat)
    pen = build_pencil(evaluate_bundle(model, model.default_point, 1))
    chars = find_characteristics(pen)
    assert len(chars) == 4 and all(ch.is_real for ch in chars)
    for ch in chars:
        E = pen.e_of_c(ch.c)
        assert np.linalg.norm(E @ ch.zeta) <= 1e-10 * np.linalg.norm(E, 2)
        assert np.isclose(np.linalg.norm(ch.zeta), 1.0)
        first = ch.zeta[np.argmax(np.abs(ch.zeta) > 1e-12)]
        assert first > 0
        assert ch.simplicity_gap > 1e-6


def test_gn_scalar_and_quoted_form(honls_hyperbolic):
    p = honls_hyperbolic
    res = classify_point(honls_model(p))
    for ch, gn in zip(res.characteristics, res.gn_scalars):
        assert gn == pytest.approx(honls_gn_scalar(p, ch.speed), rel=1e-10)
        assert honls_gn_quoted(p, ch.speed) == pytest.approx(p.beta_nl * gn, rel=1e-10)


def test_degenerate_flag(honls_degenerate):
    res = classify_point(honls_model(honls_degenerate))
    c_deg = honls_degenerate_speed(honls_degenerate)
    flags = {round(ch.speed, 8): f for ch, f in zip(res.characteristics, res.degenerate_flags)}
    assert flags[round(c_deg, 8)] is True
    assert sum(res.degenerate_flags) == 1


def _singular_mass_model():
    # A = (k1, omega1 + k2): D_omega A = [[1, 0], [0, 0]] is singular
    def A(p):
        return np.array([p.k[0] + p.omega[0] ** 2, p.omega[0] + p.k[1]])

    def B(p):
        return np.array([p.omega[1] + p.k[0] ** 2, p.k[1] ** 2 + p.omega[1]])

    return ConservationModel(2, A, B, name="singular", default_point=PhasePoint([0.5, 0.2], [0.3, 0.1]))


def test_infinite_characteristics_reported():
    model = _singular_mass_model()
    pen = build_pencil(evaluate_bundle(model, model.default_point, 1))
    assert infinite_characteristics(pen) >= 1
    finite = find_characteristics(pen)
    assert len(finite) <= 4 - infinite_characteristics(pen)
    with pytest.raises(SingularLeadingBlock):
        find_characteristics(pen, strict=True)
    res = classify_point(model)
    assert res.n_infinite == infinite_characteristics(pen)


def test_not_a_root(honls_hyperbolic):
    pen = build_pencil(evaluate_bundle(honls_model(honls_hyperbolic), honls_hyperbolic.point(), 1))
    c = find_characteristics(pen)[0].speed
    with pytest.raises(NotARoot):
        extract_null_vector(pen, c + 0.5)


def test_kappa_orthogonal_and_solves(strat):
    from phasekit.models import stratified_model
    from phasekit.characteristics import genuine_nonlinearity_vector

    model = stratified_model(strat)
    b = evaluate_bundle(model, model.default_point, 3)
    pen = build_pencil(b)
    for ch in find_characteristics(pen):
        kappa, along = solve_kappa(pen, b, ch.speed, ch.zeta)
        assert abs(kappa @ ch.zeta) <= 1e-12 * max(1.0, np.linalg.norm(kappa))
        r = genuine_nonlinearity_vector(b, ch.speed, ch.zeta)
        r_perp = r - (r @ ch.zeta) * ch.zeta
        resid = pen.e_of_c(ch.speed) @ kappa + r_perp
        assert np.linalg.norm(resid) <= 1e-8 * max(1.0, np.linalg.norm(r))
        assert along == pytest.approx(abs(genuine_nonlinearity_scalar(b, ch.speed, ch.zeta)), rel=1e-12, abs=1e-14)


def test_nearest_characteristic(honls_hyperbolic):
    res = classify_point(honls_model(honls_hyperbolic))
    lo, hi = res.characteristics
    assert nearest_characteristic(res.characteristics, hi.speed + 0.01) is hi
    elliptic = classify_point(honls_model(HonlsParams(1.0, 0.0, 1.0, 0.0, 2.0)))
    assert not nearest_characteristic(elliptic.characteristics, 0.0).is_real
