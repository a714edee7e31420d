import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phasekit.characteristics import classify_point, nearest_characteristic
from phasekit.errors import NoDispersionRelation, NotDegenerate
from phasekit.models import (
    honls_degenerate_point,
    honls_degenerate_speed,
    honls_mkdv_ratios,
    honls_model,
    honls_sigma3_over6,
)
from phasekit.reduction import (
    assemble_gardner,
    assemble_kdv,
    assemble_mkdv,
    attach_dispersion,
    consistency_report,
    fit_branch,
    kdv_quadratic_ratio_single_phase,
    normalized_coefficients,
    track_dispersion_branch,
)
from phasekit.tensors import ConservationModel, PhasePoint


def _degenerate_char(p):
    res = classify_point(honls_model(p))
    return res, nearest_characteristic(res.characteristics, honls_degenerate_speed(p))


@settings(max_examples=15, deadline=None)
@given(a1=st.floats(0.5, 2.0), a2=st.floats(0.2, 1.5), beta=st.floats(-2.0, -0.3), k=st.floats(-0.1, 0.1))
def test_mkdv_ratios_at_any_degenerate_point(a1, a2, beta, k):
    p = honls_degenerate_point(a1, a2, beta, k)
    res, ch = _degenerate_char(p)
    co = assemble_mkdv(res.bundle, ch.speed, ch.zeta, sigma3=6 * honls_sigma3_over6(p, ch.speed))
    b_ref, g_ref = honls_mkdv_ratios(p)
    r = co.ratios()
    assert r["beta"] == pytest.approx(b_ref, rel=1e-8)
    assert r["gamma"] == pytest.approx(g_ref, rel=1e-8)
    assert r["delta"] == 0.0


def test_mkdv_requires_degeneracy(honls_hyperbolic):
    res = classify_point(honls_model(honls_hyperbolic))
    ch = res.characteristics[0]
    with pytest.raises(NotDegenerate):
        assemble_mkdv(res.bundle, ch.speed, ch.zeta)
    g = assemble_gardner(res.bundle, ch.speed, ch.zeta)
    assert g.kind == "Gardner"
    assert g.delta == pytest.approx(-res.gn_scalars[0])
    assert "gamma_unset" in g.flags and g.gamma is None


def test_gardner_falls_back_to_mkdv(honls_degenerate):
    res, ch = _degenerate_char(honls_degenerate)
    assert assemble_gardner(res.bundle, ch.speed, ch.zeta).kind == "mKdV"


def test_single_phase_kdv_ratio(honls_hyperbolic):
    res = classify_point(honls_model(honls_hyperbolic))
    for ch in res.characteristics:
        co = assemble_kdv(res.bundle, ch.speed, ch.zeta)
        assert co.beta == 0.0
        assert co.ratios()["delta"] == pytest.approx(kdv_quadratic_ratio_single_phase(res.bundle, ch.speed), rel=1e-10)


def test_dispersion_branch_identities(honls_hyperbolic):
    p = honls_hyperbolic
    model = honls_model(p)
    res = classify_point(model)
    for ch in res.characteristics:
        branch = track_dispersion_branch(model, None, ch.speed)
        fit = fit_branch(branch)
        assert fit.c1 == pytest.approx(ch.speed, rel=1e-9)
        assert abs(fit.sigma2) < 1e-8
        assert fit.sigma3 / 6 == pytest.approx(honls_sigma3_over6(p, ch.speed), rel=1e-7)
        co = assemble_gardner(res.bundle, ch.speed, ch.zeta, sigma3=6 * honls_sigma3_over6(p, ch.speed))
        assert consistency_report(co, branch).passed
        attached = attach_dispersion(assemble_gardner(res.bundle, ch.speed, ch.zeta), branch)
        assert attached.gamma == pytest.approx(co.gamma, rel=1e-7)


def test_consistency_report_detects_wrong_gamma(honls_hyperbolic):
    model = honls_model(honls_hyperbolic)
    res = classify_point(model)
    ch = res.characteristics[1]
    branch = track_dispersion_branch(model, None, ch.speed)
    co = assemble_gardner(res.bundle, ch.speed, ch.zeta, sigma3=1.1 * 6 * honls_sigma3_over6(honls_hyperbolic, ch.speed))
    rep = consistency_report(co, branch)
    assert not rep.passed
    assert [c.name for c in rep.checks if not c.passed] == ["gamma_sigma3_identity"]


def test_missing_dispersion_relation():
    model = ConservationModel(1, lambda p: p.k.copy(), lambda p: p.omega.copy(), default_point=PhasePoint([1.0], [1.0]))
    with pytest.raises(NoDispersionRelation):
        track_dispersion_branch(model, None, 1.0)


def test_normalized_coefficients():
    assert normalized_coefficients(1.0, 0.0, 1.0).kind == "KdV"
    assert normalized_coefficients(0.0, -1.0, 1.0).kind == "mKdV"
    co = normalized_coefficients(0.5, -1.0, 1.0)
    assert co.kind == "Gardner"
    assert co.focusing is False
    assert normalized_coefficients(0.0, 1.0, 1.0).focusing is True
    d = co.as_dict()
    assert d["beta_over_alpha"] == -1.0 and d["gamma_over_alpha"] == 1.0
