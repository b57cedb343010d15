import math

import numpy as np
import pytest

from lorentz_geodesy import catalog as cat
from lorentz_geodesy.exceptions import DegenerateMetricError, DomainViolation, ModelError
from lorentz_geodesy.geometry import (CausalCharacter, KillingField, SpacetimeModel, causal_character,
                                      christoffel_at, christoffel_fd, conformal_killing_rate,
                                      lie_derivative_residual, metric_at)


def _all_models():
    models = [cat.build(name) for name in sorted(cat.CATALOG)]
    models += [cat.misner_cylinder("uv"), cat.flat_torus((1.0, 2.0), index=1),
               cat.torus_efg("1", "1", "sin(2*pi*x)/pi")]
    return models


@pytest.mark.parametrize("m", _all_models(), ids=lambda m: m.name)
def test_christoffel_second_order_convergence(m):
    rng = np.random.default_rng(1)
    for p in m.sample_points(rng, 4):
        G = m.gamma(p)
        errs = [np.max(np.abs(christoffel_fd(m, p, step=h) - G)) for h in (2e-2, 1e-2, 5e-3)]
        if errs[0] < 1e-10 * (1.0 + np.max(np.abs(G))):
            continue
        rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        assert np.all(rates > 1.8), rates


@pytest.mark.parametrize("m", [m for m in _all_models() if m.quotient is not None], ids=lambda m: m.name)
def test_deck_invariance(m):
    assert cat.check_deck_invariance(m, count=50) < 1e-10


@pytest.mark.parametrize("m", _all_models(), ids=lambda m: m.name)
def test_declared_killing_fields(m):
    rng = np.random.default_rng(2)
    for K in m.killing:
        for p in m.sample_points(rng, 5):
            assert lie_derivative_residual(m, K, p) < 1e-6 * (1.0 + np.max(np.abs(m.g(p))))


@pytest.mark.parametrize("m", _all_models(), ids=lambda m: m.name)
def test_signature_matches_index(m):
    rng = np.random.default_rng(3)
    for p in m.sample_points(rng, 5):
        ev = np.linalg.eigvalsh(m.g(p))
        assert int(np.sum(ev < 0)) == m.index


def test_christoffel_symmetry_and_metric_compatibility():
    m = cat.build("stationary", beta="1+x1^2", delta="-0.3*x2,0.3*x1")
    p = np.array([0.1, 0.4, -0.3])
    G = m.gamma(p)
    assert np.allclose(G, np.transpose(G, (0, 2, 1)))
    # d_k g_ij = g_il Gamma^l_jk + g_jl Gamma^l_ik
    g, dg = m.g(p), m.dg(p)
    rhs = np.einsum("il,ljk->kij", g, G) + np.einsum("jl,lik->kij", g, G)
    assert np.allclose(dg, rhs, atol=1e-12)


def test_fd_provider_agrees_with_analytic():
    m = cat.torus_tau()
    mf = m.with_changes(christoffel="fd")
    p = np.array([0.3, 0.1])
    assert np.allclose(christoffel_at(m, p), christoffel_at(mf, p), atol=1e-8)


def test_metric_checks():
    m = cat.clifton_pohl()
    with pytest.raises(DomainViolation):
        metric_at(m, [0.0, 0.0])
    flat = SpacetimeModel("deg", ("x", "y"), 1, [[0.0, 0.0], [0.0, 1.0]])
    with pytest.raises(DegenerateMetricError):
        metric_at(flat, [0.0, 0.0])
    with pytest.raises(ModelError):
        SpacetimeModel("bad", ("x",), 2, [[1.0]])


def test_causal_character():
    m = cat.minkowski(2, 1)
    p = np.zeros(2)
    assert causal_character(m, [1.0, 0.0], p=p) is CausalCharacter.TIMELIKE
    assert causal_character(m, [0.0, 1.0], p=p) is CausalCharacter.SPACELIKE
    assert causal_character(m, [1.0, 1.0 + 1e-12], p=p) is CausalCharacter.LIGHTLIKE
    assert causal_character(m, [0.0, 0.0], p=p) is CausalCharacter.ZERO


def test_conformal_killing_rate_for_homothety():
    m = cat.minkowski(2, 1)
    K = KillingField(("t", "x"), sigma=1.0, name="dilation")
    assert lie_derivative_residual(m, K, [0.2, 0.5]) < 1e-9
    r = conformal_killing_rate(m, K, np.array([0.2, 0.5]), np.array([1.0, 0.3]))
    assert abs(r) < 1e-9


def test_conformal_model_keeps_lightlike_and_killing():
    base = cat.torus_tau()
    m = cat.conformal_model(base, "2+cos(2*pi*x)")
    p = np.array([0.2, 0.7])
    assert np.allclose(m.g(p), (2 + math.cos(2 * math.pi * 0.2)) * base.g(p))
    assert lie_derivative_residual(m, m.killing[0], p) < 1e-9
    with pytest.raises(ModelError):
        cat.conformal_model(base, "sin(2*pi*x)")


def test_torus_checks_periodicity_and_curvature():
    with pytest.raises(ModelError):
        cat.torus_tau("x")
    assert cat.gauss_curvature_torus_tau("-sin(2*pi*x)/pi", 0.25) == pytest.approx(2 * math.pi)
    with pytest.raises(ModelError):
        cat.torus_efg("0", "0", "0")


def test_misner_charts_related():
    x, y = 0.3, 0.2
    u, v = cat.misner_xy_to_uv(x, y)
    assert np.allclose(cat.misner_uv_to_xy(u, v), (x, y))
    mxy, muv = cat.misner_cylinder("xy"), cat.misner_cylinder("uv")
    # pull back du dv + dv du through (x, y) -> (u, v)
    J = np.array([[0.0, math.exp(y)], [math.exp(-y), -x * math.exp(-y)]])
    assert np.allclose(J.T @ muv.g([u, v]) @ J, mxy.g([x, y]))
    with pytest.raises(ModelError):
        cat.misner_cylinder("ab")


def test_pseudosphere_closed_forms():
    rng = np.random.default_rng(4)
    p = cat.pseudosphere_chart_to_ambient(0.3, 1.0)
    assert cat.pseudosphere_inner(p, p) == pytest.approx(1.0)
    for _ in range(20):
        w = rng.normal(size=3)
        v = w - cat.pseudosphere_inner(w, p) * p
        s = np.linspace(-2, 2, 9)
        pts = cat.pseudosphere_geodesic(p, v, s)
        assert np.allclose([cat.pseudosphere_inner(x, x) for x in pts], 1.0)
    assert not cat.pseudosphere_connectable(p, -p)
    assert cat.pseudosphere_connectable(p, p)
    with pytest.raises(ModelError):
        cat.pseudosphere(3)
    with pytest.raises(ModelError):
        cat.pseudosphere_connectable(p, 2 * p)


def test_pseudosphere_chart_matches_ambient():
    m = cat.pseudosphere()
    t, th = 0.4, 1.3
    J = np.column_stack([
        [math.cosh(t), math.sinh(t) * math.cos(th), math.sinh(t) * math.sin(th)],
        [0.0, -math.cosh(t) * math.sin(th), math.cosh(t) * math.cos(th)]])
    G = np.diag([-1.0, 1.0, 1.0])
    assert np.allclose(J.T @ G @ J, m.g([t, th]))


def test_splitting_bounds_are_checked():
    line = cat.euclidean(1)
    with pytest.raises(ModelError):
        cat.SplittingSpec(line, "1+x^2", "1", nu=1.0, N=1.5, lam=1.0).check_bounds()
    with pytest.raises(ModelError):
        cat.splitting(cat.SplittingSpec(line, "1", "0.5+0.1*sin(t)", nu=1.0, N=1.0, lam=0.9))


def test_build_errors_and_ids():
    with pytest.raises(ModelError):
        cat.build("nope")
    for name in cat.CATALOG:
        assert cat.build(name).dim >= 2


def test_stationary_spec_lowering():
    spatial = cat.riemannian(("a", "b"), [[2.0, 0.0], [0.0, "1+a^2"]])
    spec = cat.StationarySpec(spatial, "1", ("b", "a"))
    m = cat.stationary(spec)
    g = m.g([0.0, 0.5, 2.0])
    assert g[0, 0] == -1.0
    assert g[0, 1] == pytest.approx(2.0 * 2.0)     # (g_R delta)_a = 2 * b
    assert g[0, 2] == pytest.approx(1.25 * 0.5)    # (1 + a^2) * a
