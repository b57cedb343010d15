import math

import numpy as np
import pytest

from lorentz_geodesy import catalog as cat
from lorentz_geodesy.exceptions import DomainViolation, IntegrationError
from lorentz_geodesy.integrator import (IntegratorOptions, Termination, estimate_max_parameter,
                                        integrate_geodesic, lightlike_reparam, period_crossings,
                                        winding_of)


def test_flat_geodesics_are_straight():
    m = cat.minkowski(3, 1)
    v = np.array([1.0, 0.3, -0.2])
    sol = integrate_geodesic(m, np.zeros(3), v, span=(0.0, 5.0))
    assert sol.termination is Termination.REACHED_SPAN
    assert np.allclose(sol.x, sol.s[:, None] * v, atol=1e-12)
    assert sol.valid and sol.max_drift < 1e-12


def test_backward_span():
    m = cat.torus_tau()
    sol = integrate_geodesic(m, [0.0, 0.0], [0.0, 1.0], span=(0.0, -2.0))
    assert sol.termination is Termination.BLOW_UP
    assert sol.b_hat == pytest.approx(-1.0, abs=1e-3)


def test_torus_charge_and_null_conservation():
    m = cat.torus_tau()
    sol = integrate_geodesic(m, [0.1, 0.2], [0.5, -0.7], span=(0.0, 3.0))
    assert sol.valid
    k = sol.charges["d_y"]
    assert np.max(np.abs(k - k[0])) < 1e-6 * np.maximum(1, np.abs(sol.v).max())


def test_clifton_pohl_blow_up_and_winding():
    m = cat.clifton_pohl()
    # lightlike geodesic along the u axis: u'' = 2 u'^2 / u, u(s) = 1/(1-s)
    sol = integrate_geodesic(m, [1.0, 0.0], [1.0, 0.0], span=(0.0, 2.0))
    assert sol.termination is Termination.BLOW_UP
    assert sol.b_hat == pytest.approx(1.0, abs=1e-3)
    assert sol.winding is not None and sol.winding[0] > 10


def test_left_domain_at_big_bang():
    m = cat.grw("t", interval=(0.0, math.inf))
    sol = integrate_geodesic(m, [1.0, 0.0], [-1.0, 0.0], span=(0.0, 3.0))
    assert sol.termination is Termination.LEFT_DOMAIN
    assert sol.boundary_point[0] == pytest.approx(0.0, abs=1e-3)


def test_ads_spacelike_geodesics_are_complete():
    m = cat.anti_de_sitter_strip()
    sol = integrate_geodesic(m, [0.0, 0.0], [0.0, 1.0], span=(0.0, 10.0))
    assert sol.termination is Termination.REACHED_SPAN
    assert abs(sol.x[-1, 1]) < math.pi / 2


def test_max_steps():
    m = cat.minkowski(2, 1)
    sol = integrate_geodesic(m, [0.0, 0.0], [1.0, 0.0], span=(0.0, 1e6), max_steps=3, first_step=1e-3)
    assert sol.termination is Termination.MAX_STEPS
    with pytest.raises(IntegrationError):
        estimate_max_parameter(sol)


def test_input_validation():
    m = cat.clifton_pohl()
    with pytest.raises(DomainViolation):
        integrate_geodesic(m, [0.0, 0.0], [1.0, 0.0])
    with pytest.raises(ValueError):
        integrate_geodesic(m, [1.0], [1.0, 0.0])
    with pytest.raises(ValueError):
        IntegratorOptions(span=(0.0, 0.0))
    with pytest.raises(ValueError):
        IntegratorOptions(rtol=0.0)


def test_dense_output_is_consistent():
    m = cat.grw("2+sin(t)")
    sol = integrate_geodesic(m, [0.0, 0.0], [1.0, 0.2], span=(0.0, 4.0))
    mid = 0.5 * (sol.s[:-1] + sol.s[1:])
    y = sol.dense(mid)
    assert y.shape == (len(mid), 4)
    # nodes reproduce exactly
    assert np.allclose(sol.dense(sol.s)[:, :2], sol.x)


def test_table_layout():
    m = cat.torus_tau()
    sol = integrate_geodesic(m, [0.0, 0.0], [0.0, -1.0], span=(0.0, 0.5))
    header, rows = sol.table()
    assert header == ["s", "x1", "x2", "v1", "v2", "g_vv", "K1"]
    assert rows.shape == (len(sol.s), 7)
    assert sol.summary()["termination"] == "ReachedSpan"


def test_winding_on_flat_torus():
    m = cat.flat_torus((1.0, 2.0), index=1)
    sol = integrate_geodesic(m, [0.1, 0.1], [2.5, 4.3], span=(0.0, 1.0))
    assert list(winding_of(sol)) == [2, 2]
    ks = period_crossings(sol, 0, k_max=2)
    assert ks == pytest.approx([0.4, 0.8])


def test_conformal_reparametrization_on_torus():
    # a lightlike geodesic of the torus is a pregeodesic of every conformal metric
    m = cat.torus_tau()
    sol = integrate_geodesic(m, [0.0, 0.0], [1.0, 0.0], span=(0.0, 2.0))
    out = lightlike_reparam(sol, "2+sin(2*pi*x)*cos(2*pi*y)", C=0.5)
    assert out.extra["residual"] < 1e-6
    assert np.max(np.abs(out.g_vv)) < 1e-8
    assert np.all(np.diff(out.s) > 0)
    with pytest.raises(ValueError):
        lightlike_reparam(integrate_geodesic(m, [0.0, 0.0], [1.0, 1.0], span=(0.0, 1.0)), "1")


@pytest.mark.parametrize("k", [2, 3, 4])
def test_misner_rounds_halve(k):
    m = cat.misner_cylinder("xy")
    sol = integrate_geodesic(m, [0.0, 0.0], [0.0, -2.0], span=(0.0, 1.0))
    s = period_crossings(sol, 0, k_max=k)
    T = 0.25
    assert s[-1] == pytest.approx(T * (2 - 2.0 ** (1 - k)), rel=1e-6)


def test_b_hat_matches_exact_blow_up_for_various_speeds():
    m = cat.torus_tau()
    for c in (0.5, 1.0, 3.0):
        sol = integrate_geodesic(m, [0.0, 0.0], [0.0, -c], span=(0.0, 5.0))
        assert sol.b_hat == pytest.approx(1.0 / c, rel=1e-3)
        assert 0 <= sol.confidence < 1e-2
