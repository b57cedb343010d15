import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from lorentz_geodesy import catalog as cat
from lorentz_geodesy.exceptions import DomainViolation
from lorentz_geodesy.integrator import integrate_geodesic
from lorentz_geodesy.variational import (ConnectStatus, GalerkinTime, OptimizeStatus, PathDiscretization,
                                         VariationalOptions, action_value, action_value_grad, charges,
                                         growth_check, lbfgs, minimize_connect_static,
                                         multistart_windings, penalty_psi, reconstruct_time,
                                         reduction_terms, sine_basis, solve_splitting_saddle,
                                         splitting_penalized_value_grad, static_J_value_grad,
                                         stationary_connect_shooting, stationary_J1_value_grad,
                                         stationary_reduced_rhs, stationary_time_constant)
from lorentz_geodesy.variational.optimize import laplacian_preconditioner
from lorentz_geodesy.variational.functionals import splitting_model


def _fd_grad(fun, x, h=1e-6):
    g = np.zeros_like(x)
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (fun(x + e) - fun(x - e)) / (2 * h)
    return g


# -- paths -------------------------------------------------------------------------------

def test_sine_basis_and_galerkin_norm_are_exact():
    s = np.linspace(0, 1, 7)
    B, dB = sine_basis(3, s)
    assert B.shape == dB.shape == (3, 7)
    assert np.allclose(B[:, [0, -1]], 0.0, atol=1e-15)
    path = PathDiscretization([0.0, 0.0], [0.8, 1.0], np.zeros((15, 1)), GalerkinTime([0.3, -0.2, 0.1]))
    # int (dt + sum a_l l pi cos(l pi s))^2 ds by quadrature
    ss = np.linspace(0, 1, 20001)
    _, dB = sine_basis(3, ss)
    tp = 0.8 + path.time.coeffs @ dB
    assert path.tprime_norm2() == pytest.approx(trapezoid(tp ** 2, ss), rel=1e-7)
    t = path.time_nodes()
    assert t[0] == 0.0 and t[-1] == 0.8


def test_path_construction_and_free_vector():
    path = PathDiscretization.straight([0.0, 0.0, 0.0], [1.0, 2.0, 3.0], N=8, time="nodal")
    assert path.nodes.shape == (7, 2)
    assert np.allclose(path.full_nodes()[4], [0.5, 1.0, 1.5])
    vec = path.free_vector()
    back = path.with_free(vec + 1.0)
    assert np.allclose(back.free_vector(), vec + 1.0)
    assert path.tprime_norm2() == pytest.approx(1.0)
    g = PathDiscretization.straight([0.0, 0.0], [1.0, 1.0], N=8, time="galerkin", modes=3)
    assert g.refine_modes(5).time.modes == 5
    with pytest.raises(ValueError):
        PathDiscretization.straight([0.0], [1.0], N=1)
    with pytest.raises(ValueError):
        PathDiscretization.straight([0.0, 0.0], [1.0, 1.0], time="spline")


# -- functionals -----------------------------------------------------------------------------

def test_action_gradient_matches_fd():
    m = cat.grw("2+sin(t)")
    rng = np.random.default_rng(0)
    path = PathDiscretization.straight([0.0, 0.0], [1.0, 2.0], N=10)
    path = path.with_nodes(path.nodes + 0.1 * rng.normal(size=path.nodes.shape))
    _, g = action_value_grad(m, path)
    x0 = path.nodes.ravel()
    fd = _fd_grad(lambda z: action_value(m, path.with_nodes(z)), x0)
    assert np.allclose(g.ravel(), fd, rtol=1e-6, atol=1e-8)


def test_static_functional_equals_action_at_reconstructed_time():
    spec = cat.StationarySpec(cat.euclidean(1), "1+x^2", ("0",))
    m = cat.stationary(spec)
    path = PathDiscretization.straight([0.0, 0.0], [0.7, 1.0], N=400, time="nodal")
    t = reconstruct_time(spec, path)
    full = path.with_time(type(path.time)(t[1:-1]))
    J, _ = static_J_value_grad(spec, path)
    assert action_value(m, full) == pytest.approx(J, rel=1e-10)


def test_stationary_J1_equals_action_at_reconstructed_time():
    spec = cat.StationarySpec(cat.euclidean(2), "1+0.2*x1^2", ("-0.3*x2", "0.3*x1+0.1*x1^2"))
    m = cat.stationary(spec)
    path = PathDiscretization.straight([0.0, 0.0, 0.0], [0.5, 1.0, -0.4], N=64, time="nodal")
    t = reconstruct_time(spec, path)
    assert t[-1] == pytest.approx(0.5)
    full = path.with_time(type(path.time)(t[1:-1]))
    J1, g = stationary_J1_value_grad(spec, path)
    assert action_value(m, full) == pytest.approx(J1, rel=1e-10)
    fd = _fd_grad(lambda z: stationary_J1_value_grad(spec, path.with_free(np.concatenate(
        [path.time.values, z])), grad=False), path.nodes.ravel())
    assert np.allclose(g.ravel(), fd, rtol=1e-6, atol=1e-8)


def test_time_constant_for_trivial_stationary():
    spec = cat.StationarySpec(cat.euclidean(1), "1", ("0",))
    path = PathDiscretization.straight([0.0, 0.0], [0.8, 1.0], N=16, time="nodal")
    assert stationary_time_constant(spec, path) == pytest.approx(-0.8)


def test_penalty_psi():
    eps = 0.5
    assert penalty_psi(eps, 1.0) == (0.0, 0.0)
    for u in (0.1, 0.49, 0.51, 2.0):
        psi, dpsi = penalty_psi(eps, 1.0 / eps + u)
        assert psi == pytest.approx(math.exp(u) - 1 - u - u * u / 2, rel=1e-13)
        assert dpsi == pytest.approx(math.exp(u) - 1 - u, rel=1e-13)
    psi, _ = penalty_psi(eps, np.array([0.0, 3.0]))
    assert psi.shape == (2,)
    with pytest.raises(ValueError):
        penalty_psi(0.0, 1.0)
    with pytest.raises(ValueError):
        penalty_psi(1.0, -1.0)


def test_penalized_functional_gradient():
    spec = cat.SplittingSpec(cat.euclidean(1), "1+0.1*sin(t)", "1", nu=1.0, N=1.0, lam=0.8)
    path = PathDiscretization.straight([0.0, 0.0], [0.5, 1.0], N=12, time="galerkin", modes=3)
    path = path.with_free(path.free_vector() + 0.05 * np.arange(len(path.free_vector())) % 0.3)
    for eps in (0.05, 20.0):
        _, g = splitting_penalized_value_grad(spec, path, eps)
        fd = _fd_grad(lambda z: splitting_penalized_value_grad(spec, path.with_free(z), eps, grad=False),
                      path.free_vector())
        assert np.allclose(g, fd, rtol=1e-6, atol=1e-8)
    with pytest.raises(ValueError):
        splitting_penalized_value_grad(spec, PathDiscretization.straight([0.0, 0.0], [1.0, 1.0]), 1.0)


# -- optimizer -------------------------------------------------------------------------------

def test_lbfgs_quadratic_and_preconditioner():
    n = 20
    A = np.diag(np.arange(1.0, n + 1))
    b = np.ones(n)
    out = lbfgs(lambda x: (0.5 * x @ A @ x - b @ x, A @ x - b), np.zeros(n), gtol=1e-8)
    assert out.status is OptimizeStatus.CONVERGED
    assert np.allclose(out.x, b / np.arange(1.0, n + 1), atol=1e-8)
    P = laplacian_preconditioner(5, 2, 0.25, lead=1)
    v = np.arange(11.0)
    w = P(v)
    assert w[0] == 0.0
    T = (2 / 0.25) * (2 * np.eye(5) - np.eye(5, k=1) - np.eye(5, k=-1))
    assert np.allclose(T @ w[1:].reshape(5, 2), v[1:].reshape(5, 2))


def test_lbfgs_detects_escape():
    out = lbfgs(lambda x: (-float(x[0]), np.array([-1.0])), np.zeros(1),
                escape_bound=50.0, max_iter=500)
    assert out.status is OptimizeStatus.ESCAPE


def test_options_validation_and_threads(monkeypatch):
    with pytest.raises(ValueError):
        VariationalOptions(N=2)
    with pytest.raises(ValueError):
        VariationalOptions(N=8, modes=8)
    with pytest.raises(ValueError):
        VariationalOptions(max_iter=0)
    monkeypatch.setenv("LORENTZ_GEODESY_THREADS", "3")
    assert VariationalOptions().worker_count() == 3
    assert VariationalOptions(threads=2).worker_count() == 2
    monkeypatch.setenv("LORENTZ_GEODESY_THREADS", "many")
    assert VariationalOptions().worker_count() == 1


# -- reduction -------------------------------------------------------------------------------

def test_reduced_equation_matches_full_geodesic():
    spatial = cat.riemannian(("x1", "x2"), [["1+0.1*x2^2", 0.0], [0.0, "1+0.1*x1^2"]])
    spec = cat.StationarySpec(spatial, "1+0.2*x1^2", ("-0.3*x2", "0.3*x1"))
    m = cat.stationary(spec)
    x, xp, tp = np.array([0.2, -0.1]), np.array([0.4, 0.3]), 0.7
    C, _ = charges(spec, tp, x, xp)
    acc = stationary_reduced_rhs(spec, C, x, xp)
    # spatial acceleration of the full geodesic equation
    G = m.gamma(np.concatenate([[0.0], x]))
    v = np.concatenate([[tp], xp])
    full = -np.einsum("kij,i,j->k", G, v, v)
    assert np.allclose(acc, full[1:], atol=1e-12)
    lam, R0, R1, R2 = reduction_terms(spec, x, xp)
    assert lam < 0 and R0.shape == R1.shape == R2.shape == (2,)


def test_reduced_motion_tracks_full_geodesic():
    from lorentz_geodesy.variational import integrate_reduced
    spec = cat.StationarySpec(cat.euclidean(2), "1+0.2*x1^2", ("-0.3*x2", "0.3*x1"))
    m = cat.stationary(spec)
    p, v = np.array([0.0, 0.1, 0.2]), np.array([1.0, 0.3, -0.4])
    C, _ = charges(spec, v[0], p[1:], v[1:])
    full = integrate_geodesic(m, p, v, span=(0.0, 1.0), rtol=1e-12)
    red = integrate_reduced(spec, C, p[1:], v[1:], t0=p[0], span=1.0, samples=[1.0])
    assert np.allclose(red.x[-1], full.x[-1, 1:], atol=1e-8)
    assert red.t[-1] == pytest.approx(full.x[-1, 0], abs=1e-9)
    assert red.charge_residual(spec) < 1e-12


# -- solvers -----------------------------------------------------------------------------------

def test_static_connect_flat():
    spec = cat.StationarySpec(cat.euclidean(1), "1", ("0",))
    res = minimize_connect_static(spec, [0.0, 0.0], [0.5, 1.0], VariationalOptions(N=16, modes=4))
    assert res.status is ConnectStatus.FOUND
    rec = res.best
    assert np.allclose(rec.initial_velocity, [0.5, 1.0], atol=1e-8)
    assert rec.action == pytest.approx(1.0 - 0.25, abs=1e-10)
    d = res.to_dict()
    assert d["status"] == "Found" and len(d["records"]) == 1


def test_static_connect_rejects_wrong_dimension():
    spec = cat.StationarySpec(cat.euclidean(1), "1", ("0",))
    with pytest.raises(ValueError):
        minimize_connect_static(spec, [0.0, 0.0, 0.0], [0.5, 1.0])


def test_multistart_on_flat_cylinder_finds_every_class():
    m = cat.build("static", beta="1", period="1")
    res = multistart_windings(m, [0.0, 0.3], [0.5, 0.3], K_max=1, opts=VariationalOptions(N=16, modes=4))
    assert res.status is ConnectStatus.FOUND
    ws = sorted(r.winding[0] for r in res.records)
    assert ws == [-1, 0, 1]
    # lifted endpoint x_q + k gives action k^2 - dt^2
    for r in res.records:
        assert r.action == pytest.approx(r.winding[0] ** 2 - 0.25, abs=1e-9)


def test_stationary_shooting_flat():
    spec = cat.StationarySpec(cat.euclidean(1), "1", ("0",))
    res = stationary_connect_shooting(spec, [0.0, 0.0], [0.6, 1.0], VariationalOptions(N=16, modes=4))
    assert res.status is ConnectStatus.FOUND
    assert res.best.C_gamma == pytest.approx(-0.6, abs=1e-9)


def test_splitting_saddle_without_time_travel():
    spec = cat.SplittingSpec(cat.euclidean(1), "1", "1", nu=1.0, N=1.0, lam=0.9)
    res = solve_splitting_saddle(spec, [0.0, 0.0], [0.0, 1.0], modes=2, opts=VariationalOptions(N=16, modes=2))
    assert res.status is ConnectStatus.FOUND
    rec = res.best
    assert np.allclose(rec.path.time.coeffs, 0.0, atol=1e-8)
    assert rec.action == pytest.approx(1.0, abs=1e-9)
    assert splitting_model(spec).dim == 2


def test_splitting_saddle_rejects_bad_input():
    spec = cat.SplittingSpec(cat.euclidean(1), "1", "1", nu=1.0, N=1.0, lam=0.9)
    with pytest.raises(ValueError):
        solve_splitting_saddle(spec, [0.0], [1.0])
    with pytest.raises(Exception):
        solve_splitting_saddle(cat.euclidean(1), [0.0, 0.0], [1.0, 1.0])


def test_ads_strip_is_not_connected():
    res = minimize_connect_static(cat.anti_de_sitter_strip(), [0.0, 0.0], [10.0, 1.2],
                                  VariationalOptions(N=32))
    assert res.status is ConnectStatus.NOT_FOUND
    assert "escape" in res.diagnostic or "boundary" in res.diagnostic


# -- growth hypotheses ---------------------------------------------------------------------------

@pytest.mark.parametrize("beta, ok", [("1+x^2", True), ("2+sin(x)", True), ("1+abs(x)^2.5", False)])
def test_growth_beta(beta, ok):
    rep = growth_check(cat.StationarySpec(cat.euclidean(1), beta, ("0",)))
    assert rep.beta_ok is ok and rep.hypotheses_hold is ok


def test_growth_delta_rotation():
    spec = cat.StationarySpec(cat.euclidean(2), "1", ("-0.7*x2", "0.7*x1"))
    rep = growth_check(spec, kind="stationary")
    assert rep.delta_ok
    assert rep.delta_slope == pytest.approx(0.7, rel=1e-3)
    assert rep.delta_exponent == pytest.approx(1.0, abs=0.05)
    assert isinstance(rep.to_dict(), dict)
    with pytest.raises(ValueError):
        growth_check(spec, kind="warped")


def test_growth_on_ads_strip_fails():
    rep = growth_check(cat.anti_de_sitter_strip())
    assert not rep.hypotheses_hold


def test_domain_violation_in_functional():
    spec = cat.StationarySpec(cat.euclidean(1), "1/x", ("0",))
    path = PathDiscretization.straight([0.0, -1.0], [1.0, 1.0], N=4, time="nodal")
    with pytest.raises(DomainViolation):
        static_J_value_grad(spec, path)
