import math

import numpy as np
import pytest

from lorentz_geodesy import catalog as cat
from lorentz_geodesy.completeness import (Divergence, Verdict, classify_grw, classify_warped_radial,
                                          improper_integral_verdict, killing_certificate, sup_growth,
                                          SupReport, warped_projection_integrate)
from lorentz_geodesy.exceptions import ModelError
from lorentz_geodesy.integrator import integrate_geodesic

C, I, X = Verdict.COMPLETE, Verdict.INCOMPLETE, Verdict.INCONCLUSIVE


@pytest.mark.parametrize("integrand, end, expected", [
    ("1/r^2", math.inf, Divergence.CONVERGES),
    ("exp(-r)", math.inf, Divergence.CONVERGES),
    ("r^-0.5", math.inf, Divergence.DIVERGES),
    ("exp(r)", math.inf, Divergence.DIVERGES),
    ("1/r", math.inf, Divergence.INCONCLUSIVE),
    ("1/sqrt(1-r)", 1.0, Divergence.CONVERGES),
    ("1/(1-r)^2", 1.0, Divergence.DIVERGES),
])
def test_improper_integrals(integrand, end, expected):
    start = 1.0 if math.isinf(end) else 0.0
    rep = improper_integral_verdict(integrand, end, start=start)
    assert rep.classification is expected, rep.message


def test_improper_integral_value_and_errors():
    rep = improper_integral_verdict("1/r^2", math.inf, start=1.0)
    assert rep.value == pytest.approx(1.0, rel=1e-6)
    rep = improper_integral_verdict("exp(r)", -math.inf, start=0.0)
    assert rep.classification is Divergence.CONVERGES
    assert rep.value == pytest.approx(1.0, rel=1e-6)
    with pytest.raises(ValueError):
        improper_integral_verdict("-1", math.inf)
    with pytest.raises(ValueError):
        improper_integral_verdict("x*y", math.inf)


def test_sup_growth():
    assert sup_growth("r", math.inf)[0] is SupReport.UNBOUNDED
    assert sup_growth("1/(1+r)", math.inf)[0] is SupReport.BOUNDED


@pytest.mark.parametrize("f, interval, expected", [
    ("1", (-math.inf, math.inf), (C, C, C)),
    ("cosh(t)", (-math.inf, math.inf), (C, C, C)),
    ("exp(t)", (-math.inf, math.inf), (I, I, I)),
    ("t", (0.0, math.inf), (I, I, I)),
    ("2+sin(t)", (-math.inf, math.inf), (C, C, C)),
])
def test_grw_verdicts(f, interval, expected):
    v = classify_grw(f, interval)
    assert (v.timelike, v.lightlike, v.spacelike) == expected


def test_grw_sides_and_evidence():
    v = classify_grw("exp(t)")
    assert v.per_side["future"] == {"timelike": C, "lightlike": C, "spacelike": C}
    assert v.per_side["past"]["lightlike"] is I
    crits = {e["criterion"] for e in v.evidence}
    assert "grw-lightlike-past" in crits and all("citation" in e for e in v.evidence)
    d = v.to_dict()
    assert d["type"]["timelike"] == "Incomplete"


def test_grw_lightlike_integral_matches_oracle():
    # f = e^t: the past lightlike geodesic with C = 1 has maximal parameter int_{-inf}^0 e^t dt = 1
    v = classify_grw("exp(t)")
    ev = next(e for e in v.evidence if e["criterion"] == "grw-lightlike-past")
    assert ev["values"]["value"] == pytest.approx(1.0, rel=1e-6)


def test_grw_rejects_bad_input():
    with pytest.raises(ModelError):
        classify_grw("t")
    with pytest.raises(ValueError):
        classify_grw("1", (1.0, 0.0))
    with pytest.raises(ValueError):
        classify_grw("1+x")
    v = classify_grw("1", fiber_complete=False)
    assert v.timelike is I


@pytest.mark.parametrize("f, expected", [
    ("1", (C, C, C)),
    ("1+x^2", (C, C, C)),
    ("exp(-x^2)", (I, I, I)),
])
def test_warped_line(f, expected):
    v = classify_warped_radial(cat.euclidean(1), f)
    assert (v.timelike, v.lightlike, v.spacelike) == expected


def test_warped_radial_plane_and_compact_base():
    v = classify_warped_radial(cat.euclidean(2), "1+x1^2+x2^2")
    assert (v.timelike, v.lightlike, v.spacelike) == (C, C, C)
    v = classify_warped_radial(cat.euclidean(2), "exp(-x1^2-x2^2)")
    assert v.lightlike is I
    v = classify_warped_radial(cat.flat_torus(), "2+sin(2*pi*x1)")
    assert v.evidence[0]["criterion"] == "compact-base" and v.spacelike is C


def test_warped_non_radial_uses_sufficient_conditions_only():
    v = classify_warped_radial(cat.euclidean(2), "exp(-x1^2)*(1+x2^2)+exp(-x2^2)", directions=24)
    assert I not in (v.timelike, v.lightlike, v.spacelike)
    assert v.evidence[-1]["values"]["radial"] is False


def test_warped_projection_conserves_energy():
    spec = cat.WarpedSpec(cat.euclidean(1), "1+x^2", cat.minkowski(1, 0).with_changes(coords=("y",)))
    sol = warped_projection_integrate(spec, 0.7, [0.3], [0.2], span=(0.0, 3.0))
    assert np.max(np.abs(sol.g_vv - sol.g_vv[0])) < 1e-8
    assert sol.extra["causal"] == "spacelike"
    with pytest.raises(ValueError):
        warped_projection_integrate(spec, -1.0, [0.3], [0.2])


def test_warped_projection_matches_full_geodesic():
    spec = cat.WarpedSpec(cat.euclidean(1), "1+x^2", cat.minkowski(1, 1))
    m = cat.warped(spec)
    p, v = np.array([0.3, 0.0]), np.array([0.2, 0.5])
    full = integrate_geodesic(m, p, v, span=(0.0, 2.0), rtol=1e-11)
    f0 = 1 + 0.3 ** 2
    Cc = -(f0 ** 2 * 0.5) ** 2      # C = g_F(f^2 y', f^2 y') for the timelike fiber
    proj = warped_projection_integrate(spec, Cc, [0.3], [0.2], span=(0.0, 2.0), rtol=1e-11)
    assert proj.x[-1, 0] == pytest.approx(full.x[-1, 0], abs=1e-7)


def test_killing_certificates():
    ok = killing_certificate(cat.flat_torus((1.0, 2.0), index=1))
    assert ok.status == "Certified" and ok.applies
    bad = killing_certificate(cat.torus_tau())
    assert bad.status == "Refuted" and "not negative definite" in bad.reason
    cp = killing_certificate(cat.clifton_pohl())
    assert cp.status == "Refuted"
    dS = killing_certificate(cat.pseudosphere())
    assert dS.status == "Refuted"      # d_theta is spacelike
    with pytest.raises(ModelError):
        killing_certificate(cat.torus_tau(), fields=["nope"])
