"""Truncated shift windows, finite quotients, certificates, measures."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import parfell as pf


Z = pf.FreeGroup(rank=1)
F2 = pf.FreeGroup(rank=2)


def oracle_metric(x, y, depth):
    return math.fsum(2.0 ** (-k) for k in range(1, depth + 1)
                     if ((x >> (k - 1)) & 1) != ((y >> (k - 1)) & 1))


# ---------------------------------------------------------------------------
# windows and the metric


def test_window_coords_frozen():
    w = pf.BernoulliWindow.build(Z, 3)
    assert w.coords == ((), (1,), (-1,), (1, 1))
    assert w.num_points == 8
    assert w.bit(5, 0) == 1 and w.bit(5, 1) == 1 and w.bit(5, 2) == 0 and w.bit(5, 3) == 1


def test_window_depth_validation():
    with pytest.raises(pf.MalformedDataError):
        pf.BernoulliWindow.build(Z, -1)
    w = pf.BernoulliWindow.build(Z, 0)
    assert w.coords == ((),)
    assert w.num_points == 1


def test_metric_frozen_values():
    assert pf.metric(0b001, 0b000, 3) == 0.5
    assert pf.metric(0b010, 0b000, 3) == 0.25
    assert pf.metric(0b111, 0b000, 3) == 0.875
    assert pf.metric(5, 5, 3) == 0.0


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 255), st.integers(0, 255), st.integers(0, 255), st.integers(0, 8))
def test_metric_properties(x, y, z, depth):
    assert pf.metric(x, y, depth) == oracle_metric(x, y, depth)
    assert pf.metric(x, y, depth) == pf.metric(y, x, depth)
    assert pf.metric(x, z, depth) <= pf.metric(x, y, depth) + pf.metric(y, z, depth) + 1e-15


# ---------------------------------------------------------------------------
# truncated fragments


def test_fragment_representable_and_domain():
    frag = pf.build_truncated_bernoulli(Z, 3)
    assert frag.representable == ((), (1,), (-1,))
    assert frag.domain((1,)) == [1, 3, 5, 7]
    assert frag.domain(()) == list(range(8))
    assert frag.shift_known((1,), 5) == {0: 0, 1: 1, 3: 1}
    with pytest.raises(pf.MalformedDataError):
        frag.domain((1, 1))  # inverse of a^2 leaves the window


def test_fragment_finite_group_window():
    g4 = pf.cyclic_group(4)
    frag = pf.build_truncated_bernoulli(g4, 2)
    # coords 0,1,2; inverses 0,3,2: only 0 and 2 are representable
    assert frag.representable == (0, 2)


# ---------------------------------------------------------------------------
# quotient approximations


def hom_z_mod4():
    return pf.GroupHom(source=Z, target=pf.cyclic_group(4), images=(1,))


def test_quotient_rho_frozen():
    w = pf.BernoulliWindow.build(Z, 3)
    approx = pf.quotient_approximation(w, hom_z_mod4())
    assert approx.num_points == 8
    assert approx.rho == (0, 1, 4, 5, 2, 3, 6, 7)


def test_quotient_action_is_valid_and_rule_backed():
    w = pf.BernoulliWindow.build(Z, 3)
    approx = pf.quotient_approximation(w, hom_z_mod4())
    assert pf.validate(approx.action, radius=3).ok
    # words reduce through the quotient: a^5 acts exactly like a
    assert approx.action.element_map((1,) * 5) == approx.action.element_map((1,))
    sup = approx.action.support((1,))
    assert sup == (1, 3, 5, 7)


def test_quotient_order_cap():
    w = pf.BernoulliWindow.build(Z, 1)
    hom = pf.GroupHom(source=Z, target=pf.cyclic_group(17), images=(1,))
    with pytest.raises(pf.MalformedDataError):
        pf.quotient_approximation(w, hom, max_order=16)


def test_quotient_source_mismatch():
    w = pf.BernoulliWindow.build(F2, 1)
    with pytest.raises(pf.MalformedDataError):
        pf.quotient_approximation(w, hom_z_mod4())


def test_strict_equivariance_exact():
    w = pf.BernoulliWindow.build(Z, 3)
    approx = pf.quotient_approximation(w, hom_z_mod4())
    report = pf.strict_equivariance_report(approx)
    assert report.ok and report.strict_ok
    assert report.max_defect == 0.0
    assert report.violations == []


def test_strict_equivariance_detects_tampered_rho():
    w = pf.BernoulliWindow.build(Z, 3)
    approx = pf.quotient_approximation(w, hom_z_mod4())
    # flip window coordinate 1 of every truncation
    approx.rho = tuple(x ^ 1 for x in approx.rho)
    report = pf.strict_equivariance_report(approx)
    assert not report.ok
    assert report.max_defect == 0.5
    assert any(v["kind"] == "pointwise" for v in report.violations)


# ---------------------------------------------------------------------------
# certificates


def test_certify_integers_frozen():
    cert = pf.certify_rfd(Z, 0.2)
    assert cert.depth == 3
    assert cert.hom.target.order == 4
    assert cert.hom.images == (1,)
    assert cert.density_bound == 0.125
    assert cert.max_window_distance == 0.0
    assert cert.equivariance_defect == 0.0
    assert cert.points_checked == {"window": 8, "quotient": 8}
    assert pf.verify_certificate(cert)


def test_certify_free_two_frozen():
    cert = pf.certify_rfd(F2, 0.3)
    assert cert.depth == 2
    assert cert.hom.target.order == 3
    assert cert.hom.images == (1, 0)
    assert cert.density_bound == 0.25
    assert pf.verify_certificate(cert)


def test_certify_with_supplied_hom():
    cert = pf.certify_rfd(Z, 0.2, hom=hom_z_mod4())
    assert cert.hom.images == (1,)
    assert pf.verify_certificate(cert)


def test_certify_supplied_hom_must_separate():
    bad = pf.GroupHom(source=Z, target=pf.cyclic_group(2), images=(1,))
    with pytest.raises(pf.CertificationError):
        pf.certify_rfd(Z, 0.2, hom=bad)  # a and a^-1 collide in Z/2


def test_certify_search_budget_exhausted():
    with pytest.raises(pf.CertificationError):
        pf.certify_rfd(Z, 0.2, max_order=3, max_cyclic=3)


def test_certify_trivial_window():
    cert = pf.certify_rfd(Z, 2.0)
    assert cert.depth == 0
    assert cert.hom.target.order == 1
    assert cert.points_checked == {"window": 1, "quotient": 1}
    assert pf.verify_certificate(cert)


def test_certify_finite_source_with_hom():
    g4 = pf.cyclic_group(4)
    ident = pf.GroupHom(source=g4, target=g4, images=(0, 1, 2, 3))
    cert = pf.certify_rfd(g4, 0.3, hom=ident)
    assert cert.depth == 2
    assert pf.verify_certificate(cert)


def test_certify_finite_source_needs_hom():
    with pytest.raises(pf.MalformedDataError):
        pf.certify_rfd(pf.cyclic_group(4), 0.3)


def test_certify_rejects_bad_delta():
    with pytest.raises(pf.MalformedDataError):
        pf.certify_rfd(Z, 0.0)
    with pytest.raises(pf.MalformedDataError):
        pf.certify_rfd(Z, -1.0)


def test_verify_rejects_tampered_certificates():
    cert = pf.certify_rfd(Z, 0.2)
    bad = pf.RfdCertificate(**{**cert.__dict__, "depth": 2})
    assert not pf.verify_certificate(bad)
    bad = pf.RfdCertificate(**{**cert.__dict__, "density_bound": 0.25})
    assert not pf.verify_certificate(bad)
    bad = pf.RfdCertificate(
        **{**cert.__dict__,
           "hom": pf.GroupHom(source=Z, target=pf.cyclic_group(2), images=(1,))}
    )
    assert not pf.verify_certificate(bad)
    bad = pf.RfdCertificate(**{**cert.__dict__, "points_checked": {"window": 8, "quotient": 4}})
    assert not pf.verify_certificate(bad)


@settings(max_examples=20, deadline=None)
@given(st.floats(min_value=0.06, max_value=1.5, allow_nan=False))
def test_certify_integers_any_delta(delta):
    cert = pf.certify_rfd(Z, delta)
    assert cert.density_bound < delta
    assert cert.max_window_distance <= cert.density_bound
    assert pf.verify_certificate(cert)


def test_certificate_json_fields():
    cert = pf.certify_rfd(Z, 0.2)
    data = cert.to_json()
    for key in ("group", "delta", "N", "hom", "density_bound",
                "max_window_distance", "equivariance_defect", "points_checked"):
        assert key in data
    assert data["N"] == 3
    back = pf.hom_from_json(data["hom"])
    assert back == cert.hom


# ---------------------------------------------------------------------------
# cylinder functions and measures


def test_cylinder_validation():
    with pytest.raises(pf.MalformedDataError):
        pf.CylinderFunction(coords=(1, 2), values=(0.0, 1.0))
    f = pf.CylinderFunction.coordinate_indicator(2)
    w = pf.BernoulliWindow.build(Z, 3)
    assert f.on_window_point(w, 0b010) == 1.0
    assert f.on_window_point(w, 0b101) == 0.0
    c = pf.CylinderFunction.constant(2.5)
    assert c.on_window_point(w, 3) == 2.5


def test_cylinder_pinned_coordinate():
    f = pf.CylinderFunction(coords=(0,), values=(0.0, 1.0))
    w = pf.BernoulliWindow.build(Z, 2)
    assert all(f.on_window_point(w, x) == 1.0 for x in w.points())


def test_measure_z_mod4_frozen():
    cert = pf.certify_rfd(Z, 0.2)
    w = pf.BernoulliWindow.build(Z, cert.depth)
    approx = pf.quotient_approximation(w, cert.hom)
    tests = [pf.CylinderFunction.constant(1.0),
             pf.CylinderFunction.coordinate_indicator(1),
             pf.CylinderFunction.coordinate_indicator(2),
             pf.CylinderFunction.coordinate_indicator(3)]
    ma = pf.invariant_measure_approx(approx, tests)
    assert ma.normalization == 1.0
    assert ma.positive_ok
    assert ma.max_defect == 0.0
    vals = {v["test"]: v["value"] for v in ma.values}
    assert vals["const 1.0"] == 1.0
    assert vals["x[1] = 1"] == 0.5
    assert vals["x[2] = 1"] == 0.5
    assert vals["x[3] = 1"] == 0.5
    assert all(d["defect"] == 0.0 for d in ma.defects)


def test_measure_rejects_out_of_window_coords():
    cert = pf.certify_rfd(Z, 0.2)
    w = pf.BernoulliWindow.build(Z, cert.depth)
    approx = pf.quotient_approximation(w, cert.hom)
    f = pf.CylinderFunction(coords=(9,), values=(0.0, 1.0))
    with pytest.raises(pf.MalformedDataError):
        pf.invariant_measure_approx(approx, [f])


def test_measure_f2_exact_invariance():
    cert = pf.certify_rfd(F2, 0.3)
    w = pf.BernoulliWindow.build(F2, cert.depth)
    approx = pf.quotient_approximation(w, cert.hom)
    tests = [pf.CylinderFunction.coordinate_indicator(k) for k in (1, 2)]
    tests.append(pf.CylinderFunction(coords=(1, 2), values=(0.0, 0.0, 0.0, 1.0),
                                     label="both"))
    ma = pf.invariant_measure_approx(approx, tests)
    assert ma.max_defect == 0.0
    assert ma.positive_ok


def test_measure_to_json_shape():
    cert = pf.certify_rfd(Z, 0.5)
    w = pf.BernoulliWindow.build(Z, cert.depth)
    approx = pf.quotient_approximation(w, cert.hom)
    ma = pf.invariant_measure_approx(approx, [pf.CylinderFunction.constant(1.0)])
    data = ma.to_json()
    assert set(data) == {"values", "defects", "normalization", "positive_ok", "max_defect"}
