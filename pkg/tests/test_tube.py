"""Tube pipeline: hypothesis screening, Levi analysis, coframe identities,
torsion coefficients, and the flatness verdict."""

from fractions import Fraction

import pytest

from crcgeo import tube
from crcgeo.parsing import parse
from crcgeo.scalars import (
    Var,
    VariableTable,
    ZERO,
    certify_zero,
    conjugate,
    differentiate,
    evaluate,
    is_identically_zero,
    is_zero_expr,
    normalize,
    substitute,
    to_text,
)

BOX = {"t1": (0.02, 0.08), "t2": (0.02, 0.08)}
HOMOG_BOX = {"t1": (0.5, 1.0), "t2": (0.5, 1.0)}


@pytest.fixture(scope="module")
def paper_model():
    return tube.tube_from_rho(tube.paper_example_rho(), BOX)


@pytest.fixture(scope="module")
def paper_coframe(paper_model):
    return tube.build_coframe(paper_model)


@pytest.fixture(scope="module")
def paper_verdict(paper_coframe):
    return tube.curvature_coefficients(paper_coframe)


@pytest.fixture(scope="module")
def homog_model():
    return tube.tube_from_rho("t1^2/t2", HOMOG_BOX)


def _equal(model, a, b, seed=0):
    diff = normalize(a - b)
    if certify_zero(diff):
        return True
    return is_identically_zero(diff, model.zero_test_box, trials=16,
                               seed=seed, tol=1e-8)


# ---------------------------------------------------------------------------
# hypothesis screening


def test_paper_example_accepted(paper_model):
    rho11 = paper_model.d("rho11")
    assert certify_zero(rho11 - parse("1/sqrt(1-12*t1*t2)", paper_model.table))
    s_ref = parse("(1-sqrt(1-12*t1*t2))/(t2*sqrt(1-12*t1*t2))", paper_model.table)
    assert certify_zero(paper_model.d("S") - s_ref)


def test_degenerate_parabola_rejected():
    with pytest.raises(tube.TubeHypothesisError) as err:
        tube.tube_from_rho("t1^2/2", {"t1": (0.1, 1), "t2": (0.1, 1)})
    assert err.value.hypothesis == "twonondegenerate"


def test_elliptic_paraboloid_rejected_by_monge_ampere():
    with pytest.raises(tube.TubeHypothesisError) as err:
        tube.tube_from_rho("t1^2+t2^2", {"t1": (0.1, 1), "t2": (0.1, 1)})
    assert err.value.hypothesis == "monge_ampere"


def test_negative_rho11_rejected():
    with pytest.raises(tube.TubeHypothesisError) as err:
        tube.tube_from_rho("-t1^2/t2", {"t1": (0.5, 1), "t2": (0.5, 1)})
    assert err.value.hypothesis == "positivity"


def test_homogeneous_family_accepted(homog_model):
    # oracle: direct differentiation gives rho11 = 2/t2, rho12 = -2 t1/t2^2
    assert is_zero_expr(homog_model.d("rho11") - parse("2/t2", homog_model.table))
    assert is_zero_expr(homog_model.d("S") + parse("1/t2", homog_model.table))
    assert is_zero_expr(tube.ma_residual(homog_model.derivs))


def test_profile_generator():
    rho = tube.ma_profile_solution("s^2")
    table = _fresh_table()
    assert normalize(rho) == normalize(parse("t1^2/t2", table))
    quartic = tube.ma_profile_solution("s^4")
    # oracle: brute-force differentiation of t1^4/t2^3
    derivs = tube._derivative_cache(quartic, _fresh_table())
    assert is_zero_expr(tube.ma_residual(derivs))


def _fresh_table():
    table = VariableTable()
    table.real("t1", "t2")
    return table


def test_profile_linear_fails_positivity_downstream():
    rho = tube.ma_profile_solution("s")
    with pytest.raises(tube.TubeHypothesisError) as err:
        tube.tube_from_rho(rho, HOMOG_BOX)
    assert err.value.hypothesis in ("positivity", "twonondegenerate")


# ---------------------------------------------------------------------------
# Levi analysis


def test_levi_rank_one_for_paper_example(paper_model):
    report = paper_model.levi_rank([(0.05, 0.05)])
    assert report[0]["rank"] == 1
    assert report[0]["relative_smallest_eigenvalue"] < 1e-10


def test_levi_rank_one_for_parabola():
    report = tube.levi_rank_numeric("t1^2/2", {"t1": (0.1, 1), "t2": (0.1, 1)},
                                    points=[(0.5, 0.5)])
    eigs = report[0]["eigenvalues"]
    assert report[0]["rank"] == 1
    assert eigs == pytest.approx([0.0, 1.0])


def test_levi_rank_two_for_elliptic_paraboloid():
    report = tube.levi_rank_numeric("t1^2+t2^2", {"t1": (0.1, 1), "t2": (0.1, 1)},
                                    points=[(0.3, 0.4)])
    assert report[0]["rank"] == 2
    assert report[0]["eigenvalues"] == pytest.approx([2.0, 2.0])


def test_levi_rank_matches_eigen_oracle(paper_model):
    # oracle: numpy eigenvalue solve on the directly evaluated Hessian
    import numpy as np
    point = (0.04, 0.06)
    entries = [evaluate(paper_model.d(k), {"t1": point[0], "t2": point[1]}).real
               for k in ("rho11", "rho12", "rho22")]
    h = np.array([[entries[0], entries[1]], [entries[1], entries[2]]])
    eigs = sorted(abs(np.linalg.eigvalsh(h)))
    report = paper_model.levi_rank([point])
    assert report[0]["eigenvalues"][1] == pytest.approx(max(eigs))


# ---------------------------------------------------------------------------
# coframe identities


def test_coframe_checks_all_pass(paper_coframe):
    assert all(ok for _, ok in paper_coframe.checks)
    names = [n for n, _ in paper_coframe.checks]
    assert "contact form structure identity" in names
    assert "fiber correction vanishes at b=0" in names


def test_sigma_has_only_coframe_components(paper_coframe):
    present = paper_coframe.sigma.generators_present()
    assert present <= {"omega", "omega1", "omega1c", "theta2", "theta2c",
                       "phi2", "phi2c"}


def test_base_derivative_structure(paper_model):
    """The base coframe derivative identities, certified directly."""
    chart = tube._ambient_chart(paper_model)
    forms = tube._ambient_forms(paper_model, chart)
    rho11 = paper_model.d("rho11")
    dmu = chart.gen("mu").d()
    target = forms["eta1"].wedge(forms["eta1"].conj()).scale(-1 / rho11)
    diff = dmu - target
    assert diff.certify_zero() or diff.vanishes(paper_model.zero_test_box,
                                                trials=8, seed=1, tol=1e-8)
    # d eta1 = -S eta2 ^ eta1c + [rho111/rho11^2 eta1c + S eta2c] ^ eta1
    s_fn = paper_model.d("S")
    rho111 = paper_model.d("rho111")
    deta1 = forms["eta1"].d()
    eta1, eta2 = forms["eta1"], forms["eta2"]
    bracket = eta1.conj().scale(rho111 / rho11 ** 2) + eta2.conj().scale(s_fn)
    target1 = eta2.wedge(eta1.conj()).scale(-s_fn) + bracket.wedge(eta1)
    diff1 = deta1 - target1
    assert diff1.certify_zero() or diff1.vanishes(paper_model.zero_test_box,
                                                  trials=8, seed=2, tol=1e-8)


def test_gamma0_collapses_fiber_differentials(paper_model, paper_coframe):
    """At u=1, a=1, b=0, lam=0 the substituted fiber differentials take the
    advertised simple shape."""
    table = paper_model.table
    g0 = tube.gamma0_bindings(table)
    frame = paper_coframe.frame
    du0 = paper_coframe.frame_sub["du"].substitute_scalars(g0)
    assert du0 == frame.gen("phi2") + frame.gen("phi2c")
    db0 = paper_coframe.frame_sub["db"].substitute_scalars(g0)
    assert db0 == frame.gen("phi1c")
    alpha0 = paper_coframe.frame_sub["alpha"].substitute_scalars(g0)
    # direct check of the coframe coefficients of da at the section
    got = alpha0.coefficient(("omega1",))
    want = paper_model.d("rho111") * paper_model.d("rho11") ** Fraction(-3, 2) / 2
    assert _equal(paper_model, got, want, seed=5)
    assert is_zero_expr(alpha0.coefficient(("theta2",)) + Fraction(1, 2))
    assert is_zero_expr(alpha0.coefficient(("phi2",)) - Fraction(1, 2))


# ---------------------------------------------------------------------------
# torsion coefficients


def test_theta2_2bar1_matches_closed_form(paper_model, paper_verdict):
    assert _equal(paper_model, paper_verdict.theta2_2bar1,
                  tube.expected_theta2_2bar1(paper_model), seed=11)


def test_c_is_one_third_of_coefficient(paper_verdict):
    assert is_zero_expr(paper_verdict.c - paper_verdict.theta2_2bar1 / 3)


def test_theta2_21_gamma0_matches_closed_form(paper_model, paper_verdict):
    assert _equal(paper_model, paper_verdict.theta2_21_gamma0,
                  tube.expected_theta2_21_gamma0(paper_model), seed=12)


def test_normalization_shift_kills_coefficient(paper_model, paper_verdict):
    """Shifting the fiber coordinate by the normalization function drives
    the re-extracted coefficient to zero on the section."""
    table = paper_model.table
    b, bb = table["b"], table["bb"]
    shifted = substitute(paper_verdict.theta2_2bar1,
                         {bb: Var(bb) - paper_verdict.c},
                         check=False)
    on_section = tube.restrict_to_section(shifted, table)
    assert certify_zero(on_section) or is_identically_zero(
        on_section, paper_model.zero_test_box, trials=16, seed=13, tol=1e-8)


def test_final_coefficient_matches_printed_value(paper_model, paper_verdict):
    closed = tube.paper_example_final_closed_form(paper_model)
    diff = normalize(paper_verdict.theta2_21_final - closed)
    assert certify_zero(diff) or is_identically_zero(
        diff, BOX, trials=32, seed=0, tol=1e-8)


def test_final_coefficient_matches_direct_route(paper_model, paper_verdict):
    # oracle: the independent scalar-calculus route (no exterior algebra)
    direct = tube.direct_final_coefficient(paper_model)
    diff = normalize(paper_verdict.theta2_21_final - direct)
    assert certify_zero(diff) or is_identically_zero(
        diff, BOX, trials=32, seed=1, tol=1e-8)


def test_paper_example_verdict(paper_verdict):
    assert paper_verdict.is_final_zero == "nonzero"
    assert paper_verdict.cartan_obstruction
    assert paper_verdict.flatness == "not_flat"


def test_homogeneous_example_final_zero(homog_model):
    cf = tube.build_coframe(homog_model)
    verdict = tube.curvature_coefficients(cf)
    assert verdict.is_final_zero == "zero"
    assert not verdict.cartan_obstruction
    assert verdict.flatness == "necessary_condition_passed"
    direct = tube.direct_final_coefficient(homog_model)
    assert certify_zero(direct) or is_identically_zero(
        direct, HOMOG_BOX, trials=16, seed=2, tol=1e-8)


def test_flatness_probe_branches(paper_verdict):
    probe = tube.flatness_probe(paper_verdict)
    assert probe["flat"] is False
    assert "not a Cartan connection" in probe["conclusion"]
    passed = tube.CurvatureVerdict(ZERO, ZERO, ZERO, ZERO, "zero", False,
                                   "necessary_condition_passed")
    probe2 = tube.flatness_probe(passed)
    assert probe2["flat"] is None and "NOT concluded" in probe2["conclusion"]
    unknown = tube.CurvatureVerdict(ZERO, ZERO, ZERO, ZERO, "inconclusive",
                                    False, "necessary_condition_passed")
    probe3 = tube.flatness_probe(unknown)
    assert "no claim" in probe3["conclusion"]


def test_torsion_conjugation_consistency(paper_model, paper_coframe):
    """Conjugating the torsion form equals computing it from conjugated
    inputs (zero test at 8 points)."""
    cf = paper_coframe
    g = cf.gen
    torsion = tube.torsion_form(cf)
    direct_conj = torsion.conj()
    dtheta2c = cf.rewrite(cf.forms_ambient["theta2"].conj().d())
    from_inputs = (dtheta2c + g("theta2c").wedge(g("phi2c") - g("phi2"))
                   - g("omega1c").wedge(g("phi1c")))
    diff = direct_conj - from_inputs
    assert diff.certify_zero() or diff.vanishes(
        paper_model.zero_test_box, trials=8, seed=17, tol=1e-8)


# ---------------------------------------------------------------------------
# end-to-end report


def test_analyze_report_for_rejected_input():
    report = tube.analyze("t1^2/2", {"t1": (0.1, 1), "t2": (0.1, 1)})
    assert report.overall == "fail"
    assert report.checks[0].name == "hypothesis:twonondegenerate"


def test_analyze_report_homogeneous():
    report = tube.analyze("t1^2/t2", HOMOG_BOX, trials=16)
    assert report.overall == "pass"
    names = {c.name for c in report.checks}
    assert "levi rank 1 at sampled points" in names
    verdict = [c for c in report.checks if c.name == "flatness verdict"][0]
    assert verdict.details["final_coefficient_zero"] == "zero"
