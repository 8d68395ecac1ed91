"""Tube-hypersurface curvature pipeline.

A tube hypersurface z3 + conj(z3) = rho(z1 + conj(z1), z2 + conj(z2)) over
a Monge-Ampere solution rho(t1, t2) is uniformly Levi degenerate of rank 1;
it is 2-nondegenerate exactly when S = (rho12/rho11)_1 vanishes nowhere.
This module ingests rho, validates those hypotheses, builds the adapted
coframe on the ten-dimensional frame bundle along the explicit chain
(base forms -> scaled contact form -> fiber-parametrized coframe), and
computes the torsion coefficients through the first normalization,
reporting the flatness/connection obstruction carried by the final
normalized coefficient on the reference section (u=1, a=1, b=0, lam=0).

All heavy identities are verified as exterior-algebra identities after
the basis rewriting, with structural certification where the radical
arithmetic allows it and seeded numeric sampling otherwise.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .parsing import parse
from .scalars import (
    DomainEvalError,
    Expr,
    ExprError,
    Var,
    VariableTable,
    ZERO,
    ZeroTestInconclusiveError,
    certify_zero,
    conjugate,
    differentiate,
    evaluate,
    is_identically_zero,
    lift,
    normalize,
    sample_point,
    substitute,
    to_text,
)
from .forms import Chart, FormExpr, g_imaginary, g_pair, g_real
from .report import Report

HALF = Fraction(1, 2)

# fiber sampling policy for zero tests: comfortably away from u=0 and with
# the unit-modulus coordinate sampled by angle
FIBER_BOX = {"u": (0.6, 1.7), "a": (-3.0, 3.0), "b": (-0.45, 0.45),
             "lam": (-0.8, 0.8)}

GAMMA0 = {"u": 1, "a": 1, "b": 0, "lam": 0}


class TubeHypothesisError(ExprError):
    def __init__(self, hypothesis: str, message: str):
        super().__init__(f"{hypothesis}: {message}")
        self.hypothesis = hypothesis


class CoframeVerificationError(ExprError):
    def __init__(self, identity: str, detail: str = ""):
        super().__init__(f"coframe identity failed: {identity}" +
                         (f" ({detail})" if detail else ""))
        self.identity = identity


def _tube_table() -> VariableTable:
    table = VariableTable()
    table.real("t1", "t2")
    table.positive("u")
    table.unit_modulus("a")
    table.pair("b", "bb")
    table.imaginary("lam")
    return table


@dataclass
class TubeModel:
    """Defining function with its derivative cache and checked hypotheses."""

    table: VariableTable
    rho: Expr
    box: dict
    trials: int = 32
    seed: int = 0
    tol: float = 1e-8
    derivs: dict = field(default_factory=dict)

    def var(self, name: str) -> Expr:
        return Var(self.table[name])

    def d(self, key: str) -> Expr:
        return self.derivs[key]

    @property
    def zero_test_box(self) -> dict:
        merged = dict(FIBER_BOX)
        merged.update(self.box)
        return merged

    def zero_test(self, e: Expr, label: str = "", seed_shift: int = 0) -> bool:
        return is_identically_zero(e, self.zero_test_box, trials=self.trials,
                                   seed=self.seed + seed_shift, tol=self.tol)

    def levi_rank(self, points, tol: float = 1e-10):
        return hessian_rank_report(self.derivs, points, tol)


def _derivative_cache(rho: Expr, table: VariableTable) -> dict:
    t1, t2 = table["t1"], table["t2"]
    d1 = lambda e: differentiate(e, t1)
    d2 = lambda e: differentiate(e, t2)
    derivs = {"rho": normalize(rho)}
    derivs["rho1"] = d1(derivs["rho"])
    derivs["rho2"] = d2(derivs["rho"])
    derivs["rho11"] = d1(derivs["rho1"])
    derivs["rho12"] = d2(derivs["rho1"])
    derivs["rho22"] = d2(derivs["rho2"])
    derivs["rho111"] = d1(derivs["rho11"])
    derivs["rho112"] = d2(derivs["rho11"])
    derivs["S"] = d1(derivs["rho12"] / derivs["rho11"])
    derivs["S1"] = d1(derivs["S"])
    derivs["S2"] = d2(derivs["S"])
    return derivs


def ma_residual(derivs: dict) -> Expr:
    return normalize(derivs["rho11"] * derivs["rho22"] - derivs["rho12"] ** 2)


def tube_from_rho(rho, box: dict, trials: int = 32, seed: int = 0,
                  tol: float = 1e-8) -> TubeModel:
    """Build and validate a tube model from a defining-function expression.

    ``rho`` is an expression string over t1, t2 (or an already-parsed
    expression over a compatible table).  Raises ``TubeHypothesisError``
    naming the failed hypothesis: the Monge-Ampere equation, positivity of
    rho11, or 2-nondegeneracy (S not identically zero).
    """
    table = _tube_table()
    if isinstance(rho, str):
        rho_expr = parse(rho, _restricted_view(table, ("t1", "t2")))
        rho_expr = _rebind(rho_expr, table)
    else:
        rho_expr = lift(rho)
        rho_expr = _rebind(rho_expr, table)
    model = TubeModel(table, normalize(rho_expr), dict(box),
                      trials=trials, seed=seed, tol=tol,
                      derivs=_derivative_cache(rho_expr, table))

    residual = ma_residual(model.derivs)
    try:
        if not model.zero_test(residual, seed_shift=11):
            raise TubeHypothesisError(
                "monge_ampere", "rho11*rho22 - rho12^2 does not vanish on the box")
    except ZeroTestInconclusiveError as exc:
        raise TubeHypothesisError("monge_ampere", f"inconclusive: {exc}")

    _check_positivity(model)

    try:
        s_vanishes = model.zero_test(model.d("S"), seed_shift=23)
    except ZeroTestInconclusiveError as exc:
        raise TubeHypothesisError("twonondegenerate", f"inconclusive: {exc}")
    if s_vanishes:
        raise TubeHypothesisError(
            "twonondegenerate", "S = (rho12/rho11)_1 is identically zero")
    return model


def _restricted_view(table: VariableTable, names) -> VariableTable:
    view = VariableTable()
    for n in names:
        view._vars[n] = table[n]
    return view


def _rebind(e: Expr, table: VariableTable) -> Expr:
    for v in sorted({v.name for v in _free(e)}):
        if v not in table:
            raise ExprError(f"defining function uses unexpected variable {v}")
    return e


def _free(e: Expr):
    from .scalars import free_variables
    return free_variables(e)


def _check_positivity(model: TubeModel, n_points: int = 16) -> None:
    rng = random.Random(model.seed + 5)
    rho11 = model.d("rho11")
    variables = sorted(_free(rho11), key=lambda v: v.name)
    found = 0
    for _ in range(8 * n_points):
        if found >= n_points:
            break
        point = sample_point(variables, model.zero_test_box, rng)
        try:
            val = evaluate(rho11, point)
        except DomainEvalError:
            continue
        found += 1
        if abs(val.imag) > 1e-9 * (1 + abs(val)) or val.real <= 0:
            raise TubeHypothesisError(
                "positivity", f"rho11 = {val} at {point} is not positive")
    if found == 0:
        raise TubeHypothesisError("positivity", "no admissible sample points")


# ---------------------------------------------------------------------------
# stock defining functions


def paper_example_rho() -> str:
    """The explicit closed-form Monge-Ampere solution used end to end."""
    return "((1-12*t1*t2)^(3/2)+18*t1*t2-1)/(108*t2^2)"


def ma_profile_solution(g_text: str, box: dict | None = None) -> Expr:
    """Degree-1-homogeneous Monge-Ampere solution t2 * g(t1/t2).

    Homogeneity makes the residual vanish identically; this is verified
    before returning (a failure would be an implementation bug, reported
    as such).
    """
    gtab = VariableTable()
    s_var, = gtab.real("s")
    g_expr = parse(g_text, gtab)
    table = _tube_table()
    t1, t2 = Var(table["t1"]), Var(table["t2"])
    rho = normalize(t2 * substitute(g_expr, {s_var: t1 / t2}))
    derivs = _derivative_cache(rho, table)
    residual = ma_residual(derivs)
    test_box = {"t1": (0.5, 1.0), "t2": (0.5, 1.0)}
    test_box.update(box or {})
    if not (certify_zero(residual)
            or is_identically_zero(residual, test_box, trials=16, seed=3)):
        raise ExprError("profile construction produced a nonzero residual; "
                        "this is a bug in the generator")
    return rho


# ---------------------------------------------------------------------------
# numeric Levi analysis


def hessian_rank_report(derivs: dict, points, tol: float = 1e-10) -> list:
    """Eigenvalues and rank of the defining-function Hessian per point.

    The Hessian is the Levi matrix of the tube up to a positive scale, so
    its rank is the Levi rank.  Rank counts eigenvalues above
    ``tol * (sum of absolute eigenvalues)``.
    """
    out = []
    for t1v, t2v in points:
        point = {"t1": t1v, "t2": t2v}
        entries = {}
        for key in ("rho11", "rho12", "rho22"):
            val = evaluate(derivs[key], point)
            if abs(val.imag) > 1e-9 * (1 + abs(val)):
                raise DomainEvalError(f"{key} is not real at {point}")
            entries[key] = val.real
        h = np.array([[entries["rho11"], entries["rho12"]],
                      [entries["rho12"], entries["rho22"]]])
        eigs = np.linalg.eigvalsh(h)
        scale = float(np.sum(np.abs(eigs)))
        rank = int(np.sum(np.abs(eigs) > tol * scale)) if scale > 0 else 0
        small = float(min(np.abs(eigs))) / scale if scale > 0 else 0.0
        out.append({
            "point": (float(t1v), float(t2v)),
            "eigenvalues": [float(x) for x in np.sort(eigs)],
            "rank": rank,
            "relative_smallest_eigenvalue": small,
        })
    return out


def levi_rank_numeric(rho, box: dict, points=None, tol: float = 1e-10,
                      seed: int = 0) -> list:
    """Levi rank report for a raw defining function (no hypothesis gate)."""
    table = _tube_table()
    if isinstance(rho, str):
        rho = parse(rho, _restricted_view(table, ("t1", "t2")))
    derivs = _derivative_cache(lift(rho), table)
    if points is None:
        rng = random.Random(seed)
        points = [(rng.uniform(*box["t1"]), rng.uniform(*box["t2"]))
                  for _ in range(8)]
    return hessian_rank_report(derivs, points, tol)


# ---------------------------------------------------------------------------
# the adapted coframe


T2_GENS = ("omega", "omega1", "omega1c", "theta2", "theta2c",
           "phi1", "phi1c", "phi2", "phi2c", "dlam")


@dataclass
class TubeCoframe:
    model: TubeModel
    ambient: Chart            # base-and-fiber differentials
    frame: Chart              # adapted coframe chart for extraction
    forms_ambient: dict       # the six named forms as ambient expressions
    frame_sub: dict           # ambient generator -> frame 1-form
    sigma: FormExpr           # fiber correction 1-form, vanishes at b=0
    checks: list = field(default_factory=list)

    def rewrite(self, form: FormExpr) -> FormExpr:
        return form.rewrite(self.frame_sub, self.frame)

    def gen(self, name: str) -> FormExpr:
        return self.frame.gen(name)


def _ambient_chart(model: TubeModel) -> Chart:
    table = model.table
    gens = [g_imaginary("mu")]
    gens.extend(g_pair("dz1", "dz1c"))
    gens.extend(g_pair("dz2", "dz2c"))
    gens.append(g_real("du"))
    gens.append(g_imaginary("alpha"))
    gens.extend(g_pair("db", "dbc"))
    gens.append(g_imaginary("dlam"))
    chart = Chart(table, gens)
    g = chart.gen
    dt1 = g("dz1") + g("dz1c")
    dt2 = g("dz2") + g("dz2c")
    drho1 = dt1.scale(model.d("rho11")) + dt2.scale(model.d("rho12"))
    drho2 = dt1.scale(model.d("rho12")) + dt2.scale(model.d("rho22"))
    dmu = drho1.wedge(g("dz1")) + drho2.wedge(g("dz2"))
    zero2 = chart.zero(2)
    a = Var(table["a"])
    d_rules = {"mu": dmu, "dz1": zero2, "dz1c": zero2, "dz2": zero2,
               "dz2c": zero2, "du": zero2, "alpha": zero2,
               "db": zero2, "dbc": zero2, "dlam": zero2}
    scalar_rules = {
        "t1": dt1, "t2": dt2, "u": g("du"), "a": g("alpha").scale(a),
        "b": g("db"), "bb": g("dbc"), "lam": g("dlam"),
    }
    chart.install_rules(d_rules, scalar_rules)
    return chart


def _ambient_forms(model: TubeModel, chart: Chart) -> dict:
    g = chart.gen
    table = model.table
    u, a = Var(table["u"]), Var(table["a"])
    b, bb = Var(table["b"]), Var(table["bb"])
    lam = Var(table["lam"])
    ab = conjugate(a)
    rho11, rho12 = model.d("rho11"), model.d("rho12")
    rho111 = model.d("rho111")
    s_fn = model.d("S")
    x = (u * rho11 ** 3) ** Fraction(-1, 2)

    omega = g("mu").scale(u)
    eta1 = g("dz1").scale(rho11) + g("dz2").scale(rho12)
    nu = eta1.scale((u / rho11) ** HALF)
    omega1 = nu.scale(a) + omega.scale(bb)
    theta2 = g("dz2").scale(-(a ** 2) * s_fn)
    phi2 = (g("alpha") + g("du").scale(1 / (2 * u))
            + theta2.scale(ab ** 2 * HALF) - theta2.conj().scale(a ** 2 * HALF)
            - omega1.scale(2 * b + ab * rho111 * x * HALF)
            + omega1.conj().scale(bb + a * rho111 * x * HALF)
            + omega.scale(lam * HALF))
    return {"omega": omega, "omega1": omega1, "theta2": theta2, "phi2": phi2,
            "eta1": eta1, "eta2": g("dz2"), "nu": nu, "mu": g("mu")}


def _frame_chart(model: TubeModel) -> Chart:
    gens = [g_imaginary("omega")]
    for pair in (("omega1", "omega1c"), ("theta2", "theta2c"),
                 ("phi1", "phi1c"), ("phi2", "phi2c")):
        gens.extend(g_pair(*pair))
    gens.append(g_imaginary("dlam"))
    gens.extend(g_pair("db", "dbc"))
    return Chart(model.table, gens)


def _base_substitution(model: TubeModel, frame: Chart) -> dict:
    """Images of the ambient generators in the adapted coframe, leaving the
    fiber differentials db, dbc, dlam in place."""
    g = frame.gen
    table = model.table
    u, a = Var(table["u"]), Var(table["a"])
    b, bb = Var(table["b"]), Var(table["bb"])
    lam = Var(table["lam"])
    ab = conjugate(a)
    rho11, rho12 = model.d("rho11"), model.d("rho12")
    rho111 = model.d("rho111")
    s_fn = model.d("S")
    x = (u * rho11 ** 3) ** Fraction(-1, 2)

    omega, omega1, omega1c = g("omega"), g("omega1"), g("omega1c")
    theta2, theta2c = g("theta2"), g("theta2c")
    phi2, phi2c = g("phi2"), g("phi2c")

    dz2 = theta2.scale(-(ab ** 2) / s_fn)
    dz1 = ((omega1 - omega.scale(bb)).scale(ab * (u * rho11) ** Fraction(-1, 2))
           + theta2.scale(rho12 * ab ** 2 / (s_fn * rho11)))
    du = (omega1.scale(b) + omega1c.scale(bb) - omega.scale(lam)
          + phi2 + phi2c).scale(u)
    alpha = (theta2.scale(-(ab ** 2) * HALF) + theta2c.scale(a ** 2 * HALF)
             + omega1.scale(3 * b * HALF + ab * rho111 * x * HALF)
             - omega1c.scale(3 * bb * HALF + a * rho111 * x * HALF)
             + phi2.scale(HALF) - phi2c.scale(HALF))
    sub = {
        "mu": omega.scale(1 / u),
        "dz1": dz1, "dz1c": dz1.conj(),
        "dz2": dz2, "dz2c": dz2.conj(),
        "du": du, "alpha": alpha,
        "db": g("db"), "dbc": g("dbc"), "dlam": g("dlam"),
    }
    return sub


def _form_vanishes(model: TubeModel, form: FormExpr, seed_shift: int) -> bool:
    try:
        return form.vanishes(model.zero_test_box, trials=model.trials,
                             seed=model.seed + seed_shift, tol=model.tol)
    except ZeroTestInconclusiveError:
        return False


def build_coframe(model: TubeModel) -> TubeCoframe:
    """Construct and verify the adapted coframe.

    Verifies the substitution table inverts the definitions, the two
    structure identities of the coframe, and that the fiber correction
    form extracted from the second identity vanishes at b=0.
    """
    ambient = _ambient_chart(model)
    forms = _ambient_forms(model, ambient)
    frame = _frame_chart(model)
    sub = _base_substitution(model, frame)
    checks: list = []

    def record(name: str, ok: bool, detail: str = "") -> None:
        checks.append((name, ok))
        if not ok:
            raise CoframeVerificationError(name, detail)

    # substitution table inverts the coframe definitions
    for name in ("omega", "omega1", "theta2", "phi2"):
        image = forms[name].rewrite(sub, frame)
        record(f"substitution inverts {name}",
               _form_vanishes(model, image - frame.gen(name), seed_shift=31))

    lam = Var(model.table["lam"])
    g = frame.gen

    # first structure identity: d(omega) + omega1^omega1c + omega^phi = 0
    domega = forms["omega"].d().rewrite(sub, frame)
    first = (domega + g("omega1").wedge(g("omega1c"))
             + g("omega").wedge(g("phi2") + g("phi2c")))
    record("contact form structure identity",
           _form_vanishes(model, first, seed_shift=37))

    # second structure identity, solved for the fiber correction form
    domega1 = forms["omega1"].d().rewrite(sub, frame)
    residue = (domega1 - g("theta2").wedge(g("omega1c"))
               + g("omega1").wedge(g("phi2"))
               + g("omega").wedge(g("dbc"))
               + g("omega").wedge(g("omega1")).scale(lam * HALF))
    record("coframe structure identity holds modulo the contact form",
           _form_vanishes(model, residue.reduce_mod(["omega"]), seed_shift=41))
    sigma = frame.zero(1)
    for gen in frame.generators:
        if gen.name == "omega":
            continue
        coeff = residue.coefficient(("omega", gen.name))
        if coeff != ZERO:
            sigma = sigma - frame.gen(gen.name).scale(coeff)
    record("fiber correction reconstructs the identity",
           _form_vanishes(model,
                          residue + g("omega").wedge(sigma), seed_shift=43))
    stray = sigma.generators_present() & {"db", "dbc", "dlam"}
    record("fiber correction uses only coframe covectors", not stray,
           f"unexpected covectors {sorted(stray)}")
    sigma_at_b0 = sigma.substitute_scalars(
        {model.table["b"]: ZERO, model.table["bb"]: ZERO})
    record("fiber correction vanishes at b=0",
           _form_vanishes(model, sigma_at_b0, seed_shift=47))

    # final substitution: express the fiber differentials through the
    # connection forms (db_conj = phi1 - (lam/2) omega1 - sigma)
    full_sub = dict(sub)
    full_sub["dbc"] = g("phi1") - g("omega1").scale(lam * HALF) - sigma
    full_sub["db"] = full_sub["dbc"].conj()

    return TubeCoframe(model, ambient, frame, forms, full_sub, sigma, checks)


# ---------------------------------------------------------------------------
# curvature coefficients


@dataclass
class CurvatureVerdict:
    theta2_2bar1: Expr
    c: Expr
    theta2_21_gamma0: Expr
    theta2_21_final: Expr
    is_final_zero: str          # "zero" | "nonzero" | "inconclusive"
    cartan_obstruction: bool
    flatness: str               # "not_flat" | "necessary_condition_passed"


def gamma0_bindings(table: VariableTable) -> dict:
    return {table[name]: lift(value) for name, value in GAMMA0.items()
            if name in table} | {table["bb"]: ZERO}


def restrict_to_section(e: Expr, table: VariableTable) -> Expr:
    return substitute(e, gamma0_bindings(table))


def torsion_form(cf: TubeCoframe) -> FormExpr:
    """The torsion 2-form of the adapted coframe, in coframe coordinates."""
    g = cf.gen
    dtheta2 = cf.rewrite(cf.forms_ambient["theta2"].d())
    return (dtheta2 + g("theta2").wedge(g("phi2") - g("phi2c"))
            - g("omega1").wedge(g("phi1")))


def expected_theta2_2bar1(model: TubeModel) -> Expr:
    """Closed form of the torsion coefficient at theta2^omega1c with
    general fiber coordinates."""
    t = model.table
    u, a, bb = Var(t["u"]), Var(t["a"]), Var(t["bb"])
    rho11, rho111 = model.d("rho11"), model.d("rho111")
    s_fn, s1 = model.d("S"), model.d("S1")
    return normalize(-a * s1 * (u * rho11) ** Fraction(-1, 2) / s_fn
                     + 3 * bb + a * rho111 * (u * rho11 ** 3) ** Fraction(-1, 2))


def expected_theta2_21_gamma0(model: TubeModel) -> Expr:
    """Closed form of the torsion coefficient at theta2^omega1 on the
    reference section."""
    rho11, rho111 = model.d("rho11"), model.d("rho111")
    s_fn, s1 = model.d("S"), model.d("S1")
    return normalize(-s1 * rho11 ** Fraction(-1, 2) / s_fn
                     - rho111 * rho11 ** Fraction(-3, 2))


def direct_final_coefficient(model: TubeModel) -> Expr:
    """Independent scalar-calculus route to the final normalized torsion
    coefficient on the reference section (no exterior algebra involved)."""
    t1, t2 = model.table["t1"], model.table["t2"]
    rho11, rho12 = model.d("rho11"), model.d("rho12")
    rho111 = model.d("rho111")
    s_fn, s1 = model.d("S"), model.d("S1")
    a1 = normalize(s1 * rho11 ** Fraction(-1, 2) / s_fn)
    a2 = normalize(rho111 * rho11 ** Fraction(-3, 2))
    ratio = rho12 / rho11
    bracket1 = ratio * differentiate(a1, t1) - differentiate(a1, t2)
    bracket2 = ratio * differentiate(a2, t1) - differentiate(a2, t2)
    return normalize((bracket1 - bracket2) / (3 * s_fn)
                     - a1 * Fraction(11, 6) - a2 * Fraction(1, 6))


def paper_example_final_closed_form(model: TubeModel) -> Expr:
    """The printed closed-form value for the explicit example."""
    t1, t2 = Var(model.table["t1"]), Var(model.table["t2"])
    w = (1 - 12 * t1 * t2)
    return normalize(-12 * t2 * w ** Fraction(-3, 4) / (1 - w ** HALF))


def curvature_coefficients(cf: TubeCoframe) -> CurvatureVerdict:
    """Extract the two torsion coefficients and the final normalized
    coefficient on the reference section, with a tri-state zero verdict."""
    model = cf.model
    table = model.table
    g = cf.gen
    torsion = torsion_form(cf)

    theta2_2bar1 = torsion.coefficient(("theta2", "omega1c"))
    c = normalize(theta2_2bar1 / 3)
    theta2_21 = torsion.coefficient(("theta2", "omega1"))
    theta2_21_gamma0 = restrict_to_section(theta2_21, table)

    dc = cf.rewrite(cf.ambient.d_scalar(c))
    tilde = (torsion - dc.wedge(g("omega1"))
             + g("theta2").wedge(g("omega1")).scale(2 * conjugate(c))
             - g("theta2").wedge(g("omega1c")).scale(3 * c))
    for word in tilde.terms:
        names = tilde.word_names(word)
        if "dlam" in names and "omega" not in names:
            raise CoframeVerificationError(
                "inert covector escaped the contact direction", str(names))
    tilde0 = tilde.substitute_scalars(gamma0_bindings(table))
    final = tilde0.coefficient(("theta2", "omega1"))

    t_box = {k: v for k, v in model.box.items()}
    try:
        zero = is_identically_zero(final, t_box, trials=model.trials,
                                   seed=model.seed + 53, tol=model.tol)
        state = "zero" if zero else "nonzero"
    except ZeroTestInconclusiveError:
        state = "inconclusive"
    return CurvatureVerdict(
        theta2_2bar1=theta2_2bar1,
        c=c,
        theta2_21_gamma0=theta2_21_gamma0,
        theta2_21_final=normalize(final),
        is_final_zero=state,
        cartan_obstruction=(state == "nonzero"),
        flatness="not_flat" if state == "nonzero" else "necessary_condition_passed",
    )


def flatness_probe(verdict: CurvatureVerdict) -> dict:
    """Interpret the final coefficient. A nonzero value obstructs both
    flatness and the connection property; zero only passes a necessary
    condition (other curvature components are not computed here)."""
    if verdict.is_final_zero == "nonzero":
        return {
            "flat": False,
            "conclusion": "not flat; not locally equivalent to the model; "
                          "the parallelism is not a Cartan connection",
        }
    if verdict.is_final_zero == "zero":
        return {
            "flat": None,
            "conclusion": "necessary condition passed; flatness NOT concluded "
                          "(remaining curvature components not computed)",
        }
    return {"flat": None,
            "conclusion": "inconclusive zero test; no claim made"}


# ---------------------------------------------------------------------------
# full pipeline


def analyze(rho, box: dict, trials: int = 32, seed: int = 0,
            tol: float = 1e-8, levi_points: int = 8) -> Report:
    """End-to-end tube analysis: hypotheses, Levi rank, coframe identities,
    curvature coefficients, and the flatness verdict."""
    start = time.monotonic()
    report = Report("tube hypersurface analysis")
    report.config = {"trials": trials, "seed": seed, "tol": tol,
                     "box": {k: list(v) for k, v in box.items()}}
    try:
        model = tube_from_rho(rho, box, trials=trials, seed=seed, tol=tol)
    except TubeHypothesisError as exc:
        report.add(f"hypothesis:{exc.hypothesis}", False, {"reason": str(exc)})
        report.timing_s = time.monotonic() - start
        return report
    hypotheses_elapsed = time.monotonic() - start
    for name in ("monge_ampere", "positivity", "twonondegenerate"):
        report.add(f"hypothesis:{name}", True)
    report.checks[-1].timing_s = hypotheses_elapsed

    rng = random.Random(seed + 71)
    pts = [(rng.uniform(*box["t1"]), rng.uniform(*box["t2"]))
           for _ in range(levi_points)]
    levi = model.levi_rank(pts)
    ranks_ok = all(entry["rank"] == 1 for entry in levi)
    report.add("levi rank 1 at sampled points", ranks_ok,
               {"points": len(levi),
                "max_relative_smallest_eigenvalue":
                    max(e["relative_smallest_eigenvalue"] for e in levi)})

    coframe_start = time.monotonic()
    try:
        cf = build_coframe(model)
    except CoframeVerificationError as exc:
        report.add("coframe construction", False, {"identity": exc.identity})
        report.timing_s = time.monotonic() - start
        return report
    coframe_elapsed = time.monotonic() - coframe_start
    for name, ok in cf.checks:
        report.add(f"coframe:{name}", ok)
    report.checks[-1].timing_s = coframe_elapsed

    coeff_start = time.monotonic()
    verdict = curvature_coefficients(cf)
    coeff_elapsed = time.monotonic() - coeff_start
    probe = flatness_probe(verdict)
    sample_rng = random.Random(seed + 97)
    samples = []
    for _ in range(4):
        pt = {"t1": sample_rng.uniform(*box["t1"]),
              "t2": sample_rng.uniform(*box["t2"])}
        try:
            val = evaluate(verdict.theta2_21_final, pt)
        except DomainEvalError:
            continue
        samples.append({"t1": round(pt["t1"], 6), "t2": round(pt["t2"], 6),
                        "value": f"{val.real:.10g}{val.imag:+.3g}j"})
    report.add("curvature coefficients", True, {
        "theta2_2bar1": to_text(verdict.theta2_2bar1),
        "c": to_text(verdict.c),
        "theta2_21_gamma0": to_text(verdict.theta2_21_gamma0),
        "theta2_21_final": to_text(verdict.theta2_21_final),
        "theta2_21_final_samples": samples,
    })
    report.checks[-1].timing_s = coeff_elapsed
    status = "pass" if verdict.is_final_zero != "inconclusive" else "inconclusive"
    report.add("flatness verdict", status, {
        "final_coefficient_zero": verdict.is_final_zero,
        "cartan_obstruction": verdict.cartan_obstruction,
        "flatness": verdict.flatness,
        "conclusion": probe["conclusion"],
    })
    report.timing_s = time.monotonic() - start
    return report
