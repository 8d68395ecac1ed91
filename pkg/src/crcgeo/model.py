"""The homogeneous model: orthogonal-type matrix group, its Lie algebra,
isotropy subgroups, Maurer-Cartan form and structure equations.

The model group lives on C^5 and preserves a symmetric bilinear form S
and a Hermitian form T (plus the real form J = diag(1,1,1,-1,-1) in the
original coordinates).  The connection matrix is assembled from six
scalar-valued 1-forms on the model chart; ``verify_structure_equations``
certifies d(MC) = MC /\\ MC entrywise, and ``verify_adjoint_transforms``
certifies the closed-form component transformation under both isotropy
subgroup families.
"""

from __future__ import annotations

import time
from fractions import Fraction

from .scalars import (
    ONE,
    Var,
    VariableTable,
    conjugate,
    is_zero_expr,
    lift,
)
from .forms import Chart, FormExpr, g_imaginary, g_pair
from .matrices import FMatrix, SMatrix
from .report import Report

HALF = Fraction(1, 2)


# ---------------------------------------------------------------------------
# constant matrices


def bilinear_matrices() -> tuple[SMatrix, SMatrix, SMatrix]:
    """The defining symmetric form S, Hermitian form T, and real form J."""
    s = SMatrix([
        [0, 0, 0, 0, 1],
        [0, 0, 0, 1, 0],
        [0, 0, 1, 0, 0],
        [0, 1, 0, 0, 0],
        [1, 0, 0, 0, 0],
    ])
    t = SMatrix([
        [0, 0, 0, 1, 0],
        [0, 0, 0, 0, 1],
        [0, 0, 1, 0, 0],
        [1, 0, 0, 0, 0],
        [0, 1, 0, 0, 0],
    ])
    j = SMatrix([
        [1, 0, 0, 0, 0],
        [0, 1, 0, 0, 0],
        [0, 0, 1, 0, 0],
        [0, 0, 0, -1, 0],
        [0, 0, 0, 0, -1],
    ])
    return s, t, j


# ---------------------------------------------------------------------------
# Lie algebra elements


def algebra_element(alpha, beta, gamma, sigma, delta, rho_alg) -> SMatrix:
    """Generic Lie algebra element; delta and rho_alg must be imaginary."""
    alpha, beta, gamma, sigma = map(lift, (alpha, beta, gamma, sigma))
    delta, rho_alg = lift(delta), lift(rho_alg)
    for name, x in (("delta", delta), ("rho_alg", rho_alg)):
        if not is_zero_expr(conjugate(x) + x):
            from .scalars import RealityViolationError
            raise RealityViolationError(f"{name} must be imaginary-valued")
    ab, bb, gb, sb = map(conjugate, (alpha, beta, gamma, sigma))
    return SMatrix([
        [alpha, beta, gamma, delta, 0],
        [bb, ab, gb, 0, -delta],
        [sigma, sb, 0, -gb, -gamma],
        [rho_alg, 0, -sb, -ab, -beta],
        [0, -rho_alg, -sigma, -bb, -alpha],
    ])


def algebra_params(m: SMatrix) -> dict:
    """Read the six parameters off a matrix in algebra pattern position."""
    return {
        "alpha": m.entry(1, 1),
        "beta": m.entry(1, 2),
        "gamma": m.entry(1, 3),
        "delta": m.entry(1, 4),
        "sigma": m.entry(3, 1),
        "rho_alg": m.entry(4, 1),
    }


def matches_algebra_pattern(m: SMatrix) -> bool:
    """True iff m equals the algebra element rebuilt from its read-off
    parameters (all 25 entries, exact)."""
    p = algebra_params(m)
    rebuilt = algebra_element(p["alpha"], p["beta"], p["gamma"], p["sigma"],
                              p["delta"], p["rho_alg"])
    return (m - rebuilt).is_zero()


def bracket(x: SMatrix, y: SMatrix) -> SMatrix:
    return (x @ y) - (y @ x)


# ---------------------------------------------------------------------------
# isotropy subgroups


def subgroup_element(kind: str, *, A=None, B=None, Lam=None) -> SMatrix:
    """Element of the isotropy subgroup family H1 (diagonal, parameter A
    in C^*) or H2 (unipotent, parameters B in C and Lam imaginary)."""
    if kind == "H1":
        if A is None:
            raise ValueError("H1 needs parameter A")
        A = lift(A)
        if is_zero_expr(A):
            raise ValueError("H1 parameter A must be nonzero")
        Ab = conjugate(A)
        return SMatrix([
            [A, 0, 0, 0, 0],
            [0, Ab, 0, 0, 0],
            [0, 0, 1, 0, 0],
            [0, 0, 0, Ab ** -1, 0],
            [0, 0, 0, 0, A ** -1],
        ])
    if kind == "H2":
        if B is None or Lam is None:
            raise ValueError("H2 needs parameters B and Lam")
        B, Lam = lift(B), lift(Lam)
        Bb = conjugate(B)
        bb2 = B * Bb * HALF
        return SMatrix([
            [1, 0, 0, 0, 0],
            [0, 1, 0, 0, 0],
            [B, Bb, 1, 0, 0],
            [Lam - bb2, Bb * Bb * -HALF, -Bb, 1, 0],
            [B * B * -HALF, -Lam - bb2, -B, 0, 1],
        ])
    raise ValueError(f"unknown subgroup kind {kind!r}")


def group_conditions_hold(c: SMatrix) -> bool:
    """c^t S c = S, c^t T conj(c) = T and det c = 1, all exact."""
    s, t, _ = bilinear_matrices()
    ct = c.transpose()
    return ((ct @ s @ c) - s).is_zero() and ((ct @ t @ c.conj()) - t).is_zero() \
        and is_zero_expr(c.det() - ONE)


# ---------------------------------------------------------------------------
# model chart and Maurer-Cartan form

_GEN_ORDER = ("theta", "theta1", "theta1c", "theta2", "theta2c",
              "phi1", "phi1c", "phi2", "phi2c", "psi")


def model_table() -> VariableTable:
    table = VariableTable()
    table.pair("B", "Bb")
    table.imaginary("Lam")
    table.pair("A", "Ab")
    return table


def structure_rules(chart: Chart) -> dict[str, FormExpr]:
    """The six structure equations as d-rules on the model coframe."""
    g = chart.gen
    w = lambda x, y: g(x).wedge(g(y))
    return {
        "theta": w("theta1", "theta1c").scale(-1)
                 - g("theta").wedge(g("phi2") + g("phi2c")),
        "theta1": w("theta2", "theta1c") - w("theta1", "phi2") - w("theta", "phi1"),
        "theta2": g("theta2").wedge(g("phi2") - g("phi2c")).scale(-1)
                  + w("theta1", "phi1"),
        "phi1": w("theta2", "phi1c").scale(-1) + w("theta1", "psi")
                + w("phi1", "phi2c"),
        "phi2": w("theta2", "theta2c") + w("theta1", "phi1c") + w("theta", "psi"),
        "psi": w("phi1", "phi1c").scale(-1)
               + g("psi").wedge(g("phi2") + g("phi2c")),
    }


def model_chart(rule_overrides: dict | None = None, check: bool = True) -> Chart:
    """Model coframe chart with the structure equations installed.

    ``rule_overrides`` replaces named d-rules (used by mutation tests);
    construction then skips the d-squared validation.
    """
    table = model_table()
    gens = [g_imaginary("theta")]
    for a, b in [("theta1", "theta1c"), ("theta2", "theta2c"),
                 ("phi1", "phi1c"), ("phi2", "phi2c")]:
        gens.extend(g_pair(a, b))
    gens.append(g_imaginary("psi"))
    chart = Chart(table, gens)
    rules = structure_rules(chart)
    if rule_overrides:
        rules.update(rule_overrides)
        check = False
    zero1 = chart.zero(1)
    scalar_rules = {name: zero1 for name in ("B", "Bb", "Lam", "A", "Ab")}
    chart.install_rules(rules, scalar_rules, check=check)
    return chart


def connection_matrix(chart: Chart, w: FormExpr, w1: FormExpr, t2: FormExpr,
                      p1: FormExpr, p2: FormExpr, ps: FormExpr) -> FMatrix:
    """Arrange six 1-forms in the Lie-algebra-valued matrix pattern."""
    z = chart.zero(1)
    w1c, t2c, p1c, p2c = w1.conj(), t2.conj(), p1.conj(), p2.conj()
    return FMatrix(chart, [
        [p2, t2, w1, w, z],
        [t2c, p2c, w1c, z, -w],
        [p1c, p1, z, -w1c, -w1],
        [ps, z, -p1, -p2c, -t2],
        [z, -ps, -p1c, -t2c, -p2],
    ])


def maurer_cartan(chart: Chart | None = None) -> FMatrix:
    chart = chart or model_chart()
    g = chart.gen
    return connection_matrix(chart, g("theta"), g("theta1"), g("theta2"),
                             g("phi1"), g("phi2"), g("psi"))


def component_positions() -> dict[str, tuple[int, int]]:
    """Where each independent component sits in the matrix (1-based)."""
    return {"w": (1, 4), "w1": (1, 3), "t2": (1, 2),
            "p2": (1, 1), "p1": (3, 2), "ps": (4, 1)}


# ---------------------------------------------------------------------------
# verification suites


def verify_structure_equations(chart: Chart | None = None) -> Report:
    """d(MC) - MC /\\ MC entrywise; all 25 entries must vanish exactly."""
    start = time.monotonic()
    chart = chart or model_chart()
    mc = maurer_cartan(chart)
    dmc = mc.d()
    sq = mc.wedge_square()
    report = Report("model structure equations")
    for i in range(5):
        for j in range(5):
            diff = dmc[i][j] - sq[i][j]
            ok = diff.is_structurally_zero() or diff.certify_zero()
            report.add(f"entry({i + 1},{j + 1})", ok,
                       {} if ok else {"residual": repr(diff)})
    report.timing_s = time.monotonic() - start
    return report


def h2_transform_formulas(chart: Chart) -> dict[str, FormExpr]:
    """Closed-form components of the unipotent-conjugated connection."""
    g = chart.gen
    B = Var(chart.table["B"])
    Bb = Var(chart.table["Bb"])
    Lam = Var(chart.table["Lam"])
    bb2 = B * Bb * HALF
    w, w1, t2, p1, p2, ps = (g("theta"), g("theta1"), g("theta2"),
                             g("phi1"), g("phi2"), g("psi"))
    w1c, t2c, p1c, p2c = w1.conj(), t2.conj(), p1.conj(), p2.conj()
    return {
        "w": w,
        "w1": w1 + w.scale(Bb),
        "t2": t2 - w1.scale(Bb) - w.scale(Bb * Bb * HALF),
        "p1": p1 - w1.scale(Lam + bb2) - w1c.scale(Bb * Bb * HALF)
              + t2.scale(B) - w.scale(Lam * Bb) + p2c.scale(Bb),
        "p2": p2 - w1.scale(B) - w.scale(Lam + bb2),
        "ps": ps - w1.scale(Lam * B) - w1c.scale(Lam * Bb)
              + t2.scale(B * B * HALF) - t2c.scale(Bb * Bb * HALF)
              - w.scale(Lam * Lam) + p1.scale(B) - p1c.scale(Bb)
              + p2.scale(Lam - bb2) + p2c.scale(Lam + bb2),
    }


def h1_transform_formulas(chart: Chart) -> dict[str, FormExpr]:
    """Closed-form components of the diagonally-conjugated connection."""
    g = chart.gen
    A = Var(chart.table["A"])
    Ab = Var(chart.table["Ab"])
    return {
        "w": g("theta").scale(A * Ab),
        "w1": g("theta1").scale(A),
        "t2": g("theta2").scale(A / Ab),
        "p1": g("phi1").scale(1 / Ab),
        "p2": g("phi2"),
        "ps": g("psi").scale(1 / (A * Ab)),
    }


def adjoint_components(chart: Chart, h: SMatrix) -> dict[str, FormExpr]:
    """Components of h (MC) h^-1 read off the matrix pattern, after
    checking the full 25-entry pattern consistency."""
    mc = maurer_cartan(chart)
    hinv = _invert_group_element(h)
    conj = mc.conjugated_by(h, hinv)
    comps = {name: conj.entry(i, j) for name, (i, j) in component_positions().items()}
    pattern = connection_matrix(chart, comps["w"], comps["w1"], comps["t2"],
                                comps["p1"], comps["p2"], comps["ps"])
    for i in range(1, 6):
        for j in range(1, 6):
            diff = conj.entry(i, j) - pattern.entry(i, j)
            if not (diff.is_structurally_zero() or diff.certify_zero()):
                raise ValueError(f"conjugated connection broke pattern at ({i},{j})")
    return comps


def _invert_group_element(h: SMatrix) -> SMatrix:
    """Inverse via the bilinear form: h^-1 = S h^t S for group elements."""
    s, _, _ = bilinear_matrices()
    hinv = s @ h.transpose() @ s
    if not ((h @ hinv) - SMatrix.identity()).is_zero():
        raise ValueError("matrix is not a group element")
    return hinv


def verify_adjoint_transforms(chart: Chart | None = None,
                              h2_formulas: dict | None = None,
                              h1_formulas: dict | None = None) -> Report:
    """Conjugation by generic subgroup elements matches the printed
    component formulas exactly, for both subgroup families."""
    start = time.monotonic()
    chart = chart or model_chart()
    table = chart.table
    B, Lam, A = Var(table["B"]), Var(table["Lam"]), Var(table["A"])
    report = Report("adjoint transformation formulas")

    h2 = subgroup_element("H2", B=B, Lam=Lam)
    comps2 = adjoint_components(chart, h2)
    formulas2 = h2_formulas or h2_transform_formulas(chart)
    for name in ("w", "w1", "t2", "p1", "p2", "ps"):
        diff = comps2[name] - formulas2[name]
        ok = diff.is_structurally_zero() or diff.certify_zero()
        report.add(f"unipotent:{name}", ok, {} if ok else {"residual": repr(diff)})

    h1 = subgroup_element("H1", A=A)
    comps1 = adjoint_components(chart, h1)
    formulas1 = h1_formulas or h1_transform_formulas(chart)
    for name in ("w", "w1", "t2", "p1", "p2", "ps"):
        diff = comps1[name] - formulas1[name]
        ok = diff.is_structurally_zero() or diff.certify_zero()
        report.add(f"diagonal:{name}", ok, {} if ok else {"residual": repr(diff)})

    report.timing_s = time.monotonic() - start
    return report


# ---------------------------------------------------------------------------
# orbit hypersurface membership


def gamma_membership(z, side: str, tol: float = 1e-10) -> bool:
    """Membership test for the two hypersurface orbits in the original
    projective coordinates: isotropy of both quadratic forms plus the sign
    of Re(z4) Im(z5) - Re(z5) Im(z4)."""
    if side not in ("+", "-"):
        raise ValueError("side must be '+' or '-'")
    zs = [complex(x) for x in z]
    if len(zs) != 5:
        raise ValueError("expected 5 homogeneous coordinates")
    norm = max(abs(x) for x in zs)
    if norm == 0:
        raise ValueError("zero vector is not a projective point")
    zs = [x / norm for x in zs]
    sgn = [1, 1, 1, -1, -1]
    re = [x.real for x in zs]
    im = [x.imag for x in zs]
    q_re = sum(s * x * x for s, x in zip(sgn, re))
    q_im = sum(s * x * x for s, x in zip(sgn, im))
    q_mix = sum(s * x * y for s, x, y in zip(sgn, re, im))
    if max(abs(q_re), abs(q_im), abs(q_mix)) > tol:
        return False
    orient = re[3] * im[4] - re[4] * im[3]
    return orient > tol if side == "+" else orient < -tol
