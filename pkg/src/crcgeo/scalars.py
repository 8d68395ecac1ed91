"""Exact symbolic scalars over Q(i) with reality-tagged variables.

Expressions are immutable trees built from rational-complex constants,
variables, sums, products and rational powers.  ``normalize`` flattens a
tree into a sum of monomials whose atoms are variables and opaque power
bases (radicals ``base**(p/q)`` and inverted polynomials ``base**(-k)``).
Radical rewrites are deliberately light: the integer-part split
``base**e -> base**floor(e) * base**(e - floor(e))`` for ``e >= 1``,
prime factorization of positive rational radicands, and a recombination
pass that lifts monomial groups divisible by a radical base into the next
power of the atom (which keeps derivative cascades of closed-form
radicals in factored shape).  No general algebraic-extension engine is
attempted; the normal form is canonical on the Laurent-polynomial
fragment, and everywhere it is deterministic, idempotent and
evaluation-preserving.

Zero testing is randomized numeric sampling over a caller-supplied box
(``is_identically_zero``).  ``certify_zero`` is a sound structural fast
path: it clears all denominators and radical offsets by a monomial that
is nonvanishing wherever the expression is defined, so a surviving zero
certifies the identity exactly.  A ``False`` from ``certify_zero`` only
means "not proven", never "nonzero".

Reality tags drive conjugation: ``real``/``positive_real`` variables are
fixed, ``imaginary`` ones negate, ``unit_modulus`` ones invert, and
``complex_paired`` ones swap with their partner.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

REAL = "real"
IMAGINARY = "imaginary"
UNIT_MODULUS = "unit_modulus"
COMPLEX_PAIRED = "complex_paired"
POSITIVE_REAL = "positive_real"

REALITIES = (REAL, IMAGINARY, UNIT_MODULUS, COMPLEX_PAIRED, POSITIVE_REAL)

_RESERVED_NAMES = {"i", "sqrt"}


class ExprError(Exception):
    """Base error for the scalar kernel."""


class ParseError(ExprError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class UndeclaredIdentifierError(ParseError):
    def __init__(self, name: str, offset: int):
        super().__init__(f"undeclared identifier '{name}'", offset)
        self.name = name


class DomainEvalError(ExprError):
    """Raised when numeric evaluation leaves the expression's domain."""


class RealityViolationError(ExprError):
    """Raised when a binding or substitution contradicts a reality tag."""


class ZeroTestInconclusiveError(ExprError):
    """Raised when every sampled point hit a singularity."""


# ---------------------------------------------------------------------------
# rational-complex constants


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise TypeError(f"expected int or Fraction, got {type(x).__name__}")


@dataclass(frozen=True)
class QC:
    """Complex number with exact rational real and imaginary parts."""

    re: Fraction
    im: Fraction

    @staticmethod
    def of(re, im=0) -> "QC":
        return QC(_as_fraction(re), _as_fraction(im))

    def __add__(self, other: "QC") -> "QC":
        return QC(self.re + other.re, self.im + other.im)

    def __sub__(self, other: "QC") -> "QC":
        return QC(self.re - other.re, self.im - other.im)

    def __mul__(self, other: "QC") -> "QC":
        return QC(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    def __neg__(self) -> "QC":
        return QC(-self.re, -self.im)

    def conjugate(self) -> "QC":
        return QC(self.re, -self.im)

    def inverse(self) -> "QC":
        n = self.re * self.re + self.im * self.im
        if n == 0:
            raise DomainEvalError("division by zero constant")
        return QC(self.re / n, -self.im / n)

    def pow_int(self, k: int) -> "QC":
        base = self if k >= 0 else self.inverse()
        result = QC_ONE
        for _ in range(abs(k)):
            result = result * base
        return result

    @property
    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    @property
    def is_one(self) -> bool:
        return self.re == 1 and self.im == 0

    @property
    def is_real(self) -> bool:
        return self.im == 0

    def to_complex(self) -> complex:
        return complex(float(self.re), float(self.im))


QC_ZERO = QC(Fraction(0), Fraction(0))
QC_ONE = QC(Fraction(1), Fraction(0))
QC_I = QC(Fraction(0), Fraction(1))


# ---------------------------------------------------------------------------
# variables


@dataclass(frozen=True)
class Variable:
    name: str
    reality: str
    partner: str | None = None

    def __repr__(self):
        return f"Variable({self.name}:{self.reality})"


class VariableTable:
    """Registry of declared variables; names are unique within a table."""

    def __init__(self):
        self._vars: dict[str, Variable] = {}

    def _declare(self, name: str, reality: str, partner: str | None = None) -> Variable:
        if not name or not (name[0].isalpha() and name.replace("_", "a").isalnum()):
            raise ExprError(f"invalid variable name '{name}'")
        if name in _RESERVED_NAMES:
            raise ExprError(f"'{name}' is reserved")
        if name in self._vars:
            raise ExprError(f"variable '{name}' already declared")
        v = Variable(name, reality, partner)
        self._vars[name] = v
        return v

    def real(self, *names: str) -> list[Variable]:
        return [self._declare(n, REAL) for n in names]

    def positive(self, *names: str) -> list[Variable]:
        return [self._declare(n, POSITIVE_REAL) for n in names]

    def imaginary(self, *names: str) -> list[Variable]:
        return [self._declare(n, IMAGINARY) for n in names]

    def unit_modulus(self, *names: str) -> list[Variable]:
        return [self._declare(n, UNIT_MODULUS) for n in names]

    def pair(self, name: str, partner: str) -> tuple[Variable, Variable]:
        if name == partner:
            raise ExprError("a paired variable needs a distinct partner")
        v = self._declare(name, COMPLEX_PAIRED, partner)
        w = self._declare(partner, COMPLEX_PAIRED, name)
        return v, w

    def __getitem__(self, name: str) -> Variable:
        return self._vars[name]

    def __contains__(self, name: str) -> bool:
        return name in self._vars

    def get(self, name: str) -> Variable | None:
        return self._vars.get(name)

    def variables(self) -> list[Variable]:
        return list(self._vars.values())

    def partner_of(self, v: Variable) -> Variable:
        if v.reality != COMPLEX_PAIRED:
            raise ExprError(f"{v.name} is not complex-paired")
        return self._vars[v.partner]


# ---------------------------------------------------------------------------
# expression trees

NumberLike = Union[int, Fraction, QC, "Expr"]


class Expr:
    """Immutable symbolic expression node (hash cached per node)."""

    __slots__ = ("_h",)

    def __add__(self, other: NumberLike) -> "Expr":
        return Add((self, lift(other)))

    def __radd__(self, other: NumberLike) -> "Expr":
        return Add((lift(other), self))

    def __sub__(self, other: NumberLike) -> "Expr":
        return Add((self, Mul((MINUS_ONE, lift(other)))))

    def __rsub__(self, other: NumberLike) -> "Expr":
        return Add((lift(other), Mul((MINUS_ONE, self))))

    def __mul__(self, other: NumberLike) -> "Expr":
        return Mul((self, lift(other)))

    def __rmul__(self, other: NumberLike) -> "Expr":
        return Mul((lift(other), self))

    def __truediv__(self, other: NumberLike) -> "Expr":
        return Mul((self, Pow(lift(other), Fraction(-1))))

    def __rtruediv__(self, other: NumberLike) -> "Expr":
        return Mul((lift(other), Pow(self, Fraction(-1))))

    def __neg__(self) -> "Expr":
        return Mul((MINUS_ONE, self))

    def __pow__(self, e) -> "Expr":
        return Pow(self, Fraction(e))

    def __hash__(self):
        h = self._h
        if h is None:
            h = self._compute_hash()
            self._h = h
        return h


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value: QC):
        self._h = None
        self.value = value

    def _compute_hash(self):
        return hash(("C", self.value.re, self.value.im))

    def __eq__(self, other):
        return self is other or (type(other) is Const and self.value == other.value)

    def __repr__(self):
        return f"Const({qc_text(self.value)})"

    __hash__ = Expr.__hash__


class Var(Expr):
    __slots__ = ("var",)

    def __init__(self, var: Variable):
        self._h = None
        self.var = var

    def _compute_hash(self):
        return hash(("V", self.var.name))

    def __eq__(self, other):
        return self is other or (type(other) is Var and self.var == other.var)

    def __repr__(self):
        return f"Var({self.var.name})"

    __hash__ = Expr.__hash__


class Add(Expr):
    __slots__ = ("terms",)

    def __init__(self, terms: tuple):
        self._h = None
        self.terms = terms

    def _compute_hash(self):
        return hash(("A", self.terms))

    def __eq__(self, other):
        if self is other:
            return True
        return (type(other) is Add and hash(self) == hash(other)
                and self.terms == other.terms)

    def __repr__(self):
        return "Add(" + ", ".join(map(repr, self.terms)) + ")"

    __hash__ = Expr.__hash__


class Mul(Expr):
    __slots__ = ("factors",)

    def __init__(self, factors: tuple):
        self._h = None
        self.factors = factors

    def _compute_hash(self):
        return hash(("M", self.factors))

    def __eq__(self, other):
        if self is other:
            return True
        return (type(other) is Mul and hash(self) == hash(other)
                and self.factors == other.factors)

    def __repr__(self):
        return "Mul(" + ", ".join(map(repr, self.factors)) + ")"

    __hash__ = Expr.__hash__


class Pow(Expr):
    __slots__ = ("base", "exp")

    def __init__(self, base: Expr, exp):
        self._h = None
        self.base = base
        self.exp = exp if isinstance(exp, Fraction) else Fraction(exp)

    def _compute_hash(self):
        return hash(("P", self.base, self.exp))

    def __eq__(self, other):
        if self is other:
            return True
        return (type(other) is Pow and hash(self) == hash(other)
                and self.exp == other.exp and self.base == other.base)

    def __repr__(self):
        return f"Pow({self.base!r}, {self.exp})"

    __hash__ = Expr.__hash__


ZERO = Const(QC_ZERO)
ONE = Const(QC_ONE)
I = Const(QC_I)
MINUS_ONE = Const(QC(Fraction(-1), Fraction(0)))


def lift(x: NumberLike) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, Fraction)):
        return Const(QC.of(x))
    if isinstance(x, QC):
        return Const(x)
    raise TypeError(f"cannot lift {type(x).__name__} into an expression")


def const(re, im=0) -> Expr:
    return Const(QC.of(re, im))


# ---------------------------------------------------------------------------
# normalization to a sum of monomials
#
# A monomial is (coefficient, pows) where pows is a tuple of (atom, exponent)
# sorted by atom key.  Atoms are Var nodes, positive-rational Const bases of
# irrational powers, and canonical non-monomial expressions (sum bases).

_PowsKey = tuple


_SKEY_MEMO: dict = {}
_NF_MEMO: dict = {}
_NORM_MEMO: dict = {}
_CONJ_MEMO: dict = {}
_DIFF_MEMO: dict = {}
_FREEVARS_MEMO: dict = {}


def clear_caches() -> None:
    for memo in (_SKEY_MEMO, _NF_MEMO, _NORM_MEMO, _CONJ_MEMO,
                 _DIFF_MEMO, _FREEVARS_MEMO):
        memo.clear()


def _atom_sort_key(atom: Expr):
    if isinstance(atom, Var):
        return (0, atom.var.name)
    if isinstance(atom, Const):
        return (1, qc_text(atom.value))
    key = _SKEY_MEMO.get(atom)
    if key is None:
        key = (2, _render(atom))
        _SKEY_MEMO[atom] = key
    return key


def _mono_expr(coeff: QC, pows: _PowsKey) -> Expr:
    factors: list[Expr] = []
    for atom, e in pows:
        factors.append(atom if e == 1 else Pow(atom, e))
    if not factors:
        return Const(coeff)
    if not coeff.is_one:
        factors.insert(0, Const(coeff))
    return factors[0] if len(factors) == 1 else Mul(tuple(factors))


def _rebuild(nf: dict) -> Expr:
    items = [(pows, c) for pows, c in nf.items() if not c.is_zero]
    if not items:
        return ZERO
    items.sort(key=lambda it: tuple((_atom_sort_key(a), e) for a, e in it[0]))
    monos = [_mono_expr(c, pows) for pows, c in items]
    return monos[0] if len(monos) == 1 else Add(tuple(monos))


def _nf_add_into(acc: dict, nf: Mapping) -> None:
    for pows, c in nf.items():
        cur = acc.get(pows)
        new = c if cur is None else cur + c
        if new.is_zero:
            acc.pop(pows, None)
        else:
            acc[pows] = new


def _is_sum_atom(atom: Expr) -> bool:
    return not isinstance(atom, (Var, Const))


def _fix_monomial(coeff: QC, powmap: dict) -> dict:
    """Canonicalize one monomial, splitting integer parts off sum-atom powers.

    Returns a normal form (several monomials when a sum base gets expanded).
    """
    if coeff.is_zero:
        return {}
    reduced: dict = {}
    expansions: list[dict] = []
    for atom, e in powmap.items():
        if e == 0:
            continue
        if isinstance(atom, Const) and (e.denominator == 1 or e >= 1 or e < 0):
            # fold integer parts of constant powers into the coefficient
            whole = e.numerator // e.denominator
            coeff = coeff * atom.value.pow_int(whole)
            e = e - whole
            if e == 0:
                continue
        elif _is_sum_atom(atom) and e >= 1:
            n = int(e) if e.denominator == 1 else int(e.numerator // e.denominator)
            base_nf = _nf(atom)
            for _ in range(n):
                expansions.append(base_nf)
            e = e - n
            if e == 0:
                continue
        reduced[atom] = reduced.get(atom, Fraction(0)) + e
    pows = tuple(sorted(((a, e) for a, e in reduced.items() if e != 0),
                        key=lambda it: _atom_sort_key(it[0])))
    result = {pows: coeff}
    for base_nf in expansions:
        result = _nf_mul(result, base_nf)
    return result


def _nf_mul(a: Mapping, b: Mapping) -> dict:
    acc: dict = {}
    for pa, ca in a.items():
        for pb, cb in b.items():
            powmap: dict = {}
            for atom, e in pa:
                powmap[atom] = powmap.get(atom, Fraction(0)) + e
            for atom, e in pb:
                powmap[atom] = powmap.get(atom, Fraction(0)) + e
            _nf_add_into(acc, _fix_monomial(ca * cb, powmap))
    return acc


def _rational_root(x: Fraction, q: int) -> Fraction | None:
    """Exact q-th root of a nonnegative rational, or None."""
    def iroot(n: int) -> int | None:
        if n == 0:
            return 0
        r = round(n ** (1.0 / q))
        for cand in (r - 1, r, r + 1):
            if cand >= 0 and cand ** q == n:
                return cand
        return None

    num = iroot(x.numerator)
    den = iroot(x.denominator)
    if num is None or den is None:
        return None
    return Fraction(num, den)


def _factor_positive_int(n: int) -> list:
    """Prime factorization by trial division; a large leftover cofactor is
    kept unfactored (still a valid atom base)."""
    out = []
    for p in (2, 3, 5, 7, 11, 13):
        while n % p == 0:
            n //= p
            out.append(p)
    q = 17
    while q * q <= n and q < 100000:
        while n % q == 0:
            n //= q
            out.append(q)
        q += 2
    if n > 1:
        out.append(n)
    return out


def _const_pow(c: QC, e: Fraction) -> dict:
    """Normal form of c**e; positive rational bases split into prime-power
    radical atoms so that constant radicals cancel."""
    if e.denominator == 1:
        if c.is_zero and e < 0:
            raise DomainEvalError("zero raised to a negative power")
        return {(): c.pow_int(int(e))} if not (c.is_zero and e > 0) else {}
    if c.is_zero:
        return {}
    if c.is_real and c.re > 0:
        powmap: dict = {}
        for p in _factor_positive_int(c.re.numerator):
            powmap[p] = powmap.get(p, 0) + 1
        for p in _factor_positive_int(c.re.denominator):
            powmap[p] = powmap.get(p, 0) - 1
        coeff = Fraction(1)
        pows = []
        for p in sorted(powmap):
            exp = powmap[p] * e
            whole = int(exp.numerator // exp.denominator)
            frac = exp - whole
            coeff *= Fraction(p) ** whole
            if frac:
                pows.append((Const(QC.of(p)), frac))
        pows.sort(key=lambda it: _atom_sort_key(it[0]))
        return {tuple(pows): QC.of(coeff)}
    # non-positive or non-real constant under a fractional power: opaque atom
    return {((Const(c), e),): QC_ONE}


def _atom_certified_positive(atom: Expr, exp: Fraction) -> bool:
    """True when atom**exp is positive wherever it is defined."""
    if isinstance(atom, Var):
        if atom.var.reality == POSITIVE_REAL:
            return True
        return exp.denominator != 1
    if isinstance(atom, Const):
        return atom.value.is_real and atom.value.re > 0
    return exp.denominator != 1


def _exp_mul_safe(exp: Fraction) -> bool:
    """(x**exp)**r -> x**(exp*r) preserves value-or-error for fractional r."""
    return exp.denominator != 1 or exp.numerator % 2 == 1


def _nf_pow(nf: Mapping, e: Fraction) -> dict:
    if e == 0:
        return {(): QC_ONE}
    if e == 1:
        return dict(nf)
    items = list(nf.items())
    if not items:
        if e < 0:
            raise DomainEvalError("zero raised to a negative power")
        return {}
    if len(items) == 1:
        pows, c = items[0]
        if e.denominator == 1:
            k = int(e)
            powmap = {atom: ex * k for atom, ex in pows}
            return _fix_monomial(c.pow_int(k), powmap)
        # fractional power of a monomial: split off factors that keep
        # value-or-error semantics, bundle the rest into an opaque base
        out = _const_pow(c, e) if not c.is_one else {(): QC_ONE}
        if not c.is_one and not (c.is_real and c.re > 0):
            out = {(): QC_ONE}
            residual_coeff = c
        else:
            residual_coeff = QC_ONE
        residual: dict = {}
        split: dict = {}
        for atom, ex in pows:
            if _atom_certified_positive(atom, ex) or _exp_mul_safe(ex):
                split[atom] = split.get(atom, Fraction(0)) + ex * e
            else:
                residual[atom] = residual.get(atom, Fraction(0)) + ex
        if residual or not residual_coeff.is_one:
            base = _rebuild(_fix_monomial(residual_coeff, residual))
            split[base] = split.get(base, Fraction(0)) + e
        out = _nf_mul(out, _fix_monomial(QC_ONE, split))
        return out
    # a genuine sum
    if e.denominator == 1 and e >= 2:
        acc = dict(nf)
        for _ in range(int(e) - 1):
            acc = _nf_mul(acc, nf)
        return acc
    # negative integer or fractional power: extract content, keep atom
    content_coeff, content_pows, primitive = _extract_content(nf, fractional=e.denominator != 1)
    out = _const_pow(content_coeff, e) if not content_coeff.is_one else {(): QC_ONE}
    powmap: dict = {}
    for atom, ex in content_pows:
        powmap[atom] = powmap.get(atom, Fraction(0)) + ex * e
    powmap[primitive] = powmap.get(primitive, Fraction(0)) + e
    return _nf_mul(out, _fix_monomial(QC_ONE, powmap))


def _extract_content(nf: Mapping, fractional: bool):
    """Factor a sum as content * primitive.

    For integer (negative) powers the content is the leading coefficient and
    the full common atom powers; under fractional powers only certified
    positive content may be pulled out.
    """
    items = sorted(nf.items(), key=lambda it: tuple((_atom_sort_key(a), e) for a, e in it[0]))
    common: dict | None = None
    for pows, _ in items:
        pmap = dict(pows)
        if common is None:
            common = pmap
        else:
            common = {
                a: min(e, pmap[a]) for a, e in common.items()
                if a in pmap and min(e, pmap[a]) != 0
            }
    common = common or {}
    if fractional:
        common = {a: e for a, e in common.items()
                  if _atom_certified_positive(a, e) and (
                      not isinstance(a, Var) or a.var.reality == POSITIVE_REAL)}
        coeff = _positive_rational_content([c for _, c in items])
    else:
        coeff = items[0][1]
    inv = coeff.inverse()
    prim: dict = {}
    for pows, c in items:
        pmap = dict(pows)
        for a, e in common.items():
            pmap[a] = pmap[a] - e
        key = tuple(sorted(((a, e) for a, e in pmap.items() if e != 0),
                           key=lambda it: _atom_sort_key(it[0])))
        prim[key] = inv * c
    primitive = _rebuild(prim)
    content_pows = tuple(sorted(common.items(), key=lambda it: _atom_sort_key(it[0])))
    return coeff, content_pows, primitive


def _positive_rational_content(coeffs: Sequence[QC]) -> QC:
    import math as _math

    nums: list[int] = []
    dens: list[int] = []
    for c in coeffs:
        for part in (c.re, c.im):
            if part != 0:
                nums.append(abs(part.numerator))
                dens.append(part.denominator)
    if not nums:
        return QC_ONE
    g = 0
    for n in nums:
        g = _math.gcd(g, n)
    l = 1
    for d in dens:
        l = l * d // _math.gcd(l, d)
    return QC.of(Fraction(g, l))


def _leading_item(nf: Mapping):
    key = max(nf, key=lambda pows: tuple((_atom_sort_key(a), x) for a, x in pows))
    return key, nf[key]


def _mono_quotient(num_pows, num_coeff, den_pows, den_coeff):
    powmap = dict(num_pows)
    for a, x in den_pows:
        powmap[a] = powmap.get(a, Fraction(0)) - x
    pows = tuple(sorted(((a, x) for a, x in powmap.items() if x != 0),
                        key=lambda it: _atom_sort_key(it[0])))
    return pows, num_coeff * den_coeff.inverse()


def _exact_quotient(nf: Mapping, base: Mapping, max_steps: int = 60):
    """nf / base when the division terminates exactly, else None."""
    remainder = dict(nf)
    quotient: dict = {}
    lead_pows, lead_coeff = _leading_item(base)
    steps = 0
    limit = len(nf) + 4 * len(base) + 8
    while remainder:
        steps += 1
        if steps > max_steps or len(remainder) > limit:
            return None
        rp, rc = _leading_item(remainder)
        qp, qc = _mono_quotient(rp, rc, lead_pows, lead_coeff)
        piece = {qp: qc}
        _nf_add_into(quotient, piece)
        _nf_add_into(remainder, {p: (QC_ZERO - c) for p, c in _nf_mul(piece, base).items()})
    return quotient


def _collapse(nf: dict) -> dict:
    """Lift monomial groups divisible by a radical base into the next
    power of the atom: sum_e P**e Q_e with B | Q_e becomes P**(e+1) (Q_e/B).
    Keeps derivative cascades of closed-form radicals in factored shape."""
    if len(nf) < 2 or len(nf) > 400:
        return nf
    atoms = set()
    for pows, _ in nf.items():
        for a, x in pows:
            if _is_sum_atom(a) and (x < 0 or x.denominator != 1):
                atoms.add(a)
    if not atoms:
        return nf
    changed = True
    while changed:
        changed = False
        for atom in sorted(atoms, key=_atom_sort_key):
            groups: dict = {}
            for pows, c in nf.items():
                exp = Fraction(0)
                rest = []
                for a, x in pows:
                    if a == atom:
                        exp = x
                    else:
                        rest.append((a, x))
                groups.setdefault(exp, {})[tuple(rest)] = c
            exps = sorted(e for e in groups if e < 0)
            if not exps:
                continue
            base_nf = _nf(atom)
            for e in exps:
                quotient = _exact_quotient(groups[e], base_nf)
                if quotient is None:
                    continue
                target = groups.setdefault(e + 1, {})
                _nf_add_into(target, quotient)
                del groups[e]
                changed = True
            if changed:
                rebuilt: dict = {}
                for e, group in groups.items():
                    for rest, c in group.items():
                        powmap = dict(rest)
                        if e != 0:
                            powmap[atom] = e
                        _nf_add_into(rebuilt, _fix_monomial(c, powmap))
                nf = rebuilt
    return nf


def _nf(e: Expr) -> dict:
    cached = _NF_MEMO.get(e)
    if cached is not None:
        return cached
    if isinstance(e, Const):
        out = {} if e.value.is_zero else {(): e.value}
    elif isinstance(e, Var):
        out = {((e, Fraction(1)),): QC_ONE}
    elif isinstance(e, Add):
        acc: dict = {}
        for t in e.terms:
            _nf_add_into(acc, _nf(t))
        out = _collapse(acc)
    elif isinstance(e, Mul):
        acc = {(): QC_ONE}
        for f in e.factors:
            acc = _nf_mul(acc, _nf(f))
            if not acc:
                break
        out = _collapse(acc)
    elif isinstance(e, Pow):
        out = _collapse(_nf_pow(_nf(e.base), e.exp))
    else:
        raise TypeError(f"not an expression: {e!r}")
    _NF_MEMO[e] = out
    return out


def normalize(e: Expr) -> Expr:
    """Canonical sum-of-monomials form; idempotent and evaluation-preserving."""
    cached = _NORM_MEMO.get(e)
    if cached is not None:
        return cached
    result = _rebuild(_nf(e))
    _NORM_MEMO[e] = result
    _NORM_MEMO[result] = result
    return result


def is_zero_expr(e: Expr) -> bool:
    return normalize(e) == ZERO


def certify_zero(e: Expr, budget: int = 200_000) -> bool:
    """Sound structural zero certificate.

    Multiplies by a monomial in the expression's own denominators and
    radical bases (all nonvanishing wherever the expression is defined) and
    checks that the cleared normal form collapses to zero.  ``True`` proves
    the identity on the expression's domain; ``False`` is inconclusive
    (including when the estimated clearing work exceeds the budget).
    """
    nf = _nf(e)
    if not nf:
        return True
    minima: dict = {}
    for pows, _ in nf.items():
        for atom, ex in pows:
            cur = minima.get(atom)
            minima[atom] = ex if cur is None else min(cur, ex)
    clearing = {a: -m for a, m in minima.items() if m < 0}
    if not clearing:
        return False
    estimate = len(nf)
    for a, m in clearing.items():
        if _is_sum_atom(a):
            estimate *= max(1, len(_nf(a))) ** min(int(m) + 1, 12)
        if estimate > budget:
            return False
    cleared: dict = {}
    for pows, c in nf.items():
        powmap = dict(pows)
        for a, m in clearing.items():
            powmap[a] = powmap.get(a, Fraction(0)) + m
        _nf_add_into(cleared, _fix_monomial(c, powmap))
        if len(cleared) > budget:
            return False
    return not cleared


# ---------------------------------------------------------------------------
# structural queries


def free_variables(e: Expr) -> frozenset:
    cached = _FREEVARS_MEMO.get(e)
    if cached is None:
        out: set = set()
        _collect_vars(e, out)
        cached = frozenset(out)
        _FREEVARS_MEMO[e] = cached
    return cached


def _collect_vars(e: Expr, out: set) -> None:
    if isinstance(e, Var):
        out.add(e.var)
    elif isinstance(e, Add):
        for t in e.terms:
            _collect_vars(t, out)
    elif isinstance(e, Mul):
        for f in e.factors:
            _collect_vars(f, out)
    elif isinstance(e, Pow):
        _collect_vars(e.base, out)


# ---------------------------------------------------------------------------
# calculus and conjugation


def differentiate(e: Expr, v: Variable) -> Expr:
    """Exact partial derivative; paired variables are independent."""
    n = normalize(e)
    key = (n, v)
    cached = _DIFF_MEMO.get(key)
    if cached is None:
        cached = normalize(_d(n, v))
        _DIFF_MEMO[key] = cached
    return cached


def _d(e: Expr, v: Variable) -> Expr:
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.var == v else ZERO
    if isinstance(e, Add):
        return Add(tuple(_d(t, v) for t in e.terms))
    if isinstance(e, Mul):
        terms = []
        fs = e.factors
        for i in range(len(fs)):
            terms.append(Mul(fs[:i] + (_d(fs[i], v),) + fs[i + 1:]))
        return Add(tuple(terms))
    if isinstance(e, Pow):
        return Mul((Const(QC.of(e.exp)), Pow(e.base, e.exp - 1), _d(e.base, v)))
    raise TypeError(f"not an expression: {e!r}")


def conjugate(e: Expr) -> Expr:
    """Antilinear involution determined by the reality tags."""
    cached = _CONJ_MEMO.get(e)
    if cached is None:
        cached = normalize(_conj(e))
        _CONJ_MEMO[e] = cached
    return cached


def _conj(e: Expr) -> Expr:
    if isinstance(e, Const):
        return Const(e.value.conjugate())
    if isinstance(e, Var):
        r = e.var.reality
        if r in (REAL, POSITIVE_REAL):
            return e
        if r == IMAGINARY:
            return Mul((MINUS_ONE, e))
        if r == UNIT_MODULUS:
            return Pow(e, Fraction(-1))
        return Var(Variable(e.var.partner, COMPLEX_PAIRED, e.var.name))
    if isinstance(e, Add):
        return Add(tuple(_conj(t) for t in e.terms))
    if isinstance(e, Mul):
        return Mul(tuple(_conj(f) for f in e.factors))
    if isinstance(e, Pow):
        return Pow(_conj(e.base), e.exp)
    raise TypeError(f"not an expression: {e!r}")


def substitute(e: Expr, bindings: Mapping[Variable, Expr], check: bool = True) -> Expr:
    """Simultaneous substitution; conjugate partners follow automatically."""
    full: dict[Variable, Expr] = {}
    for v, s in bindings.items():
        full[v] = lift(s)
    for v, s in list(full.items()):
        if v.reality == COMPLEX_PAIRED:
            partner = Variable(v.partner, COMPLEX_PAIRED, v.name)
            if partner not in full:
                full[partner] = conjugate(s)
    if check:
        for v, s in full.items():
            _check_substitution_reality(v, s, full)
    return normalize(_subst(e, full))


def _check_substitution_reality(v: Variable, s: Expr, full: Mapping) -> None:
    if v.reality in (REAL, POSITIVE_REAL):
        if not is_zero_expr(conjugate(s) - s):
            raise RealityViolationError(
                f"substitution for real variable {v.name} is not self-conjugate")
    elif v.reality == IMAGINARY:
        if not is_zero_expr(conjugate(s) + s):
            raise RealityViolationError(
                f"substitution for imaginary variable {v.name} is not anti-self-conjugate")
    elif v.reality == UNIT_MODULUS:
        if not is_zero_expr(conjugate(s) * s - ONE):
            raise RealityViolationError(
                f"substitution for unit-modulus variable {v.name} does not have modulus one")
    elif v.reality == COMPLEX_PAIRED:
        partner = Variable(v.partner, COMPLEX_PAIRED, v.name)
        ps = full.get(partner)
        if ps is not None and not is_zero_expr(conjugate(s) - ps):
            raise RealityViolationError(
                f"substitutions for {v.name} and {v.partner} are not conjugate")


def _subst(e: Expr, bindings: Mapping[Variable, Expr]) -> Expr:
    if isinstance(e, Const):
        return e
    if isinstance(e, Var):
        return bindings.get(e.var, e)
    if isinstance(e, Add):
        return Add(tuple(_subst(t, bindings) for t in e.terms))
    if isinstance(e, Mul):
        return Mul(tuple(_subst(f, bindings) for f in e.factors))
    if isinstance(e, Pow):
        return Pow(_subst(e.base, bindings), e.exp)
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------------------
# numeric evaluation


_EVAL_TOL = 1e-9


def _check_binding(v: Variable, z: complex, point: Mapping[str, complex]) -> None:
    scale = 1.0 + abs(z)
    if v.reality in (REAL, POSITIVE_REAL):
        if abs(z.imag) > _EVAL_TOL * scale:
            raise RealityViolationError(f"{v.name} must be real, got {z}")
        if v.reality == POSITIVE_REAL and z.real <= 0:
            raise RealityViolationError(f"{v.name} must be positive, got {z}")
    elif v.reality == IMAGINARY:
        if abs(z.real) > _EVAL_TOL * scale:
            raise RealityViolationError(f"{v.name} must be imaginary, got {z}")
    elif v.reality == UNIT_MODULUS:
        if abs(abs(z) - 1.0) > _EVAL_TOL * scale:
            raise RealityViolationError(f"{v.name} must have modulus one, got {z}")
    elif v.reality == COMPLEX_PAIRED:
        w = point.get(v.partner)
        if w is not None and abs(z.conjugate() - w) > _EVAL_TOL * (1.0 + abs(z) + abs(w)):
            raise RealityViolationError(f"{v.name} and {v.partner} are not conjugate")


def evaluate(e: Expr, point: Mapping, check: bool = True) -> complex:
    """IEEE double evaluation; fractional powers need positive real bases."""
    by_name: dict[str, complex] = {}
    for k, z in point.items():
        name = k.name if isinstance(k, Variable) else k
        by_name[name] = complex(z)
    vars_present = free_variables(e)
    for v in vars_present:
        if v.name not in by_name:
            if v.reality == COMPLEX_PAIRED and v.partner in by_name:
                by_name[v.name] = by_name[v.partner].conjugate()
            else:
                raise DomainEvalError(f"no binding for variable {v.name}")
    if check:
        for v in vars_present:
            _check_binding(v, by_name[v.name], by_name)
    return _eval(e, by_name)


def _eval(e: Expr, point: Mapping[str, complex]) -> complex:
    if isinstance(e, Const):
        return e.value.to_complex()
    if isinstance(e, Var):
        return point[e.var.name]
    if isinstance(e, Add):
        return sum(_eval(t, point) for t in e.terms)
    if isinstance(e, Mul):
        out = 1.0 + 0.0j
        for f in e.factors:
            out *= _eval(f, point)
        return out
    if isinstance(e, Pow):
        base = _eval(e.base, point)
        if e.exp.denominator == 1:
            k = int(e.exp)
            if k < 0 and base == 0:
                raise DomainEvalError("division by zero")
            return base ** k
        if abs(base.imag) > 1e-10 * (1.0 + abs(base)) or base.real <= 0:
            raise DomainEvalError(
                f"fractional power needs a positive real base, got {base}")
        return complex(base.real ** float(e.exp))
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------------------
# randomized identity testing

Box = Mapping[str, tuple]


def sample_point(variables: Iterable[Variable], box: Box, rng: random.Random) -> dict:
    """Draw one tag-respecting point; unit-modulus intervals are angles."""
    import cmath

    point: dict[str, complex] = {}
    ordered = sorted(variables, key=lambda v: v.name)
    for v in ordered:
        if v.name in point:
            continue
        if v.reality == COMPLEX_PAIRED and v.partner in point:
            point[v.name] = point[v.partner].conjugate()
            continue
        key = v.name if v.name in box else (v.partner if v.partner and v.partner in box else None)
        if key is None:
            raise ZeroTestInconclusiveError(f"no box interval for variable {v.name}")
        lo, hi = box[key]
        if v.reality in (REAL, POSITIVE_REAL):
            point[v.name] = complex(rng.uniform(lo, hi))
        elif v.reality == IMAGINARY:
            point[v.name] = complex(0.0, rng.uniform(lo, hi))
        elif v.reality == UNIT_MODULUS:
            point[v.name] = cmath.exp(1j * rng.uniform(lo, hi))
        else:
            point[v.name] = complex(rng.uniform(lo, hi), rng.uniform(lo, hi))
    return point


def _eval_with_scale(e_norm: Expr, point: Mapping[str, complex]) -> tuple:
    terms = e_norm.terms if isinstance(e_norm, Add) else (e_norm,)
    total = 0.0 + 0.0j
    scale = 0.0
    for t in terms:
        z = _eval(t, point)
        total += z
        scale += abs(z)
    return total, scale


def is_identically_zero(e: Expr, box: Box, trials: int = 16, seed: int = 0,
                        tol: float = 1e-9) -> bool:
    """Randomized zero test: True iff |e| < tol*(1+scale) at all sampled points.

    Deterministic for a fixed seed.  Sample points that hit singularities are
    redrawn; if no admissible point is found the test is inconclusive and
    raises ``ZeroTestInconclusiveError``.
    """
    n = normalize(e)
    if n == ZERO or certify_zero(n):
        return True
    variables = sorted(free_variables(n), key=lambda v: v.name)
    rng = random.Random(seed)
    successes = 0
    attempts = 0
    max_attempts = max(trials * 8, 64)
    while successes < trials and attempts < max_attempts:
        attempts += 1
        point = sample_point(variables, box, rng)
        try:
            val, scale = _eval_with_scale(n, point)
        except DomainEvalError:
            continue
        successes += 1
        if abs(val) > tol * (1.0 + scale):
            return False
    if successes == 0:
        raise ZeroTestInconclusiveError(
            "all sampled points hit singularities; zero test inconclusive")
    if successes < trials:
        raise ZeroTestInconclusiveError(
            f"only {successes}/{trials} sample points were admissible")
    return True


# ---------------------------------------------------------------------------
# printing


def frac_text(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def qc_text(c: QC) -> str:
    if c.im == 0:
        return frac_text(c.re)
    if c.re == 0:
        if c.im == 1:
            return "i"
        if c.im == -1:
            return "-i"
        return f"{frac_text(c.im)}*i"
    sign = "+" if c.im > 0 else "-"
    imag = abs(c.im)
    istr = "i" if imag == 1 else f"{frac_text(imag)}*i"
    return f"({frac_text(c.re)} {sign} {istr})"


def _exp_text(e: Fraction) -> str:
    if e.denominator == 1 and e >= 0:
        return str(e.numerator)
    return f"({frac_text(e)})"


def _needs_parens_as_factor(e: Expr) -> bool:
    if isinstance(e, Add):
        return True
    if isinstance(e, Const):
        v = e.value
        return v.im != 0 or v.re < 0 or v.re.denominator != 1
    return False


def _factor_text(atom: Expr, e: Fraction) -> str:
    if isinstance(atom, Var):
        base = atom.var.name
    elif isinstance(atom, Const):
        base = qc_text(atom.value)
        if _needs_parens_as_factor(atom):
            base = f"({base})"
    else:
        base = f"({_render(atom)})"
    return base if e == 1 else f"{base}^{_exp_text(e)}"


def _render(n: Expr) -> str:
    """Render an already-canonical tree structurally (no re-normalization)."""
    if isinstance(n, Var):
        return n.var.name
    if isinstance(n, Const):
        return qc_text(n.value)
    terms = n.terms if isinstance(n, Add) else (n,)
    parts: list[str] = []
    for idx, t in enumerate(terms):
        coeff, factors = _split_mono(t)
        negative = coeff.im == 0 and coeff.re < 0
        if negative:
            coeff = -coeff
        body_parts = []
        if not coeff.is_one or not factors:
            c_txt = qc_text(coeff)
            if c_txt.startswith("(") or coeff.im == 0:
                body_parts.append(c_txt)
            else:
                body_parts.append(f"({c_txt})" if "*" in c_txt or " " in c_txt else c_txt)
        body_parts.extend(_factor_text(a, ex) for a, ex in factors)
        body = "*".join(body_parts)
        if idx == 0:
            parts.append(f"-{body}" if negative else body)
        else:
            parts.append(f"- {body}" if negative else f"+ {body}")
    return " ".join(parts)


def to_text(e: Expr) -> str:
    """Render in the CLI grammar; ``parse(to_text(e))`` normalizes to ``normalize(e)``."""
    return _render(normalize(e))


def _split_mono(t: Expr):
    if isinstance(t, Const):
        return t.value, ()
    if isinstance(t, (Var, Pow)) or not isinstance(t, Mul):
        if isinstance(t, Pow):
            return QC_ONE, ((t.base, t.exp),)
        return QC_ONE, ((t, Fraction(1)),)
    coeff = QC_ONE
    factors = []
    for f in t.factors:
        if isinstance(f, Const):
            coeff = coeff * f.value
        elif isinstance(f, Pow):
            factors.append((f.base, f.exp))
        else:
            factors.append((f, Fraction(1)))
    return coeff, tuple(factors)


def sqrt(e: NumberLike) -> Expr:
    return Pow(lift(e), Fraction(1, 2))
