"""Graded exterior algebra over a declared chart.

A Chart fixes an ordered list of 1-form generators (with conjugation
links), an exterior-derivative rule for each generator, and a 1-form rule
for the differential of each scalar variable.  FormExpr stores a form of
homogeneous degree as a map from strictly increasing generator index
words to scalar coefficients; construction normalizes coefficients and
prunes zeros, and wedge ordering signs are applied automatically.

There is no manifold abstraction: every computation happens in one of a
handful of concrete charts, and basis changes are explicit substitutions
(``rewrite``).  Generators without a d-rule are inert; applying ``d`` to a
form that touches them raises ``MissingRuleError``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .scalars import (
    Const,
    Expr,
    ExprError,
    I,
    ONE,
    ParseError,
    QC,
    UndeclaredIdentifierError,
    Variable,
    VariableTable,
    ZERO,
    Var,
    certify_zero,
    conjugate,
    differentiate,
    free_variables,
    is_identically_zero,
    lift,
    normalize,
    substitute,
    to_text,
)
from . import parsing

GEN_REAL = "real"        # self-conjugate, conj(g) = g
GEN_IMAGINARY = "imaginary"  # self-conjugate, conj(g) = -g
GEN_PAIR = "pair"
GEN_AUX = "aux"          # exempt from conjugation


class ChartError(ExprError):
    pass


class MissingRuleError(ChartError):
    def __init__(self, kind: str, name: str):
        super().__init__(f"no {kind} rule installed for '{name}'")
        self.name = name


class AuxiliaryGeneratorError(ChartError):
    pass


@dataclass(frozen=True)
class Generator:
    name: str
    kind: str
    partner: str | None = None


def g_real(name: str) -> Generator:
    return Generator(name, GEN_REAL)


def g_imaginary(name: str) -> Generator:
    return Generator(name, GEN_IMAGINARY)


def g_pair(name: str, partner: str) -> tuple[Generator, Generator]:
    return Generator(name, GEN_PAIR, partner), Generator(partner, GEN_PAIR, name)


def g_aux(name: str) -> Generator:
    return Generator(name, GEN_AUX)


def _merge_word(w1: tuple, w2: tuple):
    """Concatenate index words, sort, return (sorted_word, sign) or None."""
    word = list(w1 + w2)
    sign = 1
    # insertion sort counting transpositions; small words only
    for i in range(1, len(word)):
        j = i
        while j > 0 and word[j - 1] > word[j]:
            word[j - 1], word[j] = word[j], word[j - 1]
            sign = -sign
            j -= 1
    for i in range(1, len(word)):
        if word[i - 1] == word[i]:
            return None
    return tuple(word), sign


class Chart:
    """Ordered coframe context: generators, d-rules, scalar differentials."""

    def __init__(self, table: VariableTable, generators: Sequence[Generator]):
        self.table = table
        self.generators = tuple(generators)
        self._index = {g.name: i for i, g in enumerate(self.generators)}
        if len(self._index) != len(self.generators):
            raise ChartError("duplicate generator names")
        for g in self.generators:
            if g.kind == GEN_PAIR:
                p = self._by_name(g.partner)
                if p is None or p.kind != GEN_PAIR or p.partner != g.name:
                    raise ChartError(f"generator {g.name} lacks its conjugate partner")
        self._d_rules: dict[str, FormExpr] = {}
        self._scalar_rules: dict[str, FormExpr] = {}
        self._placeholder_gens: set[str] = set()
        self._frozen = False

    def _by_name(self, name: str | None):
        return None if name is None else next(
            (g for g in self.generators if g.name == name), None)

    # -- construction ------------------------------------------------------

    def install_rules(self, d_rules: Mapping[str, "FormExpr"],
                      scalar_rules: Mapping[str, "FormExpr"] | None = None,
                      placeholder_gens: Iterable[str] = (),
                      autofill_conjugates: bool = True,
                      check: bool = True) -> "Chart":
        if self._frozen:
            raise ChartError("chart rules already installed")
        for name, rule in d_rules.items():
            self._require_gen(name)
            if rule.degree != 2:
                raise ChartError(f"d rule for {name} must have degree 2")
            self._d_rules[name] = rule
        if scalar_rules:
            for vname, rule in scalar_rules.items():
                if vname not in self.table:
                    raise ChartError(f"scalar rule for undeclared variable {vname}")
                if rule.degree != 1:
                    raise ChartError(f"scalar rule for {vname} must have degree 1")
                self._scalar_rules[vname] = rule
        self._placeholder_gens = set(placeholder_gens)
        if autofill_conjugates:
            for g in self.generators:
                if (g.kind == GEN_PAIR and g.name not in self._d_rules
                        and g.partner in self._d_rules):
                    self._d_rules[g.name] = self._d_rules[g.partner].conj()
                    if g.partner in self._placeholder_gens:
                        self._placeholder_gens.add(g.name)
        self._frozen = True
        if check:
            self.verify_d_squared()
        return self

    def _require_gen(self, name: str) -> int:
        idx = self._index.get(name)
        if idx is None:
            raise ChartError(f"unknown generator '{name}'")
        return idx

    # -- basic forms -------------------------------------------------------

    def zero(self, degree: int = 0) -> "FormExpr":
        return FormExpr(self, degree, {})

    def scalar(self, e) -> "FormExpr":
        return FormExpr(self, 0, {(): lift(e)})

    def gen(self, name: str) -> "FormExpr":
        idx = self._require_gen(name)
        return FormExpr(self, 1, {(idx,): ONE})

    def basis_word(self, names: Sequence[str]) -> "FormExpr":
        form = self.scalar(1)
        for n in names:
            form = form.wedge(self.gen(n))
        return form

    # -- rules -------------------------------------------------------------

    def d_rule(self, name: str) -> "FormExpr":
        rule = self._d_rules.get(name)
        if rule is None:
            raise MissingRuleError("generator d", name)
        return rule

    def has_d_rule(self, name: str) -> bool:
        return name in self._d_rules

    def scalar_rule(self, v: Variable) -> "FormExpr":
        rule = self._scalar_rules.get(v.name)
        if rule is None:
            raise MissingRuleError("scalar d", v.name)
        return rule

    def d_scalar(self, e) -> "FormExpr":
        """Differential of a scalar: sum of partials times scalar rules."""
        e = lift(e)
        out = self.zero(1)
        for v in sorted(free_variables(e), key=lambda v: v.name):
            rule = self.scalar_rule(v)
            de = differentiate(e, v)
            if de != ZERO:
                out = out + rule.scale(de)
        return out

    # -- validation --------------------------------------------------------

    def verify_d_squared(self) -> list[str]:
        """Check d(d g) = 0 for every generator whose rule chain is
        placeholder-free; returns the list of generator names checked."""
        checked = []
        for g in self.generators:
            if g.name not in self._d_rules or g.name in self._placeholder_gens:
                continue
            rule = self._d_rules[g.name]
            ok = True
            for word in rule.terms:
                for idx in word:
                    dep = self.generators[idx].name
                    if dep not in self._d_rules or dep in self._placeholder_gens:
                        ok = False
            if not ok:
                continue
            dd = rule.d()
            if not dd.certify_zero():
                raise ChartError(f"d(d {g.name}) != 0 at chart construction")
            checked.append(g.name)
        return checked


class FormExpr:
    """Exterior form of homogeneous degree with scalar coefficients."""

    __slots__ = ("chart", "degree", "terms")

    def __init__(self, chart: Chart, degree: int, terms: Mapping[tuple, Expr]):
        self.chart = chart
        self.degree = degree
        cleaned: dict[tuple, Expr] = {}
        for word, coeff in terms.items():
            if len(word) != degree:
                raise ChartError("word length does not match form degree")
            c = normalize(lift(coeff))
            if c != ZERO:
                cleaned[word] = c
        self.terms = cleaned

    # -- helpers -----------------------------------------------------------

    def _check_same_chart(self, other: "FormExpr") -> None:
        if self.chart is not other.chart:
            raise ChartError("forms live on different charts")

    def word_names(self, word: tuple) -> tuple:
        return tuple(self.chart.generators[i].name for i in word)

    def items(self):
        return sorted(self.terms.items())

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def __repr__(self):
        if self.is_zero:
            return f"FormExpr<deg {self.degree}>(0)"
        parts = [
            f"({to_text(c)}) {'^'.join(self.word_names(w)) or '1'}"
            for w, c in self.items()
        ]
        return f"FormExpr<deg {self.degree}>[" + " + ".join(parts) + "]"

    # -- linear structure ----------------------------------------------------

    def __add__(self, other: "FormExpr") -> "FormExpr":
        self._check_same_chart(other)
        if self.degree != other.degree:
            if self.is_zero:
                return other
            if other.is_zero:
                return self
            raise ChartError("cannot add forms of different degree")
        out = dict(self.terms)
        for word, coeff in other.terms.items():
            out[word] = out.get(word, ZERO) + coeff
        return FormExpr(self.chart, self.degree, out)

    def __sub__(self, other: "FormExpr") -> "FormExpr":
        return self + other.scale(-1)

    def __neg__(self) -> "FormExpr":
        return self.scale(-1)

    def scale(self, e) -> "FormExpr":
        e = lift(e)
        return FormExpr(self.chart, self.degree,
                        {w: c * e for w, c in self.terms.items()})

    def __eq__(self, other) -> bool:
        return (isinstance(other, FormExpr) and self.chart is other.chart
                and self.degree == other.degree and self.terms == other.terms)

    def __hash__(self):
        return hash((id(self.chart), self.degree, tuple(sorted(self.terms.items(), key=lambda t: t[0]))))

    # -- multiplicative structure --------------------------------------------

    def wedge(self, other: "FormExpr") -> "FormExpr":
        self._check_same_chart(other)
        out: dict[tuple, Expr] = {}
        for w1, c1 in self.terms.items():
            for w2, c2 in other.terms.items():
                merged = _merge_word(w1, w2)
                if merged is None:
                    continue
                word, sign = merged
                coeff = c1 * c2 if sign > 0 else c1 * c2 * -1
                out[word] = out.get(word, ZERO) + coeff
        return FormExpr(self.chart, self.degree + other.degree, out)

    def d(self) -> "FormExpr":
        chart = self.chart
        out: dict[tuple, Expr] = {}

        def accumulate(word, coeff):
            if word in out:
                out[word] = out[word] + coeff
            else:
                out[word] = coeff

        for word, coeff in self.terms.items():
            for v in sorted(free_variables(coeff), key=lambda v: v.name):
                dc = differentiate(coeff, v)
                if dc == ZERO:
                    continue
                rule = chart.scalar_rule(v)
                for rword, rcoeff in rule.terms.items():
                    merged = _merge_word(rword, word)
                    if merged is None:
                        continue
                    mword, sign = merged
                    accumulate(mword, dc * rcoeff * sign)
            for j, idx in enumerate(word):
                rule = chart.d_rule(chart.generators[idx].name)
                rest = word[:j] + word[j + 1:]
                outer_sign = -1 if j % 2 else 1
                for rword, rcoeff in rule.terms.items():
                    merged = _merge_word(rword, rest)
                    if merged is None:
                        continue
                    mword, sign = merged
                    accumulate(mword, coeff * rcoeff * (sign * outer_sign))
        return FormExpr(chart, self.degree + 1, out)

    # -- chart operations ------------------------------------------------------

    def conj(self) -> "FormExpr":
        chart = self.chart
        out: dict[tuple, Expr] = {}
        for word, coeff in self.terms.items():
            sign = 1
            new_indices = []
            for idx in word:
                g = chart.generators[idx]
                if g.kind == GEN_AUX:
                    raise AuxiliaryGeneratorError(
                        f"cannot conjugate a form containing auxiliary generator {g.name}")
                if g.kind == GEN_PAIR:
                    new_indices.append(chart._index[g.partner])
                elif g.kind == GEN_REAL:
                    new_indices.append(idx)
                else:  # imaginary
                    new_indices.append(idx)
                    sign = -sign
            merged = _merge_word(tuple(new_indices), ())
            if merged is None:
                continue
            mword, psign = merged
            c = conjugate(coeff) * (sign * psign)
            out[mword] = out.get(mword, ZERO) + c
        return FormExpr(chart, self.degree, out)

    def reduce_mod(self, names: Sequence[str]) -> "FormExpr":
        drop = {self.chart._require_gen(n) for n in names}
        return FormExpr(self.chart, self.degree,
                        {w: c for w, c in self.terms.items()
                         if not any(i in drop for i in w)})

    def coefficient(self, names: Sequence[str]) -> Expr:
        """Coefficient at the wedge of the named generators, in the order
        given; the ordering sign is applied so that
        coefficient(x * g1^g2, (g1, g2)) == x."""
        indices = tuple(self.chart._require_gen(n) for n in names)
        if len(set(indices)) != len(indices):
            raise ChartError("coefficient word repeats a generator")
        if len(indices) != self.degree:
            raise ChartError("coefficient word length must equal the form degree")
        merged = _merge_word(indices, ())
        word, sign = merged
        coeff = self.terms.get(word, ZERO)
        return coeff if sign > 0 else normalize(coeff * -1)

    def rewrite(self, sub: Mapping[str, "FormExpr"], target: Chart | None = None,
                scalar_sub: Mapping[Variable, Expr] | None = None) -> "FormExpr":
        """Homomorphic basis change: replace each generator by a degree-1
        form on the target chart, optionally substituting scalars."""
        chart = self.chart
        if target is None:
            some = next(iter(sub.values()), None)
            target = some.chart if some is not None else chart
        out = target.zero(self.degree)
        for word, coeff in self.terms.items():
            c = substitute(coeff, scalar_sub) if scalar_sub else coeff
            piece = target.scalar(c)
            ok = True
            for idx in word:
                name = chart.generators[idx].name
                image = sub.get(name)
                if image is None:
                    raise ChartError(f"rewrite substitution missing generator {name}")
                if image.degree != 1:
                    raise ChartError(f"substitution for {name} must be a 1-form")
                piece = piece.wedge(image)
                if piece.is_zero:
                    ok = False
                    break
            if ok:
                out = out + piece
        return out

    def substitute_scalars(self, bindings: Mapping[Variable, Expr],
                           check: bool = True) -> "FormExpr":
        return FormExpr(self.chart, self.degree,
                        {w: substitute(c, bindings, check=check)
                         for w, c in self.terms.items()})

    # -- zero testing ------------------------------------------------------

    def is_structurally_zero(self) -> bool:
        return not self.terms

    def certify_zero(self) -> bool:
        return all(certify_zero(c) for c in self.terms.values())

    def vanishes(self, box, trials: int = 16, seed: int = 0,
                 tol: float = 1e-9) -> bool:
        """Structural certificate first, randomized sampling as fallback."""
        for k, (word, coeff) in enumerate(self.items()):
            if certify_zero(coeff):
                continue
            if not is_identically_zero(coeff, box, trials=trials,
                                       seed=seed + 7 * k, tol=tol):
                return False
        return True

    def generators_present(self) -> set:
        return {self.chart.generators[i].name for w in self.terms for i in w}


def transfer_form(form: FormExpr, target: Chart) -> FormExpr:
    """Re-key a form onto another chart by generator name."""
    terms: dict[tuple, Expr] = {}
    for word, coeff in form.terms.items():
        names = form.word_names(word)
        indices = tuple(target._require_gen(n) for n in names)
        merged = _merge_word(indices, ())
        if merged is None:
            raise ChartError("target chart collapses a word")
        new_word, sign = merged
        c = coeff if sign > 0 else coeff * -1
        terms[new_word] = terms.get(new_word, ZERO) + c
    return FormExpr(target, form.degree, terms)


def forms_equal(a: FormExpr, b: FormExpr, box=None, trials: int = 16,
                seed: int = 0, tol: float = 1e-9) -> bool:
    diff = a - b
    if diff.certify_zero():
        return True
    if box is None:
        return False
    return diff.vanishes(box, trials=trials, seed=seed, tol=tol)


# ---------------------------------------------------------------------------
# textual chart declarations


def parse_form(text: str, chart: Chart) -> FormExpr:
    """Parse a form expression; scalar grammar plus the wedge operator /\\.

    Precedence: ``+ -`` < ``/\\`` < ``* /`` < ``^``; generator names are
    degree-1 basis forms, everything else follows the scalar grammar.
    """
    tokens = _form_tokens(text)
    parser = _FormParser(tokens, chart)
    form = parser.parse_sum()
    tail = parser.peek()
    if tail.kind != "end":
        raise ParseError(f"unexpected trailing input {tail.text!r}", tail.offset)
    return form


def _form_tokens(text: str):
    return parsing.tokenize(text.replace("/\\", " @ "))


class _FormParser:
    def __init__(self, tokens, chart: Chart):
        self.tokens = tokens
        self.chart = chart
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, op):
        tok = self.peek()
        if tok.kind != "op" or tok.text != op:
            raise ParseError(f"expected {op!r}", tok.offset)
        return self.advance()

    def parse_sum(self) -> FormExpr:
        node = self.parse_wedge()
        while True:
            tok = self.peek()
            if tok.kind == "op" and tok.text in "+-":
                self.advance()
                rhs = self.parse_wedge()
                node = node + (rhs if tok.text == "+" else rhs.scale(-1))
            else:
                return node

    def parse_wedge(self) -> FormExpr:
        node = self.parse_product()
        while True:
            tok = self.peek()
            if tok.kind == "op" and tok.text == "@":
                self.advance()
                rhs = self.parse_product()
                node = node.wedge(rhs)
            else:
                return node

    def parse_product(self) -> FormExpr:
        node = self.parse_unary()
        while True:
            tok = self.peek()
            if tok.kind == "op" and tok.text in "*/":
                op = self.advance()
                rhs = self.parse_unary()
                if op.text == "*":
                    node = self._mul(node, rhs, op.offset)
                else:
                    if rhs.degree != 0:
                        raise ParseError("cannot divide by a form", op.offset)
                    denom = rhs.terms.get((), ZERO)
                    node = node.scale(ONE / denom)
            else:
                return node

    def _mul(self, a: FormExpr, b: FormExpr, offset: int) -> FormExpr:
        if a.degree == 0:
            return b.scale(a.terms.get((), ZERO))
        if b.degree == 0:
            return a.scale(b.terms.get((), ZERO))
        raise ParseError("use /\\ to multiply forms", offset)

    def parse_unary(self) -> FormExpr:
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.advance()
            return self.parse_unary().scale(-1)
        return self.parse_power()

    def parse_power(self) -> FormExpr:
        base = self.parse_primary()
        tok = self.peek()
        if tok.kind == "op" and tok.text == "^":
            self.advance()
            if base.degree != 0:
                raise ParseError("powers apply to scalars only", tok.offset)
            off = self.peek().offset
            exp_form = self.parse_unary()
            if exp_form.degree != 0:
                raise ParseError("exponent must be scalar", off)
            exp = normalize(exp_form.terms.get((), ZERO))
            if not isinstance(exp, Const) or exp.value.im != 0:
                raise ParseError("exponent must be a rational constant", off)
            scalar = base.terms.get((), ZERO)
            return self.chart.scalar(scalar ** exp.value.re)
        return base

    def parse_primary(self) -> FormExpr:
        tok = self.peek()
        chart = self.chart
        if tok.kind == "num":
            self.advance()
            return chart.scalar(parsing._number_to_expr(tok.text, tok.offset))
        if tok.kind == "ident":
            self.advance()
            if tok.text == "i":
                return chart.scalar(I)
            if tok.text == "sqrt":
                self.expect("(")
                inner = self.parse_sum()
                self.expect(")")
                if inner.degree != 0:
                    raise ParseError("sqrt of a form", tok.offset)
                return chart.scalar(inner.terms.get((), ZERO) ** Fraction(1, 2))
            if tok.text in chart._index:
                return chart.gen(tok.text)
            v = chart.table.get(tok.text)
            if v is None:
                raise UndeclaredIdentifierError(tok.text, tok.offset)
            return chart.scalar(Var(v))
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            inner = self.parse_sum()
            self.expect(")")
            return inner
        raise ParseError("expected a number, identifier or '('", tok.offset)


def load_chart(text: str, check: bool = True) -> Chart:
    """Build a chart from a declarative description.

    Sections: ``[variables]`` (``name... : real|positive|imaginary|unit`` or
    ``name partner : pair``), ``[generators]`` (same kinds plus ``aux``;
    order fixes the coframe order), ``[d]`` and ``[dscalar]`` ruled as form
    expressions.  Missing d-rules of conjugate partners are filled in by
    conjugation; generators without rules stay inert.
    """
    table = VariableTable()
    gens: list[Generator] = []
    d_lines: list[tuple[str, str]] = []
    ds_lines: list[tuple[str, str]] = []
    section = None
    for raw_line in text.splitlines():
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            section = line.strip("[]").strip().lower()
            continue
        if section in ("variables", "generators"):
            if ":" not in line:
                raise ChartError(f"expected 'names : kind' in [{section}]: {line!r}")
            names_part, kind = (p.strip() for p in line.rsplit(":", 1))
            names = names_part.split()
            kind = kind.lower()
            if section == "variables":
                _declare_variables(table, names, kind)
            else:
                gens.extend(_declare_generators(names, kind))
        elif section in ("d", "dscalar"):
            if "=" not in line:
                raise ChartError(f"expected 'name = form' in [{section}]: {line!r}")
            name, rhs = (p.strip() for p in line.split("=", 1))
            (d_lines if section == "d" else ds_lines).append((name, rhs))
        else:
            raise ChartError(f"content outside a known section: {line!r}")
    chart = Chart(table, gens)
    d_rules = {name: parse_form(rhs, chart) for name, rhs in d_lines}
    scalar_rules = {name: parse_form(rhs, chart) for name, rhs in ds_lines}
    chart.install_rules(d_rules, scalar_rules, check=check)
    return chart


def _declare_variables(table: VariableTable, names: list[str], kind: str) -> None:
    if kind == "pair":
        if len(names) != 2:
            raise ChartError("a pair declaration needs exactly two names")
        table.pair(names[0], names[1])
    elif kind == "real":
        table.real(*names)
    elif kind == "positive":
        table.positive(*names)
    elif kind == "imaginary":
        table.imaginary(*names)
    elif kind in ("unit", "unit_modulus"):
        table.unit_modulus(*names)
    else:
        raise ChartError(f"unknown variable kind {kind!r}")


def _declare_generators(names: list[str], kind: str) -> list[Generator]:
    if kind == "pair":
        if len(names) != 2:
            raise ChartError("a pair declaration needs exactly two names")
        return list(g_pair(names[0], names[1]))
    if kind == "real":
        return [g_real(n) for n in names]
    if kind == "imaginary":
        return [g_imaginary(n) for n in names]
    if kind == "aux":
        return [g_aux(n) for n in names]
    raise ChartError(f"unknown generator kind {kind!r}")
