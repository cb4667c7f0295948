"""The `.scm` model specification language: parser, evaluator and serializer.

Finite models tabulate each equation over the product of the referenced
domains; the expression is kept (in canonical rendering) only for
serialization fidelity.  Linear models restrict equations to sums of
coefficient*name terms plus an intercept.

Serialization is canonical: LF line endings, single spaces, sorted
declarations, probabilities in domain order.  parse(serialize(m)) returns an
equivalent model and serialize is a fixed point on parsed models.
"""

from __future__ import annotations

import itertools
import re
from fractions import Fraction

import numpy as np

from .config import tolerance
from .errors import ParseError, ScmError, TabulationError
from .scm import (
    FiniteDomain,
    FiniteScm,
    GaussianBlock,
    LinearScm,
    TabularMechanism,
    validate,
)

__all__ = ["ModelSource", "parse", "parse_source", "serialize", "parse_value_literal"]

RESERVED = {"model", "finite", "linear", "var", "noise", "eq", "ind", "Normal", "mean", "cov"}

_NAME_RE = re.compile(r"[A-Za-z][A-Za-z0-9_']*")
_FLOAT_RE = re.compile(r"\d+\.\d*(?:[eE][+-]?\d+)?|\d+[eE][+-]?\d+")
_INT_RE = re.compile(r"\d+")
_OPS = ("==", "!=", "<", ">", "{", "}", "(", ")", "[", "]", ":", ",", "~", "=", "+", "-", "*", "/")

_MAX_DEPTH = 200


class _Token:
    __slots__ = ("kind", "value", "line", "col")

    def __init__(self, kind, value, line, col):
        self.kind = kind
        self.value = value
        self.line = line
        self.col = col

    def __repr__(self):
        return f"_Token({self.kind}, {self.value!r}, {self.line}:{self.col})"


def _tokenize(text: str):
    tokens = []
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.split("#", 1)[0]
        col = 0
        while col < len(line):
            ch = line[col]
            if ch in " \t\r":
                col += 1
                continue
            m = _NAME_RE.match(line, col)
            if m:
                tokens.append(_Token("NAME", m.group(), lineno, col + 1))
                col = m.end()
                continue
            m = _FLOAT_RE.match(line, col)
            if m:
                tokens.append(_Token("FLOAT", m.group(), lineno, col + 1))
                col = m.end()
                continue
            m = _INT_RE.match(line, col)
            if m:
                tokens.append(_Token("INT", m.group(), lineno, col + 1))
                col = m.end()
                continue
            for op in _OPS:
                if line.startswith(op, col):
                    tokens.append(_Token("OP", op, lineno, col + 1))
                    col += len(op)
                    break
            else:
                raise ParseError(f"unexpected character {ch!r}", lineno, col + 1)
        if tokens and tokens[-1].kind != "NEWLINE":
            tokens.append(_Token("NEWLINE", "\n", lineno, len(line) + 1))
    tokens.append(_Token("EOF", "", len(text.split("\n")) + 1, 1))
    return tokens


class _Parser:
    def __init__(self, text):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def fail(self, message, tok=None):
        tok = tok or self.peek()
        raise ParseError(message, tok.line, tok.col)

    def expect(self, kind, value=None) -> _Token:
        tok = self.peek()
        if tok.kind != kind or (value is not None and tok.value != value):
            want = value if value is not None else kind
            self.fail(f"expected {want!r}, found {tok.value!r}")
        return self.advance()

    def expect_name(self, keyword=None) -> _Token:
        tok = self.expect("NAME")
        if keyword is not None and tok.value != keyword:
            self.fail(f"expected {keyword!r}, found {tok.value!r}", tok)
        return tok

    def at_op(self, value) -> bool:
        tok = self.peek()
        return tok.kind == "OP" and tok.value == value

    def skip_newlines(self):
        while self.peek().kind == "NEWLINE":
            self.advance()

    def end_statement(self):
        tok = self.peek()
        if tok.kind == "EOF":
            return
        if tok.kind != "NEWLINE":
            self.fail(f"unexpected {tok.value!r} at end of statement")
        self.advance()

    # --- literals ----------------------------------------------------------

    def parse_rational(self):
        """Signed integer or p/q rational (exact)."""
        negative = False
        if self.at_op("-"):
            self.advance()
            negative = True
        tok = self.expect("INT")
        value = Fraction(int(tok.value))
        if self.at_op("/"):
            self.advance()
            den = self.expect("INT")
            if int(den.value) == 0:
                self.fail("zero denominator", den)
            value = Fraction(int(tok.value), int(den.value))
        if negative:
            value = -value
        return _normalize_atom(value)

    def parse_number(self) -> float:
        """Signed decimal, integer or rational coefficient, as a float."""
        negative = False
        if self.at_op("-"):
            self.advance()
            negative = True
        tok = self.peek()
        if tok.kind == "FLOAT":
            self.advance()
            value = float(tok.value)
        elif tok.kind == "INT":
            self.advance()
            value = float(int(tok.value))
            if self.at_op("/"):
                self.advance()
                den = self.expect("INT")
                if int(den.value) == 0:
                    self.fail("zero denominator", den)
                value = value / int(den.value)
        else:
            self.fail(f"expected a number, found {tok.value!r}")
        return -value if negative else value

    # --- finite expressions --------------------------------------------------

    def parse_expr(self, depth=0):
        if depth > _MAX_DEPTH:
            self.fail("expression nested too deeply")
        node = self.parse_term(depth + 1)
        while self.at_op("+") or self.at_op("-"):
            op = self.advance().value
            right = self.parse_term(depth + 1)
            node = ("add" if op == "+" else "sub", node, right)
        return node

    def parse_term(self, depth):
        node = self.parse_factor(depth + 1)
        while self.at_op("*"):
            self.advance()
            node = ("mul", node, self.parse_factor(depth + 1))
        return node

    def parse_factor(self, depth):
        if depth > _MAX_DEPTH:
            self.fail("expression nested too deeply")
        tok = self.peek()
        if tok.kind == "OP" and tok.value == "-":
            self.advance()
            return ("neg", self.parse_factor(depth + 1))
        if tok.kind == "OP" and tok.value == "(":
            self.advance()
            node = self.parse_expr(depth + 1)
            self.expect("OP", ")")
            return node
        if tok.kind == "INT":
            self.advance()
            value = Fraction(int(tok.value))
            if self.at_op("/"):
                self.advance()
                den = self.expect("INT")
                if int(den.value) == 0:
                    self.fail("zero denominator", den)
                value = Fraction(int(tok.value), int(den.value))
            return ("num", value)
        if tok.kind == "FLOAT":
            self.fail("decimal literals are not allowed in finite models; use p/q rationals")
        if tok.kind == "NAME" and tok.value == "ind":
            self.advance()
            self.expect("OP", "(")
            left = self.parse_expr(depth + 1)
            op_tok = self.peek()
            if not (op_tok.kind == "OP" and op_tok.value in ("==", "!=", "<", ">")):
                self.fail(f"expected a comparison operator, found {op_tok.value!r}")
            self.advance()
            right = self.parse_expr(depth + 1)
            self.expect("OP", ")")
            return ("ind", op_tok.value, left, right)
        if tok.kind == "NAME":
            self.advance()
            return ("name", tok.value, (tok.line, tok.col))
        self.fail(f"expected an expression, found {tok.value!r}")


def _normalize_atom(value):
    if isinstance(value, Fraction) and value.denominator == 1:
        return int(value)
    return value


def _expr_names(node, out):
    kind = node[0]
    if kind == "name":
        if node[1] not in out:
            out.append(node[1])
    elif kind in ("add", "sub", "mul"):
        _expr_names(node[1], out)
        _expr_names(node[2], out)
    elif kind == "neg":
        _expr_names(node[1], out)
    elif kind == "ind":
        _expr_names(node[2], out)
        _expr_names(node[3], out)
    return out


def _name_position(node, name):
    kind = node[0]
    if kind == "name":
        return node[2] if node[1] == name and len(node) > 2 else None
    children = {"add": (1, 2), "sub": (1, 2), "mul": (1, 2), "neg": (1,), "ind": (2, 3)}.get(kind, ())
    for idx in children:
        pos = _name_position(node[idx], name)
        if pos:
            return pos
    return None


def _expr_eval(node, env):
    kind = node[0]
    if kind == "num":
        return node[1]
    if kind == "name":
        return env[node[1]]
    if kind == "neg":
        return -Fraction(_expr_eval(node[1], env))
    if kind == "add":
        return Fraction(_expr_eval(node[1], env)) + Fraction(_expr_eval(node[2], env))
    if kind == "sub":
        return Fraction(_expr_eval(node[1], env)) - Fraction(_expr_eval(node[2], env))
    if kind == "mul":
        return Fraction(_expr_eval(node[1], env)) * Fraction(_expr_eval(node[2], env))
    if kind == "ind":
        op, left, right = node[1], node[2], node[3]
        lv = Fraction(_expr_eval(left, env))
        rv = Fraction(_expr_eval(right, env))
        hit = {"==": lv == rv, "!=": lv != rv, "<": lv < rv, ">": lv > rv}[op]
        return Fraction(1 if hit else 0)
    raise AssertionError(f"unknown AST node {kind}")  # pragma: no cover


_PREC = {"add": 1, "sub": 1, "mul": 2, "neg": 3, "num": 4, "name": 4, "ind": 4}


def _render_value(value) -> str:
    if isinstance(value, Fraction):
        return str(value)
    return str(value)


def _render_expr(node, parent_prec=0) -> str:
    kind = node[0]
    if kind == "num":
        text = _render_value(node[1])
    elif kind == "name":
        text = node[1]
    elif kind == "neg":
        text = "-" + _render_expr(node[1], _PREC["neg"])
    elif kind == "mul":
        text = _render_expr(node[1], _PREC["mul"]) + "*" + _render_expr(node[2], _PREC["mul"] + 1)
    elif kind in ("add", "sub"):
        op = " + " if kind == "add" else " - "
        text = _render_expr(node[1], _PREC[kind]) + op + _render_expr(node[2], _PREC[kind] + 1)
    elif kind == "ind":
        text = f"ind({_render_expr(node[2])} {node[1]} {_render_expr(node[3])})"
    else:  # pragma: no cover
        raise AssertionError(kind)
    if _PREC[kind] < parent_prec:
        return "(" + text + ")"
    return text


def _value_ast(value):
    if isinstance(value, Fraction) and value < 0:
        return ("neg", ("num", -value))
    if isinstance(value, int) and value < 0:
        return ("neg", ("num", Fraction(-value)))
    return ("num", Fraction(value))


# --- model assembly ----------------------------------------------------------

class ModelSource:
    """A parsed model together with its raw text and a map from declared
    names to their source positions (line, col)."""

    __slots__ = ("raw", "model", "source_map")

    def __init__(self, raw, model, source_map):
        self.raw = raw
        self.model = model
        self.source_map = dict(source_map)


def parse_source(text: str) -> ModelSource:
    """Parse `.scm` source, keeping the raw text and declaration positions.

    Raises ParseError with line:col on syntax or resolution problems and
    TabulationError when an equation leaves its codomain on an assignment
    whose exogenous part has positive probability.
    """
    p = _Parser(text)
    p.skip_newlines()
    p.expect_name("model")
    kind_tok = p.expect("NAME")
    if kind_tok.value == "finite":
        model, source_map = _parse_finite(p)
    elif kind_tok.value == "linear":
        model, source_map = _parse_linear(p)
    else:
        p.fail(f"expected 'finite' or 'linear', found {kind_tok.value!r}", kind_tok)
    report = validate(model)
    if not report.ok:
        raise ScmError("invalid model: " + "; ".join(report.problems))
    return ModelSource(text, model, source_map)


def parse(text: str):
    """Parse `.scm` source into a FiniteScm or LinearScm (see parse_source)."""
    return parse_source(text).model


def _declare(names_seen: dict, tok: _Token, p: _Parser):
    if tok.value in RESERVED:
        p.fail(f"{tok.value!r} is a reserved word", tok)
    if tok.value in names_seen:
        p.fail(f"duplicate name {tok.value!r}", tok)
    names_seen[tok.value] = tok


def _parse_finite(p: _Parser) -> FiniteScm:
    p.end_statement()
    endo = {}
    exo = {}
    measure = {}
    equations = {}
    names = {}
    while True:
        p.skip_newlines()
        tok = p.peek()
        if tok.kind == "EOF":
            break
        if tok.kind != "NAME":
            p.fail(f"expected a declaration, found {tok.value!r}")
        if tok.value == "var":
            p.advance()
            name_tok = p.expect("NAME")
            _declare(names, name_tok, p)
            p.expect("OP", ":")
            endo[name_tok.value] = FiniteDomain(_parse_value_set(p))
            p.end_statement()
        elif tok.value == "noise":
            p.advance()
            name_tok = p.expect("NAME")
            _declare(names, name_tok, p)
            p.expect("OP", ":")
            domain = FiniteDomain(_parse_value_set(p))
            p.expect("OP", "~")
            table = _parse_prob_table(p, domain, name_tok)
            exo[name_tok.value] = domain
            measure[name_tok.value] = table
            p.end_statement()
        elif tok.value == "eq":
            p.advance()
            name_tok = p.expect("NAME")
            if name_tok.value in equations:
                p.fail(f"duplicate equation for {name_tok.value!r}", name_tok)
            p.expect("OP", "=")
            expr = p.parse_expr()
            equations[name_tok.value] = (expr, name_tok)
            p.end_statement()
        elif tok.value == "model":
            p.fail("only one model declaration is allowed")
        else:
            p.fail(f"unknown declaration {tok.value!r}")

    mechanisms = {}
    expressions = {}
    domains = {**endo, **exo}
    for var, (expr, name_tok) in equations.items():
        if var not in endo:
            p.fail(f"equation for undeclared variable {var}", name_tok)
        refs = _expr_names(expr, [])
        for r in refs:
            if r not in domains:
                pos = _name_position(expr, r) or (name_tok.line, name_tok.col)
                raise ParseError(f"undeclared name {r}", pos[0], pos[1])
        args = tuple([n for n in endo if n in refs] + [n for n in exo if n in refs])
        mechanisms[var] = _tabulate(var, expr, args, endo, exo, measure)
        expressions[var] = _render_expr(expr)
    for var in endo:
        if var not in mechanisms:
            raise ScmError(f"variable {var} has no equation")
    source_map = {name: (tok.line, tok.col) for name, tok in names.items()}
    return FiniteScm(endo, exo, measure, mechanisms, expressions), source_map


def _parse_value_set(p: _Parser):
    p.expect("OP", "{")
    values = [p.parse_rational()]
    while p.at_op(","):
        p.advance()
        values.append(p.parse_rational())
    p.expect("OP", "}")
    if len(set(values)) != len(values):
        p.fail("duplicate domain value")
    return values


def _parse_prob_table(p: _Parser, domain: FiniteDomain, name_tok: _Token):
    p.expect("OP", "{")
    table = {}
    while True:
        value = p.parse_rational()
        if value not in domain:
            p.fail(f"probability listed for {value!r} outside the domain of {name_tok.value}")
        if value in table:
            p.fail(f"duplicate probability entry for {value!r}")
        p.expect("OP", ":")
        prob_tok = p.peek()
        prob = Fraction(p.parse_rational())
        if prob < 0:
            p.fail("negative probability", prob_tok)
        table[value] = prob
        if p.at_op(","):
            p.advance()
            continue
        break
    p.expect("OP", "}")
    for v in domain.values:
        table.setdefault(v, Fraction(0))
    total = sum(table.values())
    if total != 1:
        p.fail(f"probabilities of {name_tok.value} sum to {total}, expected 1", name_tok)
    return table


def _tabulate(var, expr, args, endo, exo, measure) -> TabularMechanism:
    domains = {**endo, **exo}
    codomain = endo[var]
    exo_args = [a for a in args if a in exo]
    table = {}
    for combo in itertools.product(*(domains[a].values for a in args)):
        env = dict(zip(args, combo))
        value = _normalize_atom(Fraction(_expr_eval(expr, env)))
        if value in codomain:
            table[combo] = value
            continue
        positive = all(measure[a].get(env[a], 0) > 0 for a in exo_args)
        if positive:
            raise TabulationError(
                f"equation for {var} evaluates to {value!r} outside its domain at {env!r}"
            )
        table[combo] = codomain.first()
    return TabularMechanism(args, table)


def _parse_linear(p: _Parser) -> LinearScm:
    p.end_statement()
    endo = []
    blocks = []
    rows = {}
    names = {}
    coord_names = []
    while True:
        p.skip_newlines()
        tok = p.peek()
        if tok.kind == "EOF":
            break
        if tok.kind != "NAME":
            p.fail(f"expected a declaration, found {tok.value!r}")
        if tok.value == "var":
            p.advance()
            while p.peek().kind == "NAME":
                name_tok = p.advance()
                _declare(names, name_tok, p)
                endo.append(name_tok.value)
            p.end_statement()
        elif tok.value == "noise":
            p.advance()
            group = []
            while p.peek().kind == "NAME" and p.peek().value != "Normal":
                name_tok = p.advance()
                _declare(names, name_tok, p)
                group.append(name_tok.value)
            if not group:
                p.fail("noise declaration needs at least one coordinate name")
            p.expect("OP", ":")
            mean, cov = _parse_normal(p, len(group))
            block_name = group[0] if len(group) == 1 else "+".join(group)
            blocks.append(GaussianBlock(block_name, tuple(group), mean, cov))
            coord_names.extend(group)
            p.end_statement()
        elif tok.value == "eq":
            p.advance()
            name_tok = p.expect("NAME")
            if name_tok.value in rows:
                p.fail(f"duplicate equation for {name_tok.value!r}", name_tok)
            p.expect("OP", "=")
            rows[name_tok.value] = (_parse_linear_rhs(p), name_tok)
            p.end_statement()
        elif tok.value == "model":
            p.fail("only one model declaration is allowed")
        else:
            p.fail(f"unknown declaration {tok.value!r}")

    n = len(endo)
    coord_index = {c: k for k, c in enumerate(coord_names)}
    endo_index = {v: k for k, v in enumerate(endo)}
    B = np.zeros((n, len(endo)))
    Gamma = np.zeros((n, len(coord_names)))
    c = np.zeros(n)
    for var, ((coeffs, intercept, positions), name_tok) in rows.items():
        if var not in endo_index:
            p.fail(f"equation for undeclared variable {var}", name_tok)
        i = endo_index[var]
        c[i] = intercept
        for name, coef in coeffs.items():
            if name in endo_index:
                B[i, endo_index[name]] += coef
            elif name in coord_index:
                Gamma[i, coord_index[name]] += coef
            else:
                pos = positions.get(name, (name_tok.line, name_tok.col))
                raise ParseError(f"undeclared name {name}", pos[0], pos[1])
    for var in endo:
        if var not in rows:
            raise ScmError(f"variable {var} has no equation")
    source_map = {name: (tok.line, tok.col) for name, tok in names.items()}
    return LinearScm(tuple(endo), tuple(blocks), B, Gamma, c), source_map


def _parse_normal(p: _Parser, size: int):
    p.expect_name("Normal")
    p.expect("OP", "(")
    if p.peek().kind == "NAME" and p.peek().value == "mean":
        p.advance()
        p.expect("OP", "=")
        mean = _parse_vector(p)
        p.expect("OP", ",")
        p.expect_name("cov")
        p.expect("OP", "=")
        cov = _parse_matrix(p)
    else:
        if size != 1:
            p.fail("the Normal(m, v) abbreviation is for single-coordinate blocks")
        mean_v = p.parse_number()
        p.expect("OP", ",")
        var_v = p.parse_number()
        mean, cov = [mean_v], [[var_v]]
    p.expect("OP", ")")
    mean = np.array(mean, dtype=float)
    cov = np.array(cov, dtype=float)
    if mean.shape != (size,) or cov.shape != (size, size):
        p.fail(f"Normal parameters do not match the {size} declared coordinate(s)")
    if not np.allclose(cov, cov.T, atol=tolerance()):
        p.fail("covariance is not symmetric")
    if np.linalg.eigvalsh((cov + cov.T) / 2).min(initial=0.0) < -tolerance():
        p.fail("covariance is not positive semi-definite")
    return mean, cov


def _parse_vector(p: _Parser):
    p.expect("OP", "[")
    values = [p.parse_number()]
    while p.at_op(","):
        p.advance()
        values.append(p.parse_number())
    p.expect("OP", "]")
    return values


def _parse_matrix(p: _Parser):
    p.expect("OP", "[")
    rows = [_parse_vector(p)]
    while p.at_op(","):
        p.advance()
        rows.append(_parse_vector(p))
    p.expect("OP", "]")
    if len(set(len(r) for r in rows)) != 1:
        p.fail("matrix rows have different lengths")
    return rows


def _parse_linear_rhs(p: _Parser):
    coeffs = {}
    positions = {}
    intercept = 0.0
    sign = 1.0
    if p.at_op("-"):
        p.advance()
        sign = -1.0
    while True:
        tok = p.peek()
        if tok.kind == "NAME":
            p.advance()
            coeffs[tok.value] = coeffs.get(tok.value, 0.0) + sign
            positions.setdefault(tok.value, (tok.line, tok.col))
        elif tok.kind in ("INT", "FLOAT"):
            value = sign * p.parse_number()
            if p.at_op("*"):
                p.advance()
                name_tok = p.expect("NAME")
                coeffs[name_tok.value] = coeffs.get(name_tok.value, 0.0) + value
                positions.setdefault(name_tok.value, (name_tok.line, name_tok.col))
            else:
                intercept += value
        else:
            p.fail(f"expected a linear term, found {tok.value!r}")
        if p.at_op("+"):
            p.advance()
            sign = 1.0
        elif p.at_op("-"):
            p.advance()
            sign = -1.0
        else:
            break
    return coeffs, intercept, positions


# --- serialization -------------------------------------------------------------

def _table_expression(m: FiniteScm, name: str) -> str:
    mech = m.mechanisms[name]
    if not mech.args:
        return _render_expr(_value_ast(mech.table[()]))
    terms = []
    for combo in itertools.product(*(m.domain_of(a).values for a in mech.args)):
        value = mech.table[combo]
        if value == 0:
            continue
        node = _value_ast(value)
        for a, v in zip(mech.args, combo):
            node = ("mul", node, ("ind", "==", ("name", a), _value_ast(v)))
        terms.append(_render_expr(node))
    if not terms:
        return "0"
    return " + ".join(terms)


def _require_numeric_domains(m: FiniteScm):
    for name in list(m.endogenous) + list(m.exogenous):
        for v in m.domain_of(name).values:
            if not isinstance(v, (int, Fraction)):
                raise ScmError(
                    f"domain of {name} contains non-numeric atom {v!r}; "
                    "only integer/rational atoms are serializable"
                )


def _coef_str(value: float) -> str:
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(float(value))


def serialize(m) -> str:
    """Canonical textual form; see the module docstring for guarantees."""
    if isinstance(m, FiniteScm):
        _require_numeric_domains(m)
        lines = ["model finite"]
        for name in sorted(m.endogenous):
            values = ", ".join(_render_value(v) for v in m.endogenous[name].values)
            lines.append(f"var {name} : {{{values}}}")
        for name in sorted(m.exogenous):
            values = ", ".join(_render_value(v) for v in m.exogenous[name].values)
            probs = ", ".join(
                f"{_render_value(v)}: {Fraction(m.measure[name].get(v, 0))}"
                for v in m.exogenous[name].values
            )
            lines.append(f"noise {name} : {{{values}}} ~ {{{probs}}}")
        for name in sorted(m.endogenous):
            expr = m.expressions.get(name) or _table_expression(m, name)
            lines.append(f"eq {name} = {expr}")
        return "\n".join(lines) + "\n"
    if isinstance(m, LinearScm):
        lines = ["model linear"]
        lines.append("var " + " ".join(sorted(m.endogenous)))
        for b in sorted(m.blocks, key=lambda b: b.name):
            if len(b.coords) == 1:
                lines.append(
                    f"noise {b.coords[0]} : Normal({_coef_str(b.mean[0])}, {_coef_str(b.cov[0, 0])})"
                )
            else:
                mean = ", ".join(_coef_str(v) for v in b.mean)
                cov = ", ".join("[" + ", ".join(_coef_str(v) for v in row) + "]" for row in b.cov)
                lines.append(
                    f"noise {' '.join(b.coords)} : Normal(mean=[{mean}], cov=[{cov}])"
                )
        coord_order = []
        for b in sorted(m.blocks, key=lambda b: b.name):
            coord_order.extend(b.coords)
        for name in sorted(m.endogenous):
            i = m.endo_index(name)
            terms = []
            for other in sorted(m.endogenous):
                coef = m.B[i, m.endo_index(other)]
                if coef != 0.0:
                    terms.append((coef, other))
            coords = m.coord_names
            for coord in coord_order:
                coef = m.Gamma[i, coords.index(coord)]
                if coef != 0.0:
                    terms.append((coef, coord))
            if m.c[i] != 0.0:
                terms.append((m.c[i], None))
            if not terms:
                lines.append(f"eq {name} = 0")
                continue
            parts = []
            for idx, (coef, target) in enumerate(terms):
                body = _coef_str(abs(coef)) if target is None else f"{_coef_str(abs(coef))}*{target}"
                if idx == 0:
                    parts.append(("-" if coef < 0 else "") + body)
                else:
                    parts.append(("- " if coef < 0 else "+ ") + body)
            lines.append(f"eq {name} = " + " ".join(parts))
        return "\n".join(lines) + "\n"
    raise ScmError(f"not an SCM: {m!r}")


def parse_value_literal(text: str):
    """A single value literal in DSL syntax: integer, p/q rational or decimal.

    Exact atoms come back as int/Fraction; decimals as float.
    """
    text = text.strip()
    try:
        p = _Parser(text)
        tok = p.peek()
        is_float = tok.kind == "FLOAT" or (
            tok.kind == "OP" and tok.value == "-" and p.tokens[p.pos + 1].kind == "FLOAT"
        )
        value = p.parse_number() if is_float else p.parse_rational()
        if p.peek().kind not in ("EOF", "NEWLINE"):
            raise ParseError("trailing characters in value literal")
        return value
    except IndexError:
        raise ParseError(f"malformed value literal {text!r}") from None
