"""Sparse multivariate polynomials over named variables.

Coefficients are plain floats: parameter names are bound to numbers when an
expression is parsed, so every polynomial is fully numeric.  Evaluation is
generic and accepts floats, numpy arrays or :class:`varsol.dual.Dual` values
for the variables.

    >>> p = parse_poly("d2 - d3*up", ("u", "up"), {"d2": 1.0, "d3": 1.0})
    >>> p.terms
    {(0, 0): 1.0, (0, 1): -1.0}
"""

from __future__ import annotations

import math
import re
from collections.abc import Mapping
from typing import Iterable, Iterator

MAX_EXPONENT = 16
IDENT = re.compile(r"[a-zA-Z][a-zA-Z0-9_]*\Z")


class ParseError(ValueError):
    """Malformed polynomial expression; ``position`` is a 0-based offset."""

    def __init__(self, message: str, position: int | None = None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class UnboundError(KeyError):
    pass


class ParameterSet(Mapping):
    """Immutable name -> float binding for the model constants."""

    def __init__(self, values: Mapping[str, float] | None = None, **kwargs: float):
        data = dict(values or {})
        data.update(kwargs)
        for name, value in data.items():
            if not IDENT.match(name):
                raise ValueError(f"invalid parameter name {name!r}")
            value = float(value)
            if not math.isfinite(value):
                raise ValueError(f"parameter {name} must be finite, got {value}")
            data[name] = value
        self._data = data

    def __getitem__(self, key: str) -> float:
        return self._data[key]

    def __iter__(self) -> Iterator[str]:
        return iter(self._data)

    def __len__(self) -> int:
        return len(self._data)

    def __hash__(self) -> int:
        return hash(frozenset(self._data.items()))

    def __repr__(self) -> str:
        body = ", ".join(f"{k}={v!r}" for k, v in sorted(self._data.items()))
        return f"ParameterSet({body})"

    def replace(self, **changes: float) -> "ParameterSet":
        return ParameterSet({**self._data, **changes})


class MultiPoly:
    """Polynomial as a map from exponent tuples to nonzero coefficients."""

    __slots__ = ("vars", "terms")

    def __init__(self, vars: Iterable[str], terms: Mapping[tuple, float] | None = None):
        self.vars = tuple(vars)
        if len(set(self.vars)) != len(self.vars):
            raise ValueError(f"duplicate variables in {self.vars}")
        clean = {}
        for exps, coef in (terms or {}).items():
            if len(exps) != len(self.vars):
                raise ValueError(f"exponent {exps} does not match variables {self.vars}")
            if _nonzero(coef):
                clean[tuple(exps)] = coef
        self.terms = dict(sorted(clean.items()))

    # -- construction -------------------------------------------------
    @classmethod
    def const(cls, vars: Iterable[str], value: float) -> "MultiPoly":
        vars = tuple(vars)
        return cls(vars, {(0,) * len(vars): value})

    @classmethod
    def var(cls, vars: Iterable[str], name: str) -> "MultiPoly":
        vars = tuple(vars)
        exps = tuple(1 if v == name else 0 for v in vars)
        if name not in vars:
            raise ValueError(f"{name!r} is not one of {vars}")
        return cls(vars, {exps: 1.0})

    def extend(self, vars: Iterable[str]) -> "MultiPoly":
        """Re-express over ``vars``, which must contain every current variable."""
        vars = tuple(vars)
        if vars == self.vars:
            return self
        index = []
        for v in vars:
            index.append(self.vars.index(v) if v in self.vars else None)
        missing = [v for v, e in zip(self.vars, self._max_exps()) if v not in vars and e > 0]
        if missing:
            raise ValueError(f"cannot drop variables {missing} that appear in the polynomial")
        terms = {}
        for exps, coef in self.terms.items():
            key = tuple(0 if i is None else exps[i] for i in index)
            terms[key] = terms.get(key, 0.0) + coef
        return MultiPoly(vars, terms)

    def _max_exps(self) -> list[int]:
        out = [0] * len(self.vars)
        for exps in self.terms:
            for i, e in enumerate(exps):
                out[i] = max(out[i], e)
        return out

    # -- queries ------------------------------------------------------
    def degree(self, var: str | None = None) -> int:
        if not self.terms:
            return -1
        if var is None:
            return max(sum(e) for e in self.terms)
        if var not in self.vars:
            return 0
        i = self.vars.index(var)
        return max(e[i] for e in self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(not any(e) for e in self.terms)

    def constant_term(self) -> float:
        return self.terms.get((0,) * len(self.vars), 0.0)

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other) -> bool:
        if isinstance(other, MultiPoly):
            if self.vars != other.vars:
                union = _union(self.vars, other.vars)
                return self.extend(union).terms == other.extend(union).terms
            return self.terms == other.terms
        if isinstance(other, (int, float)):
            return self.is_constant() and self.constant_term() == other
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.vars, frozenset(self.terms.items())))

    def __repr__(self) -> str:
        return f"MultiPoly({self.vars}, {self.terms})"

    def __str__(self) -> str:
        return self.to_expr()

    def to_expr(self) -> str:
        """Render as text accepted by :func:`parse_poly` (round-trip exact)."""
        if not self.terms:
            return "0.0"
        parts = []
        for exps, coef in self.terms.items():
            factors = [repr(float(abs(coef)))]
            for name, e in zip(self.vars, exps):
                if e == 1:
                    factors.append(name)
                elif e > 1:
                    factors.append(f"{name}^{e}")
            body = "*".join(factors)
            if not parts:
                parts.append(("-" if coef < 0 else "") + body)
            else:
                parts.append((" - " if coef < 0 else " + ") + body)
        return "".join(parts)

    # -- arithmetic ---------------------------------------------------
    def _coerce(self, other) -> tuple["MultiPoly", "MultiPoly"]:
        if isinstance(other, MultiPoly):
            if other.vars == self.vars:
                return self, other
            union = _union(self.vars, other.vars)
            return self.extend(union), other.extend(union)
        return self, MultiPoly.const(self.vars, other)

    def __add__(self, other):
        a, b = self._coerce(other)
        terms = dict(a.terms)
        for exps, coef in b.terms.items():
            terms[exps] = terms.get(exps, 0.0) + coef
        return MultiPoly(a.vars, terms)

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly(self.vars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, MultiPoly):
            return MultiPoly(self.vars, {e: c * other for e, c in self.terms.items()})
        a, b = self._coerce(other)
        terms: dict = {}
        for ea, ca in a.terms.items():
            for eb, cb in b.terms.items():
                key = tuple(x + y for x, y in zip(ea, eb))
                terms[key] = terms.get(key, 0.0) + ca * cb
        return MultiPoly(a.vars, terms)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, MultiPoly):
            if not other.is_constant() or other.is_zero():
                raise ZeroDivisionError("division only by nonzero constants")
            other = other.constant_term()
        return MultiPoly(self.vars, {e: c / other for e, c in self.terms.items()})

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("polynomial powers must be non-negative integers")
        result = MultiPoly.const(self.vars, 1.0)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    # -- calculus -----------------------------------------------------
    def diff(self, var: str, times: int = 1) -> "MultiPoly":
        p = self
        for _ in range(times):
            p = differentiate(p, var)
        return p

    def __call__(self, point: Mapping[str, object]):
        return eval_poly(self, point)


def _nonzero(coef) -> bool:
    try:
        return coef != 0
    except Exception:  # pragma: no cover - exotic scalar types
        return True


def _union(a: tuple, b: tuple) -> tuple:
    return a + tuple(v for v in b if v not in a)


def differentiate(p: MultiPoly, var: str) -> MultiPoly:
    if var not in p.vars:
        raise ValueError(f"{var!r} is not a variable of {p.vars}")
    i = p.vars.index(var)
    terms = {}
    for exps, coef in p.terms.items():
        e = exps[i]
        if e:
            key = exps[:i] + (e - 1,) + exps[i + 1:]
            terms[key] = coef * e
    return MultiPoly(p.vars, terms)


def antidifferentiate(p: MultiPoly, var: str) -> MultiPoly:
    """Antiderivative in ``var`` with zero integration constant."""
    if var not in p.vars:
        raise ValueError(f"{var!r} is not a variable of {p.vars}")
    i = p.vars.index(var)
    terms = {}
    for exps, coef in p.terms.items():
        e = exps[i]
        key = exps[:i] + (e + 1,) + exps[i + 1:]
        terms[key] = coef / (e + 1)
    return MultiPoly(p.vars, terms)


def eval_poly(p: MultiPoly, point: Mapping[str, object]):
    """Evaluate ``p`` at ``point`` (var -> scalar, array, or dual)."""
    powers = []
    for i, name in enumerate(p.vars):
        top = max((e[i] for e in p.terms), default=0)
        if top == 0:
            powers.append(None)
            continue
        try:
            x = point[name]
        except KeyError:
            raise UnboundError(f"variable {name!r} is not bound") from None
        table = [None, x]
        for _ in range(top - 1):
            table.append(table[-1] * x)
        powers.append(table)

    total = 0.0
    for exps, coef in p.terms.items():
        term = coef
        for table, e in zip(powers, exps):
            if e:
                term = table[e] * term
        total = term + total
    return total


# -- parsing ----------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[a-zA-Z][a-zA-Z0-9_]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            bad = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ParseError(f"unexpected character {text[bad]!r}", bad)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, vars: tuple, params: Mapping[str, float]):
        self.tokens = _tokenize(text)
        self.i = 0
        self.vars = vars
        self.params = params

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, text, pos = self.take()
        if text != value:
            raise ParseError(f"expected {value!r}, found {text or 'end of input'!r}", pos)

    def parse(self) -> MultiPoly:
        result = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {text!r}", pos)
        return result

    def expr(self) -> MultiPoly:
        result = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            rhs = self.term()
            result = result + rhs if op == "+" else result - rhs
        return result

    def term(self) -> MultiPoly:
        result = self.factor()
        while self.peek()[1] in ("*", "/"):
            op, pos = self.take()[1:]
            rhs = self.factor()
            if op == "*":
                result = result * rhs
            else:
                if not rhs.is_constant():
                    raise ParseError("division by a non-constant expression", pos)
                if rhs.is_zero():
                    raise ParseError("division by zero", pos)
                result = result / rhs
        return result

    def factor(self) -> MultiPoly:
        base = self.base()
        if self.peek()[1] == "^":
            self.take()
            kind, text, pos = self.take()
            if text == "-":
                raise ParseError("negative exponent", pos)
            if kind != "number":
                raise ParseError(f"exponent must be a non-negative integer, found {text!r}", pos)
            if not text.isdigit():
                raise ParseError(f"fractional exponent {text!r}", pos)
            n = int(text)
            if n > MAX_EXPONENT:
                raise ParseError(f"exponent {n} exceeds limit {MAX_EXPONENT}", pos)
            base = base ** n
        return base

    def base(self) -> MultiPoly:
        kind, text, pos = self.take()
        if kind == "number":
            return MultiPoly.const(self.vars, float(text))
        if kind == "ident":
            if text in self.vars:
                return MultiPoly.var(self.vars, text)
            if text in self.params:
                return MultiPoly.const(self.vars, float(self.params[text]))
            if text == "z":
                raise ParseError("explicit z-dependence is not supported (autonomous families only)", pos)
            raise ParseError(f"unknown identifier {text!r}", pos)
        if text == "(":
            inner = self.expr()
            self.expect(")")
            return inner
        if text == "-":
            return -self.factor()
        raise ParseError(f"unexpected {text or 'end of input'!r}", pos)


def parse_poly(text: str, vars: Iterable[str], params: Mapping[str, float] | None = None) -> MultiPoly:
    """Parse a polynomial expression over ``vars`` with parameters bound from ``params``.

    Grammar (``/`` is accepted only with a constant right operand)::

        expr   := term (('+'|'-') term)*
        term   := factor (('*'|'/') factor)*
        factor := base ('^' uint)?
        base   := number | ident | '(' expr ')' | '-' factor
    """
    vars = tuple(vars)
    params = params or {}
    clash = set(vars) & set(params)
    if clash:
        raise ValueError(f"names used both as variable and parameter: {sorted(clash)}")
    return _Parser(text, vars, params).parse()


# -- rational functions -------------------------------------------------

class RationalFn:
    """``numerator / base**power`` with a polynomial ``base``.

    Keeping the denominator as a power of one base polynomial keeps the
    repeated differentiation in the Fels conditions from squaring
    denominators at every step.
    """

    __slots__ = ("num", "base", "power")

    def __init__(self, num: MultiPoly, base: MultiPoly | None = None, power: int = 0):
        if base is None:
            base = MultiPoly.const(num.vars, 1.0)
            power = 0
        if base.is_zero():
            raise ZeroDivisionError("denominator is identically zero")
        vars = _union(num.vars, base.vars)
        self.num = num.extend(vars)
        self.base = base.extend(vars)
        self.power = power

    @property
    def vars(self) -> tuple:
        return self.num.vars

    @property
    def numerator(self) -> MultiPoly:
        return self.num

    @property
    def denominator(self) -> MultiPoly:
        return self.base ** self.power

    def _align(self, other: "RationalFn") -> tuple[MultiPoly, MultiPoly, MultiPoly, int]:
        if other.power == 0:
            return self.num, other.num * self.denominator, self.base, self.power
        if self.power == 0:
            return self.num * other.denominator, other.num, other.base, other.power
        if self.base == other.base:
            k = max(self.power, other.power)
            a = self.num * self.base ** (k - self.power) if k > self.power else self.num
            b = other.num * other.base ** (k - other.power) if k > other.power else other.num
            return a, b, self.base, k
        den_a, den_b = self.denominator, other.denominator
        return self.num * den_b, other.num * den_a, den_a * den_b, 1

    def _wrap(self, other) -> "RationalFn":
        if isinstance(other, RationalFn):
            return other
        if isinstance(other, MultiPoly):
            return RationalFn(other)
        return RationalFn(MultiPoly.const(self.vars, other))

    def __add__(self, other):
        a, b, base, k = self._align(self._wrap(other))
        return RationalFn(a + b, base, k)

    __radd__ = __add__

    def __neg__(self):
        return RationalFn(-self.num, self.base, self.power)

    def __sub__(self, other):
        return self + (-self._wrap(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, RationalFn):
            return RationalFn(self.num * other, self.base, self.power)
        if other.power == 0:
            return RationalFn(self.num * other.num, self.base, self.power)
        if self.power == 0:
            return RationalFn(self.num * other.num, other.base, other.power)
        if self.base == other.base:
            return RationalFn(self.num * other.num, self.base, self.power + other.power)
        return RationalFn(self.num * other.num, self.denominator * other.denominator, 1)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (RationalFn, MultiPoly)):
            raise TypeError("division by rational functions is not supported")
        return RationalFn(self.num * (1.0 / other), self.base, self.power)

    def diff(self, var: str) -> "RationalFn":
        """Exact partial derivative."""
        if var not in self.vars:
            return RationalFn(MultiPoly(self.vars), self.base, self.power)
        dn = differentiate(self.num, var)
        if self.power == 0:
            return RationalFn(dn, self.base, 0)
        db = differentiate(self.base, var)
        if db.is_zero():
            return RationalFn(dn, self.base, self.power)
        num = dn * self.base - self.num * db * float(self.power)
        return RationalFn(num, self.base, self.power + 1)

    def __call__(self, point: Mapping[str, object]):
        value = eval_poly(self.num, point)
        if self.power:
            value = value / eval_poly(self.base, point) ** self.power
        return value

    def __repr__(self) -> str:
        return f"RationalFn(({self.num}) / ({self.base})^{self.power})"
