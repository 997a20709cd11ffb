"""A small exact computer-algebra kernel.

Expressions are immutable trees over symbols, exact rational constants,
n-ary sums and products, integer powers, ``exp`` and ``ln``.  Every public
constructor returns the canonical form, so structural equality (``==``) is
equality of canonical forms.

Canonical form:

* sums and products are flattened and their operands sorted by a fixed total
  order (constants first, then symbols by name, then powers, products, sums,
  exp, ln);
* numeric constants are folded, zero/one identities dropped;
* like terms of a sum are collected (``x + x -> 2*x``) and equal bases of a
  product are merged into one integer power (``x*x -> x^2``);
* a product that is a pure number times a sum is distributed
  (``-(a + b) -> -a - b``); a sum that is one factor among several, or the
  base of a power, has the coefficient of its leading term moved outside
  (``(2*a + 2*b)*c -> 2*(a + b)*c``);
* integer powers of products are expanded (``(a*b)^-1 -> a^-1*b^-1``).

No polynomial GCD cancellation is attempted.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from numbers import Rational
from typing import Iterator, Mapping, Union

from .errors import DivisionByZero, DomainError, ParseError, UnboundSymbol, ZeroDenominator

Number = Union[int, Fraction]

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_FUNCTIONS = ("exp", "ln")


_set = object.__setattr__


class Expr:
    """Base class of all expression nodes.

    Nodes are never constructed directly; use :func:`symbol`, :func:`const`,
    :func:`add`, :func:`mul`, :func:`power`, :func:`exp`, :func:`ln` or the
    arithmetic operators, all of which canonicalize.
    """

    __slots__ = ("_hash", "_key", "_free")
    _rank = 99

    def _args(self) -> tuple:
        raise NotImplementedError

    def _init_cache(self):
        _set(self, "_hash", None)
        _set(self, "_key", None)
        _set(self, "_free", None)

    # structural identity
    def __eq__(self, other):
        if self is other:
            return True
        if type(self) is not type(other):
            return NotImplemented if not isinstance(other, Expr) else False
        if hash(self) != hash(other):
            return False
        return self._args() == other._args()

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    def __delattr__(self, name):
        raise AttributeError(f"{type(self).__name__} is immutable")

    def __ne__(self, other):
        result = self.__eq__(other)
        return result if result is NotImplemented else not result

    def __hash__(self):
        if self._hash is None:
            _set(self, "_hash", hash((type(self).__name__, self._args())))
        return self._hash

    @property
    def sort_key(self) -> tuple:
        if self._key is None:
            _set(self, "_key", self._make_key())
        return self._key

    def _make_key(self) -> tuple:
        raise NotImplementedError

    @property
    def free_symbols(self) -> frozenset:
        """Names of all symbols occurring in the expression."""
        if self._free is None:
            names = set()
            for node in self.walk():
                if isinstance(node, Symbol):
                    names.add(node.name)
            _set(self, "_free", frozenset(names))
        return self._free

    def children(self) -> tuple:
        return ()

    def walk(self) -> Iterator["Expr"]:
        """Pre-order traversal over every node (including ``self``)."""
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children()))

    def contains(self, sub: "Expr") -> bool:
        """Structural containment, modulo flattening of sums and products.

        ``a + b`` occurs in ``a + b + c`` because flattening merged it there.
        """
        for node in self.walk():
            if node == sub:
                return True
            if isinstance(sub, (Sum, Product)) and type(node) is type(sub):
                if _sub_multiset(sub.operands, node.operands):
                    return True
        return False

    # arithmetic sugar
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return add(self, mul(-1, other))

    def __rsub__(self, other):
        return add(other, mul(-1, self))

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return mul(self, power(other, -1))

    def __rtruediv__(self, other):
        return mul(other, power(self, -1))

    def __neg__(self):
        return mul(-1, self)

    def __pos__(self):
        return self

    def __pow__(self, n):
        return power(self, n)

    def subs(self, bindings) -> "Expr":
        return substitute(self, bindings)

    def diff(self, s) -> "Expr":
        return differentiate(self, s)

    def evaluate(self, bindings=None):
        return evaluate_exact(self, bindings or {})

    def __str__(self):
        return to_text(self)

    def __repr__(self):
        return f"Expr({to_text(self)!r})"


def _sub_multiset(small, big) -> bool:
    pool = list(big)
    for op in small:
        if op not in pool:
            return False
        pool.remove(op)
    return True


class Const(Expr):
    __slots__ = ("value",)
    _rank = 0

    def __init__(self, value: Fraction):
        _set(self, "value", value)
        self._init_cache()

    def _args(self):
        return (self.value,)

    def __eq__(self, other):
        # constants compare equal to plain rationals
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self.value == other
        return Expr.__eq__(self, other)

    def __hash__(self):
        return hash(self.value)

    def _make_key(self):
        return (0, self.value)


class Symbol(Expr):
    __slots__ = ("name",)
    _rank = 1

    def __init__(self, name: str):
        _set(self, "name", name)
        self._init_cache()

    def _args(self):
        return (self.name,)

    def _make_key(self):
        return (1, self.name)


class Power(Expr):
    __slots__ = ("base", "exponent")
    _rank = 2

    def __init__(self, base: Expr, exponent: int):
        _set(self, "base", base)
        _set(self, "exponent", exponent)
        self._init_cache()

    def _args(self):
        return (self.base, self.exponent)

    def children(self):
        return (self.base,)

    def _make_key(self):
        return (2, self.base.sort_key, self.exponent)


class Product(Expr):
    __slots__ = ("operands",)
    _rank = 3

    def __init__(self, operands: tuple):
        _set(self, "operands", operands)
        self._init_cache()

    def _args(self):
        return self.operands

    def children(self):
        return self.operands

    def _make_key(self):
        return (3, tuple(op.sort_key for op in self.operands))


class Sum(Expr):
    __slots__ = ("operands",)
    _rank = 4

    def __init__(self, operands: tuple):
        _set(self, "operands", operands)
        self._init_cache()

    def _args(self):
        return self.operands

    def children(self):
        return self.operands

    def _make_key(self):
        return (4, tuple(op.sort_key for op in self.operands))


class Exp(Expr):
    __slots__ = ("arg",)
    _rank = 5

    def __init__(self, arg: Expr):
        _set(self, "arg", arg)
        self._init_cache()

    def _args(self):
        return (self.arg,)

    def children(self):
        return (self.arg,)

    def _make_key(self):
        return (5, self.arg.sort_key)


class Ln(Expr):
    __slots__ = ("arg",)
    _rank = 6

    def __init__(self, arg: Expr):
        _set(self, "arg", arg)
        self._init_cache()

    def _args(self):
        return (self.arg,)

    def children(self):
        return (self.arg,)

    def _make_key(self):
        return (6, self.arg.sort_key)


ZERO = Const(Fraction(0))
ONE = Const(Fraction(1))


# ---------------------------------------------------------------------------
# canonical constructors
# ---------------------------------------------------------------------------

def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not expressions")
    if isinstance(x, (int, Rational)):
        return Const(Fraction(x))
    raise TypeError(f"cannot convert {type(x).__name__} to an exact expression")


def symbol(name: str) -> Symbol:
    if not isinstance(name, str) or not _NAME_RE.match(name):
        raise ValueError(f"invalid symbol name {name!r}")
    if name in _FUNCTIONS:
        raise ValueError(f"{name!r} is reserved for a function")
    return Symbol(name)


def symbols(names: str) -> tuple:
    return tuple(symbol(n) for n in names.replace(",", " ").split())


def const(numerator: Number, denominator: Number = 1) -> Const:
    if denominator == 0:
        raise ZeroDenominator(f"rational {numerator}/0 has a zero denominator")
    return Const(Fraction(numerator) / Fraction(denominator))


def _split_coeff(term: Expr):
    if isinstance(term, Product) and isinstance(term.operands[0], Const):
        rest = term.operands[1:]
        return term.operands[0].value, rest[0] if len(rest) == 1 else Product(rest)
    return Fraction(1), term


def _scale(monomial: Expr, coeff: Fraction) -> Expr:
    if coeff == 1:
        return monomial
    if isinstance(monomial, Product):
        return Product((Const(coeff),) + monomial.operands)
    return Product((Const(coeff), monomial))


def add(*terms) -> Expr:
    total = Fraction(0)
    coeffs: dict = {}

    def absorb(t):
        nonlocal total
        if isinstance(t, Const):
            total += t.value
        elif isinstance(t, Sum):
            for op in t.operands:
                absorb(op)
        else:
            c, m = _split_coeff(t)
            coeffs[m] = coeffs.get(m, 0) + c

    for t in terms:
        absorb(as_expr(t))
    ops = sorted((m for m, c in coeffs.items() if c != 0), key=lambda m: m.sort_key)
    ops = [_scale(m, coeffs[m]) for m in ops]
    if total != 0:
        ops.insert(0, Const(total))
    if not ops:
        return ZERO
    if len(ops) == 1:
        return ops[0]
    return Sum(tuple(ops))


def _content(s: Sum):
    """Split a sum into the coefficient of its leading term and the rest.

    Sums inside products and powers are kept in this primitive form so that
    ``2*(x + y)*z`` does not depend on the order of multiplication.
    """
    c, _ = _split_coeff(s.operands[0]) if not isinstance(s.operands[0], Const) else (s.operands[0].value, None)
    if c == 1:
        return c, s
    return c, add(*(mul(1 / c, op) for op in s.operands))


def mul(*factors) -> Expr:
    coeff = Fraction(1)
    exponents: dict = {}

    def absorb(f):
        nonlocal coeff
        if isinstance(f, Const):
            coeff *= f.value
        elif isinstance(f, Product):
            for op in f.operands:
                absorb(op)
        elif isinstance(f, Power):
            exponents[f.base] = exponents.get(f.base, 0) + f.exponent
        elif isinstance(f, Sum):
            c, prim = _content(f)
            coeff *= c
            exponents[prim] = exponents.get(prim, 0) + 1
        else:
            exponents[f] = exponents.get(f, 0) + 1

    for f in factors:
        absorb(as_expr(f))
    if coeff == 0:
        return ZERO
    ops = []
    for base, n in exponents.items():
        if n == 0:
            continue
        ops.append(base if n == 1 else Power(base, n))
    ops.sort(key=lambda op: op.sort_key)
    if not ops:
        return Const(coeff)
    if len(ops) == 1:
        if coeff == 1:
            return ops[0]
        if isinstance(ops[0], Sum):
            return add(*(mul(coeff, op) for op in ops[0].operands))
    if coeff != 1:
        ops.insert(0, Const(coeff))
    return Product(tuple(ops))


def _as_int_exponent(n) -> int:
    if isinstance(n, Const):
        n = n.value
    if isinstance(n, bool):
        raise TypeError("boolean exponent")
    if isinstance(n, int):
        return n
    if isinstance(n, Rational) and Fraction(n).denominator == 1:
        return int(n)
    raise ValueError(f"power exponents must be integers, got {n}")


def power(base, n) -> Expr:
    base = as_expr(base)
    n = _as_int_exponent(n)
    if n == 0:
        return ONE
    if n == 1:
        return base
    if isinstance(base, Const):
        if base.value == 0 and n < 0:
            raise DivisionByZero("zero raised to a negative power")
        return Const(base.value ** n)
    if isinstance(base, Power):
        return power(base.base, base.exponent * n)
    if isinstance(base, Product):
        return mul(*(power(op, n) for op in base.operands))
    if isinstance(base, Sum):
        c, prim = _content(base)
        if c != 1:
            return mul(Const(c ** n), Power(prim, n))
    return Power(base, n)


def exp(arg) -> Expr:
    arg = as_expr(arg)
    if arg == ZERO:
        return ONE
    return Exp(arg)


def ln(arg) -> Expr:
    arg = as_expr(arg)
    if arg == ONE:
        return ZERO
    return Ln(arg)


def canonical(e: Expr) -> Expr:
    """Rebuild ``e`` through the canonical constructors."""
    return substitute(e, {})


_BUILDERS = {
    "sum": lambda *ops: add(*ops),
    "product": lambda *ops: mul(*ops),
    "power": lambda b, n: power(b, n),
    "exp": lambda a: exp(a),
    "ln": lambda a: ln(a),
}


def build(desc) -> Expr:
    """Build a canonical expression from a nested tuple description.

    Accepted forms: ``("sym", name)``, ``("const", p[, q])``,
    ``("sum", *ops)``, ``("product", *ops)``, ``("power", base, n)``,
    ``("exp", arg)``, ``("ln", arg)``; bare ints, Fractions, Exprs and
    expression strings are accepted as leaves.
    """
    if isinstance(desc, Expr):
        return desc
    if isinstance(desc, str):
        return parse(desc)
    if isinstance(desc, (int, Fraction)):
        return as_expr(desc)
    tag, *rest = desc
    if tag == "sym":
        return symbol(rest[0])
    if tag == "const":
        return const(*rest)
    if tag == "power":
        return power(build(rest[0]), rest[1])
    try:
        builder = _BUILDERS[tag]
    except KeyError:
        raise ValueError(f"unknown node kind {tag!r}") from None
    return builder(*(build(r) for r in rest))


# ---------------------------------------------------------------------------
# substitution, differentiation, evaluation
# ---------------------------------------------------------------------------

def _binding_name(key) -> str:
    return key.name if isinstance(key, Symbol) else key


def substitute(e: Expr, bindings: Mapping) -> Expr:
    """Simultaneously replace bound symbols and re-canonicalize."""
    table = {_binding_name(k): as_expr(v) for k, v in bindings.items()}
    memo: dict = {}

    def go(node):
        if isinstance(node, Const):
            return node
        if isinstance(node, Symbol):
            return table.get(node.name, node)
        if node in memo:
            return memo[node]
        if isinstance(node, Sum):
            out = add(*(go(op) for op in node.operands))
        elif isinstance(node, Product):
            out = mul(*(go(op) for op in node.operands))
        elif isinstance(node, Power):
            out = power(go(node.base), node.exponent)
        elif isinstance(node, Exp):
            out = exp(go(node.arg))
        elif isinstance(node, Ln):
            out = ln(go(node.arg))
        else:
            raise TypeError(node)
        memo[node] = out
        return out

    return go(as_expr(e))


def differentiate(e: Expr, s) -> Expr:
    """Canonical partial derivative of ``e`` with respect to symbol ``s``."""
    name = _binding_name(s)
    memo: dict = {}

    def d(node):
        if name not in node.free_symbols:
            return ZERO
        if isinstance(node, Symbol):
            return ONE
        if node in memo:
            return memo[node]
        if isinstance(node, Sum):
            out = add(*(d(op) for op in node.operands))
        elif isinstance(node, Product):
            ops = node.operands
            terms = []
            for i, op in enumerate(ops):
                dop = d(op)
                if dop != ZERO:
                    terms.append(mul(*ops[:i], dop, *ops[i + 1:]))
            out = add(*terms)
        elif isinstance(node, Power):
            n = node.exponent
            out = mul(n, power(node.base, n - 1), d(node.base))
        elif isinstance(node, Exp):
            out = mul(node, d(node.arg))
        elif isinstance(node, Ln):
            out = mul(d(node.arg), power(node.arg, -1))
        else:
            raise TypeError(node)
        memo[node] = out
        return out

    return d(as_expr(e))


def _coerce_value(v):
    if isinstance(v, float):
        return v
    if isinstance(v, Expr):
        if not isinstance(v, Const):
            raise TypeError("bindings for evaluation must be numbers")
        return v.value
    return Fraction(v)


def evaluate_exact(e: Expr, bindings: Mapping):
    """Evaluate with every symbol bound.

    Returns a :class:`~fractions.Fraction` when the expression has no
    ``exp``/``ln`` node and all bindings are rational; otherwise a float
    (IEEE double precision).
    """
    values = {_binding_name(k): _coerce_value(v) for k, v in bindings.items()}
    memo: dict = {}

    def ev(node):
        if isinstance(node, Const):
            return node.value
        if isinstance(node, Symbol):
            try:
                return values[node.name]
            except KeyError:
                raise UnboundSymbol(node.name) from None
        if node in memo:
            return memo[node]
        if isinstance(node, Sum):
            out = sum((ev(op) for op in node.operands), Fraction(0))
        elif isinstance(node, Product):
            out = Fraction(1)
            for op in node.operands:
                out = out * ev(op)
        elif isinstance(node, Power):
            b = ev(node.base)
            if b == 0 and node.exponent < 0:
                raise DivisionByZero(f"denominator {to_text(node.base)} evaluates to 0")
            out = b ** node.exponent
        elif isinstance(node, Exp):
            out = math.exp(ev(node.arg))
        elif isinstance(node, Ln):
            a = ev(node.arg)
            if a <= 0:
                raise DomainError(f"ln of non-positive value {a}")
            out = math.log(a)
        else:
            raise TypeError(node)
        memo[node] = out
        return out

    return ev(as_expr(e))


# ---------------------------------------------------------------------------
# text syntax
# ---------------------------------------------------------------------------

def _fmt_rational(v: Fraction) -> str:
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def _is_negative(term: Expr) -> bool:
    if isinstance(term, Const):
        return term.value < 0
    if isinstance(term, Product) and isinstance(term.operands[0], Const):
        return term.operands[0].value < 0
    return False


def _atom_text(e: Expr) -> str:
    """Text of ``e`` safe to use as a factor or power base."""
    if isinstance(e, (Symbol, Exp, Ln)):
        return to_text(e)
    if isinstance(e, Const) and e.value >= 0 and e.value.denominator == 1:
        return to_text(e)
    return f"({to_text(e)})"


def _factor_text(e: Expr, n: int) -> str:
    base = _atom_text(e)
    return base if n == 1 else f"{base}^{n}"


def to_text(e: Expr) -> str:
    """Infix text; ``parse(to_text(e)) == e`` for every canonical ``e``."""
    if isinstance(e, Const):
        return _fmt_rational(e.value)
    if isinstance(e, Symbol):
        return e.name
    if isinstance(e, Exp):
        return f"exp({to_text(e.arg)})"
    if isinstance(e, Ln):
        return f"ln({to_text(e.arg)})"
    if isinstance(e, Power):
        if e.exponent < 0:
            return f"1/{_factor_text(e.base, -e.exponent)}"
        return _factor_text(e.base, e.exponent)
    if isinstance(e, Sum):
        parts = [to_text(e.operands[0])]
        for op in e.operands[1:]:
            if _is_negative(op):
                parts.append(f"- {to_text(-op)}")
            else:
                parts.append(f"+ {to_text(op)}")
        return " ".join(parts)
    if isinstance(e, Product):
        coeff = Fraction(1)
        ops = e.operands
        if isinstance(ops[0], Const):
            coeff, ops = ops[0].value, ops[1:]
        num, den = [], []
        if abs(coeff.numerator) != 1:
            num.append(str(abs(coeff.numerator)))
        if coeff.denominator != 1:
            den.append(str(coeff.denominator))
        for op in ops:
            if isinstance(op, Power) and op.exponent < 0:
                den.append(_factor_text(op.base, -op.exponent))
            elif isinstance(op, Power):
                num.append(_factor_text(op.base, op.exponent))
            else:
                num.append(_atom_text(op))
        text = "*".join(num) if num else "1"
        if den:
            text += "/" + (den[0] if len(den) == 1 else "(" + "*".join(den) + ")")
        return ("-" if coeff < 0 else "") + text
    raise TypeError(e)


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str, line):
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(line, f"unexpected character {text[pos:].strip()[:1]!r} in expression {text!r}")
        pos = m.end()
        kind = m.lastgroup
        tokens.append((kind, m.group(kind)))
    return tokens


class _Parser:
    def __init__(self, text, line):
        self.text = text
        self.line = line
        self.tokens = _tokenize(text, line)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else (None, None)

    def take(self):
        tok = self.peek()
        self.pos += 1
        return tok

    def fail(self, reason):
        raise ParseError(self.line, f"{reason} in expression {self.text!r}")

    def expect(self, value):
        if self.take() != ("op", value):
            self.fail(f"expected {value!r}")

    def parse(self):
        if not self.tokens:
            self.fail("empty expression")
        e = self.expr()
        if self.pos != len(self.tokens):
            self.fail(f"unexpected {self.peek()[1]!r}")
        return e

    def expr(self):
        e = self.term()
        while self.peek() in (("op", "+"), ("op", "-")):
            _, op = self.take()
            rhs = self.term()
            e = add(e, rhs) if op == "+" else add(e, mul(-1, rhs))
        return e

    def term(self):
        # signs apply to the whole term, matching how a negative coefficient prints
        sign, e = self.signed()
        while self.peek() in (("op", "*"), ("op", "/")):
            _, op = self.take()
            s, rhs = self.signed()
            sign *= s
            if op == "*":
                e = mul(e, rhs)
            else:
                if rhs == ZERO:
                    raise ZeroDenominator(f"division by zero in expression {self.text!r}")
                e = mul(e, power(rhs, -1))
        return mul(sign, e)

    def signed(self):
        sign = 1
        while self.peek() in (("op", "-"), ("op", "+")):
            if self.take()[1] == "-":
                sign = -sign
        return sign, self.power()

    def unary(self):
        if self.peek() == ("op", "-"):
            self.take()
            return mul(-1, self.unary())
        if self.peek() == ("op", "+"):
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek() == ("op", "^"):
            self.take()
            exponent = self.unary()
            if not isinstance(exponent, Const) or exponent.value.denominator != 1:
                self.fail("power exponent must be an integer constant")
            if base == ZERO and exponent.value < 0:
                raise ZeroDenominator(f"division by zero in expression {self.text!r}")
            return power(base, exponent.value)
        return base

    def atom(self):
        kind, value = self.take()
        if kind == "num":
            return Const(Fraction(value))
        if kind == "name":
            if value in _FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return exp(arg) if value == "exp" else ln(arg)
            return Symbol(value)
        if (kind, value) == ("op", "("):
            e = self.expr()
            self.expect(")")
            return e
        self.fail("unexpected end" if kind is None else f"unexpected {value!r}")


def parse(text: str, line=None) -> Expr:
    """Parse infix text (``+ - * / ^ exp() ln()``, parentheses, ``p/q``)."""
    return _Parser(text, line).parse()
