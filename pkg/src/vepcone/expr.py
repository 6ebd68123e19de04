"""Small arithmetic DSL used to write bifunctions, objectives and derivative maps.

Grammar (whitespace insignificant, no implicit multiplication)::

    vector  := expr (';' expr)*
    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ('^' unary)?          # right associative
    atom    := NUMBER | VAR | FUNC '(' expr (',' expr)* ')' | '(' expr ')'

Variables are ``x1..xn``, ``z1..zn`` and ``u1..un``.  Functions: ``abs``,
``sqrt``, ``exp``, ``log`` (one argument), ``min``, ``max`` (two arguments)
and ``norm2`` (any positive number of arguments).

Evaluation is vectorised: every variable may be a numpy array and the usual
broadcasting rules apply.  Any operation producing a non-finite value raises
:class:`ExprDomainError` instead of propagating NaN.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

__all__ = [
    "Expr", "Num", "Var", "Neg", "BinOp", "Call", "ExprVector",
    "ExprSyntaxError", "ExprDomainError", "parse", "parse_expr", "eval_vector",
    "to_source",
]

FUNC_ARITY = {"abs": 1, "sqrt": 1, "exp": 1, "log": 1, "min": 2, "max": 2, "norm2": None}
VAR_KINDS = ("x", "z", "u")


class ExprSyntaxError(ValueError):
    def __init__(self, msg, line=1, col=1):
        super().__init__(f"{msg} at line {line}, column {col}")
        self.line = line
        self.col = col


class ExprDomainError(ArithmeticError):
    """Raised on division by zero, log of a non-positive number, etc.

    ``component`` is the index of the vector component being evaluated and
    ``index`` the broadcast index of the first offending element (if any).
    """

    def __init__(self, msg, component=None, index=None):
        self.msg = msg
        self.component = component
        self.index = index
        super().__init__(self._text())

    def _text(self):
        s = self.msg
        if self.component is not None:
            s += f" (component {self.component})"
        if self.index is not None:
            s += f" at element {self.index}"
        return s


# ---------------------------------------------------------------- AST nodes

class Expr:
    """Base class of AST nodes.  Nodes are immutable."""

    def evaluate(self, env):
        raise NotImplementedError

    def variables(self):
        raise NotImplementedError


@dataclass(frozen=True)
class Num(Expr):
    value: float

    def evaluate(self, env):
        return np.float64(self.value)

    def variables(self):
        return frozenset()


@dataclass(frozen=True)
class Var(Expr):
    kind: str
    index: int  # 1-based

    @property
    def name(self):
        return f"{self.kind}{self.index}"

    def evaluate(self, env):
        return env[self.kind][self.index - 1]

    def variables(self):
        return frozenset([(self.kind, self.index)])


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr

    def evaluate(self, env):
        return -self.arg.evaluate(env)

    def variables(self):
        return self.arg.variables()


def _first_bad(mask):
    idx = np.argwhere(np.atleast_1d(mask))
    return tuple(int(i) for i in idx[0]) if len(idx) else None


def _check_finite(val, what):
    arr = np.asarray(val)
    if not np.all(np.isfinite(arr)):
        raise ExprDomainError(f"non-finite result in {what}", index=_first_bad(~np.isfinite(arr)))
    return val


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr

    def evaluate(self, env):
        a = self.left.evaluate(env)
        b = self.right.evaluate(env)
        if self.op == "+":
            return _check_finite(a + b, "'+'")
        if self.op == "-":
            return _check_finite(a - b, "'-'")
        if self.op == "*":
            return _check_finite(a * b, "'*'")
        if self.op == "/":
            zero = np.asarray(b) == 0
            if np.any(zero):
                raise ExprDomainError("division by zero", index=_first_bad(zero))
            return _check_finite(a / b, "'/'")
        if self.op == "^":
            with np.errstate(all="ignore"):
                r = np.power(np.asarray(a, dtype=float), b)
            return _check_finite(r, "'^'")
        raise AssertionError(self.op)

    def variables(self):
        return self.left.variables() | self.right.variables()


@dataclass(frozen=True)
class Call(Expr):
    name: str
    args: tuple

    def evaluate(self, env):
        vals = [a.evaluate(env) for a in self.args]
        name = self.name
        if name == "abs":
            return np.abs(vals[0])
        if name == "sqrt":
            neg = np.asarray(vals[0]) < 0
            if np.any(neg):
                raise ExprDomainError("sqrt of negative number", index=_first_bad(neg))
            return np.sqrt(vals[0])
        if name == "exp":
            with np.errstate(over="ignore"):
                return _check_finite(np.exp(vals[0]), "exp")
        if name == "log":
            bad = np.asarray(vals[0]) <= 0
            if np.any(bad):
                raise ExprDomainError("log of non-positive number", index=_first_bad(bad))
            return np.log(vals[0])
        if name == "min":
            return np.minimum(vals[0], vals[1])
        if name == "max":
            return np.maximum(vals[0], vals[1])
        if name == "norm2":
            acc = 0.0
            for v in vals:
                acc = acc + np.asarray(v, dtype=float) ** 2
            return _check_finite(np.sqrt(acc), "norm2")
        raise AssertionError(name)

    def variables(self):
        out = frozenset()
        for a in self.args:
            out = out | a.variables()
        return out


# ---------------------------------------------------------------- printing

def to_source(e: Expr) -> str:
    """Print an expression so that parsing the text gives back an equal tree."""
    if isinstance(e, Num):
        v = float(e.value)
        if v < 0 or (v == 0 and np.signbit(v)):
            return f"(-{repr(-v)})"
        return repr(v)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        return f"(-{to_source(e.arg)})"
    if isinstance(e, BinOp):
        return f"({to_source(e.left)}{e.op}{to_source(e.right)})"
    if isinstance(e, Call):
        return f"{e.name}({','.join(to_source(a) for a in e.args)})"
    raise TypeError(type(e))


# ---------------------------------------------------------------- tokenizer / parser

_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r\n]+)"
    r"|(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),;])"
)
_VAR_RE = re.compile(r"^([xzu])([1-9][0-9]*)$")


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(src):
    toks = []
    pos, line, col = 0, 1, 1
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if not m:
            raise ExprSyntaxError(f"unexpected character {src[pos]!r}", line, col)
        text = m.group(0)
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, text, line, col))
        for ch in text:
            if ch == "\n":
                line += 1
                col = 1
            else:
                col += 1
        pos = m.end()
    toks.append(_Tok("eof", "", line, col))
    return toks


class _Parser:
    def __init__(self, src):
        self.toks = _tokenize(src)
        self.i = 0

    @property
    def tok(self):
        return self.toks[self.i]

    def advance(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text):
        t = self.tok
        if t.text != text:
            found = t.text or "end of input"
            raise ExprSyntaxError(f"expected {text!r}, found {found!r}", t.line, t.col)
        return self.advance()

    def vector(self):
        comps = [self.expr()]
        while self.tok.text == ";":
            self.advance()
            if self.tok.kind == "eof":  # tolerate a trailing ';'
                break
            comps.append(self.expr())
        if self.tok.kind != "eof":
            t = self.tok
            raise ExprSyntaxError(f"unexpected token {t.text!r}", t.line, t.col)
        return comps

    def expr(self):
        node = self.term()
        while self.tok.text in ("+", "-"):
            op = self.advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.tok.text in ("*", "/"):
            op = self.advance().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.tok.text == "-":
            self.advance()
            return Neg(self.unary())
        if self.tok.text == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.tok.text == "^":
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        t = self.tok
        if t.kind == "num":
            self.advance()
            return Num(float(t.text))
        if t.kind == "name":
            self.advance()
            m = _VAR_RE.match(t.text)
            if m:
                return Var(m.group(1), int(m.group(2)))
            if t.text in FUNC_ARITY:
                return self.call(t)
            raise ExprSyntaxError(f"unknown identifier {t.text!r}", t.line, t.col)
        if t.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        found = t.text or "end of input"
        raise ExprSyntaxError(f"unexpected {found!r}", t.line, t.col)

    def call(self, name_tok):
        self.expect("(")
        args = [self.expr()]
        while self.tok.text == ",":
            self.advance()
            args.append(self.expr())
        self.expect(")")
        arity = FUNC_ARITY[name_tok.text]
        if (arity is not None and len(args) != arity) or len(args) == 0:
            want = arity if arity is not None else "at least 1"
            raise ExprSyntaxError(
                f"function {name_tok.text} takes {want} argument(s), got {len(args)}",
                name_tok.line, name_tok.col)
        return Call(name_tok.text, tuple(args))


def parse_expr(source: str) -> Expr:
    comps = _Parser(source).vector()
    if len(comps) != 1:
        raise ExprSyntaxError(f"expected a single expression, got {len(comps)}")
    return comps[0]


# ---------------------------------------------------------------- vectors

@dataclass(frozen=True)
class ExprVector:
    """A list of expressions sharing declared arities for x, z and u."""

    components: tuple
    n_x: int = 0
    n_z: int = 0
    n_u: int = 0
    source: Optional[str] = field(default=None, compare=False)

    def __post_init__(self):
        limits = {"x": self.n_x, "z": self.n_z, "u": self.n_u}
        for k, c in enumerate(self.components):
            for kind, idx in c.variables():
                if idx > limits[kind]:
                    raise ExprSyntaxError(
                        f"component {k}: variable {kind}{idx} exceeds declared arity {limits[kind]}")

    @property
    def dim(self):
        return len(self.components)

    @property
    def uses_u(self):
        return any(kind == "u" for c in self.components for kind, _ in c.variables())

    def uses(self, kind):
        return any(k == kind for c in self.components for k, _ in c.variables())

    def to_source(self):
        return "; ".join(to_source(c) for c in self.components)

    def __call__(self, x=None, z=None, u=None):
        return eval_vector(self, x, z, u)

    def evaluate_batch(self, env):
        """Evaluate with ``env = {'x': [...], 'z': [...], 'u': [...]}`` of broadcastable arrays.

        Returns a list of arrays, one per component.
        """
        out = []
        for k, c in enumerate(self.components):
            try:
                out.append(c.evaluate(env))
            except ExprDomainError as err:
                raise ExprDomainError(err.msg, component=k, index=err.index) from None
        return out


def parse(source: Union[str, Sequence[str]], n_x=None, n_z=None, n_u=None) -> ExprVector:
    """Parse a ';'-separated list (or a list of strings) into an :class:`ExprVector`.

    Arities not given explicitly are inferred from the largest variable index.
    """
    if isinstance(source, str):
        comps = _Parser(source).vector()
        text = source
    else:
        comps = []
        for s in source:
            comps.extend(_Parser(s).vector())
        text = "; ".join(source)
    used = {"x": 0, "z": 0, "u": 0}
    for c in comps:
        for kind, idx in c.variables():
            used[kind] = max(used[kind], idx)
    n_x = used["x"] if n_x is None else n_x
    n_z = used["z"] if n_z is None else n_z
    n_u = used["u"] if n_u is None else n_u
    for kind, declared in (("x", n_x), ("z", n_z), ("u", n_u)):
        if used[kind] > declared:
            raise ExprSyntaxError(f"unknown identifier {kind}{used[kind]} (declared {kind}-arity {declared})")
    return ExprVector(tuple(comps), n_x, n_z, n_u, source=text)


def _as_vec(v, n, name):
    if n == 0:
        return np.zeros(0)
    if v is None:
        raise ValueError(f"{name} required ({n} components)")
    arr = np.asarray(v, dtype=float).reshape(-1)
    if arr.shape[0] != n:
        raise ValueError(f"{name} has length {arr.shape[0]}, expected {n}")
    return arr


def eval_vector(e: ExprVector, x=None, z=None, u=None) -> np.ndarray:
    """Evaluate at a single point; returns a float vector of length ``e.dim``."""
    if e.uses_u and u is None:
        raise ValueError("expression uses u-variables but no u supplied")
    if u is not None and not e.uses_u and e.n_u == 0:
        raise ValueError("u supplied but expression has no u-variables")
    env = {
        "x": _as_vec(x, e.n_x, "x"),
        "z": _as_vec(z, e.n_z, "z"),
        "u": _as_vec(u, e.n_u, "u") if e.n_u else np.zeros(0),
    }
    vals = e.evaluate_batch(env)
    return np.array([float(v) for v in vals])
