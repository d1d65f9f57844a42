"""Field-profile expressions over x1, x2.

Grammar (EBNF)::

    expr   = term , { ("+" | "-") , term } ;
    term   = factor , { "*" , factor } ;
    factor = ("+" | "-") , factor | number | "x1" | "x2" | "(" , expr , ")" ;
    number = digit , { digit } , [ "." , { digit } ] , [ ("e" | "E") , [ "+" | "-" ] , digit , { digit } ] ;

Whitespace is ignored.  Every such expression is a polynomial, which is how it
is stored, so values and gradients are exact.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

_TOKEN = re.compile(r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<var>x1|x2)|(?P<op>[-+*()]))")


class ExprError(ValueError):
    pass


@dataclass(frozen=True)
class Polynomial:
    """Sum of ``c * x1^i * x2^j`` stored as ``{(i, j): c}``."""

    terms: tuple[tuple[tuple[int, int], float], ...]
    source: str = ""

    @classmethod
    def from_dict(cls, d: dict, source: str = "") -> "Polynomial":
        return cls(tuple(sorted((k, float(v)) for k, v in d.items() if v != 0.0)), source)

    def as_dict(self) -> dict:
        return dict(self.terms)

    def __call__(self, x1, x2) -> np.ndarray:
        x1 = np.asarray(x1, float)
        x2 = np.asarray(x2, float)
        out = np.zeros(np.broadcast(x1, x2).shape)
        for (i, j), c in self.terms:
            out = out + c * x1 ** i * x2 ** j
        return out

    def gradient(self, x1, x2) -> tuple[np.ndarray, np.ndarray]:
        x1 = np.asarray(x1, float)
        x2 = np.asarray(x2, float)
        shape = np.broadcast(x1, x2).shape
        g1, g2 = np.zeros(shape), np.zeros(shape)
        for (i, j), c in self.terms:
            if i:
                g1 = g1 + c * i * x1 ** (i - 1) * x2 ** j
            if j:
                g2 = g2 + c * j * x1 ** i * x2 ** (j - 1)
        return g1, g2

    def __str__(self) -> str:
        return self.source or " + ".join(f"{c}*x1^{i}*x2^{j}" for (i, j), c in self.terms) or "0"


def _add(a: dict, b: dict, sign: float = 1.0) -> dict:
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, 0.0) + sign * v
    return out


def _mul(a: dict, b: dict) -> dict:
    out: dict = {}
    for (i, j), c in a.items():
        for (k, m), d in b.items():
            key = (i + k, j + m)
            out[key] = out.get(key, 0.0) + c * d
    return out


def _tokenize(text: str) -> list[tuple[str, str]]:
    pos, out = 0, []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ExprError(f"unexpected character at {pos}: {text[pos:pos + 10]!r}")
        kind = m.lastgroup
        out.append((kind, m.group(kind)))
        pos = m.end()
    return out


def parse(text: str) -> Polynomial:
    tokens = _tokenize(text)
    pos = 0

    def peek():
        return tokens[pos] if pos < len(tokens) else (None, None)

    def take(expected=None):
        nonlocal pos
        tok = peek()
        if tok[0] is None or (expected and tok[1] != expected):
            raise ExprError(f"expected {expected or 'token'} at token {pos} in {text!r}")
        pos += 1
        return tok

    def expr():
        acc = term()
        while peek()[1] in ("+", "-"):
            sign = 1.0 if take()[1] == "+" else -1.0
            acc = _add(acc, term(), sign)
        return acc

    def term():
        acc = factor()
        while peek()[1] == "*":
            take()
            acc = _mul(acc, factor())
        return acc

    def factor():
        kind, val = peek()
        if val in ("+", "-"):
            take()
            f = factor()
            return f if val == "+" else {k: -v for k, v in f.items()}
        if kind == "num":
            take()
            return {(0, 0): float(val)}
        if kind == "var":
            take()
            return {(1, 0): 1.0} if val == "x1" else {(0, 1): 1.0}
        if val == "(":
            take()
            inner = expr()
            take(")")
            return inner
        raise ExprError(f"unexpected token {val!r} in {text!r}")

    if not tokens:
        raise ExprError("empty expression")
    poly = expr()
    if pos != len(tokens):
        raise ExprError(f"trailing input after token {pos} in {text!r}")
    return Polynomial.from_dict(poly, source=text.strip())
