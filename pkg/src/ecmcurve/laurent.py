"""Sparse Laurent polynomials in q1, q4 with exact integer coefficients.

q3 never appears explicitly: with eps1 + eps3 + eps4 = 0 it is q3 = q1^-1 q4^-1.
Python integers are unbounded, so no overflow handling is needed.
"""
from __future__ import annotations

from collections import defaultdict


class LaurentPoly2:
    __slots__ = ("terms",)

    def __init__(self, terms=None):
        clean = {}
        for (e1, e4), c in (terms or {}).items():
            if c:
                clean[(int(e1), int(e4))] = int(c)
        self.terms: dict[tuple[int, int], int] = clean

    @classmethod
    def monomial(cls, e1: int = 0, e4: int = 0, coeff: int = 1) -> "LaurentPoly2":
        return cls({(e1, e4): coeff})

    @classmethod
    def const(cls, c: int) -> "LaurentPoly2":
        return cls({(0, 0): c})

    @classmethod
    def q(cls, a: int, power: int = 1) -> "LaurentPoly2":
        """q_a**power for a in {1, 3, 4}."""
        if a == 1:
            return cls.monomial(power, 0)
        if a == 4:
            return cls.monomial(0, power)
        if a == 3:
            return cls.monomial(-power, -power)
        raise ValueError(f"no variable q{a} at eps2 = 0")

    @classmethod
    def P(cls, a: int) -> "LaurentPoly2":
        """P_a = 1 - q_a."""
        return cls.const(1) - cls.q(a)

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if isinstance(other, int):
            other = LaurentPoly2.const(other)
        if not isinstance(other, LaurentPoly2):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __add__(self, other):
        if isinstance(other, int):
            other = LaurentPoly2.const(other)
        out = defaultdict(int, self.terms)
        for k, c in other.terms.items():
            out[k] += c
        return LaurentPoly2(out)

    __radd__ = __add__

    def __neg__(self):
        return LaurentPoly2({k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        if isinstance(other, int):
            other = LaurentPoly2.const(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, int):
            return LaurentPoly2({k: c * other for k, c in self.terms.items()})
        out = defaultdict(int)
        for (a1, a4), c in self.terms.items():
            for (b1, b4), d in other.terms.items():
                out[(a1 + b1, a4 + b4)] += c * d
        return LaurentPoly2(out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            if len(self.terms) != 1:
                raise ValueError("only monomials can be inverted")
            ((e1, e4), c), = self.terms.items()
            if abs(c) != 1:
                raise ValueError("monomial with non-unit coefficient is not invertible")
            return LaurentPoly2({(e1 * k, e4 * k): c ** (-k)})
        out = LaurentPoly2.const(1)
        for _ in range(k):
            out = out * self
        return out

    def coefficient(self, e1: int, e4: int) -> int:
        return self.terms.get((e1, e4), 0)

    def evaluate(self, q1, q4):
        return sum(c * q1 ** e1 * q4 ** e4 for (e1, e4), c in self.terms.items())

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for (e1, e4), c in sorted(self.terms.items()):
            mono = "*".join(
                f"q{v}^{e}" if e != 1 else f"q{v}" for v, e in ((1, e1), (4, e4)) if e
            )
            parts.append(f"{c}*{mono}" if mono else str(c))
        return " + ".join(parts)
