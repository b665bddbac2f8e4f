"""Ratio observables X, Y, Z built from a Q-function, the Bethe-equation
residual, and the partition sums (script X, Y, Z) dressed by boundary cells.
"""
from __future__ import annotations

import cmath
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, ParameterError, PoleError
from .partitions import boundary_sets, contents, enumerate_partitions
from .specialfn import log_gamma

KINDS = ("polynomial-roots", "gamma-product", "toda-series", "external")
POLE_TOL = 1e-12


@dataclass(frozen=True)
class QOracle:
    """A Q-function together with how to evaluate it.

    payload per kind: tuple of roots; (prefactor, roots a, hbar) for
    Q = prefactor * prod_a hbar^((w-a)/hbar) Gamma((w-a)/hbar); a TodaQ; or a
    plain callable.
    """

    kind: str
    payload: object

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown Q-oracle kind {self.kind!r}")

    @classmethod
    def from_roots(cls, roots) -> "QOracle":
        return cls("polynomial-roots", tuple(complex(r) for r in roots))

    @classmethod
    def gamma_product(cls, a, hbar, prefactor=1.0) -> "QOracle":
        return cls("gamma-product", (complex(prefactor), tuple(complex(x) for x in a), complex(hbar)))

    @classmethod
    def from_toda(cls, todaq) -> "QOracle":
        return cls("toda-series", todaq)

    @classmethod
    def external(cls, fn: Callable[[complex], complex]) -> "QOracle":
        return cls("external", fn)

    @property
    def roots(self) -> tuple[complex, ...]:
        return self.payload if self.kind == "polynomial-roots" else ()

    def log(self, w: complex) -> complex:
        """log Q(w) on some branch (only differences are used)."""
        if self.kind == "gamma-product":
            pref, a, hbar = self.payload
            lh = cmath.log(hbar)
            out = cmath.log(pref)
            for x in a:
                s = (w - x) / hbar
                try:
                    out += s * lh + log_gamma(s)
                except PoleError as exc:
                    raise PoleError(f"Q has a pole at w={w} (root a={x})") from exc
            return out
        return cmath.log(self(w))

    def __call__(self, w: complex) -> complex:
        w = complex(w)
        if self.kind == "polynomial-roots":
            out = 1.0 + 0j
            for r in self.payload:
                out *= w - r
            return out
        if self.kind == "gamma-product":
            return cmath.exp(self.log(w))
        return complex(self.payload(w))

    def quotient(self, num: complex, den: complex) -> complex:
        """Q(num) / Q(den) with a pole check on the denominator."""
        if self.kind == "gamma-product":
            return cmath.exp(self.log(num) - self.log(den))
        qd = self(den)
        if self.kind == "polynomial-roots":
            scale = 1.0
            for r in self.payload:
                scale *= 1.0 + abs(den) + abs(r)
        else:
            scale = max(1.0, abs(self(num)))
        if abs(qd) <= POLE_TOL * scale:
            hint = ""
            if self.roots:
                near = min(self.roots, key=lambda r: abs(r - den))
                hint = f"; nearest root {near}"
            raise PoleError(f"Q vanishes at denominator argument {den}{hint}")
        return self(num) / qd


def ratio(kind: str, q: QOracle, w: complex, hbar: complex, n: complex) -> complex:
    """X = Q(w)/Q(w+hbar n), Y = Q(w)/Q(w-hbar), Z = Q(w)/Q(w+hbar(1-n))."""
    w = complex(w)
    if kind == "X":
        return q.quotient(w, w + hbar * n)
    if kind == "Y":
        return q.quotient(w, w - hbar)
    if kind == "Z":
        return q.quotient(w, w + hbar * (1 - n))
    raise ParameterError(f"ratio kind must be X, Y or Z, got {kind!r}")


def bethe_residual(q: QOracle, root: complex, hbar: complex, n: complex, qe: complex) -> complex:
    """Six-fold Q-shift ratio plus qe at a root of Q; zero iff the Bethe equation holds."""
    w = complex(root)
    scale = max(1.0, abs(q(w + hbar)), abs(q(w - hbar)))
    if abs(q(w)) >= 1e-8 * scale:
        raise DomainError(f"{w} is not a root of Q (|Q| = {abs(q(w)):.3g})")
    num = q(w + hbar) * q(w - hbar * n) * q(w + hbar * (n - 1))
    den = q(w - hbar) * q(w + hbar * n) * q(w + hbar * (1 - n))
    if den == 0:
        raise PoleError(f"Bethe ratio has a vanishing denominator at {w}")
    return num / den + qe


@dataclass(frozen=True)
class SeriesValue:
    coeffs: np.ndarray

    @property
    def D(self) -> int:
        return len(self.coeffs) - 1

    def __getitem__(self, d):
        return self.coeffs[d]

    def value(self, qe: complex) -> complex:
        return complex(sum(c * qe ** d for d, c in enumerate(self.coeffs)))


# argument patterns (w shift for addable cells, content index)
_PATTERN = {
    "X": (lambda hbar, n: -hbar * n, 0),
    "Y": (lambda hbar, n: hbar, 1),
    "Z": (lambda hbar, n: hbar * (n - 1), 2),
}


def partition_term(kind: str, q: QOracle, w: complex, lam, hbar, n) -> complex:
    shift_fn, idx = _PATTERN[kind]
    shift = shift_fn(hbar, n)
    plus, minus = boundary_sets(lam)
    val = 1.0 + 0j
    for cell in plus:
        c = contents(cell, hbar, n)[idx]
        try:
            val *= ratio(kind, q, w + shift + c, hbar, n)
        except PoleError as exc:
            raise PoleError(f"{exc} (partition {lam.parts}, addable cell {tuple(cell)})") from exc
    for cell in minus:
        c = contents(cell, hbar, n)[idx]
        try:
            den = ratio(kind, q, w + c, hbar, n)
        except PoleError as exc:
            raise PoleError(f"{exc} (partition {lam.parts}, removable cell {tuple(cell)})") from exc
        if abs(den) <= POLE_TOL:
            raise PoleError(f"{kind} vanishes at {w + c} (partition {lam.parts}, removable cell {tuple(cell)})")
        val /= den
    return val


def script_series(kind: str, q: QOracle, w: complex, D: int, hbar, n) -> SeriesValue:
    """Coefficients c_0..c_D of sum_lambda qe^|lambda| prod_{Gamma+} / prod_{Gamma-}."""
    if kind not in _PATTERN:
        raise ParameterError(f"series kind must be X, Y or Z, got {kind!r}")
    hbar, n, w = complex(hbar), complex(n), complex(w)
    coeffs = np.zeros(D + 1, dtype=complex)
    for d in range(D + 1):
        coeffs[d] = sum(partition_term(kind, q, w, lam, hbar, n) for lam in enumerate_partitions(d))
    return SeriesValue(coeffs)


def order0_telescoping(q: QOracle, w: complex, hbar, n) -> tuple[float, float]:
    """Relative order-0 residuals of the YX and YZ pairings at w.

    YX: Y0(w - hbar n) X0(w) - Y0(w) X0(w + hbar); both terms equal Q(w+hbar-hbar n)/Q(w).
    YZ: Y0(w + hbar(n-1)) Z0(w) - Y0(w) Z0(w + hbar); both equal Q(w+hbar n)/Q(w).
    """
    hbar, n = complex(hbar), complex(n)

    def c0(kind, x):
        return script_series(kind, q, x, 0, hbar, n)[0]

    out = []
    for kind, shift in (("X", -hbar * n), ("Z", hbar * (n - 1))):
        a = c0("Y", w + shift) * c0(kind, w)
        b = c0("Y", w) * c0(kind, w + hbar)
        out.append(abs(a - b) / max(abs(a) + abs(b), 1e-300))
    return out[0], out[1]


def lattice_series(kind: str, q: QOracle, w0: complex, step: complex, M: int, D: int, hbar, n):
    """Sample script_series on w0 + step*m, m in [-M, M], as a qcurve LatticeSeries."""
    from .qcurve import LatticeSeries

    vals = np.zeros((D + 1, 2 * M + 1), dtype=complex)
    for i, m in enumerate(range(-M, M + 1)):
        vals[:, i] = script_series(kind, q, w0 + step * m, D, hbar, n).coeffs
    return LatticeSeries(w0, step, M, vals, [-M] * (D + 1), [M] * (D + 1))
