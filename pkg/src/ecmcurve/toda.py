"""The Toda limit: a Q solving Q(w+hbar) + L Q(w-hbar) = Y(w) Q(w), L = Lambda^(2N),
as a truncated L-series around the Gamma-product Q0, its dual Q~, and the
quantum Wronskian.

Internally everything runs in s = w/hbar with unit steps and roots b = a/hbar.
Writing Q = Q0 (1 + sum_p L^p r_p) and rho_p(s) = hbar^(2Np) r_p(hbar s),

    rho_p(s) = sum_{j>=0} rho_{p-1}(s - 1 + j) / (y(s - 1 + j) y(s + j)),   y(s) = prod (s - b),

which is summed exactly on a chain s0 + k up to a far endpoint and closed by
the 1/s asymptotic expansion of rho_p there.
"""
from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConvergenceError, ParameterError, PoleError, WindowError
from .laxcurve import MonicPoly
from .specialfn import log_gamma

TAIL_TOL = 1e-10
FAR_CAP = 4096
_ASYM_TERMS = 40


@dataclass(frozen=True)
class TodaParams:
    hbar: complex
    Lambda: complex
    a: tuple
    P: int = 4
    J: int = 32
    window: tuple | None = None  # (lower-left, upper-right) corners as complex

    def __post_init__(self):
        object.__setattr__(self, "hbar", complex(self.hbar))
        object.__setattr__(self, "Lambda", complex(self.Lambda))
        object.__setattr__(self, "a", tuple(complex(x) for x in self.a))
        if self.hbar == 0:
            raise ParameterError("hbar must be non-zero")
        if not self.a:
            raise ParameterError("need at least one root a")
        if self.P < 0 or self.J < 4:
            raise ParameterError("need P >= 0 and J >= 4")
        if self.window is not None:
            lo, hi = (complex(x) for x in self.window)
            object.__setattr__(self, "window", (lo, hi))

    @property
    def N(self) -> int:
        return len(self.a)

    @property
    def L(self) -> complex:
        """Lambda^(2N), the expansion parameter."""
        return self.Lambda ** (2 * self.N)

    @property
    def log_lambda(self) -> complex:
        return cmath.log(self.Lambda)

    @property
    def Y(self) -> MonicPoly:
        return MonicPoly.from_roots(list(self.a))

    def in_window(self, w: complex) -> bool:
        if self.window is None:
            return True
        lo, hi = self.window
        eps = 1e-12 * (1 + abs(w))
        return lo.real - eps <= w.real <= hi.real + eps and lo.imag - eps <= w.imag <= hi.imag + eps

    def check_window(self, *ws):
        for w in ws:
            if not self.in_window(complex(w)):
                raise WindowError(f"w={w} outside the evaluation window {self.window}")


# ---------------------------------------------------------------------------
# truncated power series in x = 1/s


def _binom_neg(k: int, i: int) -> float:
    """binomial(-k, i) = (-1)^i C(k+i-1, i)."""
    if k == 0:
        return 1.0 if i == 0 else 0.0
    return (-1) ** i * math.comb(k + i - 1, i)


def _shift_matrix(T: int, h: complex) -> np.ndarray:
    """Matrix of f(s) -> f(s + h) on coefficients of x^0..x^T."""
    B = np.zeros((T + 1, T + 1), dtype=complex)
    B[0, 0] = 1.0
    for k in range(1, T + 1):
        for m in range(k, T + 1):
            B[m, k] = _binom_neg(k, m - k) * h ** (m - k)
    return B


def _inverse_series(c: np.ndarray) -> np.ndarray:
    out = np.zeros_like(c)
    out[0] = 1.0 / c[0]
    for m in range(1, len(c)):
        out[m] = -np.dot(c[1: m + 1], out[m - 1:: -1][:m]) / c[0]
    return out


def _mul(a, b, T):
    return np.convolve(a, b)[: T + 1]


def _solve_difference(t: np.ndarray, B1: np.ndarray) -> np.ndarray:
    """f with f(s) - f(s+1) = t(s), f -> 0 at infinity; t must start at x^2."""
    T = len(t) - 1
    f = np.zeros_like(t)
    # (f - S f)_m = -sum_{k<m} B1[m, k] f_k, triangular in f_{m-1}
    for m in range(2, T + 1):
        acc = t[m] + sum(B1[m, k] * f[k] for k in range(1, m - 1))
        f[m - 1] = -acc / B1[m, m - 1]
    if abs(t[0]) + abs(t[1]) > 0:
        raise ParameterError("summand does not decay fast enough for a convergent tail sum")
    return f


def asymptotic_rhos(b: tuple, P: int, T: int = _ASYM_TERMS) -> list[np.ndarray]:
    """1/s expansions of rho_0..rho_P (rho_0 = 1)."""
    N = len(b)
    B1 = _shift_matrix(T, 1.0)
    Bm1 = _shift_matrix(T, -1.0)
    # 1/(y(s-1) y(s)) = x^(2N) / prod (1 - (b+1)x)(1 - b x)
    den = np.zeros(T + 1, dtype=complex)
    den[0] = 1.0
    for bb in b:
        for root in (bb, bb + 1):
            den = _mul(den, np.array([1.0, -root]), T)
    weight = np.zeros(T + 1, dtype=complex)
    inv = _inverse_series(den)
    weight[2 * N:] = inv[: T + 1 - 2 * N]
    rhos = [np.zeros(T + 1, dtype=complex)]
    rhos[0][0] = 1.0
    for _ in range(P):
        t = _mul(Bm1 @ rhos[-1], weight, T)
        rhos.append(_solve_difference(t, B1))
    return rhos


def _eval_series(c: np.ndarray, s: complex) -> tuple[complex, float]:
    x = 1.0 / s
    terms = c * x ** np.arange(len(c))
    total = terms.sum()
    nz = np.nonzero(c)[0]
    last = abs(terms[nz[-1]]) if len(nz) else 0.0
    return complex(total), float(last / max(abs(total), 1e-300)) if len(nz) else 0.0


# ---------------------------------------------------------------------------


@dataclass
class TodaQ:
    """Q(w) = Q0(w) (1 + sum_{p=1}^P L^p r_p(w))."""

    tp: TodaParams
    far: int
    rho_asym: list = field(repr=False)

    @property
    def b(self) -> tuple:
        return tuple(x / self.tp.hbar for x in self.tp.a)

    def _y(self, s):
        out = np.ones_like(s)
        for bb in self.b:
            out = out * (s - bb)
        return out

    def _check_poles(self, s: complex, reach: int):
        for bb in self.b:
            d = s - bb
            k = round(d.real)
            if abs(d - k) < 1e-6 / max(1.0, abs(self.tp.hbar)) and k <= reach:
                raise PoleError(f"w={s * self.tp.hbar} hits a pole image a - hbar*{-k} of Q")

    def chain(self, s: complex, below: int = 1, above: int = 1):
        """rho_p at s + k for k in [-below, above], p = 0..P, from one common far endpoint.

        Returns an array of shape (P+1, below+above+1).
        """
        P = self.tp.P
        fl = math.floor(s.real)
        c = s - fl
        bmax = max(bb.real for bb in self.b)
        top = max(fl + above, math.ceil(bmax)) + 1
        # endpoint on the absolute chain c + K, bucketed so that nearby s share it
        K_end = 64 * math.ceil((top + self.far) / 64)
        k0 = fl - below - P
        ks = np.arange(k0, K_end + 1)
        sites = c + ks
        ysite = self._y(sites)
        rho = np.full((P + 1, len(ks)), np.nan + 0j)
        rho[0] = 1.0
        for p in range(1, P + 1):
            val, tail = _eval_series(self.rho_asym[p], sites[-1])
            if tail > TAIL_TOL:
                raise ConvergenceError(f"asymptotic tail of r_{p} not converged ({tail:.2g})")
            rho[p, -1] = val
            # t_p at site index i >= 1 uses rho_{p-1} at i-1
            t = rho[p - 1, :-1] / (ysite[:-1] * ysite[1:])
            # r_p(i) = t_p(i+1...)? no: r_p(site_i) = t_p(site_i) + r_p(site_{i+1}), t_p(site_i) = t[i-1]
            acc = rho[p, -1]
            for i in range(len(ks) - 2, p - 1, -1):
                acc = t[i - 1] + acc
                rho[p, i] = acc
        i0 = fl - k0
        return rho[:, i0 - below: i0 + above + 1]

    def scaled_L(self) -> complex:
        return self.tp.L / self.tp.hbar ** (2 * self.tp.N)

    def r(self, p: int, w: complex) -> complex:
        s = complex(w) / self.tp.hbar
        self._check_poles(s, self.tp.P)
        return complex(self.chain(s, 0, 0)[p, 0] / self.tp.hbar ** (2 * self.tp.N * p))

    def fluct(self, w: complex, below: int = 0, above: int = 0) -> np.ndarray:
        """G = Q/Q0 - 1 at w + hbar k, k in [-below, above]."""
        s = complex(w) / self.tp.hbar
        for k in range(-below, above + 1):
            self._check_poles(s + k, self.tp.P)
        rho = self.chain(s, below, above)
        Ls = self.scaled_L()
        return sum(Ls ** p * rho[p] for p in range(1, self.tp.P + 1)) if self.tp.P else np.zeros(below + above + 1, complex)

    def log_q0(self, w: complex) -> complex:
        hbar = self.tp.hbar
        lh = cmath.log(hbar)
        out = 0j
        for a in self.tp.a:
            s = (complex(w) - a) / hbar
            out += s * lh + log_gamma(s)
        return out

    def q0(self, w: complex) -> complex:
        return cmath.exp(self.log_q0(w))

    def __call__(self, w: complex) -> complex:
        w = complex(w)
        return self.q0(w) * (1.0 + complex(self.fluct(w)[0]))

    def pole_reduced(self, w: complex) -> complex:
        """Q(w) / Q0(w - hbar) = Y(w - hbar) (1 + G(w)); same zeros as Q off the pole lattice."""
        w = complex(w)
        return complex(self.tp.Y(w - self.tp.hbar)) * (1.0 + complex(self.fluct(w)[0]))


def build_Q(tp: TodaParams) -> TodaQ:
    """Truncated L-series solution of the T-Q equation around the Gamma product."""
    b = tuple(x / tp.hbar for x in tp.a)
    rhos = asymptotic_rhos(b, tp.P)
    far = tp.J
    while True:
        Q = TodaQ(tp, far, rhos)
        # tail diagnostic at the endpoint for a representative point
        s_ref = complex(max(bb.real for bb in b), 0.0)
        K_end = 64 * math.ceil((math.ceil(s_ref.real) + 2 + far) / 64)
        worst = 0.0
        for p in range(1, tp.P + 1):
            worst = max(worst, _eval_series(rhos[p], complex(K_end))[1])
        if worst < TAIL_TOL:
            break
        far *= 2
        if far > FAR_CAP:
            raise ConvergenceError(f"tail sums not converged at J={far // 2} (ratio {worst:.2g})")
    if tp.window is not None and tp.P > 0:
        lo, hi = tp.window
        for w in (lo, hi, complex(lo.real, hi.imag), complex(hi.real, lo.imag)):
            try:
                G = abs(tp.L ** tp.P * Q.r(tp.P, w))
            except PoleError:
                continue
            if G > 1e-3:
                warnings.warn(f"order-{tp.P} term is {G:.2g} relative to order 0 at w={w}; Lambda too large")
    return Q


def tq_residual(F, tp: TodaParams, w: complex) -> complex:
    """F(w+hbar) + L F(w-hbar) - Y(w) F(w).

    For a TodaQ the value is assembled from G = Q/Q0 - 1 on one chain, using
    the Gamma recurrence, so that residuals far below the size of Q stay resolved.
    """
    w = complex(w)
    hbar, L = tp.hbar, tp.L
    tp.check_window(w - hbar, w + hbar)
    Yw = complex(tp.Y(w))
    if isinstance(F, TodaQ):
        G = F.fluct(w, 1, 1)
        Ym = complex(tp.Y(w - hbar))
        return F.q0(w) * (Yw * (G[2] - G[1]) + L * (1.0 + G[0]) / Ym)
    return complex(F(w + hbar)) + L * complex(F(w - hbar)) - Yw * complex(F(w))


@dataclass
class QTilde:
    """Q~(w) = Lambda^(2N w/hbar) Q(w) sum_{p=0}^{P'} L^p / (Q(w + hbar p) Q(w + hbar (p+1)))."""

    Q: Callable
    tp: TodaParams
    Pp: int

    def power(self, w: complex) -> complex:
        return cmath.exp((2 * self.tp.N * complex(w) / self.tp.hbar) * self.tp.log_lambda)

    def __call__(self, w: complex) -> complex:
        w = complex(w)
        hbar, L = self.tp.hbar, self.tp.L
        qs = [complex(self.Q(w + hbar * p)) for p in range(self.Pp + 2)]
        s = sum(L ** p / (qs[p] * qs[p + 1]) for p in range(self.Pp + 1))
        return self.power(w) * qs[0] * s


def build_Qtilde(Q: Callable, Pp: int, tp: TodaParams | None = None) -> QTilde:
    if tp is None:
        tp = Q.tp
    if Pp < 0:
        raise ParameterError("P' must be non-negative")
    return QTilde(Q, tp, Pp)


def wronskian_residual(Q: Callable, Qt: QTilde, tp: TodaParams, w: complex) -> complex:
    """(Q~(w) Q(w+hbar) - Q(w) Q~(w+hbar)) / Lambda^(2N w/hbar) - 1."""
    w = complex(w)
    hbar = tp.hbar
    tp.check_window(w, w + hbar)
    lhs = complex(Qt(w)) * complex(Q(w + hbar)) - complex(Q(w)) * complex(Qt(w + hbar))
    return lhs / Qt.power(w) - 1.0


def wronskian_tail(Q: Callable, tp: TodaParams, Pp: int, w: complex) -> complex:
    """Closed form of the truncation tail: -L^(P'+1) Q(w)Q(w+hbar) / (Q(w+(P'+1)hbar) Q(w+(P'+2)hbar))."""
    hbar, L = tp.hbar, tp.L
    return -(L ** (Pp + 1)) * Q(w) * Q(w + hbar) / (Q(w + (Pp + 1) * hbar) * Q(w + (Pp + 2) * hbar))


@dataclass
class RootResult:
    seed: complex
    converged: bool
    root: complex | None
    ratio_residual: complex | None
    steps: int
    message: str = ""

    def to_dict(self) -> dict:
        c = lambda z: None if z is None else [z.real, z.imag]
        return {
            "seed": c(self.seed),
            "converged": self.converged,
            "root": c(self.root),
            "ratio_residual": c(self.ratio_residual),
            "steps": self.steps,
            "message": self.message,
        }


def find_bethe_roots(Q: TodaQ, seeds, max_steps: int = 50, tol: float = 1e-10) -> list[RootResult]:
    """Newton iteration for zeros of Q from each seed.

    The iteration runs on Q(w)/Q0(w - hbar), which shares the zeros of Q but
    not the Gamma poles next to them, so the steps do not jump across a pole.
    Each converged root reports Q(w+hbar)/Q(w-hbar) + Lambda^(2N).
    """
    tp = Q.tp
    hbar, L = tp.hbar, tp.L
    out = []
    for seed in seeds:
        w = complex(seed)
        res = RootResult(complex(seed), False, None, None, 0)
        try:
            for step in range(1, max_steps + 1):
                f = Q.pole_reduced(w)
                h = 1e-6 * max(1.0, abs(w)) * hbar / abs(hbar)
                df = (Q.pole_reduced(w + h) - Q.pole_reduced(w - h)) / (2 * h)
                if df == 0:
                    raise ConvergenceError("vanishing derivative")
                dw = f / df
                w = w - dw
                res.steps = step
                if abs(dw) < 1e-14 * max(1.0, abs(w)):
                    break
                if not tp.in_window(w) or abs(w - seed) > 10 * abs(hbar):
                    raise ConvergenceError(f"iterate left the search region at step {step}")
            fin = Q.pole_reduced(w)
            scale = abs(complex(tp.Y(w - hbar))) + 1.0
            if abs(fin) > tol * scale:
                raise ConvergenceError(f"no convergence after {max_steps} steps (|f|={abs(fin):.2g})")
            G = Q.fluct(w, 1, 1)
            ratio = complex(tp.Y(w) * tp.Y(w - hbar)) * (1 + G[2]) / (1 + G[0])
            res.converged, res.root, res.ratio_residual = True, w, ratio + L
        except (ConvergenceError, PoleError) as exc:
            res.message = str(exc)
        out.append(res)
    return out
