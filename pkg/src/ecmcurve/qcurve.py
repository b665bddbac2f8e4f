"""The quantum Krichever curve as an infinite-order difference operator, solved
order by order in qe on the lattice w0 + (hbar/r) Z.

Every equation handled here has the shape

    sum_l (-1)^l qe^(l(l-1)/2) Y(w + c0 + c1 l) F(w + sigma hbar l) = 0     (*)

and is solved by one first-order recursion per qe-order on each of the r
interleaved hbar-chains.  The four instances are

    Psi      : c0 = 0,     c1 = -nu,        sigma = +1
    Psi dual : c0 = 0,     c1 = -nu - hbar, sigma = -1
    X (YX)   : c0 = -hbar, c1 = -nu,        sigma = -1
    Z (YZ)   : c0 = -hbar, c1 = nu - hbar,  sigma = -1

Residuals are never taken from the solver itself: ``qceq_residual``,
``qceq_dual_residual`` and ``star_pair`` evaluate the sums over l directly in
their original indexing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .errors import AlignmentError, ParameterError, WindowError
from .laxcurve import MonicPoly
from .specialfn import log_gamma

_ALIGN_TOL = 1e-9


def max_pair_index(D: int) -> int:
    """Largest k with k(k+1)/2 <= D."""
    k = 0
    while (k + 1) * (k + 2) // 2 <= D:
        k += 1
    return k


@dataclass(frozen=True)
class QCurveParams:
    Y: MonicPoly
    hbar: complex
    n: complex
    qe: complex
    D: int
    w0: complex
    r: int = 1
    M: int = 40

    def __post_init__(self):
        for name in ("hbar", "n", "qe", "w0"):
            object.__setattr__(self, name, complex(getattr(self, name)))
        if self.hbar == 0:
            raise ParameterError("hbar must be non-zero")
        if abs(self.qe) >= 1:
            raise ParameterError("|qe| < 1 required")
        if self.D < 0 or self.r < 1 or self.M < 1:
            raise ParameterError("need D >= 0, r >= 1, M >= 1")

    @property
    def nu(self) -> complex:
        return self.hbar * self.n

    @property
    def step(self) -> complex:
        return self.hbar / self.r

    @property
    def K(self) -> int:
        return max_pair_index(self.D)

    def sites(self) -> np.ndarray:
        return self.w0 + self.step * np.arange(-self.M, self.M + 1)

    def rational_n(self) -> Fraction | None:
        """n as p/r when n*r is an integer, else None."""
        nr = self.n * self.r
        k = round(nr.real)
        if abs(nr - k) > _ALIGN_TOL:
            return None
        return Fraction(k, self.r)


class LatticeSeries:
    """Truncated qe-series whose coefficients are sampled on w0 + step * m,
    m in [-M, M].  Order d is valid on [lo[d], hi[d]]; reading outside raises."""

    def __init__(self, w0, step, M, values, lo, hi, scale=None):
        self.w0 = complex(w0)
        self.step = complex(step)
        self.M = int(M)
        self.values = np.asarray(values, dtype=complex)
        self.lo = [int(v) for v in lo]
        self.hi = [int(v) for v in hi]
        self.scale = None if scale is None else np.asarray(scale, dtype=float)

    @property
    def D(self) -> int:
        return self.values.shape[0] - 1

    def window(self, d: int) -> tuple[int, int]:
        return self.lo[d], self.hi[d]

    def sites(self) -> np.ndarray:
        return self.w0 + self.step * np.arange(-self.M, self.M + 1)

    def at(self, d: int, m: int) -> complex:
        if d > self.D or not (self.lo[d] <= m <= self.hi[d]):
            raise WindowError(f"order {d} site {m} outside valid window {self.window(d) if d <= self.D else None}")
        return complex(self.values[d, m + self.M])

    def block(self, d: int, lo: int, hi: int) -> np.ndarray:
        if lo > hi:
            return np.zeros(0, dtype=complex)
        if d > self.D or lo < self.lo[d] or hi > self.hi[d]:
            raise WindowError(f"order {d} block [{lo}, {hi}] outside {self.window(d)}")
        return self.values[d, lo + self.M: hi + self.M + 1]

    def offset_of(self, shift: complex, lattice_w0: complex) -> int:
        """Site offset k such that lattice_w0 + shift = self.w0 + k*step (+ same m)."""
        k = (lattice_w0 + shift - self.w0) / self.step
        kr = round(k.real)
        if abs(k - kr) > _ALIGN_TOL * max(1.0, abs(k)):
            raise AlignmentError(f"shift {shift} is not a multiple of the lattice step {self.step}")
        return int(kr)

    def copy(self) -> "LatticeSeries":
        return LatticeSeries(
            self.w0, self.step, self.M, self.values.copy(), list(self.lo), list(self.hi),
            None if self.scale is None else self.scale.copy(),
        )

    def max_relative(self, d: int) -> float:
        lo, hi = self.window(d)
        if lo > hi:
            return 0.0
        res = np.abs(self.block(d, lo, hi))
        if self.scale is None:
            return float(res.max())
        sc = self.scale[d, lo + self.M: hi + self.M + 1]
        return float(np.max(res / np.maximum(sc, 1e-300)))

    def summed(self, qe: complex) -> tuple[np.ndarray, int, int]:
        """sum_d qe^d values_d on the window common to all orders."""
        lo, hi = max(self.lo), min(self.hi)
        tot = sum(qe ** d * self.block(d, lo, hi) for d in range(self.D + 1))
        return tot, lo, hi

    def to_rows(self):
        for d in range(self.D + 1):
            for m in range(self.lo[d], self.hi[d] + 1):
                v = self.values[d, m + self.M]
                yield m, d, v


def _neumaier(terms: list[np.ndarray]) -> np.ndarray:
    """Compensated elementwise sum of equally shaped complex arrays."""
    if not terms:
        return 0
    s = np.zeros_like(terms[0])
    comp = np.zeros_like(terms[0])
    for t in terms:
        for part in ("real", "imag"):
            sp, tp, cp = getattr(s, part), getattr(t, part), getattr(comp, part)
            tot = sp + tp
            big = np.abs(sp) >= np.abs(tp)
            cp += np.where(big, (sp - tot) + tp, (tp - tot) + sp)
            sp[...] = tot
    return s + comp


def log_q0(Y: MonicPoly, hbar: complex, w) -> np.ndarray:
    """log of prod_a hbar^((w-a)/hbar) Gamma((w-a)/hbar), which obeys Q0(w+hbar) = Y(w) Q0(w)."""
    w = np.asarray(w, dtype=complex)
    lh = np.log(hbar)
    out = np.zeros_like(w)
    for a in Y.roots():
        s = (w - a) / hbar
        out = out + s * lh + log_gamma(s)
    return out


class Solution(NamedTuple):
    series: LatticeSeries
    residual: list[float]  # max relative residual per qe-order, independently evaluated


def _solve(params: QCurveParams, c0: complex, c1: complex, sigma: int, seed: str) -> LatticeSeries:
    P, M, r, D = params, params.M, params.r, params.D
    Y = P.Y
    hbar = P.hbar
    w = P.sites()
    size = 2 * M + 1
    num = Y(w + c0)
    den = Y(w + c0 + c1)
    scale = max(1.0, float(np.max(np.abs(num))))
    bad = np.abs(den) <= 1e-8 * scale
    if np.any(bad) or np.any(np.abs(num) <= 1e-8 * scale):
        m_bad = int(np.argmax(bad | (np.abs(num) <= 1e-8 * scale))) - M
        raise ParameterError(
            f"Y vanishes on the lattice near site {m_bad}; move w0 off the zeros of Y "
            f"(lattice is not in generic position)"
        )
    s = sigma * r
    vals = np.full((D + 1, size), np.nan + 0j)
    lo, hi = [-M], [M]

    # order 0
    if sigma > 0:
        starts = range(-M, -M + r)
    else:
        starts = range(M - r + 1, M + 1)
    for m0 in starts:
        if seed == "gamma":
            if sigma > 0:
                a, b = w[m0 + M] + c0, w[m0 + M] + c0 + c1
            else:
                a, b = w[m0 + M] + c0 + c1 + hbar, w[m0 + M] + c0 + hbar
            v = np.exp(log_q0(Y, hbar, a) - log_q0(Y, hbar, b))
        else:
            v = 1.0
        m = m0
        vals[0, m + M] = v
        while -M <= m + s <= M:
            vals[0, m + s + M] = vals[0, m + M] * num[m + M] / den[m + M]
            m += s
    if not np.all(np.isfinite(vals[0])) or np.any(vals[0] == 0):
        raise ParameterError("order-0 solution vanishes or overflows on the window")

    for d in range(1, D + 1):
        pairs = []
        k = 1
        while k * (k + 1) // 2 <= d:
            pairs += [(-k, d - k * (k + 1) // 2), (k + 1, d - k * (k + 1) // 2)]
            k += 1
        g_lo, g_hi = -M, M
        for l, dd in pairs:
            g_lo = max(g_lo, lo[dd] - s * l)
            g_hi = min(g_hi, hi[dd] - s * l)
        if g_hi - g_lo + 1 < r:
            need = M + (r - (g_hi - g_lo + 1)) // 2 + 1
            raise WindowError(f"window exhausted at order {d}; try M >= {need}")
        ms = np.arange(g_lo, g_hi + 1)
        terms = []
        for l, dd in pairs:
            sign = -1.0 if l % 2 else 1.0
            terms.append(sign * Y(w[ms + M] + c0 + c1 * l) * vals[dd, ms + s * l + M])
        g = np.zeros(size, dtype=complex)
        g[ms + M] = _neumaier(terms)
        if sigma > 0:
            starts, d_lo, d_hi = range(g_lo, g_lo + r), g_lo, min(g_hi + r, M)
        else:
            starts, d_lo, d_hi = range(g_hi - r + 1, g_hi + 1), max(g_lo - r, -M), g_hi
        for m0 in starts:
            m = m0
            vals[d, m + M] = 0.0
            while g_lo <= m <= g_hi and d_lo <= m + s <= d_hi:
                vals[d, m + s + M] = (num[m + M] * vals[d, m + M] + g[m + M]) / den[m + M]
                m += s
        lo.append(d_lo)
        hi.append(d_hi)
    return LatticeSeries(P.w0, P.step, M, vals, lo, hi)


def _finish(series: LatticeSeries, residual: LatticeSeries) -> Solution:
    return Solution(series, [residual.max_relative(d) for d in range(series.D + 1)])


def solve_psi(params: QCurveParams, seed: str = "unit") -> Solution:
    """Psi solving sum_l (-1)^l qe^(l(l-1)/2) Y(w - nu l) Psi(w + hbar l) = 0.

    Order 0 on each chain is seeded at its leftmost site (by 1, or by the
    Gamma-product ratio when ``seed="gamma"``); higher orders are seeded by 0.
    """
    s = _solve(params, 0.0, -params.nu, +1, seed)
    return _finish(s, qceq_residual(s, params))


def solve_psi_dual(params: QCurveParams, seed: str = "unit") -> Solution:
    """Psi dual solving sum_l (-1)^l qe^(l(l-1)/2) Y(w - nu l - hbar l) Psi(w - hbar l) = 0,
    seeded at the rightmost site of each chain."""
    s = _solve(params, 0.0, -params.nu - params.hbar, -1, seed)
    return _finish(s, qceq_dual_residual(s, params))


def solve_X(params: QCurveParams, seed: str = "gamma") -> Solution:
    """X with Y * X = 0 for the polynomial Y of ``params``."""
    s = _solve(params, -params.hbar, -params.nu, -1, seed)
    return _finish(s, star_pair("YX", params.Y, s, params))


def solve_Z(params: QCurveParams, seed: str = "gamma") -> Solution:
    """Z with Y * Z = 0 for the polynomial Y of ``params``."""
    s = _solve(params, -params.hbar, params.nu - params.hbar, -1, seed)
    return _finish(s, star_pair("YZ", params.Y, s, params))


# ---------------------------------------------------------------------------
# independent evaluation of the sums over l


def _factor_block(F, d, shift, m_lo, m_hi, base_w, step):
    """Values of factor F (polynomial or series), order d, at base_w + step*m + shift."""
    if isinstance(F, MonicPoly):
        if d:
            return None
        ms = np.arange(m_lo, m_hi + 1)
        return F(base_w + step * ms + shift)
    k = F.offset_of(shift, base_w)
    return F.block(d, m_lo + k, m_hi + k)


def _factor_range(F, d, shift, base_w, M):
    if isinstance(F, MonicPoly):
        return (-M, M) if d == 0 else None
    if d > F.D:
        return None
    k = F.offset_of(shift, base_w)
    return F.lo[d] - k, F.hi[d] - k


def bilinear_sum(terms, D: int, base_w: complex, step: complex, M: int) -> LatticeSeries:
    """Order-by-order value of sum over terms of sign * qe^qexp * A(w + sA) * B(w + sB).

    ``terms`` holds tuples (sign, qexp, A, sA, B, sB); A and B are MonicPoly
    (qe-independent) or LatticeSeries.  The result carries the absolute sum of
    all contributions in ``scale`` so that residuals can be read relatively.
    """
    size = 2 * M + 1
    vals = np.full((D + 1, size), np.nan + 0j)
    scale = np.full((D + 1, size), np.nan)
    los, his = [], []
    for d in range(D + 1):
        contribs = []
        lo, hi = -M, M
        for sign, qexp, A, sA, B, sB in terms:
            rest = d - qexp
            if rest < 0:
                continue
            for a in range(rest + 1):
                ra = _factor_range(A, a, sA, base_w, M)
                rb = _factor_range(B, rest - a, sB, base_w, M)
                if ra is None or rb is None:
                    continue
                lo, hi = max(lo, ra[0], rb[0]), min(hi, ra[1], rb[1])
                contribs.append((sign, A, a, sA, B, rest - a, sB))
        los.append(lo)
        his.append(hi)
        if lo > hi:
            continue
        parts = [
            sign * _factor_block(A, a, sA, lo, hi, base_w, step) * _factor_block(B, b, sB, lo, hi, base_w, step)
            for sign, A, a, sA, B, b, sB in contribs
        ]
        vals[d, lo + M: hi + M + 1] = _neumaier(parts)
        scale[d, lo + M: hi + M + 1] = sum(np.abs(p) for p in parts)
    return LatticeSeries(base_w, step, M, vals, los, his, scale)


def _l_range(D: int, offset: int):
    """Integers l with l(l + offset)/2 ... helper returning all l with weight <= D."""
    K = max_pair_index(D)
    return range(-K - 1, K + 1) if offset == 1 else range(-K, K + 2)


def qceq_residual(psi: LatticeSeries, params: QCurveParams) -> LatticeSeries:
    P = params
    terms = []
    for l in range(-P.K, P.K + 2):
        terms.append((-1 if l % 2 else 1, l * (l - 1) // 2, P.Y, -P.nu * l, psi, P.hbar * l))
    return bilinear_sum(terms, min(psi.D, P.D), psi.w0, psi.step, psi.M)


def qceq_dual_residual(psid: LatticeSeries, params: QCurveParams) -> LatticeSeries:
    P = params
    terms = []
    for l in range(-P.K, P.K + 2):
        terms.append(
            (-1 if l % 2 else 1, l * (l - 1) // 2, P.Y, -(P.nu + P.hbar) * l, psid, -P.hbar * l)
        )
    return bilinear_sum(terms, min(psid.D, P.D), psid.w0, psid.step, psid.M)


def star_pair(kind: str, A, B: LatticeSeries, params: QCurveParams) -> LatticeSeries:
    """Order-by-order residual of one of the three bilinear sums

        YX: sum_l (-1)^l qe^(l(l+1)/2) Y(w - hbar n (l+1))    X(w - hbar l)
        YZ: sum_l (-1)^l qe^(l(l+1)/2) Y(w + hbar (n-1)(l+1)) Z(w - hbar l)
        XZ: sum_l (-1)^l qe^(l(l+1)/2) X(w + hbar (n-1)(l+1)) Z(w + hbar n l)

    on the lattice of B.  A is the first factor (a MonicPoly or LatticeSeries).
    """
    P = params
    hbar, nu = P.hbar, P.nu
    D = min(P.D, B.D) if isinstance(A, MonicPoly) else min(P.D, A.D, B.D)
    K = max_pair_index(D)
    if kind == "XZ" and P.rational_n() is None:
        raise AlignmentError(
            f"the XZ pairing needs n = p/{P.r} so that all shifts lie on the hbar/{P.r} lattice; got n={P.n}"
        )
    terms = []
    for l in range(-K - 1, K + 1):
        sign = -1 if l % 2 else 1
        e = l * (l + 1) // 2
        if kind == "YX":
            terms.append((sign, e, A, -nu * (l + 1), B, -hbar * l))
        elif kind == "YZ":
            terms.append((sign, e, A, (nu - hbar) * (l + 1), B, -hbar * l))
        elif kind == "XZ":
            terms.append((sign, e, A, (nu - hbar) * (l + 1), B, nu * l))
        else:
            raise ParameterError(f"unknown pairing {kind!r}")
    return bilinear_sum(terms, D, B.w0, B.step, B.M)


def shift_series(F: LatticeSeries, shift: complex) -> LatticeSeries:
    """G(w) = F(w + shift), sampled on the lattice moved by -shift."""
    out = F.copy()
    out.w0 = F.w0 - shift
    return out


# ---------------------------------------------------------------------------
# normalisation matching for the XZ pairing


@dataclass
class MatchReport:
    orders: list[dict] = field(default_factory=list)
    cX: list[list[complex]] = field(default_factory=list)
    cZ: list[list[complex]] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    order0_residual: float = 0.0

    def reduction(self, d: int) -> float:
        row = self.orders[d - 1]
        return row["pre_fit"] / max(row["post_fit"], 1e-300)

    def to_dict(self) -> dict:
        return {
            "order0_residual": self.order0_residual,
            "orders": self.orders,
            "cX": [[[c.real, c.imag] for c in cs] for cs in self.cX],
            "cZ": [[[c.real, c.imag] for c in cs] for cs in self.cZ],
            "warnings": self.warnings,
        }


def _apply_constants(F: LatticeSeries, consts: list[np.ndarray], r: int) -> LatticeSeries:
    """Multiply F chainwise by 1 + sum_k consts[k-1][chain] qe^k."""
    out = F.copy()
    ms = np.arange(-F.M, F.M + 1)
    chain = np.mod(ms, r)
    for d in range(1, F.D + 1):
        acc = F.values[d].copy()
        for k in range(1, min(d, len(consts)) + 1):
            acc = acc + consts[k - 1][chain] * F.values[d - k]
        out.values[d] = acc
    for d in range(1, F.D + 1):
        # mixing with lower orders keeps the window of order d (lower ones are wider)
        out.lo[d] = max(F.lo[d], *(F.lo[d - k] for k in range(1, min(d, len(consts)) + 1)))
        out.hi[d] = min(F.hi[d], *(F.hi[d - k] for k in range(1, min(d, len(consts)) + 1)))
    return out


def match_normalization(X: LatticeSeries, Z: LatticeSeries, params: QCurveParams) -> MatchReport:
    """Fit per-chain qe-constants C_X, C_Z (X -> C_X X, Z -> C_Z Z) order by
    order to minimise the XZ residual over the window, by linear least squares.
    """
    P = params
    r = P.r
    if P.rational_n() is None:
        raise AlignmentError(f"match_normalization needs rational n = p/{r}")
    rep = MatchReport()
    base = star_pair("XZ", X, Z, P)
    rep.order0_residual = base.max_relative(0)
    cX: list[np.ndarray] = []
    cZ: list[np.ndarray] = []
    D = min(X.D, Z.D, P.D)
    hbar, nu = P.hbar, P.nu
    for d in range(1, D + 1):
        Xc = _apply_constants(X, cX + [np.zeros(r, complex)], r)
        Zc = _apply_constants(Z, cZ + [np.zeros(r, complex)], r)
        res = star_pair("XZ", Xc, Zc, P)
        lo, hi = res.window(d)
        ms = np.arange(lo, hi + 1)
        rhs = res.block(d, lo, hi)
        sc = res.scale[d, lo + P.M: hi + P.M + 1]
        pre = float(np.max(np.abs(rhs) / sc))
        # the order-d constants enter only through the l = 0, -1 terms with (d,0) or (0,d)
        A = np.zeros((len(ms), 2 * r), dtype=complex)
        for l in (0, -1):
            sign = -1 if l % 2 else 1
            kx = Xc.offset_of((nu - hbar) * (l + 1), Zc.w0)
            kz = Zc.offset_of(nu * l, Zc.w0)
            x0 = Xc.block(0, lo + kx, hi + kx)
            z0 = Zc.block(0, lo + kz, hi + kz)
            cx = np.mod(ms + kx, r)
            cz = np.mod(ms + kz, r)
            for ch in range(r):
                A[:, ch] += sign * np.where(cx == ch, x0 * z0, 0)
                A[:, r + ch] += sign * np.where(cz == ch, x0 * z0, 0)
        W = 1.0 / sc
        sol, *_ = np.linalg.lstsq(A * W[:, None], -rhs * W, rcond=1e-12)
        sv = np.linalg.svd(A * W[:, None], compute_uv=False)
        rank = int(np.sum(sv > sv[0] * 1e-12))
        cond = float(sv[0] / sv[rank - 1]) if rank else math.inf
        if rank < 2 * r:
            rep.warnings.append(
                f"order {d}: design matrix rank {rank} < {2 * r} constants "
                f"(expected: C_X C_Z scaling leaves XZ invariant)"
            )
        cX.append(sol[:r])
        cZ.append(sol[r:])
        post_res = star_pair("XZ", _apply_constants(X, cX, r), _apply_constants(Z, cZ, r), P)
        post = post_res.max_relative(d)
        rep.orders.append(
            {
                "order": d,
                "equations": int(len(ms)),
                "constants": 2 * r,
                "rank": rank,
                "pre_fit": pre,
                "post_fit": post,
                "condition": cond,
            }
        )
    rep.cX = [list(map(complex, c)) for c in cX]
    rep.cZ = [list(map(complex, c)) for c in cZ]
    return rep


def chi_transform(psi: LatticeSeries, alpha: complex, u: complex, window: tuple[int, int],
                  qe: complex, hbar: complex, dual: bool = False) -> tuple[complex, float]:
    """Partial sum of exp(+-2 pi i w u / hbar) Psi(w) over w = alpha + hbar k, k in window.

    Returns the value and |largest end term| / |partial sum| as a tail diagnostic.
    """
    r = round((hbar / psi.step).real)
    m_alpha = psi.offset_of(alpha - psi.w0, psi.w0)
    k = np.arange(window[0], window[1] + 1)
    ms = m_alpha + r * k
    lo, hi = max(psi.lo), min(psi.hi)
    if ms.min() < lo or ms.max() > hi:
        raise WindowError(f"chi window sites [{ms.min()}, {ms.max()}] leave the valid range [{lo}, {hi}]")
    vals = sum(qe ** d * psi.values[d, ms + psi.M] for d in range(psi.D + 1))
    w = alpha + hbar * k
    sgn = -1 if dual else 1
    terms = np.exp(sgn * 2j * np.pi * w * u / hbar) * vals
    total = complex(terms.sum())
    tail = float(max(abs(terms[0]), abs(terms[-1])) / max(abs(total), 1e-300))
    return total, tail
