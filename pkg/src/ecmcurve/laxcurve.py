"""Krichever's Lax matrix for the elliptic Calogero-Moser system, the shifted
spectral determinant calR(x, u), the entire function frakF = theta * calR and the
u-Fourier coefficients frakF_l(x), which are monic degree-N polynomials related by
frakF_l(x) = (2 pi i)^N Y(w - nu l) with x = 2 pi i w.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EvaluationZoneError, ParameterError, PoleError, StructureError
from .specialfn import EllipticParams, theta, theta_prime

TWO_PI_I = 2j * math.pi
N_MAX = 8


def _lattice_distance(u, tau: complex):
    u = np.asarray(u, dtype=complex)
    k = np.round(u.imag / tau.imag)
    w = u - k * tau
    return np.abs(w - np.round(w.real))


@dataclass(frozen=True)
class LaxParams:
    ep: EllipticParams
    nu: complex
    p: tuple[complex, ...]
    z: tuple[complex, ...]

    def __post_init__(self):
        p = tuple(complex(v) for v in self.p)
        z = tuple(complex(v) for v in self.z)
        if len(p) != len(z) or not p:
            raise ParameterError("need equally many (>0) momenta and positions")
        if len(p) > N_MAX:
            raise ParameterError(f"N capped at {N_MAX}")
        for i in range(len(z)):
            for j in range(i):
                if _lattice_distance(z[i] - z[j], self.ep.tau) < 1e-8:
                    raise ParameterError(f"positions z{j} and z{i} coincide modulo the lattice")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "nu", complex(self.nu))

    @property
    def N(self) -> int:
        return len(self.p)


@dataclass(frozen=True)
class MonicPoly:
    """w^N + c[N-1] w^(N-1) + ... + c[0]."""

    coeffs: tuple[complex, ...]

    @classmethod
    def from_roots(cls, roots) -> "MonicPoly":
        full = np.poly(np.asarray(roots, dtype=complex))  # highest first, leading 1
        return cls(tuple(complex(c) for c in full[1:][::-1]))

    @property
    def degree(self) -> int:
        return len(self.coeffs)

    def all_coeffs(self) -> np.ndarray:
        """Ascending coefficients including the leading 1."""
        return np.array(list(self.coeffs) + [1.0], dtype=complex)

    def roots(self) -> np.ndarray:
        return np.roots(self.all_coeffs()[::-1]) if self.degree else np.array([], complex)

    def __call__(self, w):
        w = np.asarray(w, dtype=complex)
        out = np.ones_like(w)
        for c in reversed(self.coeffs):
            out = out * w + c
        return complex(out) if out.ndim == 0 else out

    def shifted(self, s: complex) -> "MonicPoly":
        """The polynomial w -> self(w + s)."""
        return MonicPoly.from_roots(self.roots() - s) if self.degree else self


def lax_matrix(lp: LaxParams, u):
    """L_ij(u); broadcasts over an array of u (matrix axes last)."""
    u = np.asarray(u, dtype=complex)
    if np.any(_lattice_distance(u, lp.ep.tau) < 1e-8):
        raise PoleError("Lax matrix evaluated at a lattice point of u")
    N = lp.N
    ep = lp.ep
    tp0 = theta_prime(0.0, ep)
    th_u = theta(u, ep)
    L = np.zeros(u.shape + (N, N), dtype=complex)
    for i in range(N):
        L[..., i, i] = lp.p[i]
        for j in range(N):
            if i != j:
                zij = lp.z[i] - lp.z[j]
                L[..., i, j] = lp.nu * theta(zij + u, ep) * tp0 / (theta(zij, ep) * th_u)
    return L


def _det_cofactor(A: np.ndarray) -> np.ndarray:
    n = A.shape[-1]
    if n == 1:
        return A[..., 0, 0]
    if n == 2:
        return A[..., 0, 0] * A[..., 1, 1] - A[..., 0, 1] * A[..., 1, 0]
    out = 0
    for k in range(n):
        minor = np.delete(np.delete(A, 0, axis=-2), k, axis=-1)
        out = out + (-1) ** k * A[..., 0, k] * _det_cofactor(minor)
    return out


def det(A: np.ndarray) -> np.ndarray:
    """Cofactor expansion for N <= 4, pivoted LU above."""
    return _det_cofactor(A) if A.shape[-1] <= 4 else np.linalg.det(A)


def shifted_lax(lp: LaxParams, u):
    """L~(u) = L(u) + nu theta'(u)/theta(u) Id."""
    u = np.asarray(u, dtype=complex)
    L = lax_matrix(lp, u)
    shift = lp.nu * theta_prime(u, lp.ep) / theta(u, lp.ep)
    idx = np.arange(lp.N)
    L[..., idx, idx] += np.asarray(shift)[..., None]
    return L


def calR(lp: LaxParams, x, u):
    """det(x Id - L~(u)); x and u broadcast against each other."""
    x, u = np.broadcast_arrays(np.asarray(x, dtype=complex), np.asarray(u, dtype=complex))
    Lt = shifted_lax(lp, u)
    eye = np.eye(lp.N)
    out = det(x[..., None, None] * eye - Lt)
    return complex(out) if np.ndim(out) == 0 else out


def frakF(lp: LaxParams, x, u):
    """theta(u) calR(x, u), an entire function of (x, u)."""
    u_arr = np.asarray(u, dtype=complex)
    if np.any(_lattice_distance(u_arr, lp.ep.tau) < 1e-6):
        raise EvaluationZoneError("frakF is not evaluated within 1e-6 of the u-lattice")
    out = theta(u_arr, lp.ep) * calR(lp, x, u_arr)
    return complex(out) if np.ndim(out) == 0 else out


def contour_offset(lp: LaxParams, l: int) -> float:
    return lp.ep.tau.imag * (0.5 - l)


def fourier_coefficient(lp: LaxParams, l: int, x, M: int = 64):
    """frakF_l(x) by the M-point trapezoid rule on the line Im u = tau2 (1/2 - l)."""
    if abs(l) > 6:
        raise ParameterError("|l| <= 6 required")
    if M < 64 or M & (M - 1):
        raise ParameterError("M must be a power of two >= 64")
    x = np.asarray(x, dtype=complex)
    c = contour_offset(lp, l)
    t = (np.arange(M) + 0.5) / M
    u = t + 1j * c
    vals = frakF(lp, x[..., None], u)  # (..., M)
    tau = lp.ep.tau
    weight = np.exp(-TWO_PI_I * l * u - TWO_PI_I * tau * l * (l - 1) / 2) * (-1) ** l
    out = (vals * weight).sum(axis=-1) / M
    return complex(out) if out.ndim == 0 else out


def _nodes(lp: LaxParams, count: int, radius_factor: float = 1.0, phase: float = 0.5):
    R = max(1.0, 2 * max(abs(p) for p in lp.p))
    k = np.arange(count)
    return radius_factor * R * np.exp(TWO_PI_I * (k + phase) / count), R


def _fit_x_poly(x: np.ndarray, f: np.ndarray, N: int, R: float):
    """Least-squares degree-N fit; returns ascending x-coefficients and max residual."""
    V = np.vander(x / R, N + 1, increasing=True)
    sol, *_ = np.linalg.lstsq(V, f, rcond=None)
    resid = float(np.max(np.abs(V @ sol - f))) if len(f) else 0.0
    return sol / R ** np.arange(N + 1), resid


@dataclass
class YFit:
    Y: "MonicPoly"
    x_coeffs: np.ndarray  # ascending in x, before normalisation
    leading: complex
    fit_residual: float  # relative to R^N
    holdout_residual: float  # interpolation on N+1 nodes, mismatch on the 2 extra ones
    convergence: float  # relative change of the node values under M -> 2M


def _x_to_monic_w(a: np.ndarray) -> MonicPoly:
    N = len(a) - 1
    w = a * TWO_PI_I ** np.arange(N + 1)
    w = w / w[-1]
    return MonicPoly(tuple(complex(v) for v in w[:-1]))


def fit_coefficient(lp: LaxParams, l: int, M: int = 64) -> YFit:
    N = lp.N
    x, R = _nodes(lp, N + 3)
    f = fourier_coefficient(lp, l, x, M)
    f2 = fourier_coefficient(lp, l, x, 2 * M)
    scale = R ** N
    a, resid = _fit_x_poly(x, f, N, R)
    V = np.vander(x[: N + 1] / R, N + 1, increasing=True)
    b = np.linalg.solve(V, f[: N + 1])
    extra = np.vander(x[N + 1:] / R, N + 1, increasing=True) @ b
    holdout = float(np.max(np.abs(extra - f[N + 1:])))
    conv = float(np.max(np.abs(f2 - f)) / max(np.max(np.abs(f)), 1e-300))
    return YFit(_x_to_monic_w(a), a, complex(a[-1]), resid / scale, holdout / scale, conv)


def extract_Y(lp: LaxParams, M: int = 64) -> YFit:
    """Recover the monic polynomial Y(w) = frakF_0(2 pi i w) / (2 pi i)^N."""
    fit = fit_coefficient(lp, 0, M)
    if fit.fit_residual > 1e-6:
        raise StructureError(
            f"frakF_0 is not a degree-{lp.N} polynomial: fit residual {fit.fit_residual:.3e}"
        )
    return fit


@dataclass
class StructureReport:
    N: int
    M: int
    Y_coeffs: list[complex]
    rows: list[dict] = field(default_factory=list)
    periodicity: dict[str, float] = field(default_factory=dict)

    def max_residual(self) -> float:
        vals = [
            max(r["monicity_defect"], r["shift_law"], r["fit_residual"], r["grid_change"])
            for r in self.rows
        ]
        return max(vals + list(self.periodicity.values()))

    def passed(self, tol: float = 1e-8) -> bool:
        return self.max_residual() < tol

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "M": self.M,
            "Y_coeffs_w": [[c.real, c.imag] for c in self.Y_coeffs],
            "rows": self.rows,
            "periodicity": self.periodicity,
            "max_residual": self.max_residual(),
        }


def periodicity_residuals(lp: LaxParams, samples: int = 20, seed: int = 0) -> dict[str, float]:
    """Relative residuals of the shifted quasi-periodicity of calR and frakF."""
    rng = np.random.default_rng(seed)
    tau, nu = lp.ep.tau, lp.nu
    R = max(1.0, 2 * max(abs(p) for p in lp.p))
    u = rng.uniform(0, 1, samples) + 1j * tau.imag * rng.uniform(0.15, 0.85, samples)
    u = u + tau.real * (u.imag / tau.imag)
    x = R * np.sqrt(rng.uniform(0, 1, samples)) * np.exp(TWO_PI_I * rng.uniform(0, 1, samples))
    s = TWO_PI_I * nu

    def rel(a, b):
        return float(np.max(np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-300)))

    r0 = calR(lp, x, u)
    f0 = frakF(lp, x, u)
    return {
        "calR_u+1": rel(calR(lp, x, u + 1), r0),
        "calR_u+tau": rel(calR(lp, x - s, u + tau), r0),
        "frakF_u+1": rel(frakF(lp, x, u + 1), f0),
        "frakF_u+tau": rel(-np.exp(TWO_PI_I * u) * frakF(lp, x - s, u + tau), f0),
    }


def verify_structure(lp: LaxParams, l_range: int = 3, M: int = 64) -> StructureReport:
    """Fit every frakF_l with |l| <= l_range and compare against Y(w - nu l)."""
    if l_range > 6:
        raise ParameterError("l_range <= 6 required")
    N = lp.N
    base = fit_coefficient(lp, 0, M)
    Y = base.Y
    rep = StructureReport(N, M, list(Y.coeffs))
    xt, R = _nodes(lp, 6, radius_factor=0.7, phase=0.21)
    for l in range(-l_range, l_range + 1):
        fit = base if l == 0 else fit_coefficient(lp, l, M)
        direct = fourier_coefficient(lp, l, xt, M)
        expected = TWO_PI_I ** N * Y(xt / TWO_PI_I - lp.nu * l)
        scale = max(float(np.max(np.abs(expected))), R ** N)
        rep.rows.append(
            {
                "l": l,
                "monicity_defect": abs(fit.leading - 1),
                "shift_law": float(np.max(np.abs(direct - expected))) / scale,
                "fit_residual": fit.fit_residual,
                "holdout_residual": fit.holdout_residual,
                "grid_change": fit.convergence,
                "x_coeffs": [[c.real, c.imag] for c in fit.x_coeffs],
            }
        )
    rep.periodicity = periodicity_residuals(lp)
    return rep


def u1u2(x, u, nu, tau):
    """U1 = exp(x/nu), U2 = exp(2 pi i u + tau x / nu)."""
    if nu == 0:
        raise ParameterError("nu must be non-zero")
    return np.exp(x / nu), np.exp(TWO_PI_I * u + tau * x / nu)
