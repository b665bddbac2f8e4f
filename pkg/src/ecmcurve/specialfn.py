"""Complex special functions: the odd theta series, its derivatives,
Weierstrass p and log-Gamma.

The theta function used throughout is

    theta(u|tau) = sum_l (-1)^l exp(2 pi i l u) qe^(l(l-1)/2),   qe = exp(2 pi i tau),

which vanishes at u = 0 and satisfies theta(u+1) = theta(u) = -exp(2 pi i u) theta(u+tau).
Each term is formed as a single complex exponential so that large |Im u| never
overflows an intermediate factor.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError, ParameterError, PoleError

L_CAP = 200
# terms smaller than exp(-_DROP) times the largest one are dropped (~1e-19)
_DROP = 44.0


@dataclass(frozen=True)
class EllipticParams:
    """Modular parameter tau (Im tau > 0) and an optional fixed truncation.

    ``L=None`` selects the truncation adaptively per call; ``qe`` is always
    derived from ``tau``.
    """

    tau: complex
    L: int | None = None

    def __post_init__(self):
        tau = complex(self.tau)
        if not (math.isfinite(tau.real) and math.isfinite(tau.imag)):
            raise DomainError(f"tau must be finite, got {tau}")
        if tau.imag <= 0:
            raise ParameterError(f"Im tau must be positive (|qe| < 1), got tau={tau}")
        if self.L is not None and not (1 <= self.L <= L_CAP):
            raise ParameterError(f"truncation L must lie in [1, {L_CAP}], got {self.L}")
        object.__setattr__(self, "tau", tau)

    @property
    def qe(self) -> complex:
        return cmath.exp(2j * math.pi * self.tau)


def _as_array(u):
    arr = np.asarray(u, dtype=complex)
    if not np.all(np.isfinite(arr)):
        raise DomainError("non-finite argument")
    return arr


def _truncation(im_u: np.ndarray, ep: EllipticParams, shift: float) -> int:
    if ep.L is not None:
        return ep.L
    ls = np.arange(-L_CAP, L_CAP + 2, dtype=float)
    tau2 = ep.tau.imag
    # log-magnitude of every term, for the extreme values of Im u
    lo, hi = float(np.min(im_u)), float(np.max(im_u))
    L_needed = 1
    for y in (lo, hi):
        logmag = -2 * math.pi * ((ls + shift) * y + tau2 * ls * (ls - 1) / 2)
        keep = ls[logmag >= logmag.max() - _DROP]
        L_needed = max(L_needed, int(-keep.min()), int(keep.max()) - 1)
    if L_needed >= L_CAP:
        raise ParameterError(
            f"theta series needs more than {L_CAP} terms per side (|qe| too close to 1 "
            f"or |Im u| too large)"
        )
    return L_needed


def theta_series(u, ep: EllipticParams, order: int = 0, shift: float = 0.0):
    """Return sum_l (-1)^l (2 pi i (l+shift))^order exp(2 pi i ((l+shift) u + tau l(l-1)/2)).

    ``order`` is the u-derivative order; ``shift=-1/2`` gives the odd function
    exp(-pi i u) theta(u).  The sum runs over l = -L .. L+1 and is accumulated in
    pairs (l, 1-l), so that at u = 0 the pairwise cancellation is exact.
    """
    arr = _as_array(u)
    L = _truncation(arr.imag.ravel() if arr.size else np.zeros(1), ep, shift)
    ls = np.arange(1, L + 2)
    partners = 1 - ls
    flat = arr.reshape(-1, 1)
    tau = ep.tau

    def block(ll):
        ll = ll.astype(float)
        expo = 2j * np.pi * ((ll + shift) * flat + tau * ll * (ll - 1) / 2)
        sign = np.where(ll % 2 == 0, 1.0, -1.0)
        pref = (2j * np.pi * (ll + shift)) ** order if order else 1.0
        return sign * pref * np.exp(expo)

    pairs = block(ls) + block(partners)
    # smallest pairs first
    out = pairs[:, ::-1].sum(axis=1)
    out = out.reshape(arr.shape)
    return complex(out) if out.ndim == 0 else out


def theta(u, ep: EllipticParams):
    return theta_series(u, ep, 0)


def theta_prime(u, ep: EllipticParams):
    """Termwise u-derivative of the theta series."""
    return theta_series(u, ep, 1)


def _lattice_distance(z: np.ndarray, tau: complex) -> np.ndarray:
    k = np.round(z.imag / tau.imag)
    w = z - k * tau
    m = np.round(w.real)
    return np.abs(w - m)


def wp(z, ep: EllipticParams, *, tol: float = 1e-10):
    """Weierstrass p with periods (1, tau), normalised so that z^2 p(z) -> 1.

    Computed as -(log g)'' + g'''(0) / (3 g'(0)) with g(u) = exp(-pi i u) theta(u),
    which is odd, so the constant removes the z^0 term of the Laurent expansion.
    """
    arr = _as_array(z)
    if np.any(_lattice_distance(arr, ep.tau) < tol):
        raise PoleError(f"wp evaluated within {tol} of a lattice point")
    g0 = theta_series(arr, ep, 0, -0.5)
    g1 = theta_series(arr, ep, 1, -0.5)
    g2 = theta_series(arr, ep, 2, -0.5)
    d1 = theta_series(0.0, ep, 1, -0.5)
    d3 = theta_series(0.0, ep, 3, -0.5)
    val = (g1 * g1 - g2 * g0) / (g0 * g0) + d3 / (3 * d1)
    return complex(val) if np.ndim(val) == 0 else val


def log_gamma(z, *, tol: float = 1e-12):
    """Principal branch of log Gamma(z) (branch cut along the negative real axis).

    Raises PoleError within ``tol`` of a non-positive integer.
    """
    arr = _as_array(z)
    near = (arr.real < 0.5) & (np.abs(arr - np.round(arr.real)) < tol)
    if np.any(near):
        raise PoleError(f"log_gamma evaluated at a pole of Gamma: {arr[near].ravel()[0]}")
    val = special.loggamma(arr)
    return complex(val) if np.ndim(val) == 0 else val
