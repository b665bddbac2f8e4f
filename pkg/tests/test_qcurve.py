import dataclasses

import numpy as np
import pytest

from ecmcurve.errors import AlignmentError, ParameterError, WindowError
from ecmcurve.laxcurve import MonicPoly
from ecmcurve.observables import QOracle, lattice_series
from ecmcurve.qcurve import (
    LatticeSeries, QCurveParams, chi_transform, match_normalization, max_pair_index, qceq_dual_residual,
    qceq_residual, shift_series, solve_psi, solve_psi_dual, solve_X, solve_Z, star_pair,
)

Y1 = MonicPoly.from_roots([0.13 + 0.21j])
Y2 = MonicPoly.from_roots([0.13 + 0.21j, -0.4 + 0.05j])
GENERIC = QCurveParams(Y2, 1.0 + 0.1j, 0.37 + 0.11j, 0.05 + 0.02j, 3, 0.3 + 0.4j, r=1, M=30)
RATIONAL = QCurveParams(Y1, 1.0, 1.5, 0.05, 3, 0.3 + 0.4j, r=2, M=80)


def orders(series_res, D):
    return [series_res.max_relative(d) for d in range(D + 1)]


def test_pair_index():
    assert [max_pair_index(D) for D in range(8)] == [0, 1, 1, 2, 2, 2, 3, 3]


def test_psi_hand_recursion():
    P = QCurveParams(MonicPoly.from_roots([0.0]), 1.0, 0.5, 0.0, 0, 2.0, r=1, M=1)
    s = solve_psi(P).series
    # sites w = 1, 2, 3; Psi(w+1) = Psi(w) * w / (w - 1/2)
    assert s.at(0, -1) == 1
    assert abs(s.at(0, 0) - 2) < 1e-15
    assert abs(s.at(0, 1) - 2 * 2 / 1.5) < 1e-15


def test_psi_dual_hand_recursion():
    P = QCurveParams(MonicPoly.from_roots([0.0]), 1.0, 0.5, 0.0, 0, 2.0, r=1, M=1)
    s = solve_psi_dual(P).series
    # seeded at w = 3; Psi(w-1) = Psi(w) * w / (w - 3/2)
    assert s.at(0, 1) == 1
    assert abs(s.at(0, 0) - 3 / 1.5) < 1e-15
    assert abs(s.at(0, -1) - 2 * 2 / 0.5) < 1e-15


@pytest.mark.parametrize("solver", [solve_psi, solve_psi_dual, solve_X, solve_Z])
@pytest.mark.parametrize("P", [GENERIC, RATIONAL], ids=["generic", "rational"])
def test_independent_residuals_vanish(solver, P):
    sol = solver(P)
    assert len(sol.residual) == P.D + 1
    assert sol.residual[0] < 1e-14
    assert max(sol.residual) < 1e-10


def test_residual_evaluators_are_not_circular():
    # a perturbed order-2 value must show up in the independent residual
    s = solve_psi(GENERIC).series.copy()
    s.values[2, s.M] *= 1.01
    res = qceq_residual(s, GENERIC)
    assert res.max_relative(2) > 1e-4
    sd = solve_psi_dual(GENERIC).series.copy()
    sd.values[1, sd.M] *= 1.01
    assert qceq_dual_residual(sd, GENERIC).max_relative(1) > 1e-4


def test_generic_numeric_input_gives_nonzero_pairing():
    rng = np.random.default_rng(2)
    s = solve_X(GENERIC).series.copy()
    s.values[0] = rng.normal(size=s.values.shape[1]) + 1j
    assert star_pair("YX", GENERIC.Y, s, GENERIC).max_relative(0) > 1e-3


def test_homogeneous_ambiguity_per_chain():
    P = dataclasses.replace(RATIONAL, D=3)
    base = solve_psi(P).series
    ms = np.arange(-P.M, P.M + 1)
    on_chain = (ms % P.r) == 1
    c = 0.37 - 1.2j
    # multiply one chain by (1 + c qe^d) for d = 1 and d = 2
    for d in (1, 2):
        s = base.copy()
        for k in range(d, P.D + 1):
            s.values[k] = s.values[k] + np.where(on_chain, c * base.values[k - d], 0)
            s.lo[k] = max(s.lo[k], base.lo[k - d])
            s.hi[k] = min(s.hi[k], base.hi[k - d])
        assert max(orders(qceq_residual(s, P), P.D)) < 1e-10
    # adding c * order-0 at the top order alone also leaves every residual unchanged
    s = base.copy()
    s.values[P.D] = s.values[P.D] + c * base.values[0]
    assert max(orders(qceq_residual(s, P), P.D)) < 1e-10


def test_identifications_between_solutions():
    P = GENERIC
    h, n = P.hbar, P.n
    x_from_dual = shift_series(solve_psi_dual(dataclasses.replace(P, n=n - 1)).series, -h)
    assert max(orders(star_pair("YX", P.Y, x_from_dual, P), P.D)) < 1e-10
    x_from_psi = shift_series(solve_psi(dataclasses.replace(P, hbar=-h, n=-n)).series, -h)
    assert max(orders(star_pair("YX", P.Y, x_from_psi, P), P.D)) < 1e-10
    z_from_dual = shift_series(solve_psi_dual(dataclasses.replace(P, n=-n)).series, -h)
    assert max(orders(star_pair("YZ", P.Y, z_from_dual, P), P.D)) < 1e-10


def test_plain_identifications_do_not_hold():
    # the direct substitutions without the parameter maps leave O(1) residuals
    P = GENERIC
    psi = solve_psi(P).series
    assert star_pair("YX", P.Y, psi, P).max_relative(0) > 0.1
    psid = solve_psi_dual(P).series
    assert star_pair("YZ", P.Y, shift_series(psid, -P.hbar * (1 - P.n)), P).max_relative(0) > 0.1


def test_yx_order0_telescoping_from_any_q():
    q = QOracle.from_roots([0.3 + 0.2j, -1.1 + 0.7j])
    h, n = 1.0, 0.5
    P = QCurveParams(MonicPoly.from_roots([0.0]), h, n, 0.0, 0, 0.37 + 0.21j, r=2, M=12)
    Xs = lattice_series("X", q, P.w0, P.step, P.M, 0, h, n)
    Ys = lattice_series("Y", q, P.w0, P.step, P.M, 0, h, n)
    Zs = lattice_series("Z", q, P.w0, P.step, P.M, 0, h, n)
    assert star_pair("YX", Ys, Xs, P).max_relative(0) < 1e-14
    assert star_pair("YZ", Ys, Zs, P).max_relative(0) < 1e-14


def test_hand_yx_example():
    # Q(w) = w, hbar = 1, n = 1/2 at w = 2: both terms equal 1.25
    q = QOracle.from_roots([0.0])
    P = QCurveParams(MonicPoly.from_roots([0.0]), 1.0, 0.5, 0.0, 0, 2.0, r=2, M=2)
    Xs = lattice_series("X", q, P.w0, P.step, P.M, 0, 1.0, 0.5)
    Ys = lattice_series("Y", q, P.w0, P.step, P.M, 0, 1.0, 0.5)
    res = star_pair("YX", Ys, Xs, P)
    assert abs(Ys.at(0, -1) * Xs.at(0, 0) - 1.25) < 1e-15
    assert abs(Ys.at(0, 0) * Xs.at(0, 2) - 1.25) < 1e-15
    assert abs(res.at(0, 0)) < 1e-15


def test_xz_alignment():
    assert RATIONAL.rational_n() == 1.5
    X, Z = solve_X(GENERIC).series, solve_Z(GENERIC).series
    with pytest.raises(AlignmentError):
        star_pair("XZ", X, Z, GENERIC)
    with pytest.raises(AlignmentError):
        match_normalization(X, Z, GENERIC)
    with pytest.raises(ParameterError):
        star_pair("QQ", X, Z, GENERIC)


def test_match_normalization_D0_has_no_constants():
    P = dataclasses.replace(RATIONAL, D=0)
    rep = match_normalization(solve_X(P).series, solve_Z(P).series, P)
    assert rep.orders == []
    assert rep.order0_residual < 1e-13


def test_match_normalization_reduces_residual():
    P = dataclasses.replace(RATIONAL, D=1, M=60)
    X, Z = solve_X(P).series, solve_Z(P).series
    rep = match_normalization(X, Z, P)
    row = rep.orders[0]
    assert row["equations"] / row["constants"] >= 10
    assert rep.reduction(1) >= 1e6
    # XZ is blind to a common rescaling of the chains, which shows up as a rank deficit
    assert row["rank"] < row["constants"] and rep.warnings
    assert rep.to_dict()["orders"][0]["order"] == 1


def test_match_normalization_negative_control():
    P = dataclasses.replace(RATIONAL, D=1, M=60)
    X, Z = solve_X(P).series, solve_Z(P).series
    Zb = Z.copy()
    Zb.values[1, Zb.M + 3] *= 1.1
    rep = match_normalization(X, Zb, P)
    assert rep.reduction(1) < 1e6


def test_order0_xz_needs_matching_seeds():
    P = dataclasses.replace(RATIONAL, D=0)
    X = solve_X(P, seed="unit").series
    Z = solve_Z(P).series
    assert star_pair("XZ", X, Z, P).max_relative(0) > 1e-6
    assert star_pair("XZ", solve_X(P).series, Z, P).max_relative(0) < 1e-13


def test_window_errors():
    P = dataclasses.replace(GENERIC, D=6, M=3)
    with pytest.raises(WindowError):
        solve_psi(P)
    s = solve_psi(GENERIC).series
    lo, hi = s.window(3)
    with pytest.raises(WindowError):
        s.at(3, hi + 1)
    with pytest.raises(WindowError):
        s.at(4, 0)


def test_generic_position_check():
    # Y(w - nu) vanishes on the lattice
    P = QCurveParams(MonicPoly.from_roots([0.5]), 1.0, 0.5, 0.0, 1, 1.0, r=1, M=5)
    with pytest.raises(ParameterError, match="generic"):
        solve_psi(P)


def test_params_validation():
    with pytest.raises(ParameterError):
        QCurveParams(Y1, 0.0, 0.5, 0.1, 1, 0.0)
    with pytest.raises(ParameterError):
        QCurveParams(Y1, 1.0, 0.5, 1.5, 1, 0.0)


def test_chi_transform():
    P = QCurveParams(Y1, 1.0, 0.5, 0.02, 2, 0.3 + 0.4j, r=1, M=60)
    psi = solve_psi(P).series
    alpha, u = psi.w0 + 2 * psi.step, 0.1 + 0.3j
    val, tail = chi_transform(psi, alpha, u, (0, 0), P.qe, P.hbar)
    psi_alpha = sum(P.qe ** d * psi.at(d, 2) for d in range(P.D + 1))
    assert abs(val - np.exp(2j * np.pi * alpha * u / P.hbar) * psi_alpha) < 1e-14 * abs(val)
    vd, _ = chi_transform(psi, alpha, u, (0, 0), P.qe, P.hbar, dual=True)
    assert abs(vd - np.exp(-2j * np.pi * alpha * u / P.hbar) * psi_alpha) < 1e-14 * abs(vd)
    # a decaying exponential weight: doubling the window moves the value by less than the tail bound
    u = 0.4j
    v1, t1 = chi_transform(psi, alpha, u, (0, 20), P.qe, P.hbar)
    v2, _ = chi_transform(psi, alpha, u, (0, 40), P.qe, P.hbar)
    assert abs(v2 - v1) / abs(v1) < t1
    with pytest.raises(WindowError):
        chi_transform(psi, alpha, u, (0, 500), P.qe, P.hbar)


def test_lattice_series_helpers():
    s = solve_psi(GENERIC).series
    tot, lo, hi = s.summed(GENERIC.qe)
    assert len(tot) == hi - lo + 1
    rows = list(s.to_rows())
    assert len(rows) == sum(s.hi[d] - s.lo[d] + 1 for d in range(s.D + 1))
    assert isinstance(s.copy(), LatticeSeries)
    with pytest.raises(AlignmentError):
        s.offset_of(0.5 * s.step, s.w0)
