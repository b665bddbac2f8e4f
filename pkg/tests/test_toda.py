import math

import mpmath as mp
import numpy as np
import pytest

from ecmcurve.errors import ConvergenceError, ParameterError, PoleError, WindowError
from ecmcurve.laxcurve import MonicPoly
from ecmcurve.toda import (
    TodaParams, asymptotic_rhos, build_Q, build_Qtilde, find_bethe_roots, tq_residual, wronskian_residual,
    wronskian_tail,
)


def tp1(L=0.01, P=4, **kw):
    return TodaParams(1.0, math.sqrt(L), (0.0,), P=P, **kw)


def tp2(L=1e-3, P=4, **kw):
    return TodaParams(1.0, L ** 0.25, (0.4, -0.3), P=P, **kw)


def test_q0_is_gamma():
    Q = build_Q(tp1(P=0))
    assert abs(Q(1.0) - 1) < 1e-14
    for w in (2.5, 0.3 + 1.2j, -1.5 + 0.2j):
        assert abs(Q(w) - complex(mp.gamma(w))) < 1e-12 * abs(complex(mp.gamma(w)))


def test_gamma_recurrence_on_100_points(rng):
    tp = TodaParams(1.3 + 0.2j, 0.1, (0.4, -0.3 + 0.2j), P=2)
    Q = build_Q(tp)
    Y = tp.Y
    for w in rng.uniform(-3, 5, 100) + 1j * rng.uniform(-2, 2, 100):
        assert abs(Q.q0(w + tp.hbar) / (Y(w) * Q.q0(w)) - 1) < 1e-12


def test_r1_closed_form():
    Q = build_Q(tp1(P=2))
    assert abs(Q.r(1, 3.0) - 0.5) < 1e-10
    for w in (2.3 + 0.4j, -0.7 + 1.1j, 7.5):
        assert abs(Q.r(1, w) - 1 / (w - 1)) < 1e-10 * abs(1 / (w - 1))
        # r2 telescopes too: sum 1/((x)(x+1)(x+2)) from x = w - 2
        assert abs(Q.r(2, w) - 0.5 / ((w - 2) * (w - 1))) < 1e-10 * abs(0.5 / ((w - 2) * (w - 1)))


def test_r1_against_direct_sum_n2():
    tp = tp2()
    Q = build_Q(tp)
    w = 2.3 + 0.2j
    Y = lambda v: (v - 0.4) * (v + 0.3)
    mp.mp.dps = 30
    direct = complex(mp.nsum(lambda j: 1 / (Y(w - 1 + j) * Y(w + j)), [0, mp.inf]))
    assert abs(Q.r(1, w) - direct) < 1e-11 * abs(direct)


def test_asymptotic_series_solves_difference_equation():
    rhos = asymptotic_rhos((0.3, -0.2), 2, T=30)
    s = 60.0 + 5j
    f = lambda c, x: sum(c[k] * x ** -k for k in range(len(c)))
    for p in (1, 2):
        lhs = f(rhos[p], s) - f(rhos[p], s + 1)
        t = f(rhos[p - 1], s - 1) / ((s - 1.3) * (s - 0.8) * (s - 0.3) * (s + 0.2))
        assert abs(lhs - t) < 1e-13 * abs(t)


def test_tq_residual_p0_exact():
    tp = tp1(P=0)
    Q = build_Q(tp)
    for w in (1.7, 2.3 + 0.3j):
        res = tq_residual(Q, tp, w)
        want = tp.L * Q.q0(w - 1)
        assert abs(res - want) < 1e-12 * abs(want)
        # the generic path (plain evaluator) agrees
        assert abs(tq_residual(lambda x: Q(x), tp, w) - want) < 1e-12 * abs(want)


def test_tq_residual_order_counting():
    tp = tp1(P=2)
    Q = build_Q(tp)
    w = 2.3
    assert abs(tq_residual(Q, tp, w)) < 10 * abs(tp.L) ** 3 * abs(Q(w))
    tp4 = tp1(P=4)
    Q4 = build_Q(tp4)
    assert abs(tq_residual(Q4, tp4, w)) < 10 * abs(tp4.L) ** 5 * abs(Q4(w))


@pytest.mark.parametrize("make", [tp1, tp2], ids=["N1", "N2"])
def test_tq_slope(make):
    w = 3.4 + 0.1j
    vals = []
    for L in (1e-2, 1e-3):
        tp = make(L=L, P=4)
        vals.append(abs(tq_residual(build_Q(tp), tp, w)))
    slope = math.log(vals[0] / vals[1]) / math.log(10)
    assert abs(slope - 5) < 0.2


def test_two_term_y_equivalence():
    tp = tp2(L=1e-2, P=3)
    Q = build_Q(tp)
    for w in (2.1 + 0.1j, 2.6, 3.3 - 0.2j, 4.1 + 0.5j, 5.2):
        Yw = Q(w) / Q(w - 1)
        Yw1 = Q(w + 1) / Q(w)
        lhs = tp.Y(w) - Yw1 - tp.L / Yw
        rhs = -tq_residual(Q, tp, w) / Q(w)
        assert abs(lhs - rhs) < 1e-12 * abs(tp.Y(w))


def test_qtilde_leading_order():
    for L in (1e-2, 1e-3):
        # Q = Gamma exactly (P = 0), so w = 1 is regular
        tp = tp1(L=L, P=0)
        Qt = build_Qtilde(build_Q(tp), 4)
        assert abs(Qt(1.0) / L - 1) < 3 * L


@pytest.mark.parametrize("make", [tp1, tp2], ids=["N1", "N2"])
def test_qtilde_solves_tq(make):
    # Lambda^2 = 0.01 in both cases
    tp = make(L=0.01 ** (tp1().N if make is tp1 else 2), P=4)
    Q = build_Q(tp)
    Qt = build_Qtilde(Q, 4)
    for w in (2.3 + 0.2j, 3.4 + 0.1j):
        r = tq_residual(Qt, tp, w)
        sc = abs(Qt(w + 1)) + abs(tp.L * Qt(w - 1)) + abs(tp.Y(w) * Qt(w))
        assert abs(r) / sc < 1e-8


def test_qtilde_scaling():
    w = 2.3 + 0.2j
    errs = []
    for L in (1e-2, 1e-3):
        tp = tp1(L=L, P=4)
        Qt = build_Qtilde(build_Q(tp), 4)
        # the small T-Q solution: ratio -> L / Y evaluated one step up
        errs.append(abs(Qt(w + 1) / Qt(w) / (L / tp.Y(w + 1)) - 1))
    assert errs[1] < errs[0] and errs[1] < 1e-2


def test_wronskian_examples():
    tp = tp1(L=0.01)
    Q = build_Q(tp.__class__(1.0, 0.1, (0.0,), P=0))  # Q = Gamma
    Qt = build_Qtilde(Q, 3, tp)
    r = wronskian_residual(Q, Qt, tp, 1.7)
    assert abs(r) < 1e-8
    assert abs(r - wronskian_tail(Q, tp, 3, 1.7)) < 1e-15
    r1 = wronskian_residual(Q, build_Qtilde(Q, 1, tp), tp, 1.7)
    r2 = wronskian_residual(Q, build_Qtilde(Q, 2, tp), tp, 1.7)
    assert abs(r2 / r1) < 0.01


def test_wronskian_needs_no_tq_equation():
    tp = tp1(L=0.01)
    wrong = TodaParams(1.0, 0.1, (0.37 + 0.2j,), P=2)
    Qw = build_Q(wrong)
    Qt = build_Qtilde(Qw, 4, tp)
    vals = [wronskian_residual(Qw, Qt, tp, w) for w in np.linspace(1.2, 3.3, 6) + 0.1j]
    for w, v in zip(np.linspace(1.2, 3.3, 6) + 0.1j, vals):
        assert abs(v - wronskian_tail(Qw, tp, 4, w)) < 1e-14


@pytest.mark.parametrize("make", [tp1, tp2], ids=["N1", "N2"])
def test_wronskian_flat_and_unit(make):
    tp = make(L=1e-3, P=4)
    Q = build_Q(tp)
    Qt = build_Qtilde(Q, 4)
    ws = [3.4 + 0.1j, 3.9 - 0.05j, 4.4 + 0.15j, 4.9 + 0.05j]
    vals = np.array([wronskian_residual(Q, Qt, tp, w) for w in ws])
    assert np.max(np.abs(vals - vals[0])) < 1e-8
    assert np.max(np.abs(vals)) < 10 * abs(tp.L) ** 5 + 1e-14


def test_bethe_root_n1():
    tp = tp1(L=0.01)
    Q = build_Q(tp)
    (res,) = find_bethe_roots(Q, [0.95])
    assert res.converged
    assert abs(res.root - (1 - tp.L)) < 10 * abs(tp.L) ** 2
    assert abs(res.ratio_residual) < 1e-6
    assert abs(Q(res.root)) < 1e-10


def test_bethe_far_seed_fails_gracefully():
    Q = build_Q(tp1())
    (res,) = find_bethe_roots(Q, [50 + 30j])
    assert not res.converged and res.message
    assert res.to_dict()["root"] is None


def test_lambda_to_zero_continuity():
    ws = [1.3 + 0.2j, 2.2, 3.7 - 0.4j]
    base = build_Q(tp1(P=0))
    for L in (1e-4, 1e-8):
        Q = build_Q(tp1(L=L, P=4))
        dev = max(abs(Q(w) / base(w) - 1) for w in ws)
        assert dev < 10 * L


def test_errors():
    with pytest.raises(ParameterError):
        TodaParams(0.0, 0.1, (0.0,))
    with pytest.raises(ParameterError):
        TodaParams(1.0, 0.1, ())
    tp = tp1(window=(-1 - 1j, 3 + 1j))
    Q = build_Q(tp)
    with pytest.raises(WindowError):
        tq_residual(Q, tp, 2.5)
    with pytest.raises(PoleError):
        Q(1.0 + 1e-9)
    with pytest.raises(ParameterError):
        build_Qtilde(Q, -1)


def test_far_endpoint_grows_until_tail_converges(monkeypatch):
    import ecmcurve.toda as toda

    monkeypatch.setattr(toda, "TAIL_TOL", -1.0)
    monkeypatch.setattr(toda, "FAR_CAP", 64)
    with pytest.raises(ConvergenceError):
        build_Q(tp1())


def test_large_lambda_warns():
    with pytest.warns(UserWarning):
        build_Q(TodaParams(1.0, 0.9, (0.0,), P=4, window=(1.2 - 0.5j, 1.8 + 0.5j)))
