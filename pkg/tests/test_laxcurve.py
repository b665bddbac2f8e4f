import numpy as np
import pytest

from ecmcurve.errors import EvaluationZoneError, ParameterError, PoleError
from ecmcurve.laxcurve import (
    TWO_PI_I, LaxParams, MonicPoly, calR, det, extract_Y, fourier_coefficient, frakF, lax_matrix,
    periodicity_residuals, shifted_lax, u1u2, verify_structure,
)
from ecmcurve.specialfn import EllipticParams, theta, theta_prime

EP = EllipticParams(0.8j)
N2 = LaxParams(EP, 0.25, (0.3, -0.7 + 0.2j), (0.11, 0.43 + 0.17j))
N3 = LaxParams(EP, 0.25, (0.3, -0.7 + 0.2j, 0.5 - 0.1j), (0.11, 0.43 + 0.17j, 0.7 + 0.35j))


def test_monic_poly():
    P = MonicPoly.from_roots([1.0, -2.0 + 1j])
    assert P.degree == 2
    w = np.array([0.3, 1.0, -2 + 1j])
    assert np.allclose(P(w), (w - 1) * (w + 2 - 1j))
    assert np.allclose(np.sort_complex(P.roots()), np.sort_complex([1.0, -2 + 1j]))
    S = P.shifted(0.5)
    assert abs(S(0.1) - P(0.6)) < 1e-12


def test_determinant_cofactor_matches_numpy(rng):
    for n in (1, 2, 3, 4, 5):
        A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        assert abs(det(A) - np.linalg.det(A)) < 1e-10 * max(1, abs(np.linalg.det(A)))


def test_lax_matrix_entries():
    u = 0.31 + 0.2j
    L = lax_matrix(N2, u)
    z12 = N2.z[0] - N2.z[1]
    want = N2.nu * theta(z12 + u, EP) * theta_prime(0.0, EP) / (theta(z12, EP) * theta(u, EP))
    assert abs(L[0, 1] - want) < 1e-13 * abs(want)
    assert L[0, 0] == N2.p[0]
    Lt = shifted_lax(N2, u)
    assert abs(Lt[1, 1] - L[1, 1] - N2.nu * theta_prime(u, EP) / theta(u, EP)) < 1e-13


def test_n1_closed_form():
    lp = LaxParams(EP, 0.25, (0.3,), (0.11,))
    x = np.array([0.4 + 0.1j, -1.2 + 0.5j])
    for l in range(-3, 4):
        got = fourier_coefficient(lp, l, x)
        want = x - 0.3 - TWO_PI_I * 0.25 * l
        assert np.max(np.abs(got - want)) < 1e-10
    Y = extract_Y(lp).Y
    assert abs(Y.coeffs[0] + 0.3 / TWO_PI_I) < 1e-12


@pytest.mark.parametrize("lp", [N2, N3], ids=["N2", "N3"])
def test_structure_shift_law_and_periodicity(lp):
    rep = verify_structure(lp, l_range=3, M=64)
    assert rep.passed(1e-8), rep.to_dict()
    assert len(rep.rows) == 7
    for row in rep.rows:
        assert row["monicity_defect"] < 1e-8
        assert row["shift_law"] < 1e-8
        assert row["grid_change"] < 1e-8


def test_grid_doubling_stability():
    a = extract_Y(N2, M=64).Y
    b = extract_Y(N2, M=128).Y
    assert max(abs(x - y) for x, y in zip(a.coeffs, b.coeffs)) < 1e-8


@pytest.mark.parametrize("lp", [N2, N3], ids=["N2", "N3"])
def test_root_sum_is_momentum_sum(lp):
    Y = extract_Y(lp).Y
    assert abs(-Y.coeffs[-1] - sum(lp.p) / TWO_PI_I) < 1e-10


def test_nu_zero_is_diagonal():
    lp = LaxParams(EP, 0.0, N2.p, N2.z)
    Y = extract_Y(lp).Y
    want = np.sort_complex(np.array(lp.p) / TWO_PI_I)
    assert np.max(np.abs(np.sort_complex(Y.roots()) - want)) < 1e-10


def test_entire_function_frakF_has_no_pole_but_is_zoned():
    x = 0.3 + 0.2j
    u = 0.27 + 0.31j
    f = frakF(N2, x, u)
    assert abs(f - theta(u, EP) * calR(N2, x, u)) < 1e-12 * abs(f)
    with pytest.raises(EvaluationZoneError):
        frakF(N2, x, 1e-8)
    with pytest.raises(PoleError):
        lax_matrix(N2, 0.8j)


def test_periodicity_residuals_small():
    res = periodicity_residuals(N3, samples=10, seed=3)
    assert max(res.values()) < 1e-10


def test_parameter_validation():
    with pytest.raises(ParameterError):
        LaxParams(EP, 0.2, (0.1, 0.2), (0.3,))
    with pytest.raises(ParameterError):
        LaxParams(EP, 0.2, (0.1, 0.2), (0.3, 1.3))
    with pytest.raises(ParameterError):
        LaxParams(EP, 0.2, tuple(range(9)), tuple(0.1 * k for k in range(9)))
    with pytest.raises(ParameterError):
        fourier_coefficient(N2, 0, 0.1, M=100)
    with pytest.raises(ParameterError):
        verify_structure(N2, l_range=7)
    with pytest.raises(ParameterError):
        u1u2(0.1, 0.2, 0.0, 0.8j)


def test_u1u2():
    U1, U2 = u1u2(0.5, 0.1, 0.25, 0.8j)
    assert np.isclose(U1, np.exp(2.0)) and np.isclose(U2, np.exp(TWO_PI_I * 0.1 + 0.8j * 2.0))
