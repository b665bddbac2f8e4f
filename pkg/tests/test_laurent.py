import pytest
from hypothesis import given, strategies as st

from ecmcurve.laurent import LaurentPoly2

Q1, Q3, Q4 = LaurentPoly2.q(1), LaurentPoly2.q(3), LaurentPoly2.q(4)

terms = st.dictionaries(
    st.tuples(st.integers(-3, 3), st.integers(-3, 3)), st.integers(-5, 5), max_size=5
).map(LaurentPoly2)


def test_q3_relation():
    assert Q1 * Q3 * Q4 == 1
    assert LaurentPoly2.P(3) == 1 - Q3


def test_inverse_and_powers():
    assert Q1 ** -2 * Q1 ** 2 == 1
    assert (-Q4) ** -1 == -(Q4 ** -1)
    assert (Q1 + Q4) ** 2 == Q1 * Q1 + 2 * Q1 * Q4 + Q4 * Q4
    with pytest.raises(ValueError):
        (Q1 + Q4) ** -1
    with pytest.raises(ValueError):
        (2 * Q1) ** -1
    with pytest.raises(ValueError):
        LaurentPoly2.q(2)


def test_coefficient_and_repr():
    p = 3 * Q1 - Q4 ** 2 + 7
    assert p.coefficient(1, 0) == 3
    assert p.coefficient(0, 2) == -1
    assert p.coefficient(5, 5) == 0
    assert repr(LaurentPoly2()) == "0"
    assert "q1" in repr(p)


@given(terms, terms, terms)
def test_ring_axioms(a, b, c):
    assert a * (b + c) == a * b + a * c
    assert (a * b) * c == a * (b * c)
    assert a - a == LaurentPoly2()
    assert hash(a + b) == hash(b + a)


@given(terms, terms)
def test_evaluation_is_a_homomorphism(a, b):
    q1, q4 = 0.7 + 0.2j, -1.3 + 0.4j
    assert abs((a * b).evaluate(q1, q4) - a.evaluate(q1, q4) * b.evaluate(q1, q4)) < 1e-8 * (
        1 + abs(a.evaluate(q1, q4) * b.evaluate(q1, q4))
    )


def test_big_integers_do_not_overflow():
    p = (1 + Q1) ** 80
    assert p.coefficient(40, 0) == 107507208733336176461620
