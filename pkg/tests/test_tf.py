import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pebble_dryer.errors import ImproperTransferFunctionError
from pebble_dryer.tf import RationalTransferFunction as TF
from pebble_dryer.tf import discretize_zoh, ss_eval, ss_to_tf, tf_realize, trim


def test_trim_drops_dust():
    np.testing.assert_array_equal(trim([1.0, 2.0, 1e-14]), [1.0, 2.0])


def test_degrees_and_properness():
    g = TF([1.0, 2.0], [1.0, 3.0, 1.0])
    assert (g.num_degree, g.den_degree, g.relative_degree) == (1, 2, 1)
    assert g.is_proper() and g.is_strictly_proper()
    assert not TF([0, 0, 1], [1, 1]).is_proper()


def test_first_order_realization():
    K, tau = 3.0, 5.0
    A, B, C, D = tf_realize(TF([K], [1.0, tau]))
    assert A.shape == (1, 1)
    assert A[0, 0] == pytest.approx(-1.0 / tau)
    assert ss_eval(A, B, C, D, 0.0) == pytest.approx(K)


def test_improper_realization_rejected():
    with pytest.raises(ImproperTransferFunctionError):
        tf_realize(TF([0.0, 0.0, 1.0], [1.0, 1.0]))


coef = st.floats(-5.0, 5.0).filter(lambda v: abs(v) > 0.1)


@settings(max_examples=60, deadline=None)
@given(n=st.lists(coef, min_size=1, max_size=3), d=st.lists(coef, min_size=3, max_size=4))
def test_realization_matches_tf(n, d):
    g = TF(n, d)
    A, B, C, D = tf_realize(g)
    for s in (0.3 + 0.7j, -0.2 + 2.0j, 1.5j):
        if abs(np.polyval(g.den[::-1], s)) < 1e-6:
            continue
        assert ss_eval(A, B, C, D, s) == pytest.approx(complex(g(s)), rel=1e-9, abs=1e-9)
    if abs(g.den[0]) > 1e-6:
        assert ss_eval(A, B, C, D, 0.0) == pytest.approx(g.dc_gain(), rel=1e-12)


def test_arithmetic_against_pointwise_values():
    a = TF([1.0, 2.0], [3.0, 1.0, 1.0])
    b = TF([2.0], [1.0, 4.0])
    s = 0.4 + 1.3j
    assert (a + b)(s) == pytest.approx(a(s) + b(s))
    assert (a - b)(s) == pytest.approx(a(s) - b(s))
    assert (a * b)(s) == pytest.approx(a(s) * b(s))
    assert (a / b)(s) == pytest.approx(a(s) / b(s))
    assert (2 - a)(s) == pytest.approx(2 - a(s))
    assert (a ** 2)(s) == pytest.approx(a(s) ** 2)
    assert a.feedback()(s) == pytest.approx(a(s) / (1 + a(s)))


def test_minreal_cancels_common_factor():
    g = TF.from_roots([-1.0, -2.0], [-1.0, -3.0, -4.0])
    r = g.minreal()
    assert r.den_degree == 2 and r.num_degree == 1
    assert r.equals(TF([2.0, 1.0], [12.0, 7.0, 1.0]))


def test_strip_origin():
    g = TF([0.0, 2.0, 1.0], [0.0, 0.0, 3.0, 1.0])
    assert g.strip_origin().equals(TF([2.0, 1.0], [0.0, 3.0, 1.0]))


def test_s_and_roots():
    s = TF.s()
    assert s(2.0) == 2.0
    np.testing.assert_allclose(sorted(TF.from_roots([1.0], [-2.0, -3.0]).poles().real), [-3, -2])


def test_ss_to_tf_round_trip():
    g = TF([1.0, 0.5], [2.0, 3.0, 1.0])
    assert ss_to_tf(*tf_realize(g)).equals(g)


def test_zoh_matches_exact_step_response():
    # K/(tau s + 1) under a held unit step: y_k = K (1 - exp(-k dt / tau))
    K, tau, dt = 2.0, 4.0, 0.1
    Ad, Bd, Cd, Dd = discretize_zoh(TF([K], [1.0, tau]), dt)
    x = np.zeros(Ad.shape[0])
    for _ in range(50):
        x = Ad @ x + Bd[:, 0]
    assert (Cd @ x)[0] == pytest.approx(K * (1 - np.exp(-50 * dt / tau)), rel=1e-12)


def test_zero_denominator_rejected():
    with pytest.raises((ValueError, ZeroDivisionError)):
        TF([1.0], [0.0])
