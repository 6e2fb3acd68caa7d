import gmpy2
import numpy as np
import pytest

from pqntoda.pqn import chain_values
from pqntoda.precision import Precision, lift, mp_context, run, to_float
from tests.conftest import model, points


def test_lift_and_back():
    x = np.array([0.1, -2.5])
    assert lift(x, "double").dtype == float
    hi = lift(x)
    assert hi.dtype == object and all(isinstance(v, type(gmpy2.mpfr(1))) for v in hi)
    assert np.array_equal(to_float(hi), x)
    with pytest.raises(ValueError):
        Precision("quad")


def test_context_sets_mantissa():
    with mp_context(200):
        assert gmpy2.get_context().precision == 200
        third = gmpy2.mpfr(1) / 3
    assert third.precision == 200
    assert gmpy2.get_context().precision == 53


def _worst_involutivity(c, m, K):
    cv = chain_values(m.deformed(+1), K, c)
    return float(np.max(np.abs(cv.involutivity())))


def test_extended_precision_removes_roundoff_at_long_chains():
    n = 6
    m = model("a1", n)
    x = points(n, 1, seed=1, box=1.0)[0]
    lo = run(lambda c: _worst_involutivity(c, m, 2 * n), x, "double")
    hi = run(lambda c: _worst_involutivity(c, m, 2 * n), x, "extended")
    assert hi < 1e-20
    assert lo > 1e3 * hi  # double precision is visibly roundoff-limited
