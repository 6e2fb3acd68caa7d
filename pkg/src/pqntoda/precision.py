"""Working precision for point evaluations.

Trace Hamiltonians of order 2n grow like ``|N|^{2n}``, so absolute
residuals of chain identities at high k hit float64 roundoff long before
any mathematical defect shows.  Evaluating at points lifted to gmpy2
``mpfr`` keeps the same code path (jets carry object arrays) with a
configurable mantissa.
"""

from __future__ import annotations

import contextlib
import enum

import gmpy2
import numpy as np

from .diffgeo.fields import Point, coords_of

DEFAULT_BITS = 128


class Precision(str, enum.Enum):
    DOUBLE = "double"
    EXTENDED = "extended"


@contextlib.contextmanager
def mp_context(bits: int = DEFAULT_BITS):
    with gmpy2.context(gmpy2.get_context(), precision=bits):
        yield


def lift(x, precision: Precision | str = Precision.EXTENDED):
    """Coordinates of ``x`` as float64 or as an object array of ``mpfr``."""
    c = np.asarray(coords_of(x), dtype=float)
    if Precision(precision) is Precision.DOUBLE:
        return c
    return np.array([gmpy2.mpfr(float(v)) for v in c], dtype=object)


def to_float(a) -> np.ndarray:
    return np.asarray(a, dtype=float)


def run(fn, x, precision: Precision | str = Precision.DOUBLE, bits: int = DEFAULT_BITS):
    """Call ``fn(lifted_x)`` under the requested precision."""
    if Precision(precision) is Precision.DOUBLE:
        return fn(lift(x, Precision.DOUBLE))
    with mp_context(bits):
        return fn(lift(x, Precision.EXTENDED))


__all__ = ["Precision", "DEFAULT_BITS", "mp_context", "lift", "to_float", "run", "Point"]
