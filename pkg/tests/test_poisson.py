import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pqntoda.diffgeo import jet as J
from pqntoda.diffgeo.calculus import central_difference, d_field, lie_bracket, wedge
from pqntoda.diffgeo.fields import BivectorField, FormField, ScalarField, VectorField
from pqntoda.poisson import (
    PoissonStructure,
    components,
    hamiltonian_vector_field,
    koszul1,
    koszul_bracket,
    koszul_bracket_1forms,
    koszul_bracket_2forms,
    poisson_bracket,
    schouten_bracket_bivectors,
    sharp,
)

pts3 = arrays(float, 3, elements=st.floats(-1.0, 1.0))


def _bivector3(pairs):
    """Stored matrix from ``{(i, j): pi^{ij}}`` on R^3."""
    def fn(x):
        vals = pairs(x)
        ent = [((j, i), v) for (i, j), v in vals.items()] + [((i, j), v * -1.0) for (i, j), v in vals.items()]
        return J.assemble((3, 3), ent, like=x)
    return fn


# Lie-Poisson structure of so(3)^*: {x_i, x_j} = eps_ijk x_k
lie_poisson = PoissonStructure(BivectorField(
    _bivector3(lambda x: {(0, 1): x[2], (1, 2): x[0], (2, 0): x[1]}), 3, "so3"))
# v . curl v != 0 for v = (-x_1, x_0, 1): not Poisson
twisted = PoissonStructure(BivectorField(
    _bivector3(lambda x: {(0, 1): x[2] * 0.0 + 1.0, (1, 2): x[1] * -1.0, (2, 0): x[0] + 0.0}), 3, "twisted"))

a = FormField(lambda x: J.stack([x[1] * x[2], J.exp(x[0]), x[0] * x[1]]), 3, "a")
b = FormField(lambda x: J.stack([x[2] + 0.0, x[0] * x[0], J.exp(x[1] * x[2])]), 3, "b")
f = ScalarField(lambda x: x[0] * x[1] + J.exp(x[2]), 3, "f")
g = ScalarField(lambda x: x[2] * x[2] * x[0] - x[1], 3, "g")


def jacobiator(pi, x):
    """``{x_i, {x_j, x_k}} + cyclic`` by finite differences of the components."""
    P = components(pi.bivector.at(x))
    G = central_difference(lambda y: components(pi.bivector.at(y)), x)  # G[j, k, l]
    t = np.einsum("il,jkl->ijk", P, G)
    return t + np.einsum("jki->ijk", t) + np.einsum("kij->ijk", t)


@given(pts3)
def test_schouten_square_is_twice_the_jacobiator(x):
    for pi in (lie_poisson, twisted):
        P = pi.bivector
        assert np.allclose(schouten_bracket_bivectors(P, P, x), 2 * jacobiator(pi, x), atol=1e-7)


def test_jacobi_residuals():
    x = np.array([0.2, -0.4, 0.9])
    assert lie_poisson.jacobi_residual(x) == 0.0
    assert PoissonStructure.canonical(3).jacobi_residual(np.zeros(6)) == 0.0
    # negative control: the twisted bivector fails Jacobi by an O(1) amount
    assert twisted.jacobi_residual(x) > 1.0


def test_canonical_bracket_and_hamiltonian_vector_field():
    n = 2
    pi = PoissonStructure.canonical(n)
    q1 = ScalarField(lambda x: x[0] + 0.0, 4, "q1")
    p1 = ScalarField(lambda x: x[2] + 0.0, 4, "p1")
    x = np.array([0.1, 0.2, 0.3, 0.4])
    assert poisson_bracket(pi, q1, p1, x) == 1.0
    assert poisson_bracket(pi, p1, q1, x) == -1.0
    H = ScalarField(lambda y: (y[2] * y[2] + y[3] * y[3]) * 0.5 + J.exp(y[0] - y[1]), 4, "H")
    grad = central_difference(H.at, x)
    assert np.allclose(hamiltonian_vector_field(pi, H).at(x), np.concatenate([grad[2:], -grad[:2]]), atol=1e-8)


@given(pts3)
def test_bracket_is_antisymmetric_and_leibniz(x):
    fg = ScalarField(lambda y: f(y) * g(y), 3, "fg")
    assert np.isclose(poisson_bracket(lie_poisson, f, g, x), -poisson_bracket(lie_poisson, g, f, x))
    h = ScalarField(lambda y: J.exp(y[0] * y[1]), 3, "h")
    lhs = poisson_bracket(lie_poisson, h, fg, x)
    rhs = f.at(x) * poisson_bracket(lie_poisson, h, g, x) + g.at(x) * poisson_bracket(lie_poisson, h, f, x)
    assert np.isclose(lhs, rhs, atol=1e-12)


@given(pts3)
def test_koszul_on_exact_forms(x):
    df = FormField(lambda y: J.D(f(y), 3), 3, "df", 1)
    dg = FormField(lambda y: J.D(g(y), 3), 3, "dg", 1)
    fg = ScalarField(lambda y: J.einsum("i,i->", J.D(f(y), 3), sharp(lie_poisson.matrix(y), J.D(g(y), 3))),
                     3, "{f,g}", 1)
    d_fg = central_difference(fg.at, x)
    assert np.allclose(koszul_bracket_1forms(lie_poisson, df, dg, x), -d_fg, atol=1e-7)


@given(pts3)
def test_sharp_is_a_lie_algebra_morphism(x):
    A = lie_poisson.bivector.at(x)
    X = VectorField(lambda y: sharp(lie_poisson.matrix(y), a(y)), 3, "X")
    Y = VectorField(lambda y: sharp(lie_poisson.matrix(y), b(y)), 3, "Y")
    assert np.allclose(A @ koszul_bracket_1forms(lie_poisson, a, b, x), lie_bracket(X, Y, x), atol=1e-12)


@given(pts3)
def test_koszul_function_linearity(x):
    # [a, h b] = h [a, b] + (pi# a)(h) b
    h = ScalarField(lambda y: J.exp(y[0]) * y[2], 3, "h")
    hb = FormField(lambda y: b(y) * h(y), 3, "hb")
    lhs = koszul_bracket_1forms(lie_poisson, a, hb, x)
    Xa = lie_poisson.bivector.at(x) @ a.at(x)
    rhs = h.at(x) * koszul_bracket_1forms(lie_poisson, a, b, x) + (central_difference(h.at, x) @ Xa) * b.at(x)
    assert np.allclose(lhs, rhs, atol=1e-7)


@given(pts3)
def test_graded_symmetries_and_d_derivation(x):
    da, db = d_field(a), d_field(b)
    # [a, b] = -[b, a];  [a, W] = -[W, a];  [W1, W2] = [W2, W1]
    assert np.allclose(koszul_bracket_1forms(lie_poisson, a, b, x), -koszul_bracket_1forms(lie_poisson, b, a, x))
    assert np.allclose(koszul_bracket(lie_poisson, a, db, x), -koszul_bracket(lie_poisson, db, a, x))
    assert np.allclose(koszul_bracket_2forms(lie_poisson, da, db, x), koszul_bracket_2forms(lie_poisson, db, da, x))
    # d [a, b] = [da, b] + [a, db]
    k = FormField(lambda y: koszul1(lie_poisson.matrix(y), a(y), b(y)), 3, "[a,b]", 1)
    lhs = d_field(k).at(x)
    rhs = koszul_bracket(lie_poisson, da, b, x) + koszul_bracket(lie_poisson, a, db, x)
    assert np.allclose(lhs, rhs, atol=1e-12)


@given(pts3)
def test_koszul_derivation_over_wedge(x):
    # [a, b ^ c] = [a, b] ^ c + b ^ [a, c]
    c = FormField(lambda y: J.stack([y[0] * y[0], y[1] + y[2], J.exp(y[0] * 0.3)]), 3, "c")
    bc = FormField(lambda y: wedge(b(y), c(y)), 3, "b^c", degree=2)
    lhs = koszul_bracket(lie_poisson, a, bc, x)
    rhs = (wedge(koszul_bracket_1forms(lie_poisson, a, b, x), c.at(x))
           + wedge(b.at(x), koszul_bracket_1forms(lie_poisson, a, c, x)))
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_mismatched_dimensions_raise():
    with pytest.raises(ValueError):
        poisson_bracket(lie_poisson, f, ScalarField(lambda y: y[0], 4), np.zeros(3))
