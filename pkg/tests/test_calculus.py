import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pqntoda.diffgeo import jet as J
from pqntoda.diffgeo.calculus import (
    central_difference,
    d_field,
    d_N,
    exterior_derivative,
    i_N,
    interior,
    lie_bracket,
    lie_derivative_tensor11,
    wedge,
)
from pqntoda.diffgeo.fields import (
    Chart,
    DimensionError,
    FormField,
    Point,
    ScalarField,
    Tensor11Field,
    VectorField,
)
from pqntoda.pqn import nijenhuis_torsion, nijenhuis_torsion_lie

D = 4
coords = arrays(float, D, elements=st.floats(-1.0, 1.0))


def X_fn(x):
    return J.stack([x[1] * x[2], J.exp(x[0] * 0.5), x[0] - x[3] * x[3], x[1] * x[0]])


def Y_fn(x):
    return J.stack([x[3] + 0.0, x[0] * x[2], J.exp(x[1] - x[3]), x[2] * x[2]])


def N_fn(x):
    rows = [[x[0] * x[1], x[2] + 0.0, 1.0, x[3] * x[3]],
            [J.exp(x[2]), x[0] + 0.0, x[1] * x[3], 0.0],
            [x[3] + 0.0, x[1] * x[1], x[2] * x[0], 2.0],
            [0.5, x[0] - x[1], J.exp(x[3] * 0.3), x[2] + 0.0]]
    entries = [((i, j), v) for i, r in enumerate(rows) for j, v in enumerate(r)]
    return J.assemble((D, D), entries, like=x)


def a_fn(x):
    return J.stack([x[1] * x[1] * x[2], J.exp(x[0] - x[3]), x[0] * x[3], x[1] + x[2] * x[0]])


def w_fn(x):
    e = {(0, 1): x[2] * x[3], (0, 2): J.exp(x[1]), (0, 3): x[0] * x[1] * x[2],
         (1, 2): x[3] * x[3], (1, 3): x[0] + x[2], (2, 3): J.exp(x[0] * x[1])}
    entries = [(k, v) for k, v in e.items()] + [((j, i), v * -1.0) for (i, j), v in e.items()]
    return J.assemble((D, D), entries, like=x)


X = VectorField(X_fn, D, "X")
Y = VectorField(Y_fn, D, "Y")
N = Tensor11Field(N_fn, D, "N")
alpha = FormField(a_fn, D, "alpha", degree=1)
omega = FormField(w_fn, D, "omega", degree=2)
f = ScalarField(lambda x: J.exp(x[0] * x[1]) + x[2] * x[3] * x[3], D, "f")


def fd_bracket(U, V, x):
    """``[U, V]`` with finite-difference Jacobians."""
    return central_difference(V.at, x) @ U.at(x) - central_difference(U.at, x) @ V.at(x)


@given(coords)
def test_lie_bracket_matches_finite_differences(x):
    assert np.allclose(lie_bracket(X, Y, x), fd_bracket(X, Y, x), atol=1e-7)


@given(coords)
def test_exterior_derivative_matches_finite_differences(x):
    G = central_difference(alpha.at, x)  # G[j, i] = d_i a_j
    assert np.allclose(exterior_derivative(alpha, x), G.T - G, atol=1e-7)
    H = central_difference(omega.at, x)  # H[j, k, i] = d_i w_jk
    dw = (np.einsum("jki->ijk", H) - np.einsum("ikj->ijk", H) + H)
    assert np.allclose(exterior_derivative(omega, x), dw, atol=1e-7)


@given(coords)
def test_d_squared_vanishes(x):
    f0 = FormField(f.fn, D, "f", degree=0)
    assert np.max(np.abs(d_field(d_field(f0)).at(x))) < 1e-12
    assert np.max(np.abs(d_field(d_field(alpha)).at(x))) < 1e-12


@given(coords)
def test_d_N_on_functions_is_transposed_differential(x):
    f0 = FormField(f.fn, D, "f", degree=0)
    grad = central_difference(f.at, x)
    assert np.allclose(d_N(N, f0, x), N.at(x).T @ grad, atol=1e-7)


@given(coords)
def test_d_N_on_one_forms_matches_coordinate_formula(x):
    # (d_N a)_{ab} = N^m_a d_m a_b - N^m_b d_m a_a - a_m (d_a N^m_b - d_b N^m_a)
    # t2[a, b] = a_m d_b N^m_a
    Nx, a = N.at(x), alpha.at(x)
    Ga = central_difference(alpha.at, x)          # Ga[b, m] = d_m a_b
    GN = central_difference(N.at, x)              # GN[m, b, a] = d_a N^m_b
    t1 = np.einsum("ma,bm->ab", Nx, Ga)
    t2 = np.einsum("mab,m->ab", GN, a)
    oracle = t1 - t1.T + (t2 - t2.T)
    assert np.allclose(d_N(N, alpha, x), oracle, atol=1e-6)


@given(coords)
def test_torsion_routes_agree_with_finite_differences(x):
    NX = VectorField(lambda z: J.einsum("ij,j->i", N(z), X(z)), D, "NX")
    NY = VectorField(lambda z: J.einsum("ij,j->i", N(z), Y(z)), D, "NY")
    Nx = N.at(x)
    oracle = fd_bracket(NX, NY, x) - Nx @ (fd_bracket(NX, Y, x) + fd_bracket(X, NY, x)
                                            - Nx @ fd_bracket(X, Y, x))
    scale = max(1.0, np.max(np.abs(oracle)))
    assert np.allclose(nijenhuis_torsion(N, X, Y, x), oracle, atol=1e-6 * scale)
    assert np.allclose(nijenhuis_torsion_lie(N, X, Y, x), oracle, atol=1e-6 * scale)


def test_constant_tensor_has_no_torsion():
    M = np.arange(16.0).reshape(4, 4)
    Nc = Tensor11Field(lambda z: J.const_like(M, z) if J.is_jet(z) else M, D, "const")
    x = np.linspace(-0.5, 0.5, D)
    assert np.max(np.abs(nijenhuis_torsion(Nc, X, Y, x))) < 1e-12


@given(coords)
def test_lie_derivative_of_tensor(x):
    # (L_X N) e_j = [X, N e_j] - N [X, e_j],  [X, e_j] = -d_j X
    GN = central_difference(N.at, x)   # GN[i, j, k] = d_k N^i_j
    GX = central_difference(X.at, x)   # GX[i, k] = d_k X^i
    Nx = N.at(x)
    oracle = np.einsum("ijk,k->ij", GN, X.at(x)) - GX @ Nx + Nx @ GX
    assert np.allclose(lie_derivative_tensor11(X, N, x), oracle, atol=1e-6)


vecs = arrays(float, 3, elements=st.floats(-2.0, 2.0))


@given(vecs, vecs, vecs)
def test_wedge_is_antisymmetric_and_interior_is_a_derivation(a, b, v):
    ab = wedge(a, b)
    assert np.allclose(ab, -wedge(b, a))
    assert np.allclose(interior(v, ab), (a @ v) * b - (b @ v) * a)


def test_wedge_uses_determinant_convention():
    e = np.eye(3)
    top = wedge(e[0], wedge(e[1], e[2]))
    assert top[0, 1, 2] == 1.0 and top[1, 0, 2] == -1.0
    M = np.array([[1.0, 2.0, 0.5], [0.0, -1.0, 3.0], [2.0, 1.0, 1.0]])
    vol = wedge(M[0], wedge(M[1], M[2]))
    assert np.isclose(vol[0, 1, 2], np.linalg.det(M))
    assert np.allclose(wedge(wedge(M[0], M[1]), M[2]), vol)


@given(arrays(float, (4, 4), elements=st.floats(-2, 2)), vecs.map(lambda v: np.append(v, 1.0)),
       vecs.map(lambda v: np.append(v, -0.5)))
def test_i_N_on_two_forms(Nm, u, v):
    W = Nm - Nm.T
    M = np.arange(16.0).reshape(4, 4) / 7
    lhs = u @ i_N(M, W) @ v
    assert np.isclose(lhs, (M @ u) @ W @ v + u @ W @ (M @ v))


def test_dimension_and_depth_guards():
    with pytest.raises(DimensionError):
        X.at(np.zeros(6))
    with pytest.raises(DimensionError):
        lie_bracket(X, VectorField(lambda z: z, 6), np.zeros(4))
    dda = d_field(d_field(alpha))
    with pytest.raises(ValueError, match="jets stop"):
        dda.jet(np.zeros(D), 1)
    three = FormField(lambda z: J.const_like(np.zeros((D,) * 3), z), D, "zero3", degree=3)
    with pytest.raises(ValueError):
        d_N(N, three, np.zeros(D))
    bad = VectorField(lambda z: J.stack([z[0], z[1]]), D, "short")
    with pytest.raises(DimensionError):
        bad.at(np.zeros(D))


def test_points_validate_shape_and_chart():
    with pytest.raises(DimensionError):
        Point(np.zeros(3))
    with pytest.raises(ValueError):
        Point.flaschka([-1.0, 0.0], [0.0, 0.0])
    p = Point.flaschka([-1.0, -2.0], [0.5, 0.0])
    assert p.chart is Chart.FLASCHKA and p.n == 2
    assert np.array_equal(p.second, [0.5, 0.0])
    assert Point([1, 2]).coords.dtype == float
