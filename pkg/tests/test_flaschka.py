import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pqntoda import flaschka as F
from pqntoda.diffgeo import jet as J
from pqntoda.diffgeo.fields import Chart, Point
from pqntoda.poisson import PoissonStructure
from tests.conftest import model, points

NS = range(2, 9)


def test_symmetric_point_maps_to_minus_ones():
    x = Point.physical(np.zeros(4), [0.3, -1.0, 2.0, 0.5])
    y = F.flaschka_map(x)
    assert y.chart is Chart.FLASCHKA
    assert np.array_equal(y.first, -np.ones(4))
    assert np.array_equal(y.second, [0.3, -1.0, 2.0, 0.5])
    assert float(F.casimir(y.coords)) == 1.0


def test_single_displaced_particle():
    y = F.flaschka_map(Point.physical([1.0, 0.0, 0.0, 0.0], np.zeros(4)))
    assert np.allclose(y.first, [-np.e, -1.0, -1.0, -np.exp(-1.0)], rtol=0, atol=1e-15)


def test_map_rejects_flaschka_input():
    with pytest.raises(ValueError):
        F.flaschka_map(Point.flaschka([-1.0, -1.0], [0.0, 0.0]))


@given(st.integers(2, 6), st.floats(-3, 3), st.integers(0, 10**6))
def test_common_shift_is_invisible(n, shift, seed):
    x = points(n, 1, seed=seed)[0]
    moved = x.copy()
    moved[:n] += shift
    assert np.allclose(F.flaschka_coords(x), F.flaschka_coords(moved), rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("n", NS)
def test_pushforward_formula_and_rank(n):
    for x in points(n, 3, seed=n):
        Fs = F.pushforward_formula(x)
        assert np.max(np.abs(Fs - F.pushforward_jet(x))) < 1e-12
        assert np.linalg.matrix_rank(Fs[:n, :n]) == n - 1
        assert np.max(np.abs(Fs @ np.r_[np.ones(n), np.zeros(n)])) < 1e-15


@pytest.mark.parametrize("n", NS)
def test_section_is_a_right_inverse(n):
    for x in points(n, 3, seed=10 + n):
        y = F.flaschka_coords(x)
        s = F.section(y)
        assert s[n - 1] == 0.0
        assert np.allclose(F.flaschka_coords(s), y, rtol=1e-13)
        # the section differs from x by a common translation of the q's
        assert np.allclose(x[:n] - s[:n], x[n - 1], atol=1e-13)
        assert np.isclose(F.casimir(y), (-1.0) ** n)


def test_literal_entries_of_P0_and_P1():
    a, b = np.array([-1.5, -0.5, -2.0, -0.7]), np.array([0.2, -0.4, 1.1, 0.3])
    y = np.r_[a, b]
    P0, P1 = F.P0_matrix(y), F.P1_matrix(y)
    assert P0[0, 4] == a[0] and P0[0, 5] == -a[0]
    assert P1[0, 1] == pytest.approx(-a[0] * a[1])
    assert P1[0, 3] == pytest.approx(a[0] * a[3])
    assert P1[4, 5] == pytest.approx(a[0])


@pytest.mark.parametrize("n", NS)
def test_pairs_are_f_related(n):
    m = model("a1", n)
    for x in points(n, 3, seed=20 + n):
        assert F.check_f_related(m.pi.bivector, F.build_P0(n).bivector, x) < 1e-12
        assert F.check_f_related(F.pi_N_minus(m), F.build_P1(n).bivector, x) < 1e-10
        # negative control: the other deformation flips the corner terms
        assert F.check_f_related(F.pi_N_plus(m), F.build_P1(n).bivector, x) > 0.1


@pytest.mark.parametrize("n", NS)
def test_casimir_and_jacobi(n):
    for x in points(n, 3, seed=30 + n):
        y = F.flaschka_coords(x)
        assert max(F.casimir_residuals(y)) < 1e-10
        assert max(F.jacobi_residuals(y).values()) < 1e-10


def test_generic_bivector_on_the_chart_fails_jacobi():
    # negative control for the Jacobi check: scale one corner of P_1
    def skewed(y):
        t = y[1] * y[2]
        return F.P1_matrix(y) + J.assemble((8, 8), [((0, 7), t), ((7, 0), t * -1.0)], like=y)

    from pqntoda.diffgeo.fields import BivectorField

    P = PoissonStructure(BivectorField(skewed, 8, "skewed"))
    y = F.flaschka_coords(points(4, 1, seed=3)[0])
    assert P.jacobi_residual(y) > 1e-3


def test_exhaustive_epsilon_identity_n4():
    table = F.epsilon_identity_table(4, periodic=False)
    assert len(table) == 16
    assert all(lhs == rhs for _, _, lhs, rhs in table)
    # with the cyclic delta only the two wrap-around entries disagree
    assert F.epsilon_identity_failures(4, periodic=True) == [(0, 3), (3, 0)]


@pytest.mark.parametrize("n", NS)
def test_epsilon_identity_ordinary_delta(n):
    assert F.epsilon_identity_failures(n, periodic=False) == []
    assert len(F.epsilon_identity_failures(n, periodic=True)) == 2


@pytest.mark.parametrize("n", NS)
def test_block_identity_routes(n):
    rng = np.random.default_rng(n)
    for _ in range(5):
        a = -np.exp(rng.uniform(-1, 1, n))
        rep = F.aea_identity(a)
        assert rep.routes < 1e-12
    x = points(n, 1, seed=n)[0]
    minus, plus = F.epsilon_block_residual(model("a1", n), x)
    assert minus == 0.0 and plus > 0.5


def test_literal_block_identity_holds_only_for_two_particles():
    rng = np.random.default_rng(0)
    for n in NS:
        a = -np.exp(rng.uniform(-1, 1, n))
        lit = F.aea_identity(a).literal_product
        assert (lit < 1e-12) == (n == 2)


def test_wrap_symbol_is_cyclic_delta_difference():
    for n in NS:
        for l in range(n):
            for k in range(n):
                assert F.wrap_symbol(n, l, k) == F.pdelta(n, k, l - 1) - F.pdelta(n, k, l + 1)


@pytest.mark.parametrize("n", [2, 3, 5])
def test_schouten_identities(n):
    m = model("a1", n)
    for x in points(n, 2, seed=40 + n):
        r = F.schouten_checks(m, x)
        assert r.pi_piN < 1e-10 and r.piN_piN_vs_X1 < 1e-8
        assert r.pushed < 1e-8 and r.F_X1 == 0.0


@pytest.mark.parametrize("n", [2, 3, 4])
def test_reduced_chain(n):
    m = model("a1", n)
    x = points(n, 1, seed=50 + n)[0]
    r = F.reduced_chain_residual(m, 2 * n, x, precision="extended")
    assert np.max(r.physical) < 1e-8 and np.max(r.reduced) < 1e-8
    assert np.max(r.x1_H) < 1e-10 and r.p0_dH1 < 1e-12 and r.section_gap < 1e-12


def test_four_particle_displays():
    m = model("a1", 4)
    for x in points(4, 5, seed=60):
        assert max(F.n4_display_residuals(m, x).values()) < 1e-12


def test_guards():
    with pytest.raises(ValueError):
        F.build_P0(1)
    with pytest.raises(ValueError):
        F.FlaschkaData(1)
    with pytest.raises(ValueError):
        F.aea_identity(np.array([-1.0]))
    with pytest.raises(ValueError):
        F.schouten_checks(model("c1", 2), np.zeros(4))
    with pytest.raises(ValueError):
        F.n4_display_residuals(model("a1", 3), np.zeros(6))
    d = F.FlaschkaData(3)
    assert np.array_equal(d.epsilon_matrix, [[0, 1, 1], [-1, 0, 1], [-1, -1, 0]])
