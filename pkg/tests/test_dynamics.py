import numpy as np
import pytest

from pqntoda import dynamics as D
from pqntoda import flaschka as F
from pqntoda import toda
from pqntoda.diffgeo.fields import ScalarField
from pqntoda.poisson import PoissonStructure
from tests.conftest import model

X0 = np.r_[np.zeros(3), 0.1, -0.2, 0.1]


def free(n):
    return ScalarField(lambda x: sum(x[n + i] * x[n + i] for i in range(n)) * 0.5, 2 * n, "free")


def test_free_particle_is_exact():
    pi = PoissonStructure.canonical(2)
    x0 = np.array([0.0, 1.0, 0.5, -2.0])
    for scheme in D.Scheme:
        tr = D.integrate(pi, free(2), x0, 1.0, 0.125, scheme)
        assert len(tr.times) == 9
        assert np.allclose(tr.states[-1], [0.5, -1.0, 0.5, -2.0], atol=1e-14)


def test_zero_time_gives_single_row():
    tr = D.integrate(PoissonStructure.canonical(2), free(2), np.ones(4), 0.0, 0.1)
    assert tr.times.tolist() == [0.0] and tr.states.shape == (1, 4)


def test_scheme_restrictions():
    P1 = F.build_P1(2)
    y0 = F.flaschka_coords(np.array([0.1, 0.0, 0.2, -0.1]))
    H = ScalarField(lambda y: y[2] + y[3], 4, "sum_b")
    with pytest.raises(D.SchemeError, match="canonical"):
        D.integrate(P1, H, y0, 0.1, 0.01, "leapfrog")
    mixed = ScalarField(lambda x: x[0] * x[2] + x[3] * x[3], 4, "qp")
    with pytest.raises(D.SchemeError, match="separable"):
        D.integrate(PoissonStructure.canonical(2), mixed, np.full(4, 0.3), 0.1, 0.01)
    with pytest.raises(ValueError):
        D.integrate(PoissonStructure.canonical(2), free(2), np.zeros(4), 1.0, 0.0)
    with pytest.raises(ValueError):
        D.integrate(PoissonStructure.canonical(2), free(2), np.zeros(4), -1.0, 0.1)
    with pytest.raises(ValueError):
        D.Scheme("euler")


def test_rk4_and_leapfrog_agree():
    m = model("a1", 3)
    lf = D.integrate(m.pi, m.hamiltonian_closed_form, X0, 1.0, 1e-4, "leapfrog")
    rk = D.integrate(m.pi, m.hamiltonian_closed_form, X0, 1.0, 1e-4, "rk4")
    assert np.max(np.abs(lf.states - rk.states)) < 1e-6


def test_time_reversal():
    m = model("a1", 3)
    H = m.hamiltonian_closed_form
    fwd = D.integrate(m.pi, H, X0, 2.0, 1e-3)
    back = D.integrate(m.pi, H, D.reverse(fwd.states[-1]), 2.0, 1e-3)
    assert np.max(np.abs(D.reverse(back.states[-1]) - X0)) < 1e-7


def test_energy_error_stays_bounded_and_converges():
    m = model("a1", 3)
    H, N = m.hamiltonian_closed_form, m.deformed(+1).N
    drifts = []
    for dt in (2e-2, 1e-2):
        tr = D.integrate(m.pi, H, X0, 10.0, dt)
        e = np.array([H.at(x) for x in tr.states])
        err = np.abs(e - e[0])
        half = len(err) // 2
        assert err.max() <= 2 * err[: half + 1].max()  # no secular growth
        drifts.append(err.max())
        rep = {d.name: d for d in D.conservation_report(tr, N, 6)}
        assert rep["H_2"].max_abs == pytest.approx(err.max(), rel=1e-6, abs=1e-14)
    assert 3.5 < drifts[0] / drifts[1] < 4.5  # second order


def test_chain_conserved_but_open_chain_is_not():
    m = model("a1", 3)
    tr = D.integrate(m.pi, m.hamiltonian_closed_form, X0, 10.0, 1e-2)
    D.monitor(tr, m.deformed(+1).N, 6, prefix="H")
    D.monitor(tr, m.N_open, 2, prefix="Hopen")
    rep = {d.name: d for d in D.conservation_report(tr)}
    assert max(rep[f"H_{k}"].relative for k in range(1, 7)) < 1e-5
    assert rep["Hopen_2"].relative > 1e-3


def test_csv_round_trip(tmp_path):
    m = model("a1", 2)
    tr = D.integrate(m.pi, m.hamiltonian_closed_form, np.array([0.0, 0.0, 0.3, -0.1]), 0.05, 0.01)
    D.monitor(tr, m.deformed(+1).N, 4)
    path = tmp_path / "traj.csv"
    tr.to_csv(path)
    header = path.read_text().splitlines()[0].split(",")
    assert header == ["t", "q_1", "q_2", "p_1", "p_2", "H_1", "H_2", "H_3", "H_4"]
    back = D.Trajectory.read_csv(path)
    assert np.array_equal(back.times, tr.times) and np.array_equal(back.states, tr.states)
    assert all(np.array_equal(back.monitored[k], tr.monitored[k]) for k in tr.monitored)


def test_trajectory_times_must_increase():
    with pytest.raises(ValueError):
        D.Trajectory([0.0, 0.0], np.zeros((2, 2)))


def test_blow_up_keeps_partial_trajectory():
    pi = PoissonStructure.canonical(1)
    # dp/dt = e^q drives q past the exponent guard in finite time
    H = ScalarField(lambda x: x[1] * x[1] * 0.5 - toda.gexp(x[0]), 2, "runaway")
    with pytest.raises(D.BlowUpError) as info:
        D.integrate(pi, H, np.array([0.0, 1.0]), 10.0, 1e-2)
    err = info.value
    assert 0.0 < err.last_time < 10.0
    assert np.all(np.abs(err.trajectory.states[:, 0]) <= toda.EXP_LIMIT)
    with pytest.raises(D.BlowUpError) as info:
        D.integrate(pi, H, np.array([45.0, 0.0]), 1.0, 1e-2)
    assert info.value.last_time == 0.0


def test_p1_flow_conserves_casimir_and_chain():
    n = 3
    P1 = F.build_P1(n)
    H = ScalarField(lambda y: sum(y[n + i] for i in range(n)), 2 * n, "sum_b")
    y0 = F.flaschka_coords(X0)
    tr = D.integrate(P1, H, y0, 1.0, 1e-2, "rk4")
    C = np.array([float(F.casimir(y)) for y in tr.states])
    assert np.max(np.abs(C - C[0])) < 1e-10
    assert np.all(tr.states[:, :n] < 0)
