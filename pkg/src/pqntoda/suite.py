"""Check suites evaluated at sampled points and folded into reports.

A suite is a table of :class:`Check` definitions plus a point evaluator
returning ``{check name: residual}``.  Aggregation takes the worst value over
points (the max for ordinary checks, the min for negative controls).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import flaschka as F
from . import pqn, toda
from .diffgeo.calculus import d_N
from .poisson import koszul_bracket_2forms
from .precision import Precision, run
from .report import CheckRecord


@dataclass(frozen=True)
class Check:
    name: str
    anchor: str
    tol: float
    precision: str = "double"
    negative: bool = False       # pass iff the residual stays above ``tol``
    informational: bool = False  # reported but excluded from the verdict


def sample_points(rng: np.random.Generator, n: int, samples: int, box: float) -> np.ndarray:
    return rng.uniform(-box, box, size=(samples, 2 * n))


def _fold(checks: list[Check], rows: list[dict[str, float]], points: int) -> list[CheckRecord]:
    out = []
    for c in checks:
        vals = [r[c.name] for r in rows if c.name in r]
        if not vals:
            continue
        worst = float(min(vals) if c.negative else max(vals))
        out.append(CheckRecord(c.name, c.anchor, worst, c.tol, c.precision, points=len(vals),
                               negative=c.negative, informational=c.informational))
    return out


def _evaluate(fn, points, workers: int) -> list[dict[str, float]]:
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            return list(ex.map(fn, points))
    return [fn(x) for x in points]


# -- model suite ------------------------------------------------------------------


def model_checks(model: toda.TodaModel, kmax: int, precision: str) -> list[Check]:
    chain_p = Precision(precision).value
    out = [
        Check("open.torsion", "T_N = 0 for the open lattice", 1e-10),
        Check("open.compat", "N pi = pi N^* and the Lie-derivative concomitant vanish", 1e-10),
        Check("omega_omega", "[Omega, Omega]_pi = 0", 1e-10),
    ]
    for tag in ("+", "-"):
        out += [
            Check(f"pqn{tag}.compat", "deformed N stays compatible with pi", 1e-8),
            Check(f"pqn{tag}.d_phi", "d phi = 0", 1e-8),
            Check(f"pqn{tag}.d_iN_phi", "d(i_N phi) = 0", 1e-8),
            Check(f"pqn{tag}.torsion", "T_N(X, Y) = pi#(i_{X^Y} phi)", 1e-8),
            Check(f"phi{tag}.d_N_omega", "phi = +-d_N Omega", 1e-10),
            Check(f"cond_a{tag}", "phi + 2 dH_1 ^ Omega = 0", 1e-10),
            Check(f"cond_b{tag}", f"Omega^flat(Y_k) = 0, k <= {kmax}", 1e-8, chain_p),
            Check(f"cond_b_dual{tag}", "Y_k = pi# sum_l (N^*)^(k-l-2) phi_l", 1e-8, chain_p),
            Check(f"involutivity{tag}", f"{{H_j, H_k}} = 0, j, k <= {kmax}", 1e-8, chain_p),
            Check(f"lm{tag}", "N_other^* dH_k - dH_(k+1) - f_k dH_1 = 0", 1e-8, chain_p),
            Check(f"recadd{tag}", "{H_k,H_j} - {H_(k-1),H_(j+1)} + phi-corrections = 0, j < k <= 6",
                  1e-8, chain_p),
        ]
        if model.family is toda.Family.A1:
            out.append(Check(f"f1{tag}", "f_1 = 0", 1e-12, chain_p))
    if model.family is toda.Family.C1 and model.n == 2:
        out += [
            Check("fixture.pi_prime_list", "bracket list at n = 2 reproduces the explicit pi'", 1e-12),
            Check("fixture.N_open", "pi' pi^-1 reproduces the explicit open N", 1e-12),
            Check("fixture.N_hat", "N + pi# Omega_1^flat reproduces the explicit deformed N", 1e-12),
        ]
    return out


def _maxabs(a) -> float:
    return float(np.max(np.abs(np.asarray(a, dtype=float))))


def model_point(model: toda.TodaModel, x: np.ndarray, kmax: int, precision: str) -> dict[str, float]:
    r: dict[str, float] = {}
    xj = pqn.J.seed(x, 1)
    A, N = model.pi.matrix(xj), model.N_open(xj)
    r1, r2 = pqn.compat_residuals(A, N)
    r["open.torsion"] = _maxabs(pqn.J.value(pqn.torsion(N)))
    r["open.compat"] = max(_maxabs(pqn.J.value(r1)), _maxabs(pqn.J.value(r2)))
    r["omega_omega"] = _maxabs(koszul_bracket_2forms(model.pi, model.Omega, model.Omega, x))
    dNW = d_N(model.N_open, model.Omega, x)
    structures = {s: model.deformed(s) for s in (1, -1)}
    for s, S in structures.items():
        tag = "+" if s > 0 else "-"
        ax = pqn.pqn_axiom_residuals(S, x)
        r[f"pqn{tag}.compat"] = max(ax["compat_matrix"], ax["compat_lie"])
        r[f"pqn{tag}.d_phi"] = ax["d_phi"]
        r[f"pqn{tag}.d_iN_phi"] = ax["d_iN_phi"]
        r[f"pqn{tag}.torsion"] = ax["torsion_identity"]
        r[f"phi{tag}.d_N_omega"] = _maxabs(S.phi.at(x) - s * dNW)
        r[f"cond_a{tag}"] = pqn.check_condition_a(S, model.condition_a_form(s), x)
        other = structures[-s].N

        def chain(y, S=S, s=s, other=other):
            cv = pqn.chain_values(S, kmax, y, model.Omega, s)
            cb = cv.condition_b(model.Omega.at(y))
            No = other.at(y)
            lm = max(_maxabs(cv.lm_residual(No, k)) for k in range(1, kmax))
            rec = max(abs(float(cv.recadd(k, j))) for k in range(2, min(6, kmax) + 1) for j in range(1, k))
            return cb.strong, float(cb.dual_route), _maxabs(cv.involutivity()), lm, rec, abs(float(cv.f[0]))

        b, bd, inv, lm, rec, f1 = run(chain, x, precision)
        r[f"cond_b{tag}"], r[f"cond_b_dual{tag}"], r[f"involutivity{tag}"] = b, bd, inv
        r[f"lm{tag}"], r[f"recadd{tag}"] = lm, rec
        if model.family is toda.Family.A1:
            r[f"f1{tag}"] = f1
    if model.family is toda.Family.C1 and model.n == 2:
        r.update(c2_fixture_residuals(model, x))
    return r


def c2_fixture_residuals(model: toda.TodaModel, x: np.ndarray) -> dict[str, float]:
    pp, No, Nh = toda.c2_fixture_matrices()
    listed = toda.bracket_matrix(2, toda.cn_brackets(2, 2, x), like=x)
    return {
        "fixture.pi_prime_list": _maxabs(listed - pp.at(x)),
        "fixture.N_open": _maxabs(model.N_open.at(x) - No.at(x)),
        "fixture.N_hat": _maxabs(model.deformed(+1).N.at(x) - Nh.at(x)),
    }


def run_model_suite(model: toda.TodaModel, points: np.ndarray, kmax: int | None = None,
                    precision: str = "extended", workers: int = 1) -> list[CheckRecord]:
    kmax = kmax or model.default_kmax()
    if kmax < 2:
        raise ValueError("kmax must be >= 2")
    rows = _evaluate(lambda x: model_point(model, x, kmax, precision), points, workers)
    return _fold(model_checks(model, kmax, precision), rows, len(points))


# -- Flaschka suite ---------------------------------------------------------------


def flaschka_checks(n: int, precision: str) -> list[Check]:
    p = Precision(precision).value
    out = [
        Check("F_star.formula_vs_jet", "block formula for F_* equals the Jacobian of F", 1e-12),
        Check("F_star.rank_defect", "rank A = n - 1", 0.0),
        Check("F_X1", "F_* X_1 = 0", 0.0),
        Check("P0.f_related", "P_0 = F_* pi F^*", 1e-10),
        Check("P1.f_related", "P_1 = F_* pi_N- F^*", 1e-10),
        Check("P1.vs_piN_plus", "negative control: pi_N+ is not F-related to P_1", 0.1, negative=True),
        Check("aea.routes", "A(-eps)A^T, cyclic closed form and At agree", 1e-12),
        Check("pi_N-.block", "upper-left block of pi_N- equals -eps", 0.0),
        Check("casimir.P0", "P_0# dC = 0", 1e-10),
        Check("casimir.P1", "P_1# dC = 0", 1e-10),
        Check("jacobi.P0P0", "[P_0, P_0] = 0", 1e-10),
        Check("jacobi.P1P1", "[P_1, P_1] = 0", 1e-10),
        Check("jacobi.P0P1", "[P_0, P_1] = 0", 1e-10),
        Check("schouten.pi_piN", "[pi, pi_N-] = 0", 1e-8),
        Check("schouten.piN_piN", "[pi_N-, pi_N-] = 4 X_1 ^ pi#Omega", 1e-8),
        Check("schouten.pushed", "F_* [pi_N-, pi_N-] = 0", 1e-8),
        Check("chain.physical", "pi_N-# dH_k = pi# dH_(k+1) + f_k X_1", 1e-8, p),
        Check("chain.reduced", "P_1# dH~_k = P_0# dH~_(k+1)", 1e-8, p),
        Check("chain.X1_H", "X_1(H_k) = 0", 1e-10, p),
        Check("chain.P0_dH1", "P_0# dH~_1 = 0", 1e-12, p),
        Check("section.gap", "H_k agrees on x and on the q_n = 0 preimage", 1e-12, p),
        Check("eps_identity", "2eps(k-l) - eps(k-l-1) - eps(k-l+1) = delta_(k,l+1) - delta_(k,l-1)", 0.0),
        Check("literal.eps_identity_periodic", "same identity read with mod-n deltas", 0.0,
              informational=True),
        Check("literal.aea", "A eps A^T = At with eps_kj = eps(j-k)", 1e-12, informational=True),
        Check("literal.conto1", "(A eps A^T)_lk = a_l a_k (2eps(k-l) - eps(k-l-1) - eps(k-l+1))", 1e-12,
              informational=True),
    ]
    if n == 4:
        out += [Check(f"display.{k}", f"builder reproduces the 4-particle {k} matrix", 1e-12)
                for k in ("N", "N_minus", "pi_N_minus", "P0", "P1", "F_star")]
    return out


def flaschka_point(model: toda.TodaModel, x: np.ndarray, precision: str) -> dict[str, float]:
    n = model.n
    y = np.asarray(F.flaschka_coords(x), float)
    P0, P1 = F.build_P0(n).bivector, F.build_P1(n).bivector
    Fs = F.pushforward_formula(x)
    r = {
        "F_star.formula_vs_jet": _maxabs(Fs - F.pushforward_jet(x)),
        "F_star.rank_defect": float(abs(np.linalg.matrix_rank(Fs[:n, :n]) - (n - 1))),
        "P0.f_related": F.check_f_related(model.pi.bivector, P0, x),
        "P1.f_related": F.check_f_related(F.pi_N_minus(model), P1, x),
        "P1.vs_piN_plus": F.check_f_related(F.pi_N_plus(model), P1, x),
    }
    aea = F.aea_identity(y[:n])
    r["aea.routes"] = aea.routes
    r["literal.aea"] = aea.literal_product
    r["literal.conto1"] = aea.literal_closed_form
    r["pi_N-.block"] = F.epsilon_block_residual(model, x)[0]
    r["casimir.P0"], r["casimir.P1"] = F.casimir_residuals(y)
    for k, v in F.jacobi_residuals(y).items():
        r[f"jacobi.{k}"] = v
    sc = F.schouten_checks(model, x)
    r["schouten.pi_piN"], r["schouten.piN_piN"] = sc.pi_piN, sc.piN_piN_vs_X1
    r["schouten.pushed"], r["F_X1"] = sc.pushed, sc.F_X1
    rc = F.reduced_chain_residual(model, 2 * n, x, precision)
    r["chain.physical"], r["chain.reduced"] = float(rc.physical.max()), float(rc.reduced.max())
    r["chain.X1_H"], r["chain.P0_dH1"], r["section.gap"] = float(rc.x1_H.max()), rc.p0_dH1, rc.section_gap
    if n == 4:
        r.update({f"display.{k}": v for k, v in F.n4_display_residuals(model, x).items()})
    return r


def run_flaschka_suite(n: int, points: np.ndarray, precision: str = "extended",
                       workers: int = 1) -> list[CheckRecord]:
    model = toda.build_model("a1", n)
    rows = _evaluate(lambda x: flaschka_point(model, x, precision), points, workers)
    rows.append({
        "eps_identity": float(len(F.epsilon_identity_failures(n, periodic=False))),
        "literal.eps_identity_periodic": float(len(F.epsilon_identity_failures(n, periodic=True))),
    })
    return _fold(flaschka_checks(n, precision), rows, len(points))
