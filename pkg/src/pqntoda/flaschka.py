"""Flaschka reduction of the closed A_n^(1) Toda lattice.

Physical chart ``(q, p)`` maps to ``(a, b)`` with ``a_i = -exp(q_i - q_{i+1})``
(indices mod n) and ``b = p``.  All bivector matrices here are the matrices
of the sharp map (the same layout as :meth:`PoissonStructure.matrix`), so
F-relatedness reads ``F_* M F_*^T``.

Block names follow the usual decomposition

    F_* = [[A, 0], [0, I]],   pi_{N_-} = [[eps, D], [-D, E]],
    P_0 = [[0, A], [-A^T, 0]],   P_1 = [[At, B], [-B^T, C]].
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .diffgeo import jet as J
from .diffgeo.fields import BivectorField, Chart, Point, ScalarField, coords_of
from .poisson import PoissonStructure, components, schouten
from .pqn import chain_values
from .toda import Family, TodaModel, gexp


def eps(l: int) -> int:
    return (l > 0) - (l < 0)


def pdelta(n: int, k: int, j: int) -> int:
    """Periodic Kronecker delta: 1 when ``k = j`` mod n."""
    return int((k - j) % n == 0)


def _check_n(n: int) -> None:
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise ValueError(f"the Flaschka reduction needs n >= 2, got {n}")


# -- the map and its tangent ------------------------------------------------------


def flaschka_coords(x, n: int | None = None):
    """``(a, b)`` from ``(q, p)``; accepts plain, mpfr or jet coordinates."""
    n = n or len(J.value(x)) // 2
    a = [gexp(x[i] - x[(i + 1) % n]) * -1.0 for i in range(n)]
    b = [x[n + i] for i in range(n)]
    return J.stack(a + b)


def flaschka_map(x) -> Point:
    c = coords_of(x)
    if isinstance(x, Point) and x.chart is not Chart.PHYSICAL:
        raise ValueError("flaschka_map expects a point in the physical chart")
    return Point(np.asarray(flaschka_coords(np.asarray(c, float)), float), Chart.FLASCHKA)


def section(y, n: int | None = None):
    """Preimage of ``(a, b)`` with ``q_n = 0``: ``q_i = q_{i+1} + log(-a_i)``."""
    n = n or len(J.value(y)) // 2
    q = [None] * n
    q[n - 1] = J.const_like(np.zeros(()), y[0]) if isinstance(y, J.Jet) else y[0] * 0
    for i in range(n - 2, -1, -1):
        q[i] = q[i + 1] + J.log(y[i] * -1.0)
    return J.stack(q + [y[n + i] for i in range(n)])


def casimir(y):
    n = len(J.value(y)) // 2
    c = y[0]
    for i in range(1, n):
        c = c * y[i]
    return c


# -- block matrices ---------------------------------------------------------------


def _block(n, entries, like):
    return J.assemble((n, n), entries, like=like)


def A_block(a):
    n = len(J.value(a))
    ent = []
    for k in range(n):
        ent += [((k, k), a[k]), ((k, (k + 1) % n), a[k] * -1.0)]
    return _block(n, ent, a)


def epsilon_matrix(n: int) -> np.ndarray:
    """``eps_{k,j} = eps(j - k)``."""
    return np.array([[eps(j - k) for j in range(n)] for k in range(n)], dtype=float)


def A_tilde(a):
    n = len(J.value(a))
    ent = []
    for k, j in product(range(n), repeat=2):
        c = pdelta(n, k, j + 1) - pdelta(n, k, j - 1)
        if c:
            ent.append(((k, j), a[k] * a[j] * float(c)))
    return _block(n, ent, a)


def B_block(a, b):
    n = len(J.value(a))
    ent = []
    for k in range(n):
        ent += [((k, k), a[k] * b[k]), ((k, (k + 1) % n), a[k] * b[(k + 1) % n] * -1.0)]
    return _block(n, ent, a)


def C_block(a):
    """Also the lower-right block ``E`` of ``pi_{N_-}``."""
    n = len(J.value(a))
    ent = []
    for k, j in product(range(n), repeat=2):
        if pdelta(n, k, j - 1):
            ent.append(((k, j), a[k]))
        if pdelta(n, k, j + 1):
            ent.append(((k, j), a[j] * -1.0))
    return _block(n, ent, a)


def _assemble2(n, UL, UR, LL, LR, like):
    ent = []
    for blk, (r0, c0) in ((UL, (0, 0)), (UR, (0, n)), (LL, (n, 0)), (LR, (n, n))):
        if blk is None:
            continue
        for i, j in product(range(n), repeat=2):
            v = blk[i, j]
            if isinstance(v, J.Jet) or J.value(v) != 0:
                ent.append(((r0 + i, c0 + j), v))
    return J.assemble((2 * n, 2 * n), ent, like=like)


def P0_matrix(y):
    n = len(J.value(y)) // 2
    A = A_block(y[:n])
    return _assemble2(n, None, A, J.transpose(A) * -1.0, None, y)


def P1_matrix(y):
    n = len(J.value(y)) // 2
    a, b = y[:n], y[n:]
    B = B_block(a, b)
    return _assemble2(n, A_tilde(a), B, J.transpose(B) * -1.0, C_block(a), y)


def pushforward_formula(x) -> np.ndarray:
    """``F_*`` at a physical point from the block formula evaluated at ``F(x)``."""
    c = np.asarray(coords_of(x))
    n = c.size // 2
    y = flaschka_coords(c)
    out = np.zeros((2 * n, 2 * n), dtype=y.dtype)
    out[:n, :n] = A_block(y[:n])
    out[n:, n:] = np.eye(n)
    return out


def pushforward_jet(x) -> np.ndarray:
    """Jacobian of the Flaschka map by differentiating it."""
    c = np.asarray(coords_of(x))
    return np.asarray(J.value(J.D(flaschka_coords(J.seed(c, 1)))))


# -- structures -------------------------------------------------------------------


def build_P0(n: int) -> PoissonStructure:
    _check_n(n)
    return PoissonStructure(BivectorField(P0_matrix, 2 * n, "P0"))


def build_P1(n: int) -> PoissonStructure:
    _check_n(n)
    return PoissonStructure(BivectorField(P1_matrix, 2 * n, "P1"))


@dataclass(frozen=True)
class FlaschkaData:
    n: int

    def __post_init__(self):
        _check_n(self.n)

    @property
    def epsilon_matrix(self) -> np.ndarray:
        return epsilon_matrix(self.n)

    def A(self, y) -> np.ndarray:
        return np.asarray(A_block(coords_of(y)[: self.n]))

    @property
    def P0(self) -> PoissonStructure:
        return build_P0(self.n)

    @property
    def P1(self) -> PoissonStructure:
        return build_P1(self.n)

    @property
    def casimir(self) -> ScalarField:
        return ScalarField(casimir, 2 * self.n, "C")


def pi_N_minus(model: TodaModel) -> BivectorField:
    """``pi_{N_-} = N_- pi`` of the closed A_n^(1) lattice."""
    Nm = model.deformed(-1).N
    return BivectorField(lambda x: J.einsum("ij,jk->ik", Nm(x), model.pi.matrix(x)),
                         model.dim, "pi_N-", Nm.consumes)


def pi_N_plus(model: TodaModel) -> BivectorField:
    Np = model.deformed(+1).N
    return BivectorField(lambda x: J.einsum("ij,jk->ik", Np(x), model.pi.matrix(x)),
                         model.dim, "pi_N+", Np.consumes)


def _require_a1(model: TodaModel) -> None:
    if model.family is not Family.A1:
        raise ValueError("the Flaschka reduction is defined for the A_n^(1) lattice")


# -- checks -----------------------------------------------------------------------


def check_f_related(P_phys: BivectorField, P_flaschka: BivectorField, x) -> float:
    """``max |F_* M(P_phys) F_*^T - M(P_flaschka)(F(x))|``."""
    c = np.asarray(coords_of(x), float)
    Fs = pushforward_formula(c)
    lhs = Fs @ P_phys.at(c) @ Fs.T
    return float(np.max(np.abs(lhs - P_flaschka.at(flaschka_coords(c)))))


def conto_symbol(l: int, k: int) -> int:
    """``2 eps(k-l) - eps(k-l-1) - eps(k-l+1)``."""
    return 2 * eps(k - l) - eps(k - l - 1) - eps(k - l + 1)


def wrap_symbol(n: int, l: int, k: int) -> int:
    """Cyclic counterpart of :func:`conto_symbol`, signed for the block ``-eps``.

    Equals ``delta_{k,l-1} - delta_{k,l+1}`` with mod-n deltas.
    """
    kp, lp = (k + 1) % n, (l + 1) % n
    return -(eps(k - l) - eps(kp - l) - eps(k - lp) + eps(kp - lp))


def epsilon_identity_table(n: int, periodic: bool = True) -> list[tuple[int, int, int, int]]:
    """All ``(l, k, lhs, rhs)`` of the integer identity relating :func:`conto_symbol` to deltas.

    ``periodic`` selects the mod-n Kronecker delta on the right-hand side;
    otherwise the ordinary one is used.
    """
    delta = (lambda a, b: pdelta(n, a, b)) if periodic else (lambda a, b: int(a == b))
    return [(l, k, conto_symbol(l, k), delta(k, l + 1) - delta(k, l - 1))
            for l, k in product(range(n), repeat=2)]


def epsilon_identity_failures(n: int, periodic: bool = True) -> list[tuple[int, int]]:
    return [(l, k) for l, k, lhs, rhs in epsilon_identity_table(n, periodic) if lhs != rhs]


@dataclass(frozen=True)
class AeaReport:
    """Residuals of the block identity behind ``P_1 = F_* pi_{N_-} F^*``.

    ``routes`` is the three-way agreement between the matrix product using
    the block actually realized by ``pi_{N_-}`` (``-eps``), the cyclic closed
    form ``a_l a_k (delta_{k,l+1} - delta_{k,l-1})`` built through
    :func:`wrap_symbol`, and the ``At`` block formula.  The ``literal_*``
    fields evaluate the identity as stated with ``eps`` itself.
    """

    routes: float
    literal_product: float
    literal_closed_form: float


def aea_identity(a, n: int | None = None) -> AeaReport:
    a = np.asarray(a, dtype=float)
    n = n or a.size
    if n < 2 or a.size != n:
        raise ValueError("aea_identity needs n >= 2 and len(a) == n")
    A, E, At = A_block(a), epsilon_matrix(n), A_tilde(a)
    prod_route = A @ (-E) @ A.T
    closed = np.array([[a[l] * a[k] * wrap_symbol(n, l, k) for k in range(n)] for l in range(n)])
    routes = max(np.max(np.abs(prod_route - closed)), np.max(np.abs(closed - At)),
                 np.max(np.abs(prod_route - At)))
    lit = A @ E @ A.T
    lit_closed = np.array([[a[l] * a[k] * conto_symbol(l, k) for k in range(n)] for l in range(n)])
    return AeaReport(float(routes), float(np.max(np.abs(lit - At))),
                     float(np.max(np.abs(lit_closed - lit))))


def epsilon_block_residual(model: TodaModel, x) -> tuple[float, float]:
    """Distance of the upper-left block of ``pi_{N_-}`` from ``-eps`` and from ``eps``."""
    _require_a1(model)
    n = model.n
    ul = pi_N_minus(model).at(np.asarray(x, float))[:n, :n]
    E = epsilon_matrix(n)
    return float(np.max(np.abs(ul + E))), float(np.max(np.abs(ul - E)))


def casimir_residuals(y) -> tuple[float, float]:
    """``max |P_i^sharp dC|`` for ``P_0`` and ``P_1``."""
    y = np.asarray(coords_of(y), float)
    yj = J.seed(y, 1)
    dC = np.asarray(J.value(J.D(casimir(yj))))
    return (float(np.max(np.abs(P0_matrix(y) @ dC))), float(np.max(np.abs(P1_matrix(y) @ dC))))


def jacobi_residuals(y) -> dict[str, float]:
    yj = J.seed(np.asarray(coords_of(y), float), 1)
    P0, P1 = components(P0_matrix(yj)), components(P1_matrix(yj))
    m = lambda t: float(np.max(np.abs(J.value(t))))  # noqa: E731
    return {"P0P0": m(schouten(P0, P0)), "P1P1": m(schouten(P1, P1)), "P0P1": m(schouten(P0, P1))}


def pushforward_trivector(Fs: np.ndarray, S: np.ndarray) -> np.ndarray:
    return np.einsum("ai,bj,ck,ijk->abc", Fs, Fs, Fs, S, optimize=True)


@dataclass(frozen=True)
class SchoutenReport:
    pi_piN: float           # |[pi, pi_N-]|
    piN_piN_vs_X1: float    # |[pi_N-, pi_N-] - 4 X_1 ^ pi#Omega|
    pushed: float           # |F_* [pi_N-, pi_N-]|
    F_X1: float             # |F_* X_1|


def schouten_checks(model: TodaModel, x) -> SchoutenReport:
    from .poisson import sharp_2form, wedge_vector_bivector

    _require_a1(model)
    n, c = model.n, np.asarray(coords_of(x), float)
    xj = J.seed(c, 1)
    P = components(model.pi.matrix(xj))
    PN = components(pi_N_minus(model).jet(c, 1))
    S1 = np.asarray(J.value(schouten(P, PN)))
    S2 = np.asarray(J.value(schouten(PN, PN)))
    X1 = np.r_[np.ones(n), np.zeros(n)]
    R = wedge_vector_bivector(X1, sharp_2form(model.pi.bivector.at(c), model.Omega.at(c)))
    Fs = pushforward_formula(c)
    return SchoutenReport(float(np.max(np.abs(S1))), float(np.max(np.abs(S2 - 4 * R))),
                          float(np.max(np.abs(pushforward_trivector(Fs, S2)))),
                          float(np.max(np.abs(Fs @ X1))))


@dataclass(frozen=True)
class ReducedChain:
    """Residuals of the reduced chain at one physical point (index ``k - 1``)."""

    physical: np.ndarray    # |pi_N-# dH_k - pi# dH_{k+1} - f_k X_1|
    reduced: np.ndarray     # |P_1# dH~_k - P_0# dH~_{k+1}| at F(x)
    x1_H: np.ndarray        # |X_1(H_k)|, k = 1..K
    p0_dH1: float           # |P_0# dH~_1|
    section_gap: float      # |H_k(section(F(x))) - H_k(x)|, relative


def reduced_chain_residual(model: TodaModel, K: int, x, precision="double") -> ReducedChain:
    """Generalized and reduced Lenard-Magri residuals for ``k = 1..K-1``.

    ``dH~_k`` at ``F(x)`` is ``S^T dH_k(S(F(x)))`` with ``S`` the section
    ``q_n = 0``; the check that ``H_k`` agrees on ``x`` and on the section
    point guards that construction.
    """
    from .precision import run

    _require_a1(model)
    if K < 2:
        raise ValueError("K must be >= 2")
    n = model.n
    Sp, Sm = model.deformed(+1), model.deformed(-1)

    def body(c):
        cv = chain_values(Sp, K, c, model.Omega, +1)
        Nm = np.asarray(Sm.N.at(c))
        A = cv.A
        X1 = A @ cv.dH[0]
        phys = np.array([np.max(np.abs(Nm @ A @ cv.dH[k - 1] - A @ cv.dH[k] - cv.f[k - 1] * X1))
                         for k in range(1, K)])
        y = flaschka_coords(c)
        yj = J.seed(y, 1)
        sj = section(yj)
        s = np.asarray(J.value(sj))
        S = np.asarray(J.value(J.D(sj)))
        cs = chain_values(Sp, K, s)
        dHt = cs.dH @ S  # rows: S^T dH_k
        P0, P1 = P0_matrix(y), P1_matrix(y)
        red = np.array([np.max(np.abs(P1 @ dHt[k - 1] - P0 @ dHt[k])) for k in range(1, K)])
        x1h = np.abs(cv.dH[:, :n].sum(axis=1))
        gap = np.max(np.abs(cs.H - cv.H) / np.maximum(np.abs(cv.H), 1))
        return phys, red, x1h, np.max(np.abs(P0 @ dHt[0])), gap

    phys, red, x1h, p0, gap = run(body, x, precision)
    f = lambda v: np.asarray(v, dtype=float)  # noqa: E731
    return ReducedChain(f(phys), f(red), f(x1h), float(p0), float(gap))


# -- literal n = 4 displays ---------------------------------------------------------


def _rows(rows, like):
    m = len(rows)
    ent = [((i, j), v) for i, row in enumerate(rows) for j, v in enumerate(row)
           if isinstance(v, J.Jet) or J.value(v) != 0]
    return J.assemble((m, m), ent, like=like)


def _e(x):
    q = [x[i] for i in range(4)]
    return gexp(q[0] - q[1]), gexp(q[1] - q[2]), gexp(q[2] - q[3]), gexp(q[3] - q[0])


def n4_N_open(x):
    p1, p2, p3, p4 = (x[4 + i] for i in range(4))
    e12, e23, e34, _ = _e(x)
    return _rows([
        [p1, 0, 0, 0, 0, 1, 1, 1],
        [0, p2, 0, 0, -1, 0, 1, 1],
        [0, 0, p3, 0, -1, -1, 0, 1],
        [0, 0, 0, p4, -1, -1, -1, 0],
        [0, -e12, 0, 0, p1, 0, 0, 0],
        [e12, 0, -e23, 0, 0, p2, 0, 0],
        [0, e23, 0, -e34, 0, 0, p3, 0],
        [0, 0, e34, 0, 0, 0, 0, p4],
    ], x)


def n4_N_minus(x):
    p1, p2, p3, p4 = (x[4 + i] for i in range(4))
    e12, e23, e34, e41 = _e(x)
    return _rows([
        [p1, 0, 0, 0, 0, 1, 1, 1],
        [0, p2, 0, 0, -1, 0, 1, 1],
        [0, 0, p3, 0, -1, -1, 0, 1],
        [0, 0, 0, p4, -1, -1, -1, 0],
        [0, -e12, 0, e41, p1, 0, 0, 0],
        [e12, 0, -e23, 0, 0, p2, 0, 0],
        [0, e23, 0, -e34, 0, 0, p3, 0],
        [-e41, 0, e34, 0, 0, 0, 0, p4],
    ], x)


def n4_pi_N_minus(x):
    p1, p2, p3, p4 = (x[4 + i] for i in range(4))
    e12, e23, e34, e41 = _e(x)
    return _rows([
        [0, -1, -1, -1, p1, 0, 0, 0],
        [1, 0, -1, -1, 0, p2, 0, 0],
        [1, 1, 0, -1, 0, 0, p3, 0],
        [1, 1, 1, 0, 0, 0, 0, p4],
        [-p1, 0, 0, 0, 0, -e12, 0, e41],
        [0, -p2, 0, 0, e12, 0, -e23, 0],
        [0, 0, -p3, 0, 0, e23, 0, -e34],
        [0, 0, 0, -p4, -e41, 0, e34, 0],
    ], x)


def n4_P0(y):
    a1, a2, a3, a4 = (y[i] for i in range(4))
    z = 0
    return _rows([
        [z, z, z, z, a1, -a1, z, z],
        [z, z, z, z, z, a2, -a2, z],
        [z, z, z, z, z, z, a3, -a3],
        [z, z, z, z, -a4, z, z, a4],
        [-a1, z, z, a4, z, z, z, z],
        [a1, -a2, z, z, z, z, z, z],
        [z, a2, -a3, z, z, z, z, z],
        [z, z, a3, -a4, z, z, z, z],
    ], y)


def n4_P1(y):
    a1, a2, a3, a4, b1, b2, b3, b4 = (y[i] for i in range(8))
    return _rows([
        [0, -a1 * a2, 0, a1 * a4, a1 * b1, -a1 * b2, 0, 0],
        [a1 * a2, 0, -a2 * a3, 0, 0, a2 * b2, -a2 * b3, 0],
        [0, a2 * a3, 0, -a3 * a4, 0, 0, a3 * b3, -a3 * b4],
        [-a1 * a4, 0, a3 * a4, 0, -a4 * b1, 0, 0, a4 * b4],
        [-a1 * b1, 0, 0, a4 * b1, 0, a1, 0, -a4],
        [a1 * b2, -a2 * b2, 0, 0, -a1, 0, a2, 0],
        [0, a2 * b3, -a3 * b3, 0, 0, -a2, 0, a3],
        [0, 0, a3 * b4, -a4 * b4, a4, 0, -a3, 0],
    ], y)


def n4_F_star(y):
    a1, a2, a3, a4 = (y[i] for i in range(4))
    return _rows([
        [a1, -a1, 0, 0, 0, 0, 0, 0],
        [0, a2, -a2, 0, 0, 0, 0, 0],
        [0, 0, a3, -a3, 0, 0, 0, 0],
        [-a4, 0, 0, a4, 0, 0, 0, 0],
        [0, 0, 0, 0, 1, 0, 0, 0],
        [0, 0, 0, 0, 0, 1, 0, 0],
        [0, 0, 0, 0, 0, 0, 1, 0],
        [0, 0, 0, 0, 0, 0, 0, 1],
    ], y)


def n4_display_residuals(model: TodaModel, x) -> dict[str, float]:
    """Builders against the literal 4-particle displays at one physical point."""
    _require_a1(model)
    if model.n != 4:
        raise ValueError("the literal displays are 4-particle")
    c = np.asarray(coords_of(x), float)
    y = np.asarray(flaschka_coords(c), float)
    m = lambda u, v: float(np.max(np.abs(np.asarray(u, float) - np.asarray(v, float))))  # noqa: E731
    return {
        "N": m(model.N_open.at(c), n4_N_open(c)),
        "N_minus": m(model.deformed(-1).N.at(c), n4_N_minus(c)),
        "pi_N_minus": m(pi_N_minus(model).at(c), n4_pi_N_minus(c)),
        "P0": m(P0_matrix(y), n4_P0(y)),
        "P1": m(P1_matrix(y), n4_P1(y)),
        "F_star": m(pushforward_formula(c), n4_F_star(y)),
    }
