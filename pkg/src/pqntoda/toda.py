"""Closed Toda lattices of type A_n^(1), C_n^(1) and A_2n^(2) as PqN data.

Coordinates are ``(q_1..q_n, p_1..p_n)``; index ``i`` (1-based) maps to
``i - 1`` for ``q_i`` and ``n + i - 1`` for ``p_i``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .diffgeo import jet as J
from .diffgeo.fields import BivectorField, FormField, ScalarField, Tensor11Field
from .poisson import PoissonStructure
from .pqn import PqNStructure, compat_residuals, deform, torsion

EXP_LIMIT = 40.0


class DomainError(ValueError):
    """An exponential argument left the guarded range."""


class ModelError(ValueError):
    """A model failed its construction-time checks."""


class Family(str, enum.Enum):
    A1 = "a1"
    C1 = "c1"
    A2T = "a2t"


def gexp(arg):
    """``exp`` that refuses arguments with ``|arg| > 40``."""
    v = np.asarray(J.value(arg), dtype=float)
    if np.any(np.abs(v) > EXP_LIMIT):
        raise DomainError(f"exponent {float(np.max(np.abs(v))):.3g} exceeds the guard {EXP_LIMIT:g}")
    return J.exp(arg)


def _split(x, n):
    return [x[i] for i in range(n)], [x[n + i] for i in range(n)]


# -- A_n^(1) -------------------------------------------------------------------


def an_open_N(n: int):
    """Open Toda recursion operator as a component evaluator."""

    def fn(x):
        q, p = _split(x, n)
        entries = []
        for i in range(n):
            entries.append(((i, i), p[i]))
            entries.append(((n + i, n + i), p[i]))
            for j in range(i + 1, n):
                entries.append(((i, n + j), 1.0))
                entries.append(((j, n + i), -1.0))
        for i in range(n - 1):
            e = gexp(q[i] - q[i + 1])
            entries.append(((n + i + 1, i), e))
            entries.append(((n + i, i + 1), -e))
        return J.assemble((2 * n, 2 * n), entries, like=x)

    return fn


def an_omega(n: int):
    """``Omega = e^{q_n - q_1} dq_n ^ dq_1``."""

    def fn(x):
        w = gexp(x[n - 1] - x[0])
        return J.assemble((2 * n, 2 * n), [((n - 1, 0), w), ((0, n - 1), -w)], like=x)

    return fn


def an_energy(n: int, sign: int = 1):
    """``H_2^{+-}``: closed (sign +1) or repulsive-corner (sign -1) Toda energy."""

    def fn(x):
        q, p = _split(x, n)
        h = sum(pi * pi for pi in p) * 0.5
        for i in range(n - 1):
            h = h + gexp(q[i] - q[i + 1])
        return h + gexp(q[n - 1] - q[0]) * float(sign)

    return fn


def an_open_energy(n: int):
    def fn(x):
        q, p = _split(x, n)
        h = sum(pi * pi for pi in p) * 0.5
        for i in range(n - 1):
            h = h + gexp(q[i] - q[i + 1])
        return h

    return fn


# -- C_n^(1) and A_2n^(2) -----------------------------------------------------


def cn_brackets(n: int, m: int, x):
    """Nonzero brackets ``{x_a, x_b}'`` of the orthogonal open Toda bivector.

    Returned as ``[((a, b), value)]`` over 0-based coordinate indices, taken
    strictly from the printed index ranges.
    """
    q, p = _split(x, n)
    Q = lambda i: i - 1  # noqa: E731
    P = lambda i: n + i - 1  # noqa: E731
    e = {i: gexp(q[i - 1] - q[i]) for i in range(1, n)}  # e[i] = e^{q_i - q_{i+1}}
    em = gexp(q[n - 1] * float(m))
    out = []
    for i in range(2, n + 1):
        for j in range(1, i):
            out.append(((Q(i), Q(j)), p[i - 1] * 2.0))
    for i in range(3, n):
        val = (e[i - 1] - e[i]) * 2.0
        for j in range(1, i - 1):
            out.append(((P(i), Q(j)), val))
    for j in range(1, n - 1):
        out.append(((P(n), Q(j)), e[n - 1] * 2.0 - em * (2.0 * m)))
    for i in range(1, n):
        out.append(((Q(i), P(i)), p[i - 1] * p[i - 1] + e[i] * 2.0))
    out.append(((Q(n), P(n)), p[n - 1] * p[n - 1] + em * 2.0))
    for i in range(1, n):
        out.append(((Q(i + 1), P(i)), e[i]))
    for i in range(1, n - 1):
        out.append(((Q(i), P(i + 1)), e[i + 1] * 2.0 - e[i]))
    out.append(((Q(n - 1), P(n)), em * (2.0 * m) - e[n - 1]))
    for i in range(1, n):
        out.append(((P(i), P(i + 1)), e[i] * (p[i - 1] + p[i]) * -1.0))
    return out


def bracket_matrix(n: int, brackets, like):
    """Stored matrix of a bivector from its bracket list: ``A[b, a] = {x_a, x_b}``."""
    entries = []
    for (a, b), v in brackets:
        entries.append(((b, a), v))
        entries.append(((a, b), v * -1.0))
    return J.assemble((2 * n, 2 * n), entries, like=like)


def canonical_inverse(n: int) -> np.ndarray:
    """Inverse of the canonical stored matrix ``[[0, I], [-I, 0]]``."""
    Z, I = np.zeros((n, n)), np.eye(n)
    return np.block([[Z, -I], [I, Z]])


def c2_pi_prime(x):
    """Literal 4x4 transcription of the C_2 open Toda second bivector."""
    q1, q2, p1, p2 = x[0], x[1], x[2], x[3]
    e, f = gexp(q1 - q2), gexp(q2 * 2.0)
    rows = [
        [0.0, p2 * 2.0, (p1 * p1 + e * 2.0) * -1.0, e - f * 4.0],
        [p2 * -2.0, 0.0, e * -1.0, (p2 * p2 + f * 2.0) * -1.0],
        [p1 * p1 + e * 2.0, e, 0.0, e * (p1 + p2)],
        [f * 4.0 - e, p2 * p2 + f * 2.0, e * (p1 + p2) * -1.0, 0.0],
    ]
    return _from_rows(rows, x)


def c2_N_open(x):
    """Literal transcription of the open C_2 recursion operator."""
    q1, q2, p1, p2 = x[0], x[1], x[2], x[3]
    e, f = gexp(q1 - q2), gexp(q2 * 2.0)
    d1 = (p1 * p1 + e * 2.0) * -1.0
    d2 = (p2 * p2 + f * 2.0) * -1.0
    s = e * (p1 + p2)
    rows = [
        [d1, e - f * 4.0, 0.0, p2 * -2.0],
        [e * -1.0, d2, p2 * 2.0, 0.0],
        [0.0, s, d1, e * -1.0],
        [s * -1.0, 0.0, e - f * 4.0, d2],
    ]
    return _from_rows(rows, x)


def c2_N_hat(x):
    """Literal transcription of the deformed (periodic) C_2 recursion operator."""
    q1, q2, p1, p2 = x[0], x[1], x[2], x[3]
    e, f, g = gexp(q1 - q2), gexp(q2 * 2.0), gexp(q1 * -2.0)
    d1 = (p1 * p1 + e * 2.0 + g * 2.0) * -1.0
    d2 = (p2 * p2 + f * 2.0) * -1.0
    s = e * (p1 + p2)
    rows = [
        [d1, e - f * 4.0, 0.0, p2 * -2.0],
        [e * -1.0, d2, p2 * 2.0, 0.0],
        [0.0, s, d1, e * -1.0],
        [s * -1.0, 0.0, e - f * 4.0, d2],
    ]
    return _from_rows(rows, x)


def _from_rows(rows, like):
    entries = [((i, j), v) for i, row in enumerate(rows) for j, v in enumerate(row)
               if not (isinstance(v, float) and v == 0.0)]
    return J.assemble((4, 4), entries, like=like)


def c2_fixture_matrices():
    """``(pi', N_open, N_hat)`` literal evaluators for the 2-particle C case."""
    return (BivectorField(c2_pi_prime, 4, "pi'_C2"), Tensor11Field(c2_N_open, 4, "N_C2"),
            Tensor11Field(c2_N_hat, 4, "Nhat_C2"))


def cn_pi_prime(n: int, m: int):
    if n == 2 and m == 2:
        return c2_pi_prime

    def fn(x):
        return bracket_matrix(n, cn_brackets(n, m, x), like=x)

    return fn


def cn_open_N(n: int, m: int):
    Ainv = canonical_inverse(n)
    pp = cn_pi_prime(n, m)

    def fn(x):
        return J.einsum("ij,jk->ik", pp(x), Ainv)

    return fn


def omega1(n: int):
    """``Omega_1 = -2 e^{-2 q_1} dq_1 ^ dp_1``."""

    def fn(x):
        w = gexp(x[0] * -2.0) * -2.0
        return J.assemble((2 * n, 2 * n), [((0, n), w), ((n, 0), w * -1.0)], like=x)

    return fn


def cn_periodic_energy(n: int, m: int):
    """Closed orthogonal Toda Hamiltonian (nearest-neighbour terms ``e^{q_i - q_{i+1}}``)."""

    def fn(x):
        q, p = _split(x, n)
        h = sum(pi * pi for pi in p) * 0.5
        for i in range(n - 1):
            h = h + gexp(q[i] - q[i + 1])
        return h + gexp(q[n - 1] * float(m)) + gexp(q[0] * -2.0)

    return fn


# -- models ---------------------------------------------------------------------


@dataclass(frozen=True)
class TodaModel:
    """A Toda family instance: canonical pi, open N, deformation form and energy."""

    family: Family
    n: int
    pi: PoissonStructure
    N_open: Tensor11Field
    Omega: FormField
    hamiltonian_closed_form: ScalarField
    m: int | None = None
    pi_prime: BivectorField | None = field(default=None, compare=False)

    @property
    def dim(self) -> int:
        return 2 * self.n

    @property
    def id(self) -> str:
        return f"{self.family.value}-n{self.n}"

    def pn(self) -> PqNStructure:
        return PqNStructure(self.pi, self.N_open, None, name=f"{self.id}-open")

    def deformed(self, sign: int = 1) -> PqNStructure:
        return deform(self.pi, self.N_open, None, self.Omega, sign)

    def condition_a_form(self, sign: int = 1) -> FormField:
        """2-form for which condition (a) holds on the ``sign`` deformation.

        The deformation by ``-Omega`` satisfies ``phi = -2 dH_1 ^ (-Omega)``.
        """
        if sign > 0:
            return self.Omega
        return FormField(lambda x: self.Omega(x) * -1.0, self.dim, f"-{self.Omega.name}",
                         self.Omega.consumes, degree=2)

    def default_kmax(self) -> int:
        return 2 * self.n

    def verify_open(self, points, tol: float = 1e-10) -> float:
        """Max torsion and compatibility residual of ``(pi, N_open)``; raises above ``tol``."""
        worst = 0.0
        for x in points:
            xj = J.seed(np.asarray(x, float), 1)
            A, N = self.pi.matrix(xj), self.N_open(xj)
            r1, r2 = compat_residuals(A, N)
            for r in (torsion(N), r1, r2):
                worst = max(worst, float(np.max(np.abs(J.value(r)))))
        if worst > tol:
            raise ModelError(f"{self.id}: open structure is not a PN pair (residual {worst:.3e})")
        return worst


def _check_n(n: int, family: str) -> None:
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise ValueError(f"{family} needs n >= 2, got {n}")


def _verify_points(n: int, k: int = 3) -> np.ndarray:
    return np.random.default_rng(n).uniform(-1.0, 1.0, size=(k, 2 * n))


def build_an1(n: int, verify: bool = True) -> TodaModel:
    _check_n(n, "A_n^(1)")
    d = 2 * n
    model = TodaModel(
        Family.A1, n, PoissonStructure.canonical(n),
        Tensor11Field(an_open_N(n), d, "N_open"),
        FormField(an_omega(n), d, "Omega", degree=2),
        ScalarField(an_energy(n, +1), d, "H_closed"),
    )
    if verify:
        model.verify_open(_verify_points(n))
    return model


def _build_orthogonal(n: int, m: int, family: Family, verify: bool) -> TodaModel:
    d = 2 * n
    model = TodaModel(
        family, n, PoissonStructure.canonical(n),
        Tensor11Field(cn_open_N(n, m), d, "N_open"),
        FormField(omega1(n), d, "Omega_1", degree=2),
        ScalarField(cn_periodic_energy(n, m), d, "H_closed"),
        m=m,
        pi_prime=BivectorField(cn_pi_prime(n, m), d, "pi'"),
    )
    if verify:
        model.verify_open(_verify_points(n))
    return model


def build_cn1(n: int, verify: bool = True) -> TodaModel:
    _check_n(n, "C_n^(1)")
    return _build_orthogonal(n, 2, Family.C1, verify)


def build_a2n2(n: int, verify: bool = True) -> TodaModel:
    _check_n(n, "A_2n^(2)")
    return _build_orthogonal(n, 1, Family.A2T, verify)


MODELS = {Family.A1.value: build_an1, Family.C1.value: build_cn1, Family.A2T.value: build_a2n2}


def build_model(family: str, n: int, verify: bool = True) -> TodaModel:
    try:
        builder = MODELS[str(family).lower()]
    except KeyError:
        raise KeyError(f"unknown model {family!r}; choose from {sorted(MODELS)}") from None
    return builder(n, verify=verify)
