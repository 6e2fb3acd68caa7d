"""Poisson structures, Hamiltonian fields, and the Koszul and Schouten brackets.

Bivectors are stored through their sharp matrix ``A`` with
``A[i, j] = pi^{ji}``, so ``pi^sharp(alpha) = A @ alpha`` for column vectors.
:meth:`PoissonStructure.matrix` and :func:`components` are the only places
that know this; everything else goes through ``sharp`` and pairings.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .diffgeo import jet as J
from .diffgeo.calculus import canonical, d_field, lie_form1
from .diffgeo.fields import (
    BivectorField,
    FormField,
    ScalarField,
    VectorField,
    check_same_dim,
    coords_of,
)

# -- jet kernels -------------------------------------------------------------


def components(A):
    """True bivector components ``pi^{ij} = pi(dx^i, dx^j)`` from the stored matrix."""
    return J.transpose(A)


def sharp(A, alpha):
    return J.einsum("ij,j->i", A, alpha)


def pairing(alpha, X):
    return J.einsum("i,i->", alpha, X)


def pbracket(A, df, dg):
    """``{f, g} = <df, pi^sharp dg>``."""
    return pairing(df, sharp(A, dg))


def koszul1(A, alpha, beta):
    """``[a, b]_pi = L_{pi# a} b - L_{pi# b} a - d<b, pi# a>`` on 1-form jets."""
    d = J.value(A).shape[0]
    if not isinstance(alpha, J.Jet):
        alpha = J.const_like(alpha, A)
    if not isinstance(beta, J.Jet):
        beta = J.const_like(beta, A)
    X, Y = sharp(A, alpha), sharp(A, beta)
    return lie_form1(X, beta) - lie_form1(Y, alpha) - J.D(pairing(beta, X), d)


def schouten(P, Q):
    """Schouten bracket of bivectors given by their true components.

    ``[P, Q]^{ijk} = sum over cyclic (ijk) of P^{il} d_l Q^{jk} + Q^{il} d_l P^{jk}``.
    With this sign a Poisson-Nijenhuis pair with torsion ``T = i_pi phi`` has
    ``[pi_N, pi_N] = 2 pi#(phi)``.
    """
    d = J.value(P).shape[0]
    t = (J.einsum("il,jkl->ijk", P, J.D(Q, d))
         + J.einsum("il,jkl->ijk", Q, J.D(P, d)))
    return canonical(t + J.einsum("jki->ijk", t) + J.einsum("kij->ijk", t), 3)


def wedge_vector_bivector(X, B):
    """Trivector ``X ^ B`` from true bivector components."""
    t = J.einsum("i,jk->ijk", X, B) + J.einsum("j,ki->ijk", X, B) + J.einsum("k,ij->ijk", X, B)
    return canonical(t, 3)


def sharp_2form(A, W):
    """True components of the bivector ``pi^sharp(W)``: ``W(pi# dx^j, pi# dx^k)``."""
    # (pi# dx^j)^a = A[a, j]
    return J.einsum("aj,ak->jk", A, J.einsum("ab,bk->ak", W, A))


# -- sparse forms and the graded Koszul bracket -----------------------------


def _merge(I: tuple, K: tuple):
    idx = I + K
    if len(set(idx)) < len(idx):
        return None, 0
    order = sorted(range(len(idx)), key=lambda s: idx[s])
    inv = sum(1 for a in range(len(order)) for b in range(a + 1, len(order)) if order[a] > order[b])
    return tuple(sorted(idx)), (-1 if inv % 2 else 1)


class SparseForm:
    """A form as ``{increasing index tuple: scalar coefficient}``."""

    __slots__ = ("degree", "terms")

    def __init__(self, degree: int, terms=None):
        self.degree = degree
        self.terms = dict(terms or {})

    @classmethod
    def from_dense(cls, w) -> "SparseForm":
        v = J.value(w)
        p, d = v.ndim, (v.shape[0] if v.ndim else 0)
        terms = {}
        for idx in itertools.combinations(range(d), p):
            c = w[idx] if p else w
            if isinstance(c, J.Jet):
                if c.is_zero():
                    continue
            elif not np.any(c):
                continue
            terms[idx] = c
        return cls(p, terms)

    def to_dense(self, d: int, like=None):
        if self.degree < 0:
            raise ValueError("negative-degree form")
        if self.degree == 0:
            return self.terms.get((), 0.0)
        dense = J.assemble((d,) * self.degree, list(self.terms.items()), like=like)
        return canonical(dense, self.degree)

    def __add__(self, other: "SparseForm") -> "SparseForm":
        if not other.terms:
            return self
        if not self.terms:
            return other
        if self.degree != other.degree:
            raise ValueError("adding forms of different degree")
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out[k] + c if k in out else c
        return SparseForm(self.degree, out)

    def scale(self, c) -> "SparseForm":
        return SparseForm(self.degree, {k: v * c for k, v in self.terms.items()})

    def wedge_right(self, K: tuple) -> "SparseForm":
        """``self ^ dx^K``."""
        out = {}
        for I, c in self.terms.items():
            idx, s = _merge(I, K)
            if idx is not None:
                out[idx] = out[idx] + s * c if idx in out else s * c
        return SparseForm(self.degree + len(K), out)

    def wedge_left(self, K: tuple) -> "SparseForm":
        """``dx^K ^ self``."""
        out = {}
        for I, c in self.terms.items():
            idx, s = _merge(K, I)
            if idx is not None:
                out[idx] = out[idx] + s * c if idx in out else s * c
        return SparseForm(self.degree + len(K), out)


class _KoszulReducer:
    """Graded Koszul bracket of monomials ``f dx^I`` by the derivation rules.

    The right argument is always expanded with the derivation property;
    when the left argument is not elementary the bracket is flipped with
    graded antisymmetry so that the expansion continues on the right.
    Base cases: ``[dx^a, f] = <df, pi# dx^a>`` and ``[dx^a, dx^b]`` from the
    1-form bracket.
    """

    def __init__(self, A):
        self.A = A
        self.d = J.value(A).shape[0]
        self._dxdx = {}

    def dxdx(self, a: int, b: int) -> SparseForm:
        key = (a, b)
        if key not in self._dxdx:
            ea, eb = np.zeros(self.d), np.zeros(self.d)
            ea[a], eb[b] = 1.0, 1.0
            self._dxdx[key] = SparseForm.from_dense(koszul1(self.A, ea, eb))
        return self._dxdx[key]

    def dx_f(self, a: int, f):
        # <df, pi# dx^a> with (pi# dx^a)^k = A[k, a]
        if not isinstance(f, J.Jet):
            return 0.0
        return J.einsum("k,k->", J.D(f, self.d), self.A[:, a])

    # [f dx^I, g dx^K]
    def mono(self, f, I: tuple, g, K: tuple) -> SparseForm:
        if not K:
            return self.eta_fn(f, I, g)
        return self.eta_fn(f, I, g).wedge_right(K) + self.eta_dxK(f, I, K).scale(g)

    def eta_dxK(self, f, I, K) -> SparseForm:
        q = len(I)
        first = self.eta_dx(f, I, K[0])
        if len(K) == 1:
            return first
        rest = K[1:]
        sign = -1 if (q - 1) % 2 else 1
        return first.wedge_right(rest) + self.eta_dxK(f, I, rest).wedge_left(K[:1]).scale(sign)

    def eta_dx(self, f, I, a) -> SparseForm:
        if not I:
            return SparseForm(0, {(): -self.dx_f(a, f)})
        return self.dx_eta(a, f, I).scale(-1)

    def dx_eta(self, a, f, I) -> SparseForm:
        return SparseForm(len(I), {I: self.dx_f(a, f)}) + self.dx_dxI(a, I).scale(f)

    def dx_dxI(self, a, I) -> SparseForm:
        first = self.dxdx(a, I[0])
        if len(I) == 1:
            return first
        return first.wedge_right(I[1:]) + self.dx_dxI(a, I[1:]).wedge_left(I[:1])

    def eta_fn(self, f, I, g) -> SparseForm:
        q = len(I)
        if q == 0:
            return SparseForm(-1)
        sign = 1 if (q - 1) % 2 else -1  # -(-1)^(q-1)
        return self.fn_dxI(g, I).scale(f * sign)

    def fn_dxI(self, g, I) -> SparseForm:
        rest = I[1:]
        first = SparseForm(len(rest), {rest: -self.dx_f(I[0], g)})
        if not rest:
            return first
        return first + self.fn_dxI(g, rest).wedge_left(I[:1]).scale(-1)


def koszul(A, eta, theta):
    """Graded Koszul bracket of two dense form jets (degrees 0..2, result <= 3)."""
    red = _KoszulReducer(A)
    left, right = SparseForm.from_dense(eta), SparseForm.from_dense(theta)
    degree = left.degree + right.degree - 1
    out = SparseForm(degree)
    for I, f in left.terms.items():
        for K, g in right.terms.items():
            term = red.mono(f, I, g, K)
            if term.terms:
                out = out + term
    if degree < 0:
        return 0.0
    return out.to_dense(red.d, like=A) if degree else out.terms.get((), 0.0)


# -- Poisson structures ---------------------------------------------------------


@dataclass(frozen=True)
class PoissonStructure:
    """A bivector field used as a Poisson tensor (Jacobi is checked, not assumed)."""

    bivector: BivectorField

    @property
    def dim(self) -> int:
        return self.bivector.dim

    @property
    def name(self) -> str:
        return self.bivector.name

    def matrix(self, x):
        """Stored matrix ``A`` (``A[i, j] = pi^{ji}``) at plain or jet coordinates."""
        return self.bivector(x)

    def jacobi_residual(self, x) -> float:
        P = components(self.bivector.jet(x, 1))
        return float(np.max(np.abs(J.value(schouten(P, P)))))

    @classmethod
    def canonical(cls, n: int) -> "PoissonStructure":
        A = np.block([[np.zeros((n, n)), np.eye(n)], [-np.eye(n), np.zeros((n, n))]])

        def fn(x):
            return J.const_like(A, x) if isinstance(x, J.Jet) else A

        return cls(BivectorField(fn, 2 * n, "canonical"))


def _jets(x, order, *fields):
    d = check_same_dim(*fields)
    if coords_of(x).shape != (d,):
        raise ValueError(f"fields on R^{d} evaluated at a point of R^{coords_of(x).size}")
    return [f.jet(x, order) for f in fields]


def sharp_at(pi: PoissonStructure, alpha, x) -> np.ndarray:
    """``pi^sharp(alpha)`` at ``x`` for a covector array."""
    return np.asarray(pi.bivector.at(x) @ np.asarray(alpha))


def poisson_bracket(pi: PoissonStructure, f: ScalarField, g: ScalarField, x) -> float:
    A, fj, gj = _jets(x, 1, pi.bivector, f, g)
    d = pi.dim
    return float(J.value(pbracket(A, J.D(fj, d), J.D(gj, d))))


def koszul_bracket_1forms(pi: PoissonStructure, alpha: FormField, beta: FormField, x) -> np.ndarray:
    A, a, b = _jets(x, 1, pi.bivector, alpha, beta)
    return np.asarray(J.value(koszul1(A, a, b)))


def koszul_bracket_2forms(pi: PoissonStructure, w1: FormField, w2: FormField, x) -> np.ndarray:
    A, a, b = _jets(x, 1, pi.bivector, w1, w2)
    return np.asarray(J.value(koszul(A, a, b)))


def koszul_bracket(pi: PoissonStructure, eta: FormField, theta: FormField, x):
    """Graded bracket of forms of any degrees with total degree <= 4."""
    A, a, b = _jets(x, 1, pi.bivector, eta, theta)
    return np.asarray(J.value(koszul(A, a, b)))


def schouten_bracket_bivectors(P: BivectorField, Q: BivectorField, x) -> np.ndarray:
    Pj, Qj = _jets(x, 1, P, Q)
    return np.asarray(J.value(schouten(components(Pj), components(Qj))))


def hamiltonian_vector_field(pi: PoissonStructure, H: ScalarField) -> VectorField:
    check_same_dim(pi.bivector, H)
    d = pi.dim
    return VectorField(lambda x: sharp(pi.matrix(x), J.D(H(x), d)), d, f"X_{H.name}",
                       consumes=max(H.consumes + 1, pi.bivector.consumes))


def differential(H: ScalarField) -> FormField:
    return d_field(FormField(H.fn, H.dim, H.name, H.consumes, degree=0))
