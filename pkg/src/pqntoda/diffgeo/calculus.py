"""Exterior calculus in coordinates on R^d.

Two layers live here.  The jet kernels (``bracket``, ``ext``, ``lie_form1``,
``lie_tensor11``, ``i_N``, ``d_N_jet``, ``wedge``, ``interior``) act on
evaluated jets and consume one derivative order per differentiation; they
are what the rest of the package composes.  The point-level operators
(``lie_bracket``, ``exterior_derivative``, ...) take fields and a point,
seed the jets and return plain arrays.

Form conventions: a p-form is stored fully antisymmetric with
``w[i1..ip] = w(d_i1, ..., d_ip)``, so ``dx^i ^ dx^j`` has ``+1`` at
``[i, j]``.  Every kernel that produces a 2- or 3-form canonicalises it:
only strictly increasing index entries are computed, the rest are filled
by sign, which makes permuted reads bit-identical.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

from . import jet as J
from .fields import (
    DimensionError,
    FormField,
    Tensor11Field,
    VectorField,
    check_same_dim,
    coords_of,
)

# -- antisymmetric storage --------------------------------------------------


@lru_cache(maxsize=None)
def _perm_tables(d: int, p: int):
    shape = (d,) * p
    sorted_idx = np.zeros((p,) + shape, dtype=np.intp)
    sign = np.zeros(shape)
    for idx in itertools.product(range(d), repeat=p):
        if len(set(idx)) < p:
            continue
        order = sorted(range(p), key=lambda s: idx[s])
        inversions = sum(1 for a in range(p) for b in range(a + 1, p) if order[a] > order[b])
        sorted_idx[(slice(None),) + idx] = sorted(idx)
        sign[idx] = -1.0 if inversions % 2 else 1.0
    return tuple(sorted_idx), sign


def canonical(w, p: int | None = None):
    """Rebuild the trailing ``p`` antisymmetric axes from their increasing entries."""
    p = J.value(w).ndim if p is None else p
    if p < 2:
        return w
    d = J.value(w).shape[-1]
    idx, sign = _perm_tables(d, p)

    def fn(a):
        return a[(Ellipsis,) + idx] * sign

    return J.linear(fn, w)


def increasing_entries(w) -> dict:
    """Compressed view ``{(i<j<..): value}`` of a stored form (nonzero entries only)."""
    arr = np.asarray(J.value(w))
    p, d = arr.ndim, arr.shape[0] if arr.ndim else 0
    out = {}
    for idx in itertools.combinations(range(d), p):
        if arr[idx] != 0:
            out[idx] = arr[idx]
    return out


def from_increasing(entries: dict, d: int, p: int) -> np.ndarray:
    arr = np.zeros((d,) * p)
    for idx, val in entries.items():
        arr[tuple(idx)] = val
    return canonical(arr, p)


# -- jet kernels -------------------------------------------------------------


def bracket(X, Y):
    """Lie bracket ``[X, Y] = (DY) X - (DX) Y`` of vector jets."""
    d = J.value(X).shape[0]
    return J.einsum("ik,k->i", J.D(Y, d), X) - J.einsum("ik,k->i", J.D(X, d), Y)


def ext(w):
    """Exterior derivative of a 0-, 1- or 2-form jet."""
    v = J.value(w)
    p = v.ndim
    if p == 0:
        raise ValueError("the dimension of a 0-form cannot be inferred; use J.D(f) directly")
    d = v.shape[0]
    if p == 1:
        G = J.D(w, d)  # G[j, i] = d_i w_j
        return J.einsum("ji->ij", G) - G
    if p == 2:
        G = J.D(w, d)  # G[j, k, i] = d_i w_jk
        return canonical(J.einsum("jki->ijk", G) - J.einsum("ikj->ijk", G) + G, 3)
    raise ValueError(f"exterior derivative of a {p}-form would be a {p + 1}-form; only p <= 2 is supported")


def ext0(f, d: int):
    """Differential of a scalar jet."""
    return J.D(f, d)


def interior(X, w):
    """``i_X w`` for a p-form jet, p >= 1."""
    p = J.value(w).ndim
    if p == 1:
        return J.einsum("i,i->", X, w)
    if p == 2:
        return J.einsum("i,ij->j", X, w)
    if p == 3:
        return J.einsum("i,ijk->jk", X, w)
    raise ValueError("interior product needs a form of degree 1..3")


def wedge(a, b):
    """Wedge product of forms with total degree <= 3 (determinant convention)."""
    pa, pb = J.value(a).ndim, J.value(b).ndim
    if pa == 0 or pb == 0:
        return a * b
    if (pa, pb) == (1, 1):
        return J.einsum("i,j->ij", a, b) - J.einsum("j,i->ij", a, b)
    if (pa, pb) == (1, 2):
        t = J.einsum("i,jk->ijk", a, b) - J.einsum("j,ik->ijk", a, b) + J.einsum("k,ij->ijk", a, b)
        return canonical(t, 3)
    if (pa, pb) == (2, 1):
        return wedge(b, a)
    raise ValueError(f"wedge of degrees {pa} and {pb} exceeds degree 3")


def lie_form1(X, a):
    """Lie derivative of a 1-form: ``(L_X a)_i = X^k d_k a_i + a_k d_i X^k``."""
    d = J.value(X).shape[0]
    return J.einsum("ik,k->i", J.D(a, d), X) + J.einsum("ki,k->i", J.D(X, d), a)


def lie_tensor11(X, N):
    """Lie derivative of a (1,1) tensor, ``(L_X N) Y = [X, NY] - N [X, Y]``."""
    d = J.value(X).shape[0]
    GN = J.D(N, d)  # GN[i, j, k] = d_k N^i_j
    GX = J.D(X, d)  # GX[i, k] = d_k X^i
    return (J.einsum("ijk,k->ij", GN, X) - J.einsum("ik,kj->ij", GX, N)
            + J.einsum("ik,kj->ij", N, GX))


def i_N(N, w):
    """``(i_N w)(X_1..X_p) = sum_s w(.., N X_s, ..)`` for p = 1, 2, 3."""
    p = J.value(w).ndim
    if p == 0:
        raise ValueError("i_N is defined on forms of degree >= 1")
    if p == 1:
        return J.einsum("mi,m->i", N, w)
    if p == 2:
        return canonical(J.einsum("mi,mj->ij", N, w) + J.einsum("mj,im->ij", N, w), 2)
    if p == 3:
        t = (J.einsum("mi,mjk->ijk", N, w) + J.einsum("mj,imk->ijk", N, w)
             + J.einsum("mk,ijm->ijk", N, w))
        return canonical(t, 3)
    raise ValueError("i_N is implemented up to degree 3")


def d_N_jet(N, w, d: int | None = None):
    """``d_N = i_N d - d i_N``; on functions ``d_N f = N^* df``."""
    p = J.value(w).ndim
    if p == 0:
        if d is None:
            d = J.value(N).shape[0]
        return J.einsum("mi,m->i", N, J.D(w, d))
    return i_N(N, ext(w)) - ext(i_N(N, w))


def mat_vec(M, X):
    return J.einsum("ij,j->i", M, X)


def transpose_vec(M, a):
    """``N^* a`` for a (1,1) tensor jet ``M``."""
    return J.einsum("mi,m->i", M, a)


# -- point-level operators ---------------------------------------------------


def _check(fields, x):
    d = check_same_dim(*fields)
    if coords_of(x).shape != (d,):
        raise DimensionError(f"fields on R^{d} evaluated at a point of R^{coords_of(x).size}")
    return d


def lie_bracket(X: VectorField, Y: VectorField, x) -> np.ndarray:
    _check((X, Y), x)
    return np.asarray(J.value(bracket(X.jet(x, 1), Y.jet(x, 1))))


def exterior_derivative(w: FormField, x) -> np.ndarray:
    d = _check((w,), x)
    if w.degree == 0:
        return np.asarray(J.value(ext0(w.jet(x, 1), d)))
    return np.asarray(J.value(ext(w.jet(x, 1))))


def lie_derivative_tensor11(X: VectorField, N: Tensor11Field, x) -> np.ndarray:
    _check((X, N), x)
    return np.asarray(J.value(lie_tensor11(X.jet(x, 1), N.jet(x, 1))))


def i_N_form(N: Tensor11Field, w: FormField, x) -> np.ndarray:
    _check((N, w), x)
    if w.degree == 0:
        raise ValueError("i_N is defined on forms of degree >= 1")
    return np.asarray(J.value(i_N(N.jet(x, 0), w.jet(x, 0))))


def d_N(N: Tensor11Field, w: FormField, x) -> np.ndarray:
    d = _check((N, w), x)
    if w.degree > 2:
        raise ValueError("d_N of a 3-form would be a 4-form; only p <= 2 is supported")
    return np.asarray(J.value(d_N_jet(N.jet(x, 1), w.jet(x, 1), d)))


# -- field combinators --------------------------------------------------------


def d_field(w: FormField) -> FormField:
    """The field ``dw`` (one jet order is consumed at evaluation)."""
    if w.degree == 0:
        return FormField(lambda x: ext0(w(x), w.dim), w.dim, f"d{w.name}", w.consumes + 1, degree=1)
    return FormField(lambda x: ext(w(x)), w.dim, f"d{w.name}", w.consumes + 1, degree=w.degree + 1)


def d_N_field(N: Tensor11Field, w: FormField) -> FormField:
    check_same_dim(N, w)
    return FormField(lambda x: d_N_jet(N(x), w(x), w.dim), w.dim, f"d_N {w.name}",
                     max(N.consumes, w.consumes) + 1, degree=w.degree + 1)


def bracket_field(X: VectorField, Y: VectorField) -> VectorField:
    check_same_dim(X, Y)
    return VectorField(lambda x: bracket(X(x), Y(x)), X.dim, f"[{X.name},{Y.name}]",
                       max(X.consumes, Y.consumes) + 1)


def central_difference(fn, x, h: float = 1e-5) -> np.ndarray:
    """Central finite-difference Jacobian of an array-valued function.

    Returns an array with the derivative axis last, matching jet layout.
    Used only as an independent oracle for the jets.
    """
    x = np.asarray(x, dtype=float)
    cols = []
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = h
        cols.append((np.asarray(fn(x + e), float) - np.asarray(fn(x - e), float)) / (2 * h))
    return np.stack(cols, axis=-1)
