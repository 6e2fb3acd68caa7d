"""Second-order jets of array-valued functions on R^d.

A :class:`Jet` carries the value of a tensor-valued quantity together with
its first and (optionally) second partial derivatives with respect to the
``d`` seeded coordinates.  Derivative axes are always the trailing axes:

* ``v``: component shape ``S``
* ``g``: ``S + (d,)``, ``g[..., k] = d/dx^k``
* ``h``: ``S + (d, d)``

Arithmetic propagates perturbations by the Leibniz rule and truncates to the
lowest order among the operands.  :func:`D` turns the derivative layer into
a component axis (order drops by one), which is how every differential
operator in the package is built.

Plain ``numpy`` arrays are accepted everywhere and behave as constants, so
field evaluators can be run on bare coordinates when no derivatives are
required.
"""

from __future__ import annotations

import numbers
import string

import numpy as np

__all__ = [
    "Jet",
    "D",
    "seed",
    "value",
    "is_jet",
    "einsum",
    "exp",
    "log",
    "stack",
    "assemble",
    "transpose",
    "trace",
    "matpow_list",
    "const_like",
]


def _asarray(x):
    if isinstance(x, np.ndarray):
        return x
    if isinstance(x, (int, float, np.integer, np.floating)) and not isinstance(x, bool):
        return np.asarray(x, dtype=float)
    return np.asarray(x, dtype=object) if isinstance(x, numbers.Real) else np.asarray(x)


class Jet:
    """Truncated Taylor data (order 0, 1 or 2) of a tensor-valued function."""

    __slots__ = ("v", "g", "h")
    __array_priority__ = 100.0  # make ndarray <op> Jet defer to Jet

    def __init__(self, v, g=None, h=None):
        self.v = _asarray(v)
        self.g = None if g is None else _asarray(g)
        self.h = _asarray(h) if (g is not None and h is not None) else None

    # -- bookkeeping -----------------------------------------------------
    @property
    def order(self) -> int:
        if self.g is None:
            return 0
        return 1 if self.h is None else 2

    @property
    def shape(self) -> tuple:
        return self.v.shape

    @property
    def ndim(self) -> int:
        return self.v.ndim

    @property
    def dim(self) -> int | None:
        return None if self.g is None else self.g.shape[-1]

    def truncate(self, order: int) -> "Jet":
        if order >= self.order:
            return self
        if order == 0:
            return Jet(self.v)
        return Jet(self.v, self.g)

    def is_zero(self) -> bool:
        """True when value and every stored derivative vanish identically."""
        return all(not np.any(p) for p in (self.v, self.g, self.h) if p is not None)

    def __repr__(self) -> str:
        return f"Jet(shape={self.shape}, order={self.order})"

    # -- elementwise arithmetic -------------------------------------------
    def __neg__(self):
        return Jet(-self.v, None if self.g is None else -self.g,
                   None if self.h is None else -self.h)

    def __pos__(self):
        return self

    def __add__(self, other):
        if not isinstance(other, Jet):
            v = _asarray(self.v + other)
            if v.shape == self.v.shape or self.g is None:
                return Jet(v, self.g, self.h)
            d = self.dim
            g = np.broadcast_to(self.g, v.shape + (d,))
            h = None if self.h is None else np.broadcast_to(self.h, v.shape + (d, d))
            return Jet(v, g, h)
        k = min(self.order, other.order)
        a, b = self.truncate(k), other.truncate(k)
        v = a.v + b.v
        if k == 0:
            return Jet(v)
        g = _bcast_add(a.g, a.v, b.g, b.v, 1)
        if k == 1:
            return Jet(v, g)
        return Jet(v, g, _bcast_add(a.h, a.v, b.h, b.v, 2))

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            c = _asarray(other)
            return Jet(self.v * c,
                       None if self.g is None else self.g * c[..., None],
                       None if self.h is None else self.h * c[..., None, None])
        k = min(self.order, other.order)
        a, b = self.truncate(k), other.truncate(k)
        v = a.v * b.v
        if k == 0:
            return Jet(v)
        g = a.g * b.v[..., None] + a.v[..., None] * b.g
        if k == 1:
            return Jet(v, g)
        h = (a.h * b.v[..., None, None] + a.v[..., None, None] * b.h
             + a.g[..., :, None] * b.g[..., None, :]
             + b.g[..., :, None] * a.g[..., None, :])
        return Jet(v, g, h)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            # divide each layer so object (mpfr) arrays keep their precision
            c = _asarray(other)
            return Jet(self.v / c,
                       None if self.g is None else self.g / c[..., None],
                       None if self.h is None else self.h / c[..., None, None])
        return self * _reciprocal(other)

    def __rtruediv__(self, other):
        return _reciprocal(self) * other

    def __pow__(self, k):
        if not isinstance(k, numbers.Integral) or k < 0:
            raise ValueError("only non-negative integer powers are supported")
        if k == 0:
            return const_like(np.ones_like(self.v), self)
        f0 = self.v ** k
        f1 = k * self.v ** (k - 1)
        f2 = k * (k - 1) * self.v ** (k - 2) if k >= 2 else np.zeros_like(self.v)
        return _chain(self, f0, f1, f2)

    def __getitem__(self, idx):
        if not isinstance(idx, tuple):
            idx = (idx,)
        if any(i is Ellipsis for i in idx):
            raise IndexError("Jet indexing acts on component axes only; no Ellipsis")
        return Jet(self.v[idx],
                   None if self.g is None else self.g[idx],
                   None if self.h is None else self.h[idx])

    @property
    def T(self) -> "Jet":
        return transpose(self)


def _bcast_add(ga, va, gb, vb, nder):
    # broadcast the component shapes before adding the derivative layers
    shape = np.broadcast_shapes(va.shape, vb.shape)
    tail = ga.shape[ga.ndim - nder:]
    return np.broadcast_to(ga, shape + tail) + np.broadcast_to(gb, shape + tail)


def _chain(u: Jet, f0, f1, f2) -> Jet:
    """Apply a scalar function given its value and first two derivatives at ``u.v``."""
    if u.g is None:
        return Jet(f0)
    g = f1[..., None] * u.g
    if u.h is None:
        return Jet(f0, g)
    h = f1[..., None, None] * u.h + f2[..., None, None] * (u.g[..., :, None] * u.g[..., None, :])
    return Jet(f0, g, h)


def _reciprocal(u: Jet) -> Jet:
    r = _asarray(1 / u.v)
    return _chain(u, r, -r * r, 2 * r * r * r)


def _ufunc(x: np.ndarray, name: str):
    if x.dtype == object:
        import gmpy2

        return np.asarray(np.frompyfunc(getattr(gmpy2, name), 1, 1)(x), dtype=object)
    return getattr(np, name)(x)


def exp(x):
    if not isinstance(x, Jet):
        return _ufunc(_asarray(x), "exp")
    e = _ufunc(x.v, "exp")
    return _chain(x, e, e, e)


def log(x):
    if not isinstance(x, Jet):
        return _ufunc(_asarray(x), "log")
    r = _asarray(1 / x.v)
    return _chain(x, _ufunc(x.v, "log"), r, -r * r)


def is_jet(x) -> bool:
    return isinstance(x, Jet)


def value(x) -> np.ndarray:
    """The value layer of a jet, or the array itself."""
    return x.v if isinstance(x, Jet) else _asarray(x)


def seed(x, order: int) -> Jet | np.ndarray:
    """Identity jet at coordinates ``x`` (the coordinate functions themselves)."""
    x = _asarray(x)
    if order == 0:
        return x
    d = x.shape[0]
    g = np.eye(d, dtype=x.dtype if x.dtype != object else float)
    if order == 1:
        return Jet(x, g)
    if order == 2:
        return Jet(x, g, np.zeros((d, d, d)))
    raise ValueError("jets are truncated at order 2")


def const_like(c, like) -> Jet | np.ndarray:
    """Embed a constant array as a jet with the same order/dimension as ``like``."""
    c = _asarray(c)
    if not isinstance(like, Jet) or like.g is None:
        return c
    d = like.dim
    g = np.zeros(c.shape + (d,))
    h = None if like.h is None else np.zeros(c.shape + (d, d))
    return Jet(c, g, h)


def D(x: Jet, dim: int | None = None) -> Jet | np.ndarray:
    """Promote the derivative layer to a trailing component axis.

    ``D(x).v[..., k]`` is the partial derivative of ``x`` along coordinate
    ``k``.  A constant array needs ``dim`` and differentiates to zeros.
    """
    if not isinstance(x, Jet):
        if dim is None:
            raise ValueError("differentiating a constant requires its dimension")
        return np.zeros(_asarray(x).shape + (dim,))
    if x.g is None:
        raise ValueError("cannot differentiate an order-0 jet; seed a higher order")
    return Jet(x.g, x.h) if x.h is not None else Jet(x.g)


# -- linear and bilinear maps ----------------------------------------------

def _parse(subscripts: str):
    lhs, out = subscripts.replace(" ", "").split("->")
    ops = lhs.split(",")
    pool = [c for c in string.ascii_uppercase if c not in subscripts]
    return ops, out, pool[0], pool[1]


def einsum(subscripts: str, *operands):
    """Einstein summation over component axes for one or two jet operands.

    Derivative axes are carried along automatically, so the caller writes
    the subscripts exactly as for the value arrays.
    """
    ops, out, Y, Z = _parse(subscripts)
    if len(operands) != len(ops) or len(ops) not in (1, 2):
        raise ValueError("einsum on jets supports one or two operands")
    if len(ops) == 1:
        (a,) = operands
        if not isinstance(a, Jet):
            return np.einsum(subscripts, a)
        (s,) = ops
        v = np.einsum(f"{s}->{out}", a.v)
        g = None if a.g is None else np.einsum(f"{s}{Y}->{out}{Y}", a.g)
        h = None if a.h is None else np.einsum(f"{s}{Y}{Z}->{out}{Y}{Z}", a.h)
        return Jet(v, g, h)

    a, b = operands
    sa, sb = ops
    ja, jb = isinstance(a, Jet), isinstance(b, Jet)
    if not ja and not jb:
        return np.einsum(subscripts, a, b)
    if ja and jb:
        k = min(a.order, b.order)
        a, b = a.truncate(k), b.truncate(k)
    else:
        k = a.order if ja else b.order
    av = a.v if ja else _asarray(a)
    bv = b.v if jb else _asarray(b)
    v = np.einsum(f"{sa},{sb}->{out}", av, bv)
    if k == 0:
        return Jet(v)
    g = 0
    if ja:
        g = g + np.einsum(f"{sa}{Y},{sb}->{out}{Y}", a.g, bv)
    if jb:
        g = g + np.einsum(f"{sa},{sb}{Y}->{out}{Y}", av, b.g)
    if k == 1:
        return Jet(v, g)
    h = 0
    if ja:
        h = h + np.einsum(f"{sa}{Y}{Z},{sb}->{out}{Y}{Z}", a.h, bv)
    if jb:
        h = h + np.einsum(f"{sa},{sb}{Y}{Z}->{out}{Y}{Z}", av, b.h)
    if ja and jb:
        cross = np.einsum(f"{sa}{Y},{sb}{Z}->{out}{Y}{Z}", a.g, b.g)
        h = h + cross + np.swapaxes(cross, -1, -2)
    return Jet(v, g, h)


def linear(fn, x):
    """Apply a linear map acting on the trailing component axes of ``x``.

    ``fn`` receives arrays whose leading axes are batch axes (the derivative
    layers are moved to the front) and must act on trailing axes only.
    """
    if not isinstance(x, Jet):
        return fn(_asarray(x))
    v = fn(x.v)
    g = None if x.g is None else np.moveaxis(fn(np.moveaxis(x.g, -1, 0)), 0, -1)
    h = None if x.h is None else np.moveaxis(fn(np.moveaxis(x.h, (-2, -1), (0, 1))), (0, 1), (-2, -1))
    return Jet(v, g, h)


def transpose(x, axes=None):
    if not isinstance(x, Jet):
        return np.transpose(x, axes)
    nc = x.ndim
    axes = tuple(reversed(range(nc))) if axes is None else tuple(axes)
    v = x.v.transpose(axes)
    g = None if x.g is None else x.g.transpose(axes + (nc,))
    h = None if x.h is None else x.h.transpose(axes + (nc, nc + 1))
    return Jet(v, g, h)


def trace(x):
    return einsum("ii->", x)


def stack(items, axis: int = 0):
    """Stack jets (or constants) along a new leading component axis."""
    if axis != 0:
        raise ValueError("only axis=0 stacking is supported")
    jets = [it for it in items if isinstance(it, Jet)]
    if not jets:
        return np.stack([_asarray(it) for it in items])
    k = min(j.order for j in jets)
    ref = jets[0]
    items = [it.truncate(k) if isinstance(it, Jet) else const_like(it, ref.truncate(k)) for it in items]
    v = np.stack([it.v for it in items])
    if k == 0:
        return Jet(v)
    g = np.stack([it.g for it in items])
    if k == 1:
        return Jet(v, g)
    return Jet(v, g, np.stack([it.h for it in items]))


def assemble(shape: tuple, entries, like=None):
    """Build an array-valued jet from sparse ``(index, scalar)`` entries.

    Repeated indices accumulate.  ``like`` fixes order and dimension when no
    entry is a jet (e.g. constant matrices evaluated on a seeded point).
    """
    entries = list(entries)
    jets = [val for _, val in entries if isinstance(val, Jet)]
    ref = jets[0] if jets else like if isinstance(like, Jet) else None
    if ref is None or ref.g is None:
        out = np.zeros(shape, dtype=_result_dtype(entries))
        for idx, val in entries:
            out[idx] += value(val)
        return out
    k = min([j.order for j in jets] + ([ref.order] if not jets else []))
    d = ref.dim
    dtype = _result_dtype(entries)
    v = np.zeros(shape, dtype=dtype)
    g = np.zeros(shape + (d,), dtype=dtype)
    h = np.zeros(shape + (d, d), dtype=dtype) if k == 2 else None
    for idx, val in entries:
        if isinstance(val, Jet):
            val = val.truncate(k)
            v[idx] += val.v
            g[idx] += val.g
            if h is not None:
                h[idx] += val.h
        else:
            v[idx] += val
    return Jet(v, g, h) if k >= 1 else Jet(v)


def _result_dtype(entries):
    for _, val in entries:
        arr = value(val)
        if arr.dtype == object:
            return object
        if arr.dtype == np.longdouble:
            return np.longdouble
    return float


def matpow_list(M, kmax: int):
    """``[I, M, M^2, ..., M^kmax]`` by repeated multiplication."""
    n = value(M).shape[0]
    eye = const_like(np.eye(n, dtype=value(M).dtype if value(M).dtype != object else float), M)
    out = [eye]
    for _ in range(kmax):
        out.append(M if len(out) == 1 else einsum("ij,jk->ik", out[-1], M))
    return out
