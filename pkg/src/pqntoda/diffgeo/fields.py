"""Phase-space points and differentiable component fields on R^{2n}."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, ClassVar

import numpy as np

from .jet import Jet, seed, value


class DimensionError(ValueError):
    """Field and point (or two fields) live on spaces of different dimension."""


class Chart(str, enum.Enum):
    PHYSICAL = "physical"  # (q_1..q_n, p_1..p_n)
    FLASCHKA = "flaschka"  # (a_1..a_n, b_1..b_n)


@dataclass(frozen=True)
class Point:
    """A point of R^{2n} tagged with its chart.

    In the Flaschka chart every ``a_i`` must be negative (the image of the
    Flaschka map).
    """

    coords: np.ndarray
    chart: Chart = Chart.PHYSICAL

    def __post_init__(self):
        c = np.asarray(self.coords)
        if c.dtype.kind in "iub":
            c = c.astype(float)
        if c.ndim != 1 or c.size == 0 or c.size % 2:
            raise DimensionError(f"phase-space points need an even number of coordinates, got shape {c.shape}")
        chart = Chart(self.chart)
        if chart is Chart.FLASCHKA and np.any(c[: c.size // 2] >= 0):
            raise ValueError("Flaschka points require a_i < 0 for every i")
        object.__setattr__(self, "coords", c)
        object.__setattr__(self, "chart", chart)

    @classmethod
    def physical(cls, q, p) -> "Point":
        return cls(np.concatenate([np.asarray(q, float), np.asarray(p, float)]), Chart.PHYSICAL)

    @classmethod
    def flaschka(cls, a, b) -> "Point":
        return cls(np.concatenate([np.asarray(a, float), np.asarray(b, float)]), Chart.FLASCHKA)

    @property
    def dim(self) -> int:
        return self.coords.size

    @property
    def n(self) -> int:
        return self.coords.size // 2

    @property
    def first(self) -> np.ndarray:
        """q in the physical chart, a in the Flaschka chart."""
        return self.coords[: self.n]

    @property
    def second(self) -> np.ndarray:
        """p in the physical chart, b in the Flaschka chart."""
        return self.coords[self.n:]


def coords_of(x) -> np.ndarray:
    return x.coords if isinstance(x, Point) else np.asarray(x)


@dataclass(frozen=True)
class Field:
    """A component evaluator ``x -> components`` accepting plain or jet coordinates.

    ``rank`` is the number of component axes, each of length ``dim``.
    ``consumes`` counts the derivative orders the evaluator uses internally
    (a field defined through ``d`` or a Lie derivative consumes one), so
    :meth:`jet` and :meth:`at` seed deep enough for the requested output.
    """

    fn: Callable
    dim: int
    name: str = field(default="", compare=False)
    consumes: int = field(default=0, compare=False)

    kind: ClassVar[str] = "field"
    rank: ClassVar[int] = 0

    def __call__(self, x):
        return self.fn(x)

    def jet(self, x, order: int = 1):
        """Evaluate at ``x`` (a :class:`Point` or coordinate array) as a jet of ``order``."""
        c = coords_of(x)
        if c.shape != (self.dim,):
            raise DimensionError(f"{self.kind} field on R^{self.dim} evaluated at a point of R^{c.size}")
        depth = order + self.consumes
        if depth > 2:
            raise ValueError(f"{self.name!r} needs {depth} derivative orders; jets stop at 2")
        out = self.fn(seed(c, depth))
        shape = value(out).shape
        if shape != self.component_shape:
            raise DimensionError(f"{self.kind} field {self.name!r} returned components of shape {shape}")
        return out

    def at(self, x) -> np.ndarray:
        return np.asarray(value(self.jet(x, order=0)))

    @property
    def component_shape(self) -> tuple:
        return (self.dim,) * self.rank


class ScalarField(Field):
    kind = "scalar"
    rank = 0


class VectorField(Field):
    kind = "vector"
    rank = 1


class Tensor11Field(Field):
    """(1,1) tensor; component ``[i, j]`` is ``N^i_j`` (column-vector convention)."""

    kind = "tensor11"
    rank = 2


class BivectorField(Field):
    """Bivector stored as the sharp matrix: entry ``[i, j]`` is ``pi^{ji}``."""

    kind = "bivector"
    rank = 2


@dataclass(frozen=True)
class FormField(Field):
    """p-form stored as a fully antisymmetric array, ``w[i, j] = w(d_i, d_j)``."""

    degree: int = 1
    kind: ClassVar[str] = "form"

    @property
    def component_shape(self) -> tuple:
        return (self.dim,) * self.degree


def CovectorField(fn, dim, name="") -> FormField:
    return FormField(fn, dim, name, degree=1)


def check_same_dim(*fields: Field) -> int:
    dims = {f.dim for f in fields}
    if len(dims) != 1:
        raise DimensionError(f"fields live on different spaces: {sorted(dims)}")
    return dims.pop()


def constant_field(cls, arr, name="", **kw):
    """Field with constant components (``cls`` picks the tensor type)."""
    arr = np.asarray(arr, dtype=float)
    d = arr.shape[0] if arr.ndim else kw.pop("dim")

    def fn(x):
        from .jet import const_like

        return const_like(arr, x) if isinstance(x, Jet) else arr

    return cls(fn, d, name, **kw)
