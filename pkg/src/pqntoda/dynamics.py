"""Hamiltonian flows and conservation monitoring along trajectories."""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .diffgeo import jet as J
from .diffgeo.fields import ScalarField, Tensor11Field, coords_of
from .poisson import PoissonStructure
from .toda import DomainError


class Scheme(str, enum.Enum):
    LEAPFROG = "leapfrog"
    RK4 = "rk4"


class SchemeError(ValueError):
    """The requested scheme cannot integrate this structure or Hamiltonian."""


class BlowUpError(RuntimeError):
    """Integration left the finite (or exponent-guarded) domain."""

    def __init__(self, msg: str, trajectory: "Trajectory"):
        super().__init__(msg)
        self.trajectory = trajectory

    @property
    def last_time(self) -> float:
        return float(self.trajectory.times[-1])


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    monitored: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, float)
        self.states = np.asarray(self.states, float)
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must increase strictly")

    @property
    def n(self) -> int:
        return self.states.shape[1] // 2

    def to_csv(self, path: str | Path) -> None:
        """One row per sample: ``t, q_1.., p_1..`` then each monitored column."""
        n = self.n
        names = list(self.monitored)
        header = ["t"] + [f"q_{i}" for i in range(1, n + 1)] + [f"p_{i}" for i in range(1, n + 1)] + names
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r, t in enumerate(self.times):
                row = [t, *self.states[r], *(self.monitored[k][r] for k in names)]
                w.writerow([repr(float(v)) for v in row])

    @classmethod
    def read_csv(cls, path: str | Path) -> "Trajectory":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        header, data = rows[0], np.array(rows[1:], dtype=float).reshape(-1, len(rows[0]))
        d = sum(1 for h in header if h[:2] in ("q_", "p_"))
        mon = {h: data[:, 1 + d + i] for i, h in enumerate(header[1 + d:])}
        return cls(data[:, 0], data[:, 1:1 + d], mon)


def gradient(H: ScalarField, x: np.ndarray) -> np.ndarray:
    return np.asarray(J.value(J.D(H.jet(x, 1))), float)


def is_canonical(pi: PoissonStructure, x: np.ndarray) -> bool:
    return bool(np.array_equal(pi.bivector.at(x), PoissonStructure.canonical(len(x) // 2).bivector.at(x)))


def is_separable(H: ScalarField, x: np.ndarray, tol: float = 1e-12) -> bool:
    """``d^2 H / dq dp = 0`` at ``x`` (a pointwise probe of ``H = T(p) + V(q)``)."""
    n = len(x) // 2
    hess = np.asarray(J.value(J.D(J.D(H.jet(x, 2)))), float)
    return bool(np.max(np.abs(hess[:n, n:]), initial=0.0) <= tol)


def _leapfrog_step(H, x, dt, g=None):
    """Kick-drift-kick.

    Returns the new state and a gradient whose ``q`` part is valid there
    (``dV/dq`` does not see ``p``), so the next step can skip one evaluation.
    """
    n = len(x) // 2
    g = gradient(H, x) if g is None else g
    p = x[n:] - 0.5 * dt * g[:n]
    y = np.concatenate([x[:n], p])
    y[:n] = x[:n] + dt * gradient(H, y)[n:]
    g = gradient(H, y)
    y[n:] = p - 0.5 * dt * g[:n]
    return y, g


def _rk4_step(pi, H, x, dt):
    f = lambda z: pi.bivector.at(z) @ gradient(H, z)  # noqa: E731
    k1 = f(x)
    k2 = f(x + 0.5 * dt * k1)
    k3 = f(x + 0.5 * dt * k2)
    k4 = f(x + dt * k3)
    return x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate(pi: PoissonStructure, H: ScalarField, x0, T: float, dt: float,
              scheme: Scheme | str = Scheme.LEAPFROG) -> Trajectory:
    """Flow of ``X_H = pi^sharp dH`` sampled at multiples of ``dt`` up to ``T``.

    Leapfrog needs the canonical structure and a separable ``H``; backward
    runs go through :func:`reverse`.
    """
    scheme = Scheme(scheme)
    x = np.asarray(coords_of(x0), float).copy()
    if dt <= 0:
        raise ValueError("dt must be positive")
    if T < 0:
        raise ValueError("T must be non-negative; use reverse() for backward runs")
    if scheme is Scheme.LEAPFROG:
        if not is_canonical(pi, x):
            raise SchemeError("leapfrog integrates canonical structures only; use rk4")
        try:
            separable = is_separable(H, x)
        except DomainError as err:
            raise BlowUpError(f"initial state outside the domain: {err}", Trajectory([0.0], [x])) from err
        if not separable:
            raise SchemeError(f"leapfrog needs a separable Hamiltonian; {H.name!r} mixes q and p")
    steps = int(round(T / dt))
    times, states, g = [0.0], [x], None
    for s in range(1, steps + 1):
        try:
            if scheme is Scheme.LEAPFROG:
                x, g = _leapfrog_step(H, x, dt, g)
            else:
                x = _rk4_step(pi, H, x, dt)
        except DomainError as err:
            raise BlowUpError(f"blow-up after t = {times[-1]:g}: {err}", Trajectory(times, states)) from err
        if not np.all(np.isfinite(x)):
            raise BlowUpError(f"non-finite state after t = {times[-1]:g}", Trajectory(times, states))
        times.append(s * dt)
        states.append(x)
    return Trajectory(np.array(times), np.array(states))


def reverse(x: np.ndarray) -> np.ndarray:
    """Momentum flip, which reverses a separable canonical flow."""
    x = np.asarray(x, float).copy()
    n = x.size // 2
    x[n:] *= -1
    return x


def trace_values(N: Tensor11Field, x: np.ndarray, K: int) -> np.ndarray:
    """``H_1..H_K`` at one point from plain matrix powers."""
    M = np.asarray(N.at(x), float)
    out, P = [], np.eye(M.shape[0])
    for k in range(1, K + 1):
        P = P @ M
        out.append(np.trace(P) / (2 * k))
    return np.array(out)


def monitor(traj: Trajectory, N: Tensor11Field, K: int, prefix: str = "H") -> Trajectory:
    """Attach ``H_k = Tr(N^k)/2k`` columns (``prefix_k``) to ``traj``."""
    vals = np.array([trace_values(N, x, K) for x in traj.states]).reshape(len(traj.states), K)
    for k in range(K):
        traj.monitored[f"{prefix}_{k + 1}"] = vals[:, k]
    return traj


@dataclass(frozen=True)
class Drift:
    name: str
    initial: float
    max_abs: float
    relative: float  # max_abs / max(|initial|, 1)


def conservation_report(traj: Trajectory, chain=None, K: int | None = None) -> list[Drift]:
    """Drift of each monitored function; a ``ChainData`` (or ``N`` field) is monitored first."""
    if chain is not None:
        N = chain.structure.N if hasattr(chain, "structure") else chain
        monitor(traj, N, K or getattr(chain, "K_max", 1))
    out = []
    for name, v in traj.monitored.items():
        dev = float(np.max(np.abs(v - v[0])))
        out.append(Drift(name, float(v[0]), dev, dev / max(abs(float(v[0])), 1.0)))
    return out
