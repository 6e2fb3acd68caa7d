"""Nijenhuis torsion, PqN axioms, deformations, trace Hamiltonians and chains.

All checks return max-abs residuals; relative norms are avoided because
most exact values are zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .diffgeo import jet as J
from .diffgeo.calculus import (
    bracket,
    canonical,
    d_N_jet,
    ext,
    i_N,
    lie_form1,
    lie_tensor11,
    mat_vec,
    wedge,
)
from .diffgeo.fields import (
    FormField,
    ScalarField,
    Tensor11Field,
    VectorField,
    check_same_dim,
    coords_of,
)
from .poisson import PoissonStructure, koszul, pairing, sharp


class NotClosedError(ValueError):
    """A deformation 2-form failed the closedness check."""


def _maxabs(x) -> float:
    arr = np.asarray(J.value(x), dtype=float)
    return float(np.max(np.abs(arr))) if arr.size else 0.0


# -- jet kernels -------------------------------------------------------------


def torsion(N):
    """Full torsion table ``T[i, a, b] = T_N(d_a, d_b)^i`` from ``[NX,NY] - N(...)``."""
    d = J.value(N).shape[0]
    G = J.D(N, d)  # G[i, j, k] = d_k N^i_j
    nn = J.einsum("ibk,ka->iab", G, N)
    t = nn - J.einsum("iab->iba", nn)
    # [N d_a, d_b] + [d_a, N d_b] = -d_b N^m_a + d_a N^m_b
    inner = J.einsum("mab->mba", G) - G
    return canonical(t - J.einsum("im,mab->iab", N, inner), 2)


def torsion_on(N_of, X, Y, x):
    """Torsion from the defining brackets on arbitrary vector jets ``X``, ``Y``.

    ``N_of`` is the field evaluator, so ``NX`` and ``NY`` are differentiated
    as fields.
    """
    N = N_of(x)
    NX, NY = mat_vec(N, X), mat_vec(N, Y)
    inner = bracket(NX, Y) + bracket(X, NY) - mat_vec(N, bracket(X, Y))
    return bracket(NX, NY) - mat_vec(N, inner)


def i_X_torsion_lie(N, X):
    """``i_X T_N = L_{NX} N - N L_X N`` as a matrix jet."""
    return lie_tensor11(mat_vec(N, X), N) - J.einsum("ij,jk->ik", N, lie_tensor11(X, N))


def compat_residuals(A, N):
    """Residual tensors of the two compatibility conditions on basis covectors/vectors.

    Returns ``(N A - A N^T, R)`` with ``R[j, a, b]`` the ``d_j`` component of
    ``L_{pi# dx^a}(N) d_b - pi# L_{d_b}(N^* dx^a) + pi# L_{N d_b} dx^a``.
    """
    d = J.value(N).shape[0]
    r1 = J.einsum("ij,jk->ik", N, A) - J.einsum("ij,kj->ik", A, N)
    GN, GA = J.D(N, d), J.D(A, d)
    lie = (J.einsum("jbk,ka->jab", GN, A) - J.einsum("jak,kb->jab", GA, N)
           + J.einsum("jk,kab->jab", N, GA))
    t2 = J.einsum("ji,aib->jab", A, GN)
    t3 = J.einsum("ji,abi->jab", A, GN)
    return r1, lie - t2 + t3


def flat_matrix(W):
    """Matrix of ``Omega^flat`` (vectors to covectors): ``(W^flat X)_j = X^i W_ij``."""
    return J.transpose(W)


def pi_omega(A, W):
    """The (1,1) tensor ``pi^sharp Omega^flat``."""
    return J.einsum("ik,jk->ij", A, W)


def _div(x, k: int):
    return x / k if isinstance(x, J.Jet) else np.asarray(x) / k


def trace_hamiltonians(N, kmax: int):
    """``H_k = Tr(N^k) / 2k`` for k = 1..kmax, plus the list of powers ``N^0..N^kmax``."""
    powers = J.matpow_list(N, kmax)
    return [_div(J.trace(powers[k]), 2 * k) for k in range(1, kmax + 1)], powers


def phi_forms(T, powers, kmax: int):
    """``<phi_k, d_i> = Tr(N^k i_{d_i} T_N) / 2`` for k = 0..kmax."""
    return [J.einsum("jm,mij->i", powers[k], T) * 0.5 for k in range(kmax + 1)]


# -- structures --------------------------------------------------------------


@dataclass(frozen=True)
class PqNStructure:
    """``(pi, N, phi)``; ``phi=None`` means the zero 3-form (a PN candidate)."""

    pi: PoissonStructure
    N: Tensor11Field
    phi: FormField | None = None
    name: str = field(default="", compare=False)

    def __post_init__(self):
        fields = [self.pi.bivector, self.N] + ([self.phi] if self.phi is not None else [])
        check_same_dim(*fields)

    @property
    def dim(self) -> int:
        return self.N.dim

    def phi_jet(self, x):
        if self.phi is None:
            return 0.0
        return self.phi(x)

    def evaluate(self, x, order: int = 2) -> "StructurePoint":
        return StructurePoint.build(self, x, order)


def deform(pi: PoissonStructure, N: Tensor11Field, phi: FormField | None, Omega: FormField,
           sign: int = 1, check_points=None, tol: float = 1e-10) -> PqNStructure:
    """Deformation by the closed 2-form ``sign * Omega``.

    ``N -> N + s pi# Omega^flat`` and ``phi -> phi + s d_N Omega + [Omega, Omega]_pi / 2``.
    ``dOmega`` is checked at ``check_points`` (plain coordinate arrays or
    points); a residual above ``tol`` raises :class:`NotClosedError`.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    d = check_same_dim(pi.bivector, N, Omega)
    if Omega.degree != 2:
        raise ValueError("deformations need a 2-form")
    if check_points is None:
        rng = np.random.default_rng(0)
        check_points = rng.uniform(-1.0, 1.0, size=(3, d))
    for x in check_points:
        r = _maxabs(ext(Omega.jet(x, 1)))
        if r > tol:
            raise NotClosedError(f"dOmega = {r:.3e} at x = {np.round(coords_of(x), 6).tolist()}")

    def N_hat(x):
        return N(x) + pi_omega(pi.matrix(x), Omega(x)) * float(sign)

    def phi_hat(x):
        A, W, Nx = pi.matrix(x), Omega(x), N(x)
        out = d_N_jet(Nx, W) * float(sign) + koszul(A, W, W) * 0.5
        return out + phi(x) if phi is not None else out

    tag = "+" if sign > 0 else "-"
    base = max(pi.bivector.consumes, N.consumes, Omega.consumes, phi.consumes if phi else 0)
    return PqNStructure(pi, Tensor11Field(N_hat, d, f"{N.name}{tag}", base),
                        FormField(phi_hat, d, f"phi{tag}", base + 1, degree=3),
                        name=f"deformed({tag})")


@dataclass
class StructurePoint:
    """Jets of one structure at one point, with the derived quantities cached."""

    A: object
    N: object
    phi: object
    d: int
    _torsion: object = None

    @classmethod
    def build(cls, s: PqNStructure, x, order: int = 2) -> "StructurePoint":
        xj = J.seed(coords_of(x), order)
        return cls(s.pi.matrix(xj), s.N(xj), s.phi_jet(xj) if order >= 1 else None, s.dim)

    @property
    def T(self):
        if self._torsion is None:
            self._torsion = torsion(self.N)
        return self._torsion


@dataclass(frozen=True)
class ChainValues:
    """Chain quantities at one point, computed from ``N``, ``dN`` and matrix powers.

    ``dH_k = Tr(N^{k-1} dN) / 2`` avoids lifting every power to a jet, which
    keeps extended-precision evaluation cheap.  Index ``k - 1`` holds ``H_k``.
    """

    A: np.ndarray
    N: np.ndarray
    N_jet: object
    powers: list
    H: np.ndarray
    dH: np.ndarray
    X: np.ndarray
    f: np.ndarray | None

    @property
    def K(self) -> int:
        return len(self.H)

    @cached_property
    def T(self) -> np.ndarray:
        return np.asarray(J.value(torsion(self.N_jet)))

    def phi(self, k: int) -> np.ndarray:
        """``<phi_k, d_i> = Tr(N^k i_{d_i} T_N) / 2``."""
        return np.einsum("jm,mij->i", self.powers[k], self.T) / 2

    def bracket(self, j: int, k: int):
        return self.dH[j - 1] @ self.A @ self.dH[k - 1]

    def involutivity(self, K: int | None = None) -> np.ndarray:
        dH = self.dH[: K or self.K]
        return np.abs(dH @ self.A @ dH.T)

    def lm_residual(self, N_other: np.ndarray, k: int) -> np.ndarray:
        """``N_other^* dH_k - dH_{k+1} - f_k dH_1``."""
        if self.f is None:
            raise ValueError("the chain needs Omega to define f_k")
        return N_other.T @ self.dH[k - 1] - self.dH[k] - self.f[k - 1] * self.dH[0]

    def recursion_residual(self, k: int) -> np.ndarray:
        """``N^* dH_k - dH_{k+1} - phi_{k-1}``."""
        return self.N.T @ self.dH[k - 1] - self.dH[k] - self.phi(k - 1)

    def recadd(self, k: int, j: int):
        return (self.bracket(k, j) - self.bracket(k - 1, j + 1)
                + self.phi(j - 1) @ self.X[k - 2] + self.phi(k - 2) @ self.X[j - 1])

    def condition_b(self, W: np.ndarray) -> "ConditionB":
        K, P = self.K, self.powers
        Y = np.array([P[k - 1] @ self.X[0] - self.X[k - 1] for k in range(1, K + 1)])
        phis = [self.phi(l) for l in range(max(K - 1, 1))]
        dual = 0.0
        for k in range(2, K + 1):
            acc = sum(P[k - l - 2].T @ phis[l] for l in range(k - 1))
            dual = max(dual, float(np.max(np.abs(Y[k - 1] - self.A @ acc))))
        flat = Y @ W  # (W^flat Y)_j = Y^i W_ij
        return ConditionB(Y, np.max(np.abs(flat), axis=1).astype(float),
                          (self.X @ W @ Y.T).astype(float), dual)


def chain_values(structure: PqNStructure, K: int, x, Omega: FormField | None = None,
                 Omega_sign: int = 1) -> ChainValues:
    d = structure.dim
    xj = J.seed(coords_of(x), 1)
    A = np.asarray(J.value(structure.pi.matrix(xj)))
    Nj = structure.N(xj)
    N = np.asarray(J.value(Nj))
    G = np.asarray(J.value(J.D(Nj, d)))  # G[a, b, i] = d_i N^a_b
    powers = [np.eye(d, dtype=N.dtype) if N.dtype != object else np.eye(d).astype(object)]
    for _ in range(K):
        powers.append(powers[-1] @ N)
    H = np.array([np.trace(powers[k]) / (2 * k) for k in range(1, K + 1)])
    dH = np.array([np.einsum("ba,abi->i", powers[k - 1], G) / 2 for k in range(1, K + 1)])
    X = dH @ A.T
    f = None
    if Omega is not None:
        PW = A @ Omega.at(x).T * Omega_sign
        f = np.array([-np.trace(powers[k - 1] @ PW) for k in range(1, K + 1)])
    return ChainValues(A, N, Nj, powers, H, dH, X, f)


@dataclass(frozen=True)
class ConditionB:
    """Condition (b)/(b') residuals; index k-1 for ``Y_k``."""

    Y: np.ndarray               # (K, d) direct Y_k = N^{k-1} X_1 - X_k
    flat_Y: np.ndarray          # (K,) max |Omega^flat(Y_k)|
    omega_XY: np.ndarray        # (K, K) Omega(X_j, Y_k)
    dual_route: float           # max |Y_k - pi# sum_l (N^*)^{k-l-2} phi_l|

    @property
    def strong(self) -> float:
        return float(np.max(self.flat_Y))

    @property
    def weak(self) -> float:
        return float(np.max(np.abs(self.omega_XY)))


@dataclass(frozen=True)
class ChainData:
    """Trace Hamiltonians ``H_1..H_Kmax`` of a structure, their fields and ``f_k``.

    ``f_k = -s Tr(N^{k-1} pi# Omega^flat)`` with ``s = Omega_sign``, so the
    chain of the ``-Omega`` deformation uses ``f_k^- = +Tr(N_-^{k-1} pi# Omega^flat)``.
    """

    structure: PqNStructure
    K_max: int
    Omega: FormField | None = None
    Omega_sign: int = 1

    def __post_init__(self):
        if self.K_max < 1:
            raise ValueError("K_max must be >= 1")

    def at(self, x) -> ChainValues:
        return chain_values(self.structure, self.K_max, x, self.Omega, self.Omega_sign)

    @property
    def H(self) -> list[ScalarField]:
        return [trace_hamiltonian_field(self.structure.N, k) for k in range(1, self.K_max + 1)]

    @property
    def X(self) -> list[VectorField]:
        from .poisson import hamiltonian_vector_field

        return [hamiltonian_vector_field(self.structure.pi, h) for h in self.H]

    @property
    def f(self) -> list[ScalarField]:
        if self.Omega is None:
            raise ValueError("f_k needs Omega")
        s, W = self.structure, self.Omega

        def make(k):
            def fn(x):
                Pk = J.matpow_list(s.N(x), k - 1)[k - 1]
                return J.trace(J.einsum("ij,jk->ik", Pk, pi_omega(s.pi.matrix(x), W(x)))) * (-float(self.Omega_sign))
            return ScalarField(fn, s.dim, f"f_{k}", s.N.consumes)

        return [make(k) for k in range(1, self.K_max + 1)]


# -- point-level operations --------------------------------------------------


def nijenhuis_torsion(N: Tensor11Field, X: VectorField, Y: VectorField, x) -> np.ndarray:
    check_same_dim(N, X, Y)
    xj = J.seed(coords_of(x), 1)
    return np.asarray(J.value(torsion_on(N, X(xj), Y(xj), xj)))


def nijenhuis_torsion_lie(N: Tensor11Field, X: VectorField, Y: VectorField, x) -> np.ndarray:
    """Second route: ``(L_{NX} N - N L_X N) Y``."""
    check_same_dim(N, X, Y)
    xj = J.seed(coords_of(x), 1)
    M = i_X_torsion_lie(N(xj), X(xj))
    return np.asarray(J.value(mat_vec(M, J.value(Y(xj)))))


def torsion_tensor(N: Tensor11Field, x) -> np.ndarray:
    return np.asarray(J.value(torsion(N.jet(x, 1))))


def i_X_torsion_matrix(N: Tensor11Field, X: VectorField, x) -> np.ndarray:
    """Matrix whose column j is ``T_N(X, d_j)``."""
    check_same_dim(N, X)
    xj = J.seed(coords_of(x), 1)
    return np.asarray(J.value(i_X_torsion_lie(N(xj), X(xj))))


def check_compatibility(pi: PoissonStructure, N: Tensor11Field, x) -> tuple[float, float]:
    check_same_dim(pi.bivector, N)
    xj = J.seed(coords_of(x), 1)
    r1, r2 = compat_residuals(pi.matrix(xj), N(xj))
    return _maxabs(r1), _maxabs(r2)


def compatibility_on(pi: PoissonStructure, N: Tensor11Field, alpha: FormField, X: VectorField, x) -> np.ndarray:
    """Second compatibility expression on arbitrary (non-basis) fields."""
    xj = J.seed(coords_of(x), 2)
    A, Nx, a, Xv = pi.matrix(xj), N(xj), alpha(xj), X(xj)
    term1 = mat_vec(lie_tensor11(sharp(A, a), Nx), Xv)
    term2 = sharp(A, lie_form1(Xv, J.einsum("mi,m->i", Nx, a)))
    term3 = sharp(A, lie_form1(mat_vec(Nx, Xv), a))
    return np.asarray(J.value(term1 - term2 + term3))


def trace_hamiltonian(N: Tensor11Field, k: int, x) -> float:
    if k < 1:
        raise ValueError("k must be >= 1")
    return float(J.value(trace_hamiltonian_field(N, k)(coords_of(x))))


def trace_hamiltonian_field(N: Tensor11Field, k: int) -> ScalarField:
    if k < 1:
        raise ValueError("k must be >= 1")

    def fn(x):
        return _div(J.trace(J.matpow_list(N(x), k)[k]), 2 * k)

    return ScalarField(fn, N.dim, f"H_{k}", N.consumes)


def d_trace_hamiltonian(N: Tensor11Field, k: int, x) -> np.ndarray:
    return np.asarray(J.value(J.D(trace_hamiltonian_field(N, k).jet(x, 1), N.dim)))


def phi_k_form(structure: PqNStructure, k: int, x) -> np.ndarray:
    if k < 0:
        raise ValueError("k must be >= 0")
    N = structure.N.jet(x, 1)
    T = torsion(N)
    powers = J.matpow_list(J.value(N), k)
    return np.asarray(J.value(phi_forms(T, powers, k)[k]))


def phi_k_closed_form(structure: PqNStructure, Omega: FormField, k: int, x) -> np.ndarray:
    """``2 Omega^flat(N^k X_1) - Tr(N^k pi# Omega^flat) dH_1`` (valid under condition (a))."""
    A = structure.pi.bivector.at(x)
    N = structure.N.at(x)
    W = Omega.at(x)
    dH1 = d_trace_hamiltonian(structure.N, 1, x)
    Nk = np.eye(N.shape[0]).astype(N.dtype)
    for _ in range(k):
        Nk = Nk @ N
    X1 = A @ dH1
    return 2.0 * (Nk @ X1) @ W - np.trace(Nk @ A @ W.T) * dH1


def check_condition_a(structure: PqNStructure, Omega: FormField, x) -> float:
    """``max |phi + 2 dH_1 ^ Omega|``."""
    xj = J.seed(coords_of(x), 2)
    N, phi, W = structure.N(xj), structure.phi_jet(xj), Omega(xj)
    d = structure.dim
    dH1 = J.value(J.D(J.trace(N), d)) * 0.5
    return _maxabs(J.value(phi) + 2.0 * np.asarray(J.value(wedge(dH1, J.value(W)))))


def check_condition_b(structure: PqNStructure, Omega: FormField, K_max: int, x) -> ConditionB:
    if K_max < 2:
        raise ValueError("K_max must be >= 2")
    return chain_values(structure, K_max, x).condition_b(Omega.at(x))


def generalized_lm_residual(N_minus: Tensor11Field, chain: ChainData, k: int, x) -> float:
    """``max |N_-^* dH_k - dH_{k+1} - f_k dH_1|`` with the chain built from ``N_+``."""
    if not 1 <= k < chain.K_max:
        raise ValueError(f"k must satisfy 1 <= k < K_max = {chain.K_max}")
    if chain.Omega is None:
        raise ValueError("the chain needs Omega to define f_k")
    check_same_dim(N_minus, chain.structure.N)
    r = chain.at(x).lm_residual(N_minus.at(x), k)
    return float(np.max(np.abs(r)))


def recursion_residual(structure: PqNStructure, k: int, x) -> float:
    """``max |N^* dH_k - dH_{k+1} - phi_{k-1}|``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return float(np.max(np.abs(chain_values(structure, k + 1, x).recursion_residual(k))))


def recadd_residual(structure: PqNStructure, chain: ChainData, k: int, j: int, x) -> float:
    """``|{H_k,H_j} - {H_{k-1},H_{j+1}} + <phi_{j-1}, X_{k-1}> + <phi_{k-2}, X_j>|``."""
    if not (k > j >= 1) or k > chain.K_max:
        raise ValueError("need K_max >= k > j >= 1")
    return float(abs(chain_values(structure, chain.K_max, x).recadd(k, j)))


def involutivity_table(pi: PoissonStructure, chain: ChainData, K_max: int, x) -> np.ndarray:
    """``|{H_j, H_k}|`` for j, k <= K_max (brackets taken with ``pi``)."""
    if K_max > chain.K_max:
        raise ValueError("K_max exceeds the chain length")
    cv = chain.at(x)
    dH = cv.dH[:K_max]
    return np.abs(dH @ pi.bivector.at(x) @ dH.T).astype(float)


def skew_block_residual(N: Tensor11Field, r_max: int, x) -> float:
    """Max asymmetry-defect of the off-diagonal n x n blocks of ``N^r``, r <= r_max."""
    Nv = N.at(x)
    n = Nv.shape[0] // 2
    out, P = 0.0, np.eye(2 * n)
    for _ in range(r_max):
        P = P @ Nv
        for blk in (P[:n, n:], P[n:, :n]):
            out = max(out, float(np.max(np.abs(blk + blk.T))))
    return out


def power_commutation_residual(pi: PoissonStructure, N: Tensor11Field, r_max: int, x) -> float:
    """``max_r |N^r A - A (N^T)^r|``."""
    A, Nv = pi.bivector.at(x), N.at(x)
    out, P = 0.0, np.eye(Nv.shape[0])
    for _ in range(r_max):
        P = P @ Nv
        out = max(out, float(np.max(np.abs(P @ A - A @ P.T))))
    return out


def pqn_axiom_residuals(structure: PqNStructure, x) -> dict[str, float]:
    """Residuals of the PqN axioms at one point."""
    sp = structure.evaluate(x, order=2)
    r1, r2 = compat_residuals(sp.A, sp.N)
    out = {"compat_matrix": _maxabs(r1), "compat_lie": _maxabs(r2)}
    if structure.phi is None:
        out["d_phi"] = 0.0
        out["d_iN_phi"] = 0.0
        out["torsion_identity"] = _maxabs(sp.T)
        return out
    out["d_phi"] = _maxabs(_ext3(sp.phi, structure.dim))
    out["d_iN_phi"] = _maxabs(_ext3(i_N(sp.N, sp.phi), structure.dim))
    # T(d_a, d_b) = pi#(i_{d_a ^ d_b} phi)
    rhs = J.einsum("mk,abk->mab", J.value(sp.A), J.value(sp.phi))
    out["torsion_identity"] = _maxabs(np.asarray(J.value(sp.T)) - rhs)
    return out


def _ext3(w, d: int):
    """Exterior derivative of a 3-form jet, returned as the 4-index alternating sum."""
    G = J.value(J.D(w, d))  # G[a, b, c, i] = d_i w_abc
    # (dw)_{ijkl} = d_i w_jkl - d_j w_ikl + d_k w_ijl - d_l w_ijk
    return (np.einsum("jkli->ijkl", G) - np.einsum("iklj->ijkl", G)
            + np.einsum("ijlk->ijkl", G) - np.einsum("ijkl->ijkl", G))


def check_pqn_axioms(structure: PqNStructure, points) -> dict[str, float]:
    """Max over ``points`` of each axiom residual."""
    worst: dict[str, float] = {}
    for x in points:
        for key, val in pqn_axiom_residuals(structure, x).items():
            worst[key] = max(worst.get(key, 0.0), val)
    return worst


def pairing_value(alpha, X) -> float:
    return float(J.value(pairing(alpha, X)))
