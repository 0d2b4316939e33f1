"""Operator bases, superoperator matrices and damping-basis decompositions.

All superoperators are stored as N^2 x N^2 complex matrices in a fixed
Hilbert-Schmidt orthonormal operator basis {sigma_a}:

    M[a, b] = Tr[sigma_a^dag Xi(sigma_b)]

so that the coordinates of an operator are c_b = Tr[sigma_b^dag omega] and
composition of maps is ordinary matrix multiplication.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cache
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionMismatch, NotDiagonalizable

ORTHONORMAL_TOL = 1e-12
BIORTHOGONAL_TOL = 1e-10
DEGENERACY_RTOL = 1e-8
MAX_CONDITION = 1e8

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)
# sigma_+ = |0><1| with sigma_z |0> = +|0>
SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)


def _finite(arr, what):
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} contains NaN or Inf")


@dataclass(frozen=True, eq=False)
class OperatorBasis:
    """Ordered Hilbert-Schmidt orthonormal basis of B(H), shape (N^2, N, N)."""

    elements: np.ndarray
    name: str = "custom"

    def __post_init__(self):
        el = np.asarray(self.elements, dtype=complex)
        if el.ndim != 3 or el.shape[1] != el.shape[2] or el.shape[0] != el.shape[1] ** 2:
            raise DimensionMismatch(f"basis must have shape (N^2, N, N), got {el.shape}")
        _finite(el, "basis")
        object.__setattr__(self, "elements", el)
        err = np.abs(self.gram() - np.eye(self.size)).max()
        if err > ORTHONORMAL_TOL:
            raise ValueError(f"basis is not orthonormal (max deviation {err:.3e})")

    @property
    def dim(self) -> int:
        return self.elements.shape[1]

    @property
    def size(self) -> int:
        return self.elements.shape[0]

    @property
    def last_is_normalized_identity(self) -> bool:
        ident = np.eye(self.dim) / np.sqrt(self.dim)
        return bool(np.abs(self.elements[-1] - ident).max() <= ORTHONORMAL_TOL)

    def gram(self) -> np.ndarray:
        el = self.elements.reshape(self.size, -1)
        return el.conj() @ el.T

    def coords(self, op) -> np.ndarray:
        """Coordinates c_b = Tr[sigma_b^dag op]; accepts a stack of operators."""
        op = np.asarray(op, dtype=complex)
        if op.shape[-2:] != (self.dim, self.dim):
            raise DimensionMismatch(f"operator of shape {op.shape[-2:]} in a dim-{self.dim} basis")
        return np.einsum("bij,...ij->...b", self.elements.conj(), op)

    def operator(self, coords) -> np.ndarray:
        return np.einsum("...b,bij->...ij", np.asarray(coords, dtype=complex), self.elements)

    def same_as(self, other: "OperatorBasis") -> bool:
        return self is other or (
            self.elements.shape == other.elements.shape
            and np.allclose(self.elements, other.elements, atol=1e-14)
        )


@cache
def pauli_basis() -> OperatorBasis:
    """Normalized Pauli basis ordered (sx, sy, sz, 1)/sqrt(2)."""
    ops = np.array([SIGMA_X, SIGMA_Y, SIGMA_Z, IDENTITY_2]) / np.sqrt(2)
    return OperatorBasis(ops, name="pauli")


@cache
def gell_mann_basis() -> OperatorBasis:
    """The eight normalized Gell-Mann matrices followed by 1/sqrt(3)."""
    m = np.zeros((9, 3, 3), dtype=complex)
    m[0][0, 1] = m[0][1, 0] = 1
    m[1][0, 1], m[1][1, 0] = -1j, 1j
    m[2][0, 0], m[2][1, 1] = 1, -1
    m[3][0, 2] = m[3][2, 0] = 1
    m[4][0, 2], m[4][2, 0] = -1j, 1j
    m[5][1, 2] = m[5][2, 1] = 1
    m[6][1, 2], m[6][2, 1] = -1j, 1j
    m[:7] /= np.sqrt(2)
    m[7] = np.diag([1, 1, -2]) / np.sqrt(6)
    m[8] = np.eye(3) / np.sqrt(3)
    return OperatorBasis(m, name="gell-mann")


def basis_for_dim(dim: int) -> OperatorBasis:
    if dim == 2:
        return pauli_basis()
    if dim == 3:
        return gell_mann_basis()
    raise DimensionMismatch(f"no built-in basis for dimension {dim}")


@dataclass(frozen=True, eq=False)
class SuperOp:
    """Matrix representation of a linear map on B(H) in `basis`."""

    basis: OperatorBasis
    matrix: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        n = self.basis.size
        if mat.shape != (n, n):
            raise DimensionMismatch(f"superoperator matrix must be {n}x{n}, got {mat.shape}")
        _finite(mat, "superoperator")
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self) -> int:
        return self.basis.dim

    def __call__(self, op) -> np.ndarray:
        return self.basis.operator(self.basis.coords(op) @ self.matrix.T)

    def __matmul__(self, other: "SuperOp") -> "SuperOp":
        _check_compatible(self, other)
        return SuperOp(self.basis, self.matrix @ other.matrix)

    def __add__(self, other: "SuperOp") -> "SuperOp":
        _check_compatible(self, other)
        return SuperOp(self.basis, self.matrix + other.matrix)

    def __sub__(self, other: "SuperOp") -> "SuperOp":
        _check_compatible(self, other)
        return SuperOp(self.basis, self.matrix - other.matrix)

    def scaled(self, factor) -> "SuperOp":
        return SuperOp(self.basis, factor * self.matrix)


def identity_superop(basis: OperatorBasis) -> SuperOp:
    return SuperOp(basis, np.eye(basis.size, dtype=complex))


def _check_compatible(a: SuperOp, b: SuperOp):
    if a.matrix.shape != b.matrix.shape:
        raise DimensionMismatch(f"shapes {a.matrix.shape} and {b.matrix.shape} differ")
    if not a.basis.same_as(b.basis):
        raise DimensionMismatch("superoperators are expressed in different bases")


def to_superop(action: Callable[[np.ndarray], np.ndarray], basis: OperatorBasis) -> SuperOp:
    """Matrix of a linear `action` via M[a, b] = Tr[sigma_a^dag action(sigma_b)]."""
    images = []
    for el in basis.elements:
        out = np.asarray(action(el), dtype=complex)
        if out.shape != (basis.dim, basis.dim):
            raise DimensionMismatch(
                f"action returned shape {out.shape}, expected {(basis.dim, basis.dim)}"
            )
        images.append(out)
    return SuperOp(basis, basis.coords(np.array(images)).T)


def dual(superop: SuperOp) -> SuperOp:
    """Hilbert-Schmidt adjoint: <w, X(r)> = <X'(w), r>."""
    return SuperOp(superop.basis, superop.matrix.conj().T)


def commute_test(a: SuperOp, b: SuperOp, tol: float = 1e-10) -> bool:
    _check_compatible(a, b)
    comm = a.matrix @ b.matrix - b.matrix @ a.matrix
    return bool(np.abs(comm).max() <= tol)


@dataclass(frozen=True, eq=False)
class DampingDecomposition:
    """Bi-orthogonal damping bases of a diagonalizable map.

    ``right[:, a]`` holds the coordinates of tau_a and ``left[a, :]`` the
    conjugated coordinates of the dual operator varsigma_a, so that
    ``left @ right == 1`` and the map reads ``right @ diag(lam) @ left``.
    """

    basis: OperatorBasis
    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray
    degenerate_groups: tuple = field(default=())

    @property
    def size(self) -> int:
        return len(self.eigenvalues)

    @property
    def flagged(self) -> bool:
        """True when some eigenspace is degenerate and its tau's are a solver choice."""
        return any(len(g) > 1 for g in self.degenerate_groups)

    @property
    def tau(self) -> np.ndarray:
        return self.basis.operator(self.right.T)

    @property
    def sigma_dual(self) -> np.ndarray:
        return self.basis.operator(self.left.conj())

    def projector(self, alpha: int) -> SuperOp:
        """M_alpha(w) = Tr[varsigma_alpha^dag w] tau_alpha."""
        return SuperOp(self.basis, np.outer(self.right[:, alpha], self.left[alpha]))

    def compose_matrix(self, values) -> np.ndarray:
        """sum_a values[..., a] M_a as matrices; `values` may carry leading time axes."""
        values = np.asarray(values, dtype=complex)
        return np.einsum("ia,...a,aj->...ij", self.right, values, self.left)

    def compose(self, values) -> SuperOp:
        return SuperOp(self.basis, self.compose_matrix(values))

    def channel_values(self, matrix) -> np.ndarray:
        """Diagonal of ``left @ X @ right``; the eigenvalues of X if X shares these bases."""
        return np.einsum("ai,...ij,ja->...a", self.left, np.asarray(matrix), self.right)

    def reconstruct(self) -> SuperOp:
        return self.compose(self.eigenvalues)

    def biorthogonality_error(self) -> float:
        gram = self.sigma_dual.reshape(self.size, -1).conj() @ self.tau.reshape(self.size, -1).T
        return float(np.abs(gram - np.eye(self.size)).max())

    def completeness_error(self) -> float:
        return float(np.abs(self.right @ self.left - np.eye(self.size)).max())

    @classmethod
    def from_operators(cls, basis: OperatorBasis, eigenvalues, tau, sigma_dual) -> "DampingDecomposition":
        """Build from explicit operator lists, checking bi-orthogonality."""
        right = basis.coords(np.asarray(tau, dtype=complex)).T
        left = basis.coords(np.asarray(sigma_dual, dtype=complex)).conj()
        dec = cls(basis, np.asarray(eigenvalues, dtype=complex), right, left,
                  _group_degenerate(np.asarray(eigenvalues, dtype=complex)))
        if dec.biorthogonality_error() > BIORTHOGONAL_TOL:
            raise ValueError("damping bases are not bi-orthogonal")
        if dec.completeness_error() > BIORTHOGONAL_TOL:
            raise ValueError("damping bases are not complete")
        return dec

    @classmethod
    def orthonormal(cls, basis: OperatorBasis, eigenvalues, operators) -> "DampingDecomposition":
        """Self-dual decomposition (normal maps): varsigma_a = tau_a."""
        return cls.from_operators(basis, eigenvalues, operators, operators)


def _group_degenerate(values: np.ndarray) -> tuple:
    groups: list[list[int]] = []
    for i, lam in enumerate(values):
        for g in groups:
            ref = values[g[0]]
            if abs(lam - ref) <= DEGENERACY_RTOL * max(1.0, abs(ref)):
                g.append(i)
                break
        else:
            groups.append([i])
    return tuple(tuple(g) for g in groups)


def damping_decompose(superop: SuperOp) -> DampingDecomposition:
    """Eigen-decomposition M = R diag(lam) R^-1 with bi-orthogonal partners.

    Degenerate eigenvalues are merged to their mean and the corresponding
    right eigenvectors orthonormalized; only the spectral projector of such a
    group is basis-independent. Defective matrices raise NotDiagonalizable.
    """
    mat = superop.matrix
    lam, vecs = np.linalg.eig(mat)
    order = np.lexsort((lam.imag, -lam.real.round(12)))
    lam, vecs = lam[order], vecs[:, order]

    groups = _group_degenerate(lam)
    lam = lam.copy()
    for g in groups:
        if len(g) > 1:
            idx = list(g)
            lam[idx] = lam[idx].mean()
            q, _ = np.linalg.qr(vecs[:, idx])
            vecs[:, idx] = q

    cond = np.linalg.cond(vecs)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise NotDiagonalizable(f"eigenvector matrix condition number {cond:.3e} exceeds {MAX_CONDITION:.0e}")
    scale = max(1.0, np.linalg.norm(mat))
    resid = np.linalg.norm(mat @ vecs - vecs * lam)
    if resid > 1e-7 * scale:
        raise NotDiagonalizable(f"eigenvector residual {resid:.3e}: map is defective")

    left = np.linalg.inv(vecs)
    return DampingDecomposition(superop.basis, lam, vecs, left, groups)


def spectral_projectors(dec: DampingDecomposition) -> list[tuple[complex, SuperOp]]:
    """(eigenvalue, projector) per degenerate group; independent of the tau choice."""
    out = []
    for g in dec.degenerate_groups:
        idx = list(g)
        mat = dec.right[:, idx] @ dec.left[idx, :]
        out.append((complex(dec.eigenvalues[idx[0]]), SuperOp(dec.basis, mat)))
    return out


def conjugation_superop(op, basis: OperatorBasis) -> SuperOp:
    """w -> A w A^dag."""
    a = np.asarray(op, dtype=complex)
    return to_superop(lambda w: a @ w @ a.conj().T, basis)


def dissipator(op, basis: OperatorBasis) -> SuperOp:
    """D_L(w) = L w L^dag - {L^dag L, w}/2."""
    a = np.asarray(op, dtype=complex)
    ada = a.conj().T @ a
    return to_superop(lambda w: a @ w @ a.conj().T - 0.5 * (ada @ w + w @ ada), basis)


def superop_from_terms(basis: OperatorBasis, terms: Sequence[tuple[complex, np.ndarray]]) -> SuperOp:
    """sum_k c_k D_{L_k} as a SuperOp."""
    total = np.zeros((basis.size, basis.size), dtype=complex)
    for coef, op in terms:
        total += coef * dissipator(op, basis).matrix
    return SuperOp(basis, total)
