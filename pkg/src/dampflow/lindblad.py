"""Canonical Lindbladian form of trace- and Hermiticity-preserving generators.

Any such generator K can be written as

    K(w) = sum_{a,b} c_ab sigma_a w sigma_b^dag

in an orthonormal basis with sigma_{N^2} = 1/sqrt(N). The traceless block
kappa = c[:-1, :-1] is Hermitian; its eigendecomposition gives the rates and
Lindblad operators, and the last column of c gives the Hamiltonian.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import PreconditionViolated
from .qops import SIGMA_Z, OperatorBasis, SuperOp, dissipator, to_superop

GENERATOR_TOL = 1e-10
RATE_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class GKSMatrix:
    basis: OperatorBasis
    kappa: np.ndarray
    hamiltonian: np.ndarray
    full: np.ndarray

    @property
    def dim(self) -> int:
        return self.basis.dim


@dataclass(frozen=True, eq=False)
class CanonicalForm:
    rates: np.ndarray
    lindblad_ops: np.ndarray
    hamiltonian: np.ndarray

    def count_nonzero(self, tol: float = 1e-9) -> int:
        return int(np.sum(np.abs(self.rates) > tol))


def check_generator_conditions(superop: SuperOp, tol: float = GENERATOR_TOL) -> bool:
    """Tr K(w) = 0 and K(w^dag) = K(w)^dag on every basis element."""
    basis = superop.basis
    for el in basis.elements:
        image = superop(el)
        if abs(np.trace(image)) > tol:
            return False
        if np.abs(superop(el.conj().T) - image.conj().T).max() > tol:
            return False
    return True


@lru_cache(maxsize=8)
def _transfer(basis: OperatorBasis) -> np.ndarray:
    """T[(d, x), (a, b)] = Tr[s_d^dag s_a s_x s_b^dag], unitary for orthonormal bases."""
    s = basis.elements
    n = basis.size
    t = np.einsum("dji,ajk,xkl,bil->dxab", s.conj(), s, s, s.conj(), optimize=True)
    return t.reshape(n * n, n * n)


def _hamiltonian(full: np.ndarray, basis: OperatorBasis) -> np.ndarray:
    n = basis.dim
    sig = np.einsum("a,aij->ij", full[:, -1], basis.elements) / np.sqrt(n)
    h = (sig.conj().T - sig) / 2j
    return 0.5 * (h + h.conj().T)


def _require_identity_last(basis: OperatorBasis):
    if not basis.last_is_normalized_identity:
        raise PreconditionViolated("the Lindbladian form needs a basis whose last element is 1/sqrt(N)")


def gks_coefficients(matrices, basis: OperatorBasis) -> np.ndarray:
    """Full coefficient matrices c_ab for a stack of superoperator matrices."""
    mats = np.asarray(matrices, dtype=complex)
    n = basis.size
    flat = mats.reshape(-1, n * n)
    coeffs = flat @ _transfer(basis).conj()
    return coeffs.reshape(mats.shape)


def gks_matrix(superop: SuperOp, tol: float = GENERATOR_TOL) -> GKSMatrix:
    basis = superop.basis
    _require_identity_last(basis)
    if not check_generator_conditions(superop, tol):
        raise PreconditionViolated("generator is not trace and Hermiticity preserving")
    full = gks_coefficients(superop.matrix, basis)
    kappa = full[:-1, :-1]
    kappa = 0.5 * (kappa + kappa.conj().T)
    return GKSMatrix(basis, kappa, _hamiltonian(full, basis), full)


def canonical_form(gks: GKSMatrix) -> CanonicalForm:
    """kappa = V diag(r) V^dag, rates descending, L_a = sum_b V_ba sigma_b."""
    rates, vecs = np.linalg.eigh(gks.kappa)
    order = np.argsort(rates)[::-1]
    rates, vecs = rates[order], vecs[:, order]
    ops = np.einsum("ba,bij->aij", vecs, gks.basis.elements[:-1])
    return CanonicalForm(rates, ops, gks.hamiltonian)


def canonical_rates(matrices, basis: OperatorBasis) -> np.ndarray:
    """Descending canonical rates for a stack of generator matrices (one row per slice)."""
    _require_identity_last(basis)
    full = gks_coefficients(matrices, basis)
    kappa = full[..., :-1, :-1]
    kappa = 0.5 * (kappa + np.swapaxes(kappa.conj(), -1, -2))
    return np.linalg.eigvalsh(kappa)[..., ::-1]


def reconstruct(canon: CanonicalForm, basis: OperatorBasis) -> SuperOp:
    """-i[H, .] + sum_a r_a D_{L_a} as a SuperOp."""
    h = np.asarray(canon.hamiltonian, dtype=complex)
    total = to_superop(lambda w: -1j * (h @ w - w @ h), basis).matrix
    for rate, op in zip(canon.rates, canon.lindblad_ops):
        total = total + rate * dissipator(op, basis).matrix
    return SuperOp(basis, total)


def round_trip_error(superop: SuperOp) -> float:
    """Relative Frobenius error of reconstruct(canonical_form(gks_matrix(X)))."""
    back = reconstruct(canonical_form(gks_matrix(superop)), superop.basis)
    scale = max(np.linalg.norm(superop.matrix), 1e-300)
    return float(np.linalg.norm(back.matrix - superop.matrix) / scale)


def dephasing_coefficient(superop: SuperOp) -> float:
    """Qubit only: weight of (sz w sz - w), i.e. half the kappa entry along sz/sqrt(2)."""
    if superop.basis.dim != 2:
        raise PreconditionViolated("the dephasing coefficient is defined for qubits")
    v = superop.basis.coords(SIGMA_Z / np.sqrt(2))
    full = gks_matrix(superop).full
    return float((v.conj() @ full @ v).real / 2)
