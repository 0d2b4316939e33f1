"""Random generator factories shared by the test modules."""

import numpy as np

from dampflow.dynamics import GeneratorSpec, Kind
from dampflow.models import build
from dampflow.qops import SIGMA_X, SIGMA_Y, SIGMA_Z, damping_decompose, pauli_basis, superop_from_terms, to_superop
from dampflow.scalarflow import EigenSignal, TimeGrid


def random_generator(rng, basis, n_ops=3, with_hamiltonian=True):
    """Random GKSL generator: positive rates, random operators, random Hamiltonian."""
    d = basis.dim
    terms = []
    for _ in range(n_ops):
        op = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        terms.append((rng.uniform(0.1, 1.0), op))
    gen = superop_from_terms(basis, terms)
    if with_hamiltonian:
        h = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        h = h + h.conj().T
        gen = gen + to_superop(lambda w: -1j * (h @ w - w @ h), basis)
    return gen


def smooth_nonnegative(rng, t):
    """a + b (1 + sin(w t + p)) e^{-c t} with a, b >= 0."""
    a, b = rng.uniform(0.0, 1.0, 2)
    w, p, c = rng.uniform(0.2, 3.0), rng.uniform(0, 2 * np.pi), rng.uniform(0.0, 0.5)
    return a + b * (1 + np.sin(w * t + p)) * np.exp(-c * t)


def random_p_divisible_pauli(rng, grid: TimeGrid):
    """TCL Pauli generator with random smooth rates whose pairwise sums are >= 0.

    Returns (generator, rates) where rates has shape (n + 1, 3). The channel
    eigenvalues are m_k = -(gamma_i + gamma_j) <= 0.
    """
    t = grid.times
    s = {(0, 1): smooth_nonnegative(rng, t), (0, 2): smooth_nonnegative(rng, t),
         (1, 2): smooth_nonnegative(rng, t)}
    rates = np.stack([
        (s[(0, 1)] + s[(0, 2)] - s[(1, 2)]) / 2,
        (s[(0, 1)] + s[(1, 2)] - s[(0, 2)]) / 2,
        (s[(0, 2)] + s[(1, 2)] - s[(0, 1)]) / 2,
    ], axis=1)
    dec = build("ex4", grid=TimeGrid(1.0, 1)).generator.decomposition
    m = [np.zeros_like(t), -s[(1, 2)], -s[(0, 2)], -s[(0, 1)]]
    gen = GeneratorSpec(Kind.TCL, dec, [EigenSignal(grid, v) for v in m])
    return gen, rates


def random_direction_dephasing(rng, grid: TimeGrid):
    """gamma(t) L with L = (n.s) w (n.s) - w for a random unit vector n and gamma >= 0."""
    n = rng.normal(size=3)
    n /= np.linalg.norm(n)
    ns = n[0] * SIGMA_X + n[1] * SIGMA_Y + n[2] * SIGMA_Z
    structure = to_superop(lambda w: ns @ w @ ns - w, pauli_basis())
    dec = damping_decompose(structure)
    gamma = smooth_nonnegative(rng, grid.times)
    signals = [EigenSignal(grid, lam.real * gamma) for lam in dec.eigenvalues]
    return GeneratorSpec(Kind.TCL, dec, signals), structure
