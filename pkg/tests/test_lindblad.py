import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dampflow.dynamics import Kind, convert_generator
from dampflow.errors import PreconditionViolated
from dampflow.lindblad import (
    CanonicalForm,
    canonical_form,
    canonical_rates,
    check_generator_conditions,
    dephasing_coefficient,
    gks_matrix,
    reconstruct,
    round_trip_error,
)
from dampflow.models import build
from dampflow.qops import (
    SIGMA_MINUS,
    SIGMA_Z,
    OperatorBasis,
    SuperOp,
    conjugation_superop,
    gell_mann_basis,
    identity_superop,
    pauli_basis,
    to_superop,
)

from oracles import random_generator


def ex1_generator(gamma=1.0):
    return build("ex1", profile="constant").structure.scaled(gamma)


def test_conditions_example1():
    assert check_generator_conditions(ex1_generator())


def test_conditions_trace_increasing_perturbation():
    b = pauli_basis()
    p0 = np.diag([1.0, 0.0]).astype(complex)
    bad = ex1_generator() + to_superop(lambda w: 0.1 * p0 * np.trace(w), b)
    assert not check_generator_conditions(bad)
    with pytest.raises(PreconditionViolated):
        gks_matrix(bad)


def test_conditions_zero():
    assert check_generator_conditions(SuperOp(pauli_basis(), np.zeros((4, 4))))


def test_gks_needs_identity_last():
    b = pauli_basis()
    flipped = OperatorBasis(b.elements[::-1])
    with pytest.raises(PreconditionViolated):
        gks_matrix(to_superop(lambda w: SIGMA_Z @ w @ SIGMA_Z - w, flipped))


def test_pure_dephasing_gks():
    # [DERIVED] gamma (sz w sz - w) has kappa = 2 gamma on the sz/sqrt(2) slot, H = 0
    gamma = 0.7
    b = pauli_basis()
    gen = to_superop(lambda w: gamma * (SIGMA_Z @ w @ SIGMA_Z - w), b)
    g = gks_matrix(gen)
    expected = np.zeros((3, 3))
    expected[2, 2] = 2 * gamma
    assert np.abs(g.kappa - expected).max() < 1e-12
    assert np.abs(g.hamiltonian).max() < 1e-12
    assert abs(dephasing_coefficient(gen) - gamma) < 1e-12


def test_example1_dephasing_cancels():
    # [PAPER] (m_2 - 2 m_3)/2 = 0 for eigenvalues (0, -g, -g/2, -g/2)
    assert abs(dephasing_coefficient(ex1_generator(0.8))) < 1e-12


def test_example2_kernel_dephasing_cancels():
    # [PAPER] (m_4 - 2 m_2)/2 = 0 for eigenvalues (0, -k, -k, -2k)
    assert abs(dephasing_coefficient(build("ex2").structure)) < 1e-12


def test_example1_canonical_single_channel():
    gamma = 0.6
    canon = canonical_form(gks_matrix(ex1_generator(gamma)))
    assert np.allclose(canon.rates, [gamma, 0, 0], atol=1e-12)
    overlap = abs(np.trace(canon.lindblad_ops[0].conj().T @ SIGMA_MINUS))
    assert abs(overlap - 1) < 1e-12
    assert np.abs(canon.hamiltonian).max() < 1e-12


def test_zero_kappa():
    canon = canonical_form(gks_matrix(SuperOp(pauli_basis(), np.zeros((4, 4)))))
    assert np.all(canon.rates == 0)


def test_zero_canonical_form_reconstructs_zero():
    b = pauli_basis()
    canon = CanonicalForm(np.zeros(3), b.elements[:-1], np.zeros((2, 2)))
    assert np.abs(reconstruct(canon, b).matrix).max() == 0


def test_hamiltonian_extracted():
    b = pauli_basis()
    h = np.array([[0.3, 0.1 - 0.2j], [0.1 + 0.2j, -0.3]])
    gen = to_superop(lambda w: -1j * (h @ w - w @ h), b)
    g = gks_matrix(gen)
    assert np.abs(g.kappa).max() < 1e-12
    traceless = g.hamiltonian - np.trace(g.hamiltonian) / 2 * np.eye(2)
    assert np.abs(traceless - h).max() < 1e-12


def test_round_trip_example1():
    assert round_trip_error(ex1_generator()) <= 1e-9


def test_round_trip_qutrit_kernel():
    kern = build("qutrit", profile="constant").structure
    assert round_trip_error(kern) <= 1e-9
    rates = canonical_form(gks_matrix(kern)).rates
    assert np.all(rates >= -1e-12)


def test_nz_kernel_of_example1_has_two_channels():
    gen = build("ex1").generator
    nz = convert_generator(gen, Kind.NZ)
    tcl_counts = [canonical_form(gks_matrix(gen.at(k))).count_nonzero() for k in (200, 800, 1600)]
    nz_counts = [canonical_form(gks_matrix(nz.at(k))).count_nonzero() for k in (200, 800, 1600)]
    assert tcl_counts == [1, 1, 1]
    assert nz_counts == [2, 2, 2]


def test_canonical_rates_batched_matches_single(rng):
    b = gell_mann_basis()
    gens = [random_generator(rng, b) for _ in range(3)]
    batched = canonical_rates(np.stack([g.matrix for g in gens]), b)
    for g, row in zip(gens, batched):
        assert np.abs(canonical_form(gks_matrix(g)).rates - row).max() < 1e-12


def test_example1_rates_nonnegative_on_grid():
    gen = build("ex1").generator
    rates = canonical_rates(gen.matrices(), gen.basis)
    assert rates.min() >= -1e-10


def test_identity_is_not_a_generator():
    assert not check_generator_conditions(identity_superop(pauli_basis()))


@given(seed=st.integers(0, 2**31 - 1), dim=st.sampled_from([2, 3]))
def test_round_trip_property(seed, dim):
    rng = np.random.default_rng(seed)
    basis = pauli_basis() if dim == 2 else gell_mann_basis()
    gen = random_generator(rng, basis)
    assert round_trip_error(gen) <= 1e-9


@given(seed=st.integers(0, 2**31 - 1))
def test_rates_invariant_under_rephasing(seed):
    rng = np.random.default_rng(seed)
    b = gell_mann_basis()
    gen = random_generator(rng, b)
    phases = np.exp(1j * rng.uniform(0, 2 * np.pi, b.size))
    phases[-1] = 1.0
    rephased = OperatorBasis(b.elements * phases[:, None, None])
    other = to_superop(gen, rephased)
    r1 = canonical_form(gks_matrix(gen)).rates
    r2 = canonical_form(gks_matrix(other)).rates
    assert np.abs(r1 - r2).max() < 1e-10


@given(seed=st.integers(0, 2**31 - 1))
def test_positive_rates_for_gksl_generators(seed):
    rng = np.random.default_rng(seed)
    gen = random_generator(rng, pauli_basis())
    assert canonical_form(gks_matrix(gen)).rates.min() >= -1e-10
