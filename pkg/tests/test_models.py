import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from dampflow.dynamics import Kind, convert_generator, map_signals
from dampflow.errors import PreconditionViolated, UnknownModel
from dampflow.lindblad import check_generator_conditions
from dampflow.models import (
    ModelConfig,
    ModelId,
    bar_phi_closed,
    bar_phi_laplace,
    build,
    exact_pauli_rates,
    random_dephasing_map_eigenvalues,
    reference_bar_dephasing,
    reference_redfield_rates,
    resolve_model,
    zoo,
)
from dampflow.qops import SIGMA_X, SIGMA_Y, SIGMA_Z, pauli_basis, to_superop
from dampflow.scalarflow import TimeGrid, cumulative_integral, talbot_at

GRID = TimeGrid(5.0, 2000)


def channel(gen, eigenvalue):
    lams = gen.decomposition.eigenvalues.real
    return int(np.flatnonzero(np.isclose(lams, eigenvalue))[0])


def test_resolve_model_aliases():
    assert resolve_model("ex4") is ModelId.RANDOM_DEPHASING
    assert resolve_model("QUTRIT_LADDER") is ModelId.QUTRIT_LADDER
    assert resolve_model("pure_dephasing") is ModelId.PURE_DEPHASING
    with pytest.raises(UnknownModel):
        resolve_model("ex9")


def test_profile_selector_checked():
    with pytest.raises(PreconditionViolated):
        ModelConfig(ModelId.AMPLITUDE_DAMPING, profile="exp_cos")


def test_random_dephasing_needs_simplex_point():
    with pytest.raises(PreconditionViolated):
        build("ex4", x=(0.5, 0.6, 0.0))


def test_amplitude_damping_eigenvalues():
    # [PAPER] {0, -1, -1/2, -1/2} for gamma = 1
    model = build("ex1", profile="constant", grid=GRID)
    assert np.allclose(np.sort(model.reference["eigenvalues"]), [-1, -0.5, -0.5, 0])
    assert np.allclose(model.generator.values()[7], model.reference["eigenvalues"])


def test_eternal_point_reference_rates():
    # [PAPER] (1, 1, -tanh t)
    t = GRID.times
    model = build("ex4", x=(0.5, 0.5, 0.0), grid=GRID)
    expected = np.stack([np.ones_like(t), np.ones_like(t), -np.tanh(t)], axis=1)
    assert np.abs(model.reference["rates"] - expected).max() < 1e-12


def test_qutrit_eigenvalues():
    # [PAPER] {0, -3, -5/2, -5/2, -1, -1, -1, -1/2, -1/2} at k = 1
    model = build("qutrit", profile="constant", grid=GRID)
    got = np.sort(np.linalg.eigvals(model.structure.matrix).real)
    assert np.abs(got - np.sort([0, -3, -2.5, -2.5, -1, -1, -1, -0.5, -0.5])).max() < 1e-9


def test_reference_redfield_rates_eternal():
    # [DERIVED] gamma_red_3 = e^{-t} - 1
    rates = reference_redfield_rates((0.5, 0.5, 0.0), GRID)
    assert np.abs(rates[2].samples - (np.exp(-GRID.times) - 1)).max() < 1e-12


def test_reference_redfield_rates_symmetric():
    # [DERIVED] Y_k = -(2/3) e^{-2t/3} for all k, so gamma_red_k = -Y_k = (2/3) e^{-2t/3}
    for sig in reference_redfield_rates((1 / 3, 1 / 3, 1 / 3), GRID):
        assert np.abs(sig.samples - 2 / 3 * np.exp(-2 * GRID.times / 3)).max() < 1e-12


@given(x1=st.floats(0, 1), frac=st.floats(0, 1))
def test_reference_redfield_starts_exact(x1, frac):
    x = np.array([x1, (1 - x1) * frac, (1 - x1) * (1 - frac)])
    x = x / x.sum()
    red = np.array([s.samples[0].real for s in reference_redfield_rates(x, TimeGrid(1.0, 10))])
    assert np.abs(red - exact_pauli_rates(x, 0.0)).max() < 1e-12


def test_bar_dephasing_exp_profile():
    # [DERIVED] phi_bar~ = 1/(u + 2): phi_bar = e^{-2t}, gamma_bar = 1
    gamma, phi = reference_bar_dephasing("exp", GRID)
    assert np.abs(phi.samples - np.exp(-2 * GRID.times)).max() < 1e-7
    assert np.abs(gamma.samples[1:] - 1).max() < 1e-6
    u = np.array([0.5, 2.0, 7.0])
    assert np.abs(bar_phi_laplace("exp")(u) - 1 / (u + 2)).max() < 1e-14


def test_bar_dephasing_exp_cos_profile():
    # [DERIVED] phi_bar~ = (u+1)/(u^2+3u+4)
    u = np.array([0.5, 2.0, 7.0 + 1j])
    assert np.abs(bar_phi_laplace("exp_cos")(u) - (u + 1) / (u**2 + 3 * u + 4)).max() < 1e-14
    gamma, phi = reference_bar_dephasing("exp_cos", GRID)
    assert np.abs(phi.samples[1:] - bar_phi_closed("exp_cos", GRID.times[1:])).max() < 1e-8
    g = gamma.samples.real
    assert g.max() > 0 and g.min() < 0


@pytest.mark.parametrize("profile", ["exp", "exp_cos", "biexp"])
def test_bar_dephasing_integral_nonnegative(profile):
    model = build("ex3bar", profile=profile, grid=GRID)
    assert model.reference["gamma_bar_integral"].min() >= -1e-8
    assert np.all(np.abs(model.reference["phi_bar"]) <= 1 + 1e-12)


def test_bar_phi_closed_matches_talbot():
    t = np.linspace(0.1, 5, 25)
    for profile in ("exp", "exp_cos", "biexp"):
        talbot = talbot_at(bar_phi_laplace(profile), t).real
        assert np.abs(talbot - bar_phi_closed(profile, t)).max() < 1e-8


@pytest.mark.parametrize("mid", list(ModelId))
def test_every_generator_satisfies_conditions(mid):
    gen = build(ModelConfig(mid, grid=GRID)).generator
    for k in (0, 500, 2000):
        assert check_generator_conditions(gen.at(k))
    assert check_generator_conditions(gen.delta_part())


def test_example1_channel_ratio():
    gen = build("ex1", grid=GRID).generator
    v = gen.values()
    assert np.abs(v[:, channel(gen, -1)] - 2 * v[:, channel(gen, -0.5)]).max() == 0


def test_example2_channel_ratio():
    gen = build("ex2", grid=GRID).generator
    v = gen.values()
    assert np.abs(v[:, channel(gen, -2)] - 2 * v[:, channel(gen, -1)]).max() == 0


@given(x1=st.floats(0, 1), frac=st.floats(0, 1), t=st.floats(0, 5))
def test_example4_map_eigenvalues_brute_force(x1, frac, t):
    x = np.array([x1, (1 - x1) * frac, (1 - x1) * (1 - frac)])
    b = pauli_basis()
    lam = 0
    for xk, s in zip(x, (SIGMA_X, SIGMA_Y, SIGMA_Z)):
        lam = lam + xk * expm(t * to_superop(lambda w, s=s: s @ w @ s - w, b).matrix)
    assert np.abs(np.diag(lam)[:3].real - random_dephasing_map_eigenvalues(x, t)).max() < 1e-10


def proportionality_residual(mats, structure):
    flat = mats.reshape(len(mats), -1)
    ref = structure.reshape(-1)
    coef = flat @ ref.conj() / np.vdot(ref, ref)
    return np.abs(flat - coef[:, None] * ref[None, :]).max() / np.abs(ref).max()


@pytest.mark.parametrize("profile", ["exp", "biexp"])
def test_corollary1_pure_dephasing(profile):
    model = build("ex3", profile=profile, grid=GRID)
    L = model.structure.matrix
    for kind in (Kind.TCL, Kind.NZ, Kind.RED):
        gen = convert_generator(model.generator, kind)
        assert proportionality_residual(gen.matrices(), L) <= 1e-9
        assert proportionality_residual(gen.delta_part().matrix[None], L) <= 1e-9


def test_corollary1_barred_model():
    # the barred map has no TCL generator after phi_bar first vanishes, so only NZ and RED are checked
    model = build("ex3bar", grid=GRID)
    L = model.structure.matrix
    for kind in (Kind.NZ, Kind.RED):
        gen = convert_generator(model.generator, kind)
        assert proportionality_residual(gen.matrices(), L) <= 1e-9


def test_pure_dephasing_kernel_matches_reference():
    model = build("ex3", profile="biexp", grid=TimeGrid(5.0, 5000))
    nz = convert_generator(model.generator, Kind.NZ)
    ell = -1.0
    a = channel(nz, ell)
    assert abs(nz.signals[a].delta_weight / ell - model.reference["kernel_delta"]) < 1e-6
    assert np.abs(nz.signals[a].samples.real[2:] / ell - model.reference["kernel"][2:]).max() < 1e-5
    red = convert_generator(model.generator, Kind.RED)
    assert np.abs(red.signals[a].samples.real / ell - model.reference["K"]).max() < 1e-6


# [DERIVED] mpmath Talbot inversion of the default kernels (k = e^{-4t}); TCL eigenvalues frozen
FROZEN_TCL = {
    ("ex2", -2.0): {0.5: -0.46267099406154949, 2.0: -0.58409009558278146},
    ("qutrit", -3.0): {0.5: -0.72046915561104127, 2.0: -0.9877145689009765},
}


@pytest.mark.parametrize("key", list(FROZEN_TCL))
def test_kernel_models_tcl_frozen(key):
    name, lam = key
    grid = TimeGrid(2.0, 4000)
    gen = build(name, grid=grid).generator
    tcl = convert_generator(gen, Kind.TCL)
    a = channel(gen, lam)
    for t, value in FROZEN_TCL[key].items():
        assert abs(tcl.signals[a].samples[int(round(t / grid.dt))].real - value) < 1e-6


@pytest.mark.parametrize("name", ["ex2", "qutrit"])
def test_kernel_models_map_closed_form(name):
    model = build(name, grid=GRID)
    numeric = np.stack([s.samples for s in map_signals(model.generator)], axis=1)
    assert np.abs(numeric - model.reference["map_eigenvalues"]).max() < 1e-5
    assert np.abs(model.reference["map_eigenvalues"][0] - 1).max() < 1e-14


def test_zoo_has_six_models():
    assert [m.config.model_id for m in zoo(TimeGrid(1.0, 10))] == list(ModelId)
