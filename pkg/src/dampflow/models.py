"""Built-in commutative models with closed-form reference data.

Each model fixes a damping decomposition and a time profile; `build`
returns the generator in its native description (TCL or NZ) together with
the closed forms used as oracles elsewhere.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .dynamics import GeneratorSpec, Kind
from .errors import PreconditionViolated, UnknownModel
from .qops import (
    IDENTITY_2,
    SIGMA_MINUS,
    SIGMA_PLUS,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    DampingDecomposition,
    SuperOp,
    gell_mann_basis,
    pauli_basis,
    to_superop,
)
from .scalarflow import EigenSignal, LaplaceFn, TimeGrid, talbot_inverse_laplace

DEFAULT_GRID = TimeGrid(5.0, 2000)
SIMPLEX_TOL = 1e-12


class ModelId(str, enum.Enum):
    AMPLITUDE_DAMPING = "amplitude_damping"
    SIGMA_PM_KERNEL = "sigma_pm_kernel"
    PURE_DEPHASING = "pure_dephasing"
    DEPHASING_BAR = "dephasing_bar"
    RANDOM_DEPHASING = "random_dephasing"
    QUTRIT_LADDER = "qutrit_ladder"


ALIASES = {
    "ex1": ModelId.AMPLITUDE_DAMPING,
    "ex2": ModelId.SIGMA_PM_KERNEL,
    "ex3": ModelId.PURE_DEPHASING,
    "ex3bar": ModelId.DEPHASING_BAR,
    "ex4": ModelId.RANDOM_DEPHASING,
    "qutrit": ModelId.QUTRIT_LADDER,
}

# profile selectors per model; the first entry is the default
PROFILES = {
    ModelId.AMPLITUDE_DAMPING: ("one_minus_exp", "constant"),
    ModelId.SIGMA_PM_KERNEL: ("exp", "constant"),
    ModelId.PURE_DEPHASING: ("exp", "biexp"),
    ModelId.DEPHASING_BAR: ("exp_cos", "exp", "biexp"),
    ModelId.RANDOM_DEPHASING: ("closed_form",),
    ModelId.QUTRIT_LADDER: ("exp", "constant"),
}

# memory-kernel decay rate b in k(t) = k0 exp(-b t); see `kernel_profile`
DEFAULT_KERNEL_DECAY = 4.0


def resolve_model(name) -> ModelId:
    if isinstance(name, ModelId):
        return name
    key = str(name).strip().lower()
    if key in ALIASES:
        return ALIASES[key]
    try:
        return ModelId(key)
    except ValueError:
        try:
            return ModelId[key.upper()]
        except KeyError:
            known = sorted(ALIASES) + [m.value for m in ModelId]
            raise UnknownModel(f"unknown model {name!r}; known: {', '.join(known)}") from None


@dataclass(frozen=True)
class SimplexPoint:
    x1: float
    x2: float
    x3: float

    def __post_init__(self):
        xs = self.as_array()
        if np.any(xs < -SIMPLEX_TOL) or abs(xs.sum() - 1.0) > SIMPLEX_TOL:
            raise PreconditionViolated(f"({self.x1}, {self.x2}, {self.x3}) is not on the probability simplex")

    def as_array(self) -> np.ndarray:
        return np.array([self.x1, self.x2, self.x3], dtype=float)

    @classmethod
    def of(cls, values) -> "SimplexPoint":
        if isinstance(values, SimplexPoint):
            return values
        xs = [float(v) for v in values]
        if len(xs) != 3:
            raise PreconditionViolated("a simplex point needs three coordinates")
        return cls(*xs)


@dataclass(frozen=True)
class ModelConfig:
    model_id: ModelId
    grid: TimeGrid = DEFAULT_GRID
    profile: str | None = None
    amplitude: float = 1.0
    decay: float = DEFAULT_KERNEL_DECAY
    x: SimplexPoint = field(default_factory=lambda: SimplexPoint(1 / 3, 1 / 3, 1 / 3))

    def __post_init__(self):
        object.__setattr__(self, "model_id", resolve_model(self.model_id))
        object.__setattr__(self, "x", SimplexPoint.of(self.x))
        allowed = PROFILES[self.model_id]
        if self.profile is None:
            object.__setattr__(self, "profile", allowed[0])
        elif self.profile not in allowed:
            raise PreconditionViolated(
                f"profile {self.profile!r} not available for {self.model_id.value}; choose from {allowed}"
            )


@dataclass(frozen=True, eq=False)
class Model:
    config: ModelConfig
    generator: GeneratorSpec
    structure: SuperOp
    reference: dict


# ---------------------------------------------------------------- closed forms


def rational2_inverse(alpha, beta, p, q, t) -> np.ndarray:
    """Inverse Laplace transform of (alpha u + beta) / (u^2 + p u + q)."""
    t = np.asarray(t, dtype=float)
    disc = complex(p * p - 4 * q)
    root = np.sqrt(disc)
    if abs(root) < 1e-12:
        r = -p / 2
        return np.real(np.exp(r * t) * (alpha + (alpha * r + beta) * t))
    r1, r2 = (-p + root) / 2, (-p - root) / 2
    val = ((alpha * r1 + beta) * np.exp(r1 * t) - (alpha * r2 + beta) * np.exp(r2 * t)) / (r1 - r2)
    return np.real(val)


def kernel_profile(profile: str, k0: float, decay: float):
    """Memory-kernel scalar k(t) for the sigma_+- kernel and qutrit families."""
    if profile == "exp":
        return lambda t: k0 * np.exp(-decay * t)
    if profile == "constant":
        return lambda t: k0 + 0.0 * t
    raise PreconditionViolated(f"unknown kernel profile {profile!r}")


def kernel_map_eigenvalue(profile: str, k0: float, decay: float, lam: float, t) -> np.ndarray:
    """Map eigenvalue solving dm/dt = -lam (k * m): m~ = 1/(u + lam k~)."""
    if profile == "exp":
        return rational2_inverse(1.0, decay, decay, lam * k0, t)
    if profile == "constant":
        return rational2_inverse(1.0, 0.0, 0.0, lam * k0, t)
    raise PreconditionViolated(f"unknown kernel profile {profile!r}")


# pure-dephasing profiles phi(t) and their exact memory kernels k = c delta + r
PHI_PROFILES = {
    "exp": {
        "phi": lambda t: np.exp(-t),
        "gamma": lambda t: 1.0 + 0.0 * t,
        "kernel_delta": 1.0,
        "kernel": lambda t: 0.0 * t,
        "K": lambda t: 1.0 + 0.0 * t,
        "phi_laplace": lambda u: 1 / (u + 1),
        "bar": (1.0, 1.0, 3.0, 2.0),
    },
    "exp_cos": {
        "phi": lambda t: np.exp(-t) * np.cos(t),
        "gamma": lambda t: 1.0 + np.tan(t),
        "kernel_delta": 1.0,
        "kernel": lambda t: np.exp(-t),
        "K": lambda t: 2.0 - np.exp(-t),
        "phi_laplace": lambda u: (u + 1) / ((u + 1) ** 2 + 1),
        "bar": (1.0, 1.0, 3.0, 4.0),
    },
    "biexp": {
        "phi": lambda t: 0.5 * (np.exp(-t) + np.exp(-3 * t)),
        "gamma": lambda t: (np.exp(-t) + 3 * np.exp(-3 * t)) / (np.exp(-t) + np.exp(-3 * t)),
        "kernel_delta": 2.0,
        "kernel": lambda t: -np.exp(-2 * t),
        "K": lambda t: 1.5 + 0.5 * np.exp(-2 * t),
        "phi_laplace": lambda u: 0.5 * (1 / (u + 1) + 1 / (u + 3)),
        "bar": (1.0, 2.0, 6.0, 6.0),
    },
}
# "bar" holds (alpha, beta, p, q) with phi_bar~(u) = (alpha u + beta)/(u^2 + p u + q);
# the "exp" entry is (u + 1)/((u + 1)(u + 2)) = 1/(u + 2).


def bar_phi_laplace(profile: str) -> LaplaceFn:
    """phi_bar~(u) = (1/u)(1 + dphi~)/(1 - dphi~) with dphi~ = u phi~ - 1."""
    phi = PHI_PROFILES[profile]["phi_laplace"]

    def evaluator(u):
        dphi = u * phi(u) - 1.0
        return (1.0 + dphi) / (u * (1.0 - dphi))

    return LaplaceFn(evaluator, abscissa=0.0)


def bar_phi_closed(profile: str, t) -> np.ndarray:
    a, b, p, q = PHI_PROFILES[profile]["bar"]
    return rational2_inverse(a, b, p, q, t)


def bar_phi_derivative_closed(profile: str, t) -> np.ndarray:
    a, b, p, q = PHI_PROFILES[profile]["bar"]
    # u F(u) - F(0+) with F(0+) = a
    return rational2_inverse(b - a * p, -a * q, p, q, t)


def bar_gamma_closed(profile: str, t) -> np.ndarray:
    """gamma_bar = -(1/2) d/dt ln|phi_bar|."""
    return -0.5 * bar_phi_derivative_closed(profile, t) / bar_phi_closed(profile, t)


def reference_bar_dephasing(profile: str = "exp_cos", grid: TimeGrid = DEFAULT_GRID,
                            contour_nodes: int = 32) -> tuple[EigenSignal, EigenSignal]:
    """(gamma_bar, phi_bar) by Talbot inversion of the Laplace-domain expression.

    gamma_bar diverges where phi_bar crosses zero; samples there are large
    but finite unless a grid point hits the zero exactly.
    """
    if profile not in PHI_PROFILES:
        raise PreconditionViolated(f"no Laplace data for phi profile {profile!r}")
    fbar = bar_phi_laplace(profile)
    phi_bar = talbot_inverse_laplace(fbar, grid, contour_nodes)
    dphi = talbot_inverse_laplace(LaplaceFn(lambda u: u * fbar(u) - 1.0), grid, contour_nodes)
    phi_re = phi_bar.samples.real
    gamma = -0.5 * dphi.samples.real / phi_re
    return EigenSignal(grid, gamma), EigenSignal(grid, phi_re)


def simplex_mu(x, t) -> np.ndarray:
    """mu_k(t) = -(1 - x_k)/(1 - x_k + e^{2t} x_k), shape (len(t), 3)."""
    xs = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)[..., None]
    return -(1.0 - xs) / (1.0 - xs + np.exp(2.0 * t) * xs)


def combine_rates(values) -> np.ndarray:
    """gamma_k = v_k - v_i - v_j along the last axis."""
    v = np.asarray(values)
    return 2.0 * v - v.sum(axis=-1, keepdims=True)


def exact_pauli_rates(x, t) -> np.ndarray:
    return combine_rates(simplex_mu(x, t))


def simplex_Y(x, t) -> np.ndarray:
    xs = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)[..., None]
    return np.exp(-2.0 * xs * t) * (xs - 1.0)


def reference_redfield_rates(x, grid: TimeGrid = DEFAULT_GRID) -> list[EigenSignal]:
    """gamma^Red_k from the Y_k combinations, one EigenSignal per k."""
    point = SimplexPoint.of(x).as_array()
    rates = combine_rates(simplex_Y(point, grid.times))
    return [EigenSignal(grid, rates[:, k]) for k in range(3)]


def random_dephasing_map_eigenvalues(x, t) -> np.ndarray:
    xs = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)[..., None]
    return xs + (1.0 - xs) * np.exp(-2.0 * t)


# ---------------------------------------------------------------- structures


def _amplitude_damping_structure():
    basis = pauli_basis()
    tau = [(IDENTITY_2 - SIGMA_Z) / 2, SIGMA_Z, SIGMA_PLUS, SIGMA_MINUS]
    dual = [IDENTITY_2, (IDENTITY_2 + SIGMA_Z) / 2, SIGMA_PLUS, SIGMA_MINUS]
    eig = np.array([0.0, -1.0, -0.5, -0.5])
    dec = DampingDecomposition.from_operators(basis, eig, tau, dual)
    sp, sm = SIGMA_PLUS, SIGMA_MINUS
    spm = sp @ sm
    action = to_superop(lambda w: sm @ w @ sp - 0.5 * (spm @ w + w @ spm), basis)
    return dec, action


def _pauli_ops():
    return [IDENTITY_2 / np.sqrt(2), SIGMA_X / np.sqrt(2), SIGMA_Y / np.sqrt(2), SIGMA_Z / np.sqrt(2)]


def _sigma_pm_structure():
    basis = pauli_basis()
    dec = DampingDecomposition.orthonormal(basis, [0.0, -1.0, -1.0, -2.0], _pauli_ops())
    sp, sm = SIGMA_PLUS, SIGMA_MINUS
    action = to_superop(lambda w: sm @ w @ sp + sp @ w @ sm - w, basis)
    return dec, action


def _pure_dephasing_structure():
    basis = pauli_basis()
    dec = DampingDecomposition.orthonormal(basis, [0.0, -1.0, -1.0, 0.0], _pauli_ops())
    p0, p1 = SIGMA_PLUS @ SIGMA_MINUS, SIGMA_MINUS @ SIGMA_PLUS
    action = to_superop(lambda w: p0 @ w @ p0 + p1 @ w @ p1 - w, basis)
    return dec, action


def _dephasing_bar_structure():
    basis = pauli_basis()
    dec = DampingDecomposition.orthonormal(basis, [0.0, -2.0, -2.0, 0.0], _pauli_ops())
    action = to_superop(lambda w: SIGMA_Z @ w @ SIGMA_Z - w, basis)
    return dec, action


def _random_dephasing_structure(x):
    basis = pauli_basis()
    eig = np.concatenate([[0.0], 2.0 * simplex_mu(x, 0.0)])
    dec = DampingDecomposition.orthonormal(basis, eig, _pauli_ops())
    return dec


def qutrit_ladder_operators() -> tuple[np.ndarray, np.ndarray]:
    s_plus = np.diag([1.0, 1.0], k=1).astype(complex)
    return s_plus, s_plus.T.copy()


QUTRIT_EIGENVALUES = np.array([0.0, -3.0, -2.5, -2.5, -1.0, -1.0, -1.0, -0.5, -0.5])


def qutrit_damping_operators() -> np.ndarray:
    s = gell_mann_basis().elements
    r2, r3 = np.sqrt(2.0), np.sqrt(3.0)
    return np.array([
        np.eye(3) / r3,
        -r3 * s[2] / 2 + s[7] / 2,
        -s[1] / r2 + s[6] / r2,
        -s[0] / r2 + s[5] / r2,
        s[2] / 2 + r3 * s[7] / 2,
        s[3],
        s[4],
        s[1] / r2 + s[6] / r2,
        s[0] / r2 + s[5] / r2,
    ])


def _qutrit_structure():
    basis = gell_mann_basis()
    dec = DampingDecomposition.orthonormal(basis, QUTRIT_EIGENVALUES, qutrit_damping_operators())
    sp, sm = qutrit_ladder_operators()
    a, b = sp @ sm, sm @ sp
    action = to_superop(
        lambda w: sm @ w @ sp - 0.5 * (a @ w + w @ a) + sp @ w @ sm - 0.5 * (b @ w + w @ b), basis
    )
    return dec, action


# ---------------------------------------------------------------- builders


def _scaled_signals(grid: TimeGrid, eigenvalues, profile_values, delta=0.0) -> list[EigenSignal]:
    return [EigenSignal(grid, np.real(lam) * profile_values, np.real(lam) * delta) for lam in eigenvalues]


def _build_amplitude_damping(cfg: ModelConfig) -> Model:
    dec, action = _amplitude_damping_structure()
    t = cfg.grid.times
    g0 = cfg.amplitude
    if cfg.profile == "one_minus_exp":
        gamma, gamma_int = g0 * (1 - np.exp(-t)), g0 * (t - 1 + np.exp(-t))
    else:
        gamma, gamma_int = g0 + 0.0 * t, g0 * t
    gen = GeneratorSpec(Kind.TCL, dec, _scaled_signals(cfg.grid, dec.eigenvalues, gamma))
    maps = np.exp(np.outer(gamma_int, dec.eigenvalues.real))
    ref = {"eigenvalues": dec.eigenvalues.real, "gamma": gamma, "map_eigenvalues": maps}
    return Model(cfg, gen, action, ref)


def _kernel_model(cfg: ModelConfig, dec: DampingDecomposition, action: SuperOp) -> Model:
    t = cfg.grid.times
    k = kernel_profile(cfg.profile, cfg.amplitude, cfg.decay)(t)
    gen = GeneratorSpec(Kind.NZ, dec, _scaled_signals(cfg.grid, dec.eigenvalues, k))
    lams = -dec.eigenvalues.real
    maps = np.stack([kernel_map_eigenvalue(cfg.profile, cfg.amplitude, cfg.decay, lam, t) for lam in lams], axis=1)
    ref = {"eigenvalues": dec.eigenvalues.real, "kernel": k, "map_eigenvalues": maps}
    return Model(cfg, gen, action, ref)


def _build_sigma_pm(cfg: ModelConfig) -> Model:
    dec, action = _sigma_pm_structure()
    return _kernel_model(cfg, dec, action)


def _build_qutrit(cfg: ModelConfig) -> Model:
    dec, action = _qutrit_structure()
    return _kernel_model(cfg, dec, action)


def _build_pure_dephasing(cfg: ModelConfig) -> Model:
    dec, action = _pure_dephasing_structure()
    prof = PHI_PROFILES[cfg.profile]
    t = cfg.grid.times
    gamma = prof["gamma"](t)
    gen = GeneratorSpec(Kind.TCL, dec, _scaled_signals(cfg.grid, dec.eigenvalues, gamma))
    ref = {
        "eigenvalues": dec.eigenvalues.real,
        "gamma": gamma,
        "phi": prof["phi"](t),
        "kernel": prof["kernel"](t),
        "kernel_delta": prof["kernel_delta"],
        "K": prof["K"](t),
    }
    return Model(cfg, gen, action, ref)


def _build_dephasing_bar(cfg: ModelConfig) -> Model:
    dec, action = _dephasing_bar_structure()
    prof = PHI_PROFILES[cfg.profile]
    t = cfg.grid.times
    k = prof["kernel"](t)
    gen = GeneratorSpec(Kind.NZ, dec, _scaled_signals(cfg.grid, dec.eigenvalues, k, prof["kernel_delta"]))
    phi_bar = bar_phi_closed(cfg.profile, t)
    ref = {
        "eigenvalues": dec.eigenvalues.real,
        "kernel": k,
        "kernel_delta": prof["kernel_delta"],
        "K": prof["K"](t),
        "phi_bar": phi_bar,
        "gamma_bar": bar_gamma_closed(cfg.profile, t),
        "gamma_bar_integral": -0.5 * np.log(np.abs(phi_bar)),
    }
    return Model(cfg, gen, action, ref)


def _build_random_dephasing(cfg: ModelConfig) -> Model:
    x = cfg.x.as_array()
    dec = _random_dephasing_structure(x)
    t = cfg.grid.times
    mu = simplex_mu(x, t)
    values = np.concatenate([np.zeros((len(t), 1)), 2.0 * mu], axis=1)
    gen = GeneratorSpec(Kind.TCL, dec, [EigenSignal(cfg.grid, values[:, a]) for a in range(4)])
    lam = random_dephasing_map_eigenvalues(x, t)
    ref = {
        "mu": mu,
        "rates": combine_rates(mu),
        "map_eigenvalues": np.concatenate([np.ones((len(t), 1)), lam], axis=1),
        "G": -2.0 * (1.0 - x) * np.exp(-2.0 * t)[:, None],
        "Y": simplex_Y(x, t),
        "redfield_eigenvalues": 2.0 * simplex_Y(x, t),
        "redfield_rates": combine_rates(simplex_Y(x, t)),
    }
    structure = dec.compose(np.concatenate([[0.0], -2.0 * (1.0 - x)]))
    return Model(cfg, gen, structure, ref)


_BUILDERS: dict[ModelId, Callable[[ModelConfig], Model]] = {
    ModelId.AMPLITUDE_DAMPING: _build_amplitude_damping,
    ModelId.SIGMA_PM_KERNEL: _build_sigma_pm,
    ModelId.PURE_DEPHASING: _build_pure_dephasing,
    ModelId.DEPHASING_BAR: _build_dephasing_bar,
    ModelId.RANDOM_DEPHASING: _build_random_dephasing,
    ModelId.QUTRIT_LADDER: _build_qutrit,
}


def build(config: ModelConfig | str, **overrides) -> Model:
    if not isinstance(config, ModelConfig):
        config = ModelConfig(resolve_model(config), **overrides)
    elif overrides:
        raise TypeError("pass overrides only together with a model name")
    return _BUILDERS[config.model_id](config)


def zoo(grid: TimeGrid = DEFAULT_GRID) -> list[Model]:
    """Every model at its default parameters."""
    return [build(ModelConfig(mid, grid=grid)) for mid in ModelId]


__all__ = [
    "ModelId", "ALIASES", "PROFILES", "ModelConfig", "Model", "SimplexPoint", "build", "zoo",
    "resolve_model", "reference_redfield_rates", "reference_bar_dephasing", "exact_pauli_rates",
    "simplex_mu", "simplex_Y", "combine_rates", "random_dephasing_map_eigenvalues",
    "rational2_inverse", "bar_phi_closed", "bar_gamma_closed", "bar_phi_laplace",
    "kernel_map_eigenvalue", "qutrit_damping_operators", "qutrit_ladder_operators", "PHI_PROFILES",
    "QUTRIT_EIGENVALUES",
]
