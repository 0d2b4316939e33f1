"""Propagation of commutative dynamics under the TCL, NZ and Redfield-like descriptions.

A GeneratorSpec fixes one damping decomposition for all times and carries
one EigenSignal per channel. The TCL and Redfield-like equations are
integrated as dense matrix ODEs with RK4. The NZ equation is marched in the
damping frame, where the kernel is diagonal for every t and the memory
integral decouples channel by channel.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import scalarflow as sf
from .errors import PreconditionViolated
from .qops import DampingDecomposition, OperatorBasis, SuperOp
from .scalarflow import EigenSignal, TimeGrid


class Kind(str, enum.Enum):
    TCL = "tcl"
    NZ = "nz"
    RED = "red"


@dataclass(frozen=True, eq=False)
class GeneratorSpec:
    kind: Kind
    decomposition: DampingDecomposition
    signals: tuple

    def __post_init__(self):
        kind = Kind(self.kind)
        object.__setattr__(self, "kind", kind)
        signals = tuple(self.signals)
        object.__setattr__(self, "signals", signals)
        if len(signals) != self.decomposition.size:
            raise PreconditionViolated(
                f"{len(signals)} signals for {self.decomposition.size} damping channels"
            )
        grid = signals[0].grid
        if any(s.grid != grid for s in signals):
            raise PreconditionViolated("all channel signals must share one time grid")
        if kind is not Kind.NZ and any(s.has_delta for s in signals):
            raise PreconditionViolated(f"{kind.value} generators cannot carry delta weights")

    @property
    def grid(self) -> TimeGrid:
        return self.signals[0].grid

    @property
    def basis(self) -> OperatorBasis:
        return self.decomposition.basis

    def values(self) -> np.ndarray:
        """Channel samples, shape (n_steps + 1, channels)."""
        return np.stack([s.samples for s in self.signals], axis=1)

    def delta_weights(self) -> np.ndarray:
        return np.array([s.delta_weight for s in self.signals], dtype=complex)

    def matrices(self) -> np.ndarray:
        """Regular part of the generator at every grid time, shape (n + 1, d, d)."""
        return self.decomposition.compose_matrix(self.values())

    def at(self, k: int) -> SuperOp:
        return SuperOp(self.basis, self.decomposition.compose_matrix(self.values()[k]))

    def delta_part(self) -> SuperOp:
        return self.decomposition.compose(self.delta_weights())

    def coarsened(self, factor: int = 2) -> "GeneratorSpec":
        return GeneratorSpec(self.kind, self.decomposition, [s.coarsened(factor) for s in self.signals])

    def with_signals(self, kind: Kind, signals) -> "GeneratorSpec":
        return GeneratorSpec(kind, self.decomposition, signals)


_CONVERSIONS: dict[tuple[Kind, Kind], Callable[[EigenSignal], EigenSignal]] = {
    (Kind.TCL, Kind.NZ): sf.tcl_to_nz,
    (Kind.TCL, Kind.RED): sf.tcl_to_redfield,
    (Kind.NZ, Kind.TCL): sf.nz_to_tcl,
    (Kind.NZ, Kind.RED): sf.nz_to_redfield,
    (Kind.RED, Kind.NZ): sf.redfield_to_nz,
    (Kind.RED, Kind.TCL): sf.redfield_to_tcl,
}


def _signal_key(sig: EigenSignal):
    return (sig.delta_weight, sig.samples.tobytes())


def convert_generator(gen: GeneratorSpec, target) -> GeneratorSpec:
    """Channel-wise conversion; channels with identical signals are solved once."""
    target = Kind(target)
    if target is gen.kind:
        return gen
    fn = _CONVERSIONS[(gen.kind, target)]
    cache: dict = {}
    out = []
    for sig in gen.signals:
        key = _signal_key(sig)
        if key not in cache:
            cache[key] = fn(sig)
        out.append(cache[key])
    return gen.with_signals(target, out)


def map_signals(gen: GeneratorSpec) -> list[EigenSignal]:
    """Exact map eigenvalues implied by the generator (no time stepping)."""
    if gen.kind is Kind.NZ:
        return [sf.nz_to_map(s) for s in gen.signals]
    return [sf.tcl_to_map(s) for s in gen.signals]


@dataclass(frozen=True, eq=False)
class MapTrajectory:
    grid: TimeGrid
    maps: np.ndarray
    basis: OperatorBasis

    def __post_init__(self):
        maps = np.asarray(self.maps, dtype=complex)
        d = self.basis.size
        if maps.shape != (self.grid.n_steps + 1, d, d):
            raise ValueError(f"trajectory shape {maps.shape} does not match grid and basis")
        object.__setattr__(self, "maps", maps)

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def __len__(self) -> int:
        return len(self.maps)

    def superop(self, k: int) -> SuperOp:
        return SuperOp(self.basis, self.maps[k])

    def channel_values(self, decomposition: DampingDecomposition) -> np.ndarray:
        return decomposition.channel_values(self.maps)

    def coarsened(self, factor: int = 2) -> "MapTrajectory":
        grid = TimeGrid(self.grid.t_end, self.grid.n_steps // factor)
        return MapTrajectory(grid, self.maps[::factor], self.basis)

    def max_difference(self, other: "MapTrajectory") -> float:
        return float(np.abs(self.maps - other.maps).max())


def closed_form_trajectory(gen: GeneratorSpec, map_values=None) -> MapTrajectory:
    """Lambda(t) = sum_a m_a(t) |tau_a><varsigma_a|.

    The eigenvalues m_a come from `map_values` (shape (n + 1, channels)) when
    given, e.g. analytic values from a model, else from the scalar relations.
    """
    if map_values is None:
        values = np.stack([s.samples for s in map_signals(gen)], axis=1)
    else:
        values = np.asarray(map_values, dtype=complex)
    return MapTrajectory(gen.grid, gen.decomposition.compose_matrix(values), gen.basis)


def _half_step(k_mats: np.ndarray) -> np.ndarray:
    """Generator at t_k + dt/2 by four-point cubic interpolation (one-sided at the ends)."""
    n = len(k_mats) - 1
    if n < 3:
        return 0.5 * (k_mats[:-1] + k_mats[1:])
    half = np.empty_like(k_mats[:-1])
    half[1:n - 1] = (-k_mats[:n - 2] + 9 * k_mats[1:n - 1] + 9 * k_mats[2:n] - k_mats[3:]) / 16
    half[0] = (5 * k_mats[0] + 15 * k_mats[1] - 5 * k_mats[2] + k_mats[3]) / 16
    half[n - 1] = (k_mats[n - 3] - 5 * k_mats[n - 2] + 15 * k_mats[n - 1] + 5 * k_mats[n]) / 16
    return half


def rk4_linear(k_mats: np.ndarray, dt: float, initial: np.ndarray | None = None) -> np.ndarray:
    """Classical RK4 for dX/dt = K(t) X with K sampled on the grid."""
    n = len(k_mats) - 1
    d = k_mats.shape[-1]
    half = _half_step(k_mats)
    out = np.empty((n + 1, d, d), dtype=complex)
    out[0] = np.eye(d) if initial is None else initial
    x = out[0]
    for i in range(n):
        k1 = k_mats[i] @ x
        k2 = half[i] @ (x + 0.5 * dt * k1)
        k3 = half[i] @ (x + 0.5 * dt * k2)
        k4 = k_mats[i + 1] @ (x + dt * k3)
        x = x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        out[i + 1] = x
    return out


def _require(gen: GeneratorSpec, *kinds: Kind):
    if gen.kind not in kinds:
        names = "/".join(k.value for k in kinds)
        raise PreconditionViolated(f"expected a {names} generator, got {gen.kind.value}")


def propagate_tcl(gen: GeneratorSpec) -> MapTrajectory:
    """RK4 on dLambda/dt = K_TCL(t) Lambda(t), Lambda(0) = 1."""
    _require(gen, Kind.TCL)
    return MapTrajectory(gen.grid, rk4_linear(gen.matrices(), gen.grid.dt), gen.basis)


def propagate_redfield(gen: GeneratorSpec) -> MapTrajectory:
    """RK4 on dLambda/dt = K_Red(t) Lambda(t), the time-local reading of the coarse-grained equation."""
    _require(gen, Kind.RED)
    return MapTrajectory(gen.grid, rk4_linear(gen.matrices(), gen.grid.dt), gen.basis)


def nz_march(regular: np.ndarray, delta: np.ndarray, dt: float) -> np.ndarray:
    """Heun march of dx/dt = c x + int_0^t r(t - s) x(s) ds, x(0) = 1, per channel.

    `regular` has shape (n + 1, channels), `delta` shape (channels,). The
    memory integral uses the trapezoidal rule; the delta kernel contributes
    c x(t) in full.
    """
    r = np.asarray(regular, dtype=complex)
    c = np.asarray(delta, dtype=complex)
    n = len(r) - 1
    x = np.empty_like(r)
    x[0] = 1.0
    local = c + 0.5 * dt * r[0]
    f = c * x[0]
    for k in range(n):
        # memory terms known before the step: 0.5 r_{k+1} x_0 + sum_{j=1}^{k} r_{k+1-j} x_j
        hist = 0.5 * r[k + 1] * x[0]
        if k:
            hist = hist + np.einsum("jc,jc->c", r[k:0:-1], x[1:k + 1])
        pred = x[k] + dt * f
        f_pred = dt * hist + local * pred
        x[k + 1] = x[k] + 0.5 * dt * (f + f_pred)
        f = f_pred + local * (x[k + 1] - pred)
    return x


def propagate_nz(gen: GeneratorSpec) -> MapTrajectory:
    """Predictor-corrector march of dLambda/dt = C Lambda(t) + int_0^t R(t - s) Lambda(s) ds."""
    _require(gen, Kind.NZ)
    diag = nz_march(gen.values(), gen.delta_weights(), gen.grid.dt)
    maps = gen.decomposition.compose_matrix(diag)
    maps[0] = np.eye(gen.basis.size)
    return MapTrajectory(gen.grid, maps, gen.basis)


def propagate(gen: GeneratorSpec) -> MapTrajectory:
    return {Kind.TCL: propagate_tcl, Kind.NZ: propagate_nz, Kind.RED: propagate_redfield}[gen.kind](gen)


def step_doubling_error(gen: GeneratorSpec) -> float:
    """max |Lambda_dt - Lambda_2dt| on the common times; needs an even step count."""
    if gen.grid.n_steps % 2:
        raise PreconditionViolated("step doubling needs an even number of steps")
    fine = propagate(gen)
    coarse = propagate(gen.coarsened(2))
    return float(np.abs(fine.maps[::2] - coarse.maps).max())


def _unit_images(matrices: np.ndarray, basis: OperatorBasis) -> np.ndarray:
    """Lambda(E_ij) for all matrix units, shape (..., N, N, N, N) indexed [i, j, a, b]."""
    n = basis.dim
    units = np.eye(n * n, dtype=complex).reshape(n * n, n, n)
    coords = basis.coords(units)
    images = np.einsum("...ab,ub->...ua", matrices, coords)
    ops = basis.operator(images)
    return ops.reshape(matrices.shape[:-2] + (n, n, n, n))


def choi_matrices(matrices, basis: OperatorBasis) -> np.ndarray:
    """J = sum_ij E_ij (x) Lambda(E_ij) for a stack of maps."""
    mats = np.asarray(matrices, dtype=complex)
    n = basis.dim
    img = _unit_images(mats, basis)
    perm = img.swapaxes(-3, -2)
    return perm.reshape(mats.shape[:-2] + (n * n, n * n))


def choi_matrix(superop: SuperOp) -> np.ndarray:
    return choi_matrices(superop.matrix, superop.basis)


def trace_preservation_error(matrices, basis: OperatorBasis) -> np.ndarray:
    """|dual(Lambda)(1) - 1| per map, in basis coordinates."""
    mats = np.asarray(matrices, dtype=complex)
    ident = basis.coords(np.eye(basis.dim, dtype=complex))
    dual_on_id = np.einsum("...ba,b->...a", mats.conj(), ident)
    return np.abs(dual_on_id - ident).max(axis=-1)


@dataclass(frozen=True)
class CPTPResult:
    ok: bool
    first_violation_time: float | None
    min_choi_eigenvalue: float
    max_trace_error: float


def cptp_check(traj: MapTrajectory, tol: float = 1e-9) -> CPTPResult:
    choi = choi_matrices(traj.maps, traj.basis)
    herm = 0.5 * (choi + np.swapaxes(choi.conj(), -1, -2))
    min_eig = np.linalg.eigvalsh(herm)[:, 0]
    trace_err = trace_preservation_error(traj.maps, traj.basis)
    bad = np.flatnonzero((min_eig < -tol) | (trace_err > tol))
    first = float(traj.times[bad[0]]) if bad.size else None
    return CPTPResult(not bad.size, first, float(min_eig.min()), float(trace_err.max()))


__all__ = [
    "Kind", "GeneratorSpec", "MapTrajectory", "CPTPResult", "convert_generator", "map_signals",
    "closed_form_trajectory", "rk4_linear", "propagate_tcl", "propagate_nz", "propagate_redfield",
    "propagate", "nz_march", "step_doubling_error", "choi_matrix", "choi_matrices",
    "trace_preservation_error", "cptp_check",
]
