"""CP- and P-divisibility of exact and Redfield-like commutative dynamics."""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from . import scalarflow as sf
from .dynamics import GeneratorSpec, Kind, convert_generator
from .errors import PreconditionViolated, SingularMap
from .lindblad import canonical_rates, check_generator_conditions
from .models import combine_rates, simplex_mu, simplex_Y
from .qops import SIGMA_X, SIGMA_Y, SIGMA_Z
from .scalarflow import EigenSignal, TimeGrid

RATE_SIGN_TOL = 1e-9
SCAN_DT = 0.01
DISTINCT_EIGENVALUE_TOL = 1e-8


def _last_good_time(times: np.ndarray, violated: np.ndarray) -> tuple[float, float | None]:
    """(last grid time before the first violation, first violation time)."""
    bad = np.flatnonzero(violated)
    if not bad.size:
        return float(times[-1]), None
    first = bad[0]
    return float(times[max(first - 1, 0)]), float(times[first])


@dataclass(frozen=True, eq=False)
class DivisibilityReport:
    """Rate-based divisibility verdicts on a grid.

    ``cp_divisible_until`` is the last grid time before the first negative
    canonical rate (t_end if none), so a violation right after t = 0 gives 0.
    """

    grid: TimeGrid
    rates: np.ndarray
    cp_divisible_until: float | None
    p_divisible_until: float | None
    first_cp_violation: float | None = None
    first_p_violation: float | None = None
    model: str = ""
    kind: str = ""
    extras: dict = field(default_factory=dict)

    @property
    def cp_divisible(self) -> bool:
        return self.first_cp_violation is None

    @property
    def p_divisible(self) -> bool | None:
        if self.p_divisible_until is None:
            return None
        return self.first_p_violation is None


def cp_divisibility(gen: GeneratorSpec, tol: float = RATE_SIGN_TOL, model: str = "") -> DivisibilityReport:
    """Canonical rates at every grid time; CP-divisible while all rates >= -tol."""
    if gen.kind is Kind.NZ:
        raise PreconditionViolated("divisibility is decided on time-local (TCL or RED) generators")
    mats = gen.matrices()
    probe = gen.at(len(mats) // 2)
    if not check_generator_conditions(probe):
        raise PreconditionViolated("generator violates trace or Hermiticity preservation")
    rates = canonical_rates(mats, gen.basis)
    until, first = _last_good_time(gen.grid.times, rates.min(axis=1) < -tol)
    p_until, p_first = None, None
    if gen.basis.dim == 2:
        pauli = _pauli_rates_if_diagonal(mats, gen.basis)
        if pauli is not None:
            p_until, p_first = _last_good_time(gen.grid.times, _pairwise_sums(pauli).min(axis=1) < -tol)
    return DivisibilityReport(gen.grid, rates, until, p_until, first, p_first, model, gen.kind.value)


def _pauli_rates_if_diagonal(mats: np.ndarray, basis) -> np.ndarray | None:
    """gamma_k of (1/2) sum gamma_k (s_k w s_k - w) when the generator is a Pauli channel."""
    paulis = np.array([SIGMA_X, SIGMA_Y, SIGMA_Z]) / np.sqrt(2)
    coords = basis.coords(paulis)
    frame = np.einsum("ka,...ab,lb->...kl", coords.conj(), mats, coords)
    off = frame - np.einsum("...kk->...k", frame)[..., None] * np.eye(3)
    ident = basis.coords(np.eye(2, dtype=complex))
    unital = np.einsum("...ab,b->...a", mats, ident)
    if np.abs(off).max() > 1e-9 or np.abs(unital).max() > 1e-9:
        return None
    m = np.einsum("...kk->...k", frame).real
    # Pauli generator eigenvalues: m_k = -(gamma_i + gamma_j)
    return combine_rates(m) / 2.0


def _pairwise_sums(rates: np.ndarray) -> np.ndarray:
    r = np.asarray(rates)
    return np.stack([r[..., 0] + r[..., 1], r[..., 0] + r[..., 2], r[..., 1] + r[..., 2]], axis=-1)


def pauli_p_divisibility(rates, grid: TimeGrid, tol: float = RATE_SIGN_TOL) -> DivisibilityReport:
    """P-divisible while gamma_i + gamma_j >= -tol for all pairs; rates has shape (n + 1, 3)."""
    r = np.asarray(rates, dtype=float)
    if r.shape != (grid.n_steps + 1, 3):
        raise PreconditionViolated(f"expected rates of shape {(grid.n_steps + 1, 3)}, got {r.shape}")
    p_until, p_first = _last_good_time(grid.times, _pairwise_sums(r).min(axis=1) < -tol)
    cp_until, cp_first = _last_good_time(grid.times, r.min(axis=1) < -tol)
    return DivisibilityReport(grid, r, cp_until, p_until, cp_first, p_first, kind="pauli")


# ---------------------------------------------------------------- Fig. 2 scan


def simplex_grid(resolution: int) -> np.ndarray:
    """Barycentric grid with `resolution` subdivisions per edge, boundary included."""
    if resolution < 2:
        raise PreconditionViolated("resolution must be at least 2")
    pts = [(i, j, resolution - i - j) for i in range(resolution + 1) for j in range(resolution + 1 - i)]
    return np.array(pts, dtype=float) / resolution


@dataclass(frozen=True, eq=False)
class ScanResult:
    points: np.ndarray
    times: np.ndarray
    exact_cp: np.ndarray
    red_cp: np.ndarray
    exact_p: np.ndarray
    red_p: np.ndarray
    resolution: int

    def rows(self) -> Iterable[tuple]:
        for p, x in enumerate(self.points):
            for i, t in enumerate(self.times):
                yield (x[0], x[1], x[2], t, int(self.exact_cp[p, i]), int(self.red_cp[p, i]),
                       int(self.exact_p[p, i]), int(self.red_p[p, i]))

    def region(self, panel: str, t: float) -> np.ndarray:
        i = int(np.flatnonzero(np.isclose(self.times, t))[0])
        return self.points[getattr(self, panel)[:, i]]


def _surviving(values: np.ndarray, t_grid: np.ndarray, times: np.ndarray, tol: float) -> np.ndarray:
    """For each requested t: all values at grid times <= t are >= -tol."""
    ok = values.min(axis=-1) >= -tol
    running = np.logical_and.accumulate(ok)
    idx = np.searchsorted(t_grid, times + 1e-12, side="right") - 1
    return running[idx]


def _scan_point(x: np.ndarray, t_grid: np.ndarray, times: np.ndarray, tol: float):
    exact = combine_rates(simplex_mu(x, t_grid))
    red = combine_rates(simplex_Y(x, t_grid))
    return (
        _surviving(exact, t_grid, times, tol),
        _surviving(red, t_grid, times, tol),
        _surviving(_pairwise_sums(exact), t_grid, times, tol),
        _surviving(_pairwise_sums(red), t_grid, times, tol),
    )


def figure2_scan(resolution: int, times, tol: float = RATE_SIGN_TOL, dt: float = SCAN_DT,
                 workers: int | None = None) -> ScanResult:
    """Which simplex points keep all exact / Redfield rates nonnegative up to each time."""
    times = np.sort(np.asarray(list(times), dtype=float))
    if np.any(times < 0):
        raise PreconditionViolated("scan times must be nonnegative")
    t_end = float(times.max())
    n = max(1, int(np.ceil(t_end / dt - 1e-9)))
    t_grid = np.linspace(0.0, n * dt, n + 1)
    points = simplex_grid(resolution)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(lambda x: _scan_point(x, t_grid, times, tol), points))
    cols = [np.array([r[c] for r in results]) for c in range(4)]
    return ScanResult(points, times, *cols, resolution=resolution)


def tripod_mask(points: np.ndarray, atol: float = 1e-12) -> np.ndarray:
    """x_i = x_j <= x_k for some labelling."""
    mask = np.zeros(len(points), dtype=bool)
    for i, j, k in ((0, 1, 2), (0, 2, 1), (1, 2, 0)):
        mask |= (np.abs(points[:, i] - points[:, j]) <= atol) & (points[:, i] <= points[:, k] + atol)
    return mask


def special_points() -> np.ndarray:
    """Vertices and centre: single nonzero eigenvalue, CP-divisible in both panels."""
    return np.array([[1, 0, 0], [0, 1, 0], [0, 0, 1], [1 / 3, 1 / 3, 1 / 3]], dtype=float)


def hausdorff_cells(a: np.ndarray, b: np.ndarray, resolution: int) -> float:
    """Hausdorff distance between point sets in units of one grid cell (sqrt(2)/resolution)."""
    if not len(a) or not len(b):
        return float("inf") if len(a) != len(b) else 0.0
    d = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=-1)
    h = max(d.min(axis=1).max(), d.min(axis=0).max())
    return float(h / (np.sqrt(2) / resolution))


# ---------------------------------------------------------------- corollaries


def _nonzero_channel(gen: GeneratorSpec, tol: float):
    """The single distinct nonzero eigen-direction of a one-eigenvalue generator."""
    values = gen.values()
    delta = gen.delta_weights()
    scale = np.abs(values).max(axis=0) + np.abs(delta)
    active = np.flatnonzero(scale > tol)
    if not active.size:
        return None, active
    ref = active[0]
    for a in active[1:]:
        diff = np.abs(values[:, a] - values[:, ref]).max() + abs(delta[a] - delta[ref])
        if diff > DISTINCT_EIGENVALUE_TOL * max(1.0, scale[ref]):
            raise PreconditionViolated("generator has more than one distinct nonzero eigenvalue")
    return ref, active


@dataclass(frozen=True, eq=False)
class Corollary2Result:
    confirmed: bool
    redfield_cp: bool
    exact_cp: bool
    rate_sign_change: bool
    min_redfield_rate: float
    min_exact_rate: float
    singular_time: float | None
    redfield_rate: EigenSignal | None


def corollary2_check(gen: GeneratorSpec, ell: float | None = None, tol: float = 1e-8) -> Corollary2Result:
    """Single nonzero eigenvalue: exact CP-divisibility must carry over to m_red / ell >= 0.

    `ell` is the nonzero eigenvalue of the fixed structure L; by default it is
    taken from the generator's decomposition. For NZ input the exact rate is
    obtained through the map, and a zero crossing of the map eigenvalue
    (where the time-local rate diverges and flips sign) is reported.
    """
    if gen.kind is Kind.RED:
        raise PreconditionViolated("corollary checks start from an exact TCL or NZ generator")
    alpha, _ = _nonzero_channel(gen, 1e-14)
    grid = gen.grid
    if alpha is None:
        zero = EigenSignal.zeros(grid)
        return Corollary2Result(True, True, True, False, 0.0, 0.0, None, zero)
    if ell is None:
        ell = float(np.real(gen.decomposition.eigenvalues[alpha]))
    if ell >= 0:
        raise PreconditionViolated("the structure eigenvalue must be negative")
    sig = gen.signals[alpha]
    singular_time = None
    if gen.kind is Kind.TCL:
        exact = sig.samples.real / ell
        red = sf.tcl_to_redfield(sig)
    else:
        red = sf.nz_to_redfield(sig)
        try:
            exact = sf.nz_to_tcl(sig).samples.real / ell
        except SingularMap as exc:
            singular_time = exc.time
            G = sf.nz_to_G(sig).samples.real
            m = 1.0 + sf.cumulative_integral(EigenSignal(grid, G)).real
            with np.errstate(divide="ignore", invalid="ignore"):
                exact = np.where(np.abs(m) > sf.SINGULAR_FLOOR, G / m, np.nan) / ell
    red_rate = red.samples.real / ell
    finite = exact[np.isfinite(exact)]
    exact_cp = singular_time is None and bool(finite.min() >= -tol)
    sign_change = singular_time is not None or bool(finite.max() > tol and finite.min() < -tol)
    redfield_cp = bool(red_rate.min() >= -tol)
    confirmed = redfield_cp or not exact_cp
    return Corollary2Result(confirmed, redfield_cp, exact_cp, sign_change,
                            float(red_rate.min()), float(finite.min()), singular_time,
                            EigenSignal(grid, red_rate))


class Verdict(str, enum.Enum):
    NOT_P_DIVISIBLE = "NOT_P_DIVISIBLE"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass(frozen=True, eq=False)
class PauliNecessaryResult:
    verdict: Verdict
    max_redfield_eigenvalue: float
    channel: int | None
    time: float | None
    contraction: list


def gen_pauli_necessary(gen: GeneratorSpec, tol: float = RATE_SIGN_TOL) -> PauliNecessaryResult:
    """A positive Redfield eigenvalue certifies that the exact map is not P-divisible.

    The contraction condition |G~(u)| < 1 behind this implication is
    reported per channel (checked on real u) rather than enforced.
    """
    if gen.kind is Kind.RED:
        raise PreconditionViolated("start from the exact TCL or NZ generator")
    values = gen.values()
    if np.abs(values.imag).max() > 1e-12 or np.abs(gen.delta_weights().imag).max() > 1e-12:
        raise PreconditionViolated("generalized Pauli generators have real eigenvalues")
    red = convert_generator(gen, Kind.RED).values().real
    tcl = gen if gen.kind is Kind.TCL else convert_generator(gen, Kind.TCL)
    contraction = [sf.contraction_condition(sf.tcl_to_G(s)) for s in tcl.signals]
    peak = red.max()
    if peak > tol:
        k, a = np.unravel_index(np.argmax(red), red.shape)
        return PauliNecessaryResult(Verdict.NOT_P_DIVISIBLE, float(peak), int(a), float(gen.grid.times[k]), contraction)
    return PauliNecessaryResult(Verdict.INCONCLUSIVE, float(peak), None, None, contraction)


__all__ = [
    "DivisibilityReport", "cp_divisibility", "pauli_p_divisibility", "figure2_scan", "ScanResult",
    "simplex_grid", "tripod_mask", "special_points", "hausdorff_cells", "corollary2_check",
    "Corollary2Result", "gen_pauli_necessary", "Verdict", "PauliNecessaryResult", "RATE_SIGN_TOL",
]
