"""Scalar eigenvalue functions and the transforms between them.

Every channel alpha of a commutative dynamics carries a handful of scalar
functions of time:

    m_tcl(t)   time-local generator eigenvalue
    m(t)       dynamical map eigenvalue,   m = exp(int m_tcl)
    G(t)       dm/dt
    m_nz(t)    memory-kernel eigenvalue,   c * delta(t) + r(t)
    m_red(t)   Redfield-like eigenvalue,   int_0^t m_nz

The Laplace-domain relations between them are carried out in the time
domain as Volterra problems on a uniform grid (trapezoidal convolution).
Fixed-Talbot inversion is kept as an independent cross-check path.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import ContourFailure, PreconditionViolated, SingularMap

SINGULAR_FLOOR = 1e-12
IVT_POINT = 1e8


@dataclass(frozen=True)
class TimeGrid:
    t_end: float
    n_steps: int

    def __post_init__(self):
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValueError("n_steps must be a positive integer")
        object.__setattr__(self, "n_steps", int(self.n_steps))
        object.__setattr__(self, "t_end", float(self.t_end))

    @property
    def dt(self) -> float:
        return self.t_end / self.n_steps

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_end, self.n_steps + 1)

    def refined(self, factor: int = 2) -> "TimeGrid":
        return TimeGrid(self.t_end, self.n_steps * factor)

    @classmethod
    def from_dt(cls, t_end: float, dt: float) -> "TimeGrid":
        return cls(t_end, int(round(t_end / dt)))


@dataclass(frozen=True, eq=False)
class EigenSignal:
    """Samples f(t_k) on a grid plus an optional delta(t) weight at the origin."""

    grid: TimeGrid
    samples: np.ndarray
    delta_weight: complex = 0.0

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        if s.shape != (self.grid.n_steps + 1,):
            raise ValueError(f"expected {self.grid.n_steps + 1} samples, got {s.shape}")
        if not np.all(np.isfinite(s)):
            raise ValueError("signal samples must be finite")
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "delta_weight", complex(self.delta_weight))

    @property
    def t(self) -> np.ndarray:
        return self.grid.times

    @property
    def has_delta(self) -> bool:
        return self.delta_weight != 0

    def scaled(self, factor) -> "EigenSignal":
        return EigenSignal(self.grid, factor * self.samples, factor * self.delta_weight)

    def coarsened(self, factor: int = 2) -> "EigenSignal":
        """Subsample onto a grid with `factor` times fewer steps."""
        if self.grid.n_steps % factor:
            raise ValueError("grid does not divide evenly")
        grid = TimeGrid(self.grid.t_end, self.grid.n_steps // factor)
        return EigenSignal(grid, self.samples[::factor], self.delta_weight)

    @classmethod
    def from_function(cls, grid: TimeGrid, fn: Callable, delta_weight: complex = 0.0) -> "EigenSignal":
        return cls(grid, np.broadcast_to(fn(grid.times), (grid.n_steps + 1,)), delta_weight)

    @classmethod
    def constant(cls, grid: TimeGrid, value: complex) -> "EigenSignal":
        return cls(grid, np.full(grid.n_steps + 1, value, dtype=complex))

    @classmethod
    def zeros(cls, grid: TimeGrid) -> "EigenSignal":
        return cls.constant(grid, 0.0)


@dataclass(frozen=True)
class LaplaceFn:
    """Closed-form Laplace transform f~(u), analytic for Re u > abscissa."""

    evaluator: Callable
    abscissa: float = 0.0

    def __call__(self, u):
        return self.evaluator(u)


def _no_delta(sig: EigenSignal, name: str):
    if sig.has_delta:
        raise PreconditionViolated(f"{name} expects a signal without a delta component")


def cumulative_integral(sig: EigenSignal) -> np.ndarray:
    """Trapezoidal int_0^t f, with a delta weight counted in full from t=0+."""
    out = cumulative_trapezoid(sig.samples, dx=sig.grid.dt, initial=0.0)
    if sig.has_delta:
        out = out + sig.delta_weight
        out[0] = 0.0
    return out


def derivative(samples: np.ndarray, dt: float) -> np.ndarray:
    """Centered differences inside, second-order one-sided at both ends."""
    return np.gradient(samples, dt, edge_order=2)


def trapezoid_antiderivative_inverse(samples: np.ndarray, dt: float) -> np.ndarray:
    """Derivative d whose cumulative trapezoid integral reproduces `samples` exactly.

    The recursion d_k = 2 (f_k - f_{k-1}) / dt - d_{k-1} leaves one free
    alternating mode (-1)^k d_0; d_0 is fixed by a least-squares fit of that
    mode to the centered-difference derivative, so no sawtooth survives.
    """
    f = np.asarray(samples, dtype=complex)
    n = len(f)
    if n < 3:
        return derivative(f, dt)
    inc = 2.0 * np.diff(f) / dt
    alt = (-1.0) ** np.arange(n)
    # d_k = alt_k * (d_0 + sum_{j<=k} alt_j inc_{j-1}) with the sum empty at k = 0
    particular = alt * np.concatenate(([0.0], np.cumsum(alt[1:] * inc)))
    d0 = np.mean(alt * (derivative(f, dt) - particular))
    return particular + alt * d0


def trapezoid_convolution(a: np.ndarray, b: np.ndarray, dt: float) -> np.ndarray:
    """(a * b)(t_k) = int_0^t_k a(t_k - s) b(s) ds by the trapezoidal rule."""
    n = len(a)
    full = np.convolve(a, b)[:n]
    return dt * (full - 0.5 * a[0] * b - 0.5 * a * b[0])


def tcl_to_map(m_tcl: EigenSignal) -> EigenSignal:
    """m(t) = exp(int_0^t m_tcl)."""
    _no_delta(m_tcl, "tcl_to_map")
    return EigenSignal(m_tcl.grid, np.exp(cumulative_integral(m_tcl)))


def map_to_tcl(m: EigenSignal, singular_floor: float = SINGULAR_FLOOR) -> EigenSignal:
    """m_tcl = (dm/dt) / m."""
    _no_delta(m, "map_to_tcl")
    _check_invertible(m.samples, m.grid, singular_floor)
    return EigenSignal(m.grid, derivative(m.samples, m.grid.dt) / m.samples)


def _check_invertible(values, grid, floor):
    """Reject samples at the floor, and sign changes of real-valued eigenvalues between samples."""
    values = np.asarray(values)
    bad = np.flatnonzero(np.abs(values) <= floor)
    if np.abs(values.imag).max() <= 1e-12 * max(1.0, np.abs(values).max()):
        re = values.real
        crossing = np.flatnonzero(re[:-1] * re[1:] < 0) + 1
        bad = np.union1d(bad, crossing)
    if bad.size:
        t = float(grid.times[bad[0]])
        raise SingularMap(f"map eigenvalue vanishes near t={t:.6g}; no time-local generator", time=t)


def tcl_to_G(m_tcl: EigenSignal) -> EigenSignal:
    """G = d/dt exp(int m_tcl), evaluated as m_tcl * m."""
    m = tcl_to_map(m_tcl)
    return EigenSignal(m_tcl.grid, m_tcl.samples * m.samples)


_START_WEIGHTS = {
    2: np.array([1 / 3, 4 / 3, 1 / 3]),
    3: np.array([3 / 8, 9 / 8, 9 / 8, 3 / 8]),
    4: np.array([14, 64, 24, 64, 14]) / 45,
}
_GREGORY_END = np.array([3 / 8, 7 / 6, 23 / 24])
# interpolation at t = dt/2: quadratic from nodes 0..2 for the unknown, cubic from 0..3 for the kernel
_HALF = np.array([3 / 8, 3 / 4, -1 / 8])
_HALF_CUBIC = np.array([5, 15, -5, 1]) / 16


def quadrature_weights(i: int) -> np.ndarray:
    """Weights for int_0^{t_i} on i+1 nodes (unit spacing).

    Newton-Cotes for i=2..4, Gregory end-corrected trapezoid (fourth order)
    from i=5 on. The first step is handled separately by the solver.
    """
    if i in _START_WEIGHTS:
        return _START_WEIGHTS[i]
    if i < 2:
        raise ValueError("no closed rule below two intervals")
    w = np.ones(i + 1)
    w[:3] = _GREGORY_END
    w[-3:] = _GREGORY_END[::-1]
    return w


def volterra_second_kind(kernel: np.ndarray, forcing: np.ndarray, dt: float, sign: float = -1.0) -> np.ndarray:
    """Solve x(t) = f(t) + sign * int_0^t k(t - s) x(s) ds by implicit marching.

    x_1 and x_2 are found together (block start: Simpson on [0, dt] with
    quadratic interpolation at dt/2); later steps use fourth-order weights.
    """
    n = len(forcing)
    k = np.asarray(kernel, dtype=complex)
    f = np.asarray(forcing, dtype=complex)
    x = np.zeros(n, dtype=complex)
    x[0] = f[0]
    if n == 1:
        return x
    if n == 2:
        x[1] = (f[1] + sign * 0.5 * dt * k[1] * x[0]) / (1.0 - sign * 0.5 * dt * k[0])
        return x
    h = sign * dt
    k_half = _HALF_CUBIC @ k[:4] if n > 3 else _HALF @ k[:3]
    # x1 = f1 + h/6 [k1 x0 + 4 k_half (3x0 + 6x1 - x2)/8 + k0 x1]
    # x2 = f2 + h/3 [k2 x0 + 4 k1 x1 + k0 x2]
    a = np.array([
        [1.0 - h / 6 * (3.0 * k_half + k[0]), h / 6 * 0.5 * k_half],
        [-h / 3 * 4.0 * k[1], 1.0 - h / 3 * k[0]],
    ])
    rhs = np.array([
        f[1] + h / 6 * (k[1] + 1.5 * k_half) * x[0],
        f[2] + h / 3 * k[2] * x[0],
    ])
    x[1:3] = np.linalg.solve(a, rhs)
    for i in range(3, n):
        w = quadrature_weights(i)
        # k[i:0:-1][j] = k(t_i - t_j) for j < i; the j = i term carries the unknown
        hist = np.dot(w[:-1] * k[i:0:-1], x[:i])
        x[i] = (f[i] + h * hist) / (1.0 - h * w[-1] * k[0])
    return x


def G_to_redfield(G: EigenSignal) -> EigenSignal:
    """Solve m_red = G - G * m_red (convolution)."""
    _no_delta(G, "G_to_redfield")
    return EigenSignal(G.grid, volterra_second_kind(G.samples, G.samples, G.grid.dt))


def redfield_to_nz(m_red: EigenSignal) -> EigenSignal:
    """m_nz = m_red(0) delta(t) + d/dt m_red.

    The derivative is the exact inverse of the cumulative trapezoid, so
    nz_to_redfield undoes this step to roundoff.
    """
    _no_delta(m_red, "redfield_to_nz")
    regular = trapezoid_antiderivative_inverse(m_red.samples, m_red.grid.dt)
    return EigenSignal(m_red.grid, regular, m_red.samples[0])


def nz_to_redfield(m_nz: EigenSignal) -> EigenSignal:
    """m_red(t) = int_0^t m_nz, the delta weight included at t = 0+."""
    vals = cumulative_integral(m_nz)
    if m_nz.has_delta:
        vals[0] = m_nz.delta_weight
    return EigenSignal(m_nz.grid, vals)


def tcl_to_nz(m_tcl: EigenSignal) -> EigenSignal:
    return redfield_to_nz(G_to_redfield(tcl_to_G(m_tcl)))


def tcl_to_redfield(m_tcl: EigenSignal) -> EigenSignal:
    return G_to_redfield(tcl_to_G(m_tcl))


def nz_to_G(m_nz: EigenSignal) -> EigenSignal:
    """Solve dG/dt = r + c G + r * G with G(0) = c (implicit trapezoid)."""
    grid = m_nz.grid
    dt = grid.dt
    c = m_nz.delta_weight
    r = m_nz.samples
    n = len(r)
    g = np.zeros(n, dtype=complex)
    g[0] = c
    # f_i = r_i + c g_i + dt * (0.5 r_i g_0 + sum_{j=1}^{i-1} r_{i-j} g_j + 0.5 r_0 g_i)
    f_prev = r[0] + c * g[0]
    coef = 1.0 - 0.5 * dt * (c + 0.5 * dt * r[0])
    for i in range(1, n):
        known = r[i] + dt * (0.5 * r[i] * g[0] + np.dot(r[i - 1:0:-1], g[1:i]))
        g[i] = (g[i - 1] + 0.5 * dt * (f_prev + known)) / coef
        f_prev = known + (c + 0.5 * dt * r[0]) * g[i]
    return EigenSignal(grid, g)


def nz_to_map(m_nz: EigenSignal) -> EigenSignal:
    G = nz_to_G(m_nz)
    return EigenSignal(m_nz.grid, 1.0 + cumulative_integral(G))


def nz_to_tcl(m_nz: EigenSignal, singular_floor: float = SINGULAR_FLOOR) -> EigenSignal:
    """m_tcl = G / (1 + int_0^t G)."""
    G = nz_to_G(m_nz)
    m = 1.0 + cumulative_integral(G)
    _check_invertible(m, m_nz.grid, singular_floor)
    return EigenSignal(m_nz.grid, G.samples / m)


def redfield_to_tcl(m_red: EigenSignal, singular_floor: float = SINGULAR_FLOOR) -> EigenSignal:
    return nz_to_tcl(redfield_to_nz(m_red), singular_floor)


def neumann_series_partial(G: EigenSignal, j_max: int) -> EigenSignal:
    """sum_{j=1}^{j_max} (-1)^{j+1} G^{*j}; converges on any finite horizon, possibly slowly."""
    _no_delta(G, "neumann_series_partial")
    if j_max < 1:
        raise ValueError("j_max must be >= 1")
    term = G.samples.copy()
    total = term.copy()
    for j in range(2, j_max + 1):
        term = trapezoid_convolution(G.samples, term, G.grid.dt)
        total += (-1) ** (j + 1) * term
    return EigenSignal(G.grid, total)


def laplace_transform(sig: EigenSignal, u) -> np.ndarray:
    """Truncated numerical transform int_0^T e^{-ut} f(t) dt (+ delta weight)."""
    u = np.atleast_1d(np.asarray(u, dtype=complex))
    integrand = np.exp(-np.outer(u, sig.t)) * sig.samples
    return np.trapezoid(integrand, dx=sig.grid.dt, axis=1) + sig.delta_weight


def contraction_condition(G: EigenSignal, u=None) -> dict:
    """Empirical check of |G~(u)| < 1 on real u (default 0.1..100)."""
    if u is None:
        u = np.geomspace(0.1, 100.0, 60)
    vals = np.abs(laplace_transform(G, u))
    return {"holds": bool(vals.max() < 1.0), "max_abs": float(vals.max()),
            "u_at_max": float(np.real(np.asarray(u)[vals.argmax()]))}


def talbot_inverse_laplace(f: LaplaceFn, grid: TimeGrid, contour_nodes: int = 32) -> EigenSignal:
    """Fixed-Talbot inversion at every grid time.

    Uses the full contour theta in (-pi, pi) so complex-valued signals are
    handled; the t = 0 sample is u f(u) at u = IVT_POINT.
    """
    m = int(contour_nodes)
    t = grid.times[1:]
    values = np.empty(grid.n_steps + 1, dtype=complex)
    values[0] = IVT_POINT * f(complex(IVT_POINT))
    values[1:] = talbot_at(f, t, m)
    return EigenSignal(grid, values)


def talbot_at(f: LaplaceFn, t, contour_nodes: int = 32) -> np.ndarray:
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t <= 0):
        raise ValueError("Talbot inversion needs t > 0")
    m = int(contour_nodes)
    k = np.arange(1, m)
    theta = k * np.pi / m
    cot = 1.0 / np.tan(theta)
    sigma = theta + (theta * cot - 1.0) * cot
    r = 2.0 * m / (5.0 * t)
    with np.errstate(over="raise", invalid="raise"):
        try:
            s_pos = np.outer(r, theta * (cot + 1j))
            s_neg = np.conj(s_pos)
            w_pos = 1.0 + 1j * sigma
            w_neg = np.conj(w_pos)
            tt = t[:, None]
            total = (np.exp(tt * s_pos) * f(s_pos) * w_pos).sum(axis=1)
            total += (np.exp(tt * s_neg) * f(s_neg) * w_neg).sum(axis=1)
            total += np.exp(r * t) * f(r.astype(complex))
        except FloatingPointError as exc:
            raise ContourFailure(f"Talbot summands overflow: {exc}") from exc
    out = r / (2.0 * m) * total
    if not np.all(np.isfinite(out)):
        raise ContourFailure("Talbot summands overflow; rescale the contour")
    return out


def grid_max_abs(a: EigenSignal, b: EigenSignal) -> float:
    return float(np.abs(a.samples - b.samples).max())


__all__ = [
    "TimeGrid", "EigenSignal", "LaplaceFn", "tcl_to_map", "map_to_tcl", "tcl_to_G",
    "G_to_redfield", "redfield_to_nz", "nz_to_redfield", "tcl_to_nz", "tcl_to_redfield",
    "nz_to_G", "nz_to_map", "nz_to_tcl", "redfield_to_tcl", "neumann_series_partial",
    "talbot_inverse_laplace", "talbot_at", "laplace_transform", "contraction_condition",
    "cumulative_integral", "derivative", "trapezoid_convolution", "volterra_second_kind",
    "quadrature_weights",
]


def with_samples(sig: EigenSignal, samples) -> EigenSignal:
    return replace(sig, samples=np.asarray(samples, dtype=complex))
