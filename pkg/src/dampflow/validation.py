"""Invariant suite over the model zoo, used by ``dampflow validate``."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import scalarflow as sf
from .dynamics import Kind, convert_generator, propagate, propagate_nz, propagate_tcl, trace_preservation_error
from .errors import SingularMap
from .lindblad import round_trip_error
from .models import ModelConfig, ModelId, build
from .qops import damping_decompose, gell_mann_basis, pauli_basis
from .scalarflow import EigenSignal, TimeGrid


@dataclass
class Check:
    name: str
    residual: float | None
    tolerance: float
    passed: bool
    status: str = "ok"
    note: str = ""


def _check(name, residual, tol, override, note=""):
    tol = tol if override is None else override
    passed = bool(residual <= tol)
    return Check(name, float(residual), float(tol), passed, "ok" if passed else "failed", note)


def _skipped(name, tol, note):
    return Check(name, None, float(tol), True, "skipped", note)


def _basis_checks(override):
    out = []
    for basis in (pauli_basis(), gell_mann_basis()):
        err = np.abs(basis.gram() - np.eye(basis.size)).max()
        out.append(_check(f"basis_orthonormal:{basis.name}", err, 1e-12, override))
    return out


def _equivalence_residual(model):
    tcl = convert_generator(model.generator, Kind.TCL)
    nz = convert_generator(model.generator, Kind.NZ)
    return propagate_tcl(tcl).max_difference(propagate_nz(nz))


def second_order_residuals(grid: TimeGrid) -> dict:
    """Residuals that should scale like dt^2; SingularMap entries are None."""
    out = {}
    for mid in ModelId:
        model = build(ModelConfig(mid, grid=grid))
        try:
            out[f"tcl_nz_equivalence:{mid.value}"] = _equivalence_residual(model)
        except SingularMap:
            out[f"tcl_nz_equivalence:{mid.value}"] = None
    f = EigenSignal.from_function(grid, lambda t: -1.0 - 0.5 * np.sin(t))
    out["map_round_trip"] = sf.grid_max_abs(sf.map_to_tcl(sf.tcl_to_map(f)), f)
    out["nz_round_trip"] = sf.grid_max_abs(sf.nz_to_tcl(sf.tcl_to_nz(f)), f)
    return out


_SECOND_ORDER_C = {"tcl_nz_equivalence": 5.0, "map_round_trip": 10.0, "nz_round_trip": 50.0}


def run_validation(grid: TimeGrid, tolerance: float | None = None, halve_dt: bool = False) -> dict:
    checks: list[Check] = _basis_checks(tolerance)
    for mid in ModelId:
        model = build(ModelConfig(mid, grid=grid))
        gen = model.generator
        dec = damping_decompose(model.structure)
        rel = np.linalg.norm(dec.reconstruct().matrix - model.structure.matrix) / max(
            np.linalg.norm(model.structure.matrix), 1e-300)
        checks.append(_check(f"damping_reconstruction:{mid.value}", rel, 1e-9, tolerance))

        mid_slice = gen.at(grid.n_steps // 2)
        checks.append(_check(f"lindblad_round_trip:{mid.value}", round_trip_error(mid_slice), 1e-9, tolerance))

        traj = propagate(gen)
        checks.append(_check(f"trace_preservation:{mid.value}",
                             trace_preservation_error(traj.maps, traj.basis).max(), 1e-8, tolerance))

        try:
            tcl = convert_generator(gen, Kind.TCL)
        except SingularMap as exc:
            checks.append(_skipped(f"initial_consistency:{mid.value}", 1e-10,
                                   f"no time-local generator: {exc}"))
        else:
            red = convert_generator(gen, Kind.RED)
            nz = convert_generator(gen, Kind.NZ)
            res = max(
                max(abs(r.samples[0] - s.samples[0]), abs(n.delta_weight - s.samples[0]))
                for r, s, n in zip(red.signals, tcl.signals, nz.signals)
            )
            checks.append(_check(f"initial_consistency:{mid.value}", res, 1e-10, tolerance))

    semigroup = sf.tcl_to_nz(EigenSignal.constant(grid, -1.0))
    checks.append(_check("semigroup_delta_kernel",
                         max(np.abs(semigroup.samples).max(), abs(semigroup.delta_weight + 1.0)), 1e-8, tolerance))

    ex4 = build(ModelConfig(ModelId.RANDOM_DEPHASING, grid=grid, x=(0.2, 0.3, 0.5)))
    red = convert_generator(ex4.generator, Kind.RED).values()[:, 1:].real
    checks.append(_check("ex4_redfield_closed_form",
                         np.abs(red - ex4.reference["redfield_eigenvalues"]).max(), 1e-6, tolerance))

    base = second_order_residuals(grid)
    for name, value in base.items():
        tol = _SECOND_ORDER_C[name.split(":")[0]] * grid.dt ** 2
        if value is None:
            checks.append(_skipped(name, tol, "map eigenvalue crosses zero; no time-local generator"))
        else:
            checks.append(_check(name, value, tol, tolerance))

    convergence = []
    if halve_dt:
        fine = second_order_residuals(grid.refined(2))
        for name, value in base.items():
            if value is None or fine[name] is None:
                convergence.append({"name": name, "status": "skipped"})
                continue
            ratio = value / max(fine[name], 1e-300)
            convergence.append({"name": name, "dt": value, "half_dt": fine[name], "ratio": ratio,
                                "passed": bool(ratio >= 3.0)})
            checks.append(Check(f"convergence:{name}", float(1.0 / ratio), 1.0 / 3.0, bool(ratio >= 3.0),
                                "ok" if ratio >= 3.0 else "failed", "inverse error ratio under dt halving"))

    failed = [c.name for c in checks if not c.passed]
    return {
        "passed": not failed,
        "failed_checks": failed,
        "grid": {"t_end": grid.t_end, "n_steps": grid.n_steps},
        "tolerance_override": tolerance,
        "checks": [asdict(c) for c in checks],
        "convergence": convergence,
    }
