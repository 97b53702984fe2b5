"""Orchestration: compile a ProblemSpec, run the search, export artifacts.

Stress objectives and stress-valued violations are expressed in MPa so
that fitness values, stall tolerances and convergence histories match the
magnitudes quoted for the benchmark problems.
"""

from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import dataclass

import numpy as np

from . import ga as ga_mod
from .elastic import ElasticSolution, MechanicalBCs, assemble_and_solve_elastic, max_von_mises
from .expressions import compile_expr
from .ga import GaConfig, GenerationStats, Individual, evolve
from .gpr import BoundaryConstraint, PosteriorModel, condition
from .materials import VolumeFractionField
from .mesh import GAUSS_WTS, Mesh
from .problems import ProblemSpec
from .thermal import N4_AT_NODES, N4_GAUSS, TemperatureField, ThermalBCs, assemble_and_solve_thermal
from .vtk_io import write_vtk

__all__ = [
    "SolutionFields",
    "RunResult",
    "RuntimeProblem",
    "RunnerError",
    "evaluate_profile",
    "run",
    "export_fields",
]

log = logging.getLogger(__name__)

MPA = 1.0e6


class RunnerError(RuntimeError):
    """A run failed; the message carries the problem context."""


@dataclass
class SolutionFields:
    """Solved temperature and elastic state of one profile evaluation."""

    temperature: TemperatureField
    elastic: ElasticSolution


@dataclass
class RunResult:
    name: str
    seed: int
    mesh: Mesh
    best_field: VolumeFractionField
    best_objective: float
    best_violations: tuple[float, ...]
    history: list[GenerationStats]
    solution: SolutionFields
    evaluations: int
    wall_clock: float


def _compile_value(value):
    return compile_expr(value) if isinstance(value, str) else float(value)


def _nearest_node(mesh: Mesh, xy) -> int:
    d2 = np.einsum("ni,ni->n", mesh.coords - np.asarray(xy, float), mesh.coords - np.asarray(xy, float))
    return int(np.argmin(d2))


class RuntimeProblem:
    """A ProblemSpec compiled against its mesh, ready to evaluate profiles.

    Implements the fitness-problem protocol: evaluate(field) returns
    (objective, violations) with stress quantities in MPa.
    """

    def __init__(self, spec: ProblemSpec, mesh: Mesh | None = None):
        self.spec = spec
        self.mesh = mesh if mesh is not None else spec.load_problem_mesh()

        th = spec.thermal
        self.thermal_bcs = ThermalBCs(
            dirichlet=[(e["set"], _compile_value(e["value"])) for e in th.get("dirichlet", [])],
            flux=[(e["set"], _compile_value(e["value"])) for e in th.get("flux", [])],
            convection=[(e["set"], float(e["h"]), float(e["t_inf"])) for e in th.get("convection", [])],
            heat_source=_compile_value(th.get("heat_source", 0.0)),
        )
        mech = spec.mechanical
        displacement = []
        for e in mech.get("displacement", []):
            where = e["set"] if "set" in e else _nearest_node(self.mesh, e["point"])
            displacement.append((where, e["component"], float(e["value"])))
        self.mech_bcs = MechanicalBCs(
            displacement=displacement,
            traction=[(e["set"], tuple(e["value"])) for e in mech.get("traction", [])],
            body_force=tuple(mech.get("body_force", (0.0, 0.0))),
        )

        self.bc = self._build_vf_constraint()
        self.region = np.asarray(spec.region, dtype=np.int64) if spec.region is not None else None
        self._content_weights = None
        if spec.objective == "min_ceramic_content" and spec.content_measure == "volume":
            self._content_weights = self._volume_weights()

    # ------------------------------------------------------------------
    def _build_vf_constraint(self) -> BoundaryConstraint:
        mesh = self.mesh
        values: dict[int, float] = {}
        for entry in self.spec.vf_boundary:
            bset = mesh.boundary_sets.get(entry["set"])
            if bset is None:
                raise ValueError(
                    f"vf constraint references unknown boundary set {entry['set']!r}"
                )
            ids = [int(i) for i in bset.node_ids if mesh.corner_pos[int(i)] >= 0]
            if "where" in entry and entry["where"] is not None:
                pred = compile_expr(entry["where"])
                ids = [i for i in ids if bool(pred(mesh.coords[i, 0], mesh.coords[i, 1]))]
            for i in ids:
                values[i] = float(entry["value"])
        if not values:
            return BoundaryConstraint(np.empty(0, np.int64), np.empty(0))
        ids = np.array(sorted(values), dtype=np.int64)
        return BoundaryConstraint(ids, np.array([values[i] for i in ids]))

    def _volume_weights(self) -> np.ndarray:
        """Corner-node weights such that w @ values = integral of V over the domain."""
        mesh = self.mesh
        det_j, _, _ = mesh.geometry()
        we = np.einsum("g,eg,gc->ec", GAUSS_WTS, det_j, N4_GAUSS)  # (E, 4)
        w = np.zeros(mesh.n_corner_nodes)
        np.add.at(w, mesh.corner_pos[mesh.elements[:, :4]].ravel(), we.ravel())
        return w

    def ceramic_content(self, field: VolumeFractionField) -> float:
        if self.spec.content_measure == "node_mean":
            return float(field.values.mean())
        return float(self._content_weights_cached() @ field.values / self.mesh.total_area())

    def _content_weights_cached(self) -> np.ndarray:
        if self._content_weights is None:
            self._content_weights = self._volume_weights()
        return self._content_weights

    # ------------------------------------------------------------------
    def solve_fields(self, field: VolumeFractionField) -> SolutionFields:
        temp = assemble_and_solve_thermal(self.mesh, field, self.spec.material, self.thermal_bcs)
        sol = assemble_and_solve_elastic(
            self.mesh, field, self.spec.material, temp, self.mech_bcs, self.spec.plane
        )
        return SolutionFields(temperature=temp, elastic=sol)

    def evaluate_full(self, field: VolumeFractionField):
        fields = self.solve_fields(field)
        sigma_mpa = max_von_mises(fields.elastic, self.region) / MPA
        if self.spec.objective == "min_max_von_mises":
            objective = sigma_mpa
        else:
            objective = self.ceramic_content(field)
        violations = tuple(
            self._violation(c, field, fields, sigma_mpa) for c in self.spec.constraints
        )
        return objective, violations, fields

    def evaluate(self, field: VolumeFractionField):
        objective, violations, _ = self.evaluate_full(field)
        return objective, violations

    def _violation(self, constraint: dict, field, fields: SolutionFields, sigma_mpa: float) -> float:
        kind = constraint["type"]
        if kind == "max_stress_below":
            return max(0.0, sigma_mpa - float(constraint["sigma_star_mpa"]))
        if kind == "vf_above_threshold_where_hot":
            theta_star = float(constraint["theta_star"])
            vc_star = float(constraint["vc_star"])
            theta_nodes = fields.temperature.theta[self.mesh.corner_node_ids]
            hot = theta_nodes >= theta_star
            deficit = np.maximum(0.0, vc_star - field.values[hot])
            # summed deficit normalized by total corner count: sensitive to
            # both the depth and the extent of the violating region
            return float(deficit.sum() / self.mesh.n_corner_nodes)
        raise ValueError(f"unknown constraint type {kind!r}")

    def build_model(self) -> PosteriorModel:
        return condition(self.mesh, self.spec.kernel, self.bc)


def evaluate_profile(spec: ProblemSpec, field: VolumeFractionField):
    """One-shot evaluation of a profile: (objective, violations, SolutionFields)."""
    return RuntimeProblem(spec).evaluate_full(field)


def run(
    spec: ProblemSpec,
    seed: int | None = None,
    out_dir=None,
    n_workers: int = 1,
) -> RunResult:
    """Build the design space, evolve, and (optionally) write artifacts."""
    t0 = time.monotonic()
    name = spec.name
    try:
        runtime = RuntimeProblem(spec)
        model = runtime.build_model()
        ga_cfg = spec.ga if seed is None else _with_seed(spec.ga, seed)

        def progress(stats: GenerationStats):
            log.info(
                "%s gen %d: best %.6g mean %.6g feasible %.0f%%",
                name, stats.generation, stats.best_fitness,
                stats.mean_fitness, 100 * stats.feasible_fraction,
            )

        best, history = evolve(runtime, model, ga_cfg, n_workers=n_workers, on_generation=progress)
        objective, violations, fields = runtime.evaluate_full(best.field)
    except Exception as exc:
        gen = locals().get("history")
        at = f" at generation {len(gen)}" if gen else ""
        raise RunnerError(f"run of {name!r} failed{at}: {exc}") from exc

    result = RunResult(
        name=name,
        seed=ga_cfg.rng_seed,
        mesh=runtime.mesh,
        best_field=best.field,
        best_objective=objective,
        best_violations=violations,
        history=history,
        solution=fields,
        evaluations=len(history) * ga_cfg.population_size,
        wall_clock=time.monotonic() - t0,
    )
    if out_dir is not None:
        export_fields(result, out_dir)
    return result


def _with_seed(cfg: GaConfig, seed: int) -> GaConfig:
    from dataclasses import replace

    return replace(cfg, rng_seed=seed)


def vf_on_all_nodes(mesh: Mesh, field: VolumeFractionField) -> np.ndarray:
    """Spread corner fractions to every node by bilinear interpolation."""
    corner_vals = field.values[mesh.corner_pos[mesh.elements[:, :4]]]  # (E, 4)
    nodal9 = np.einsum("nc,ec->en", N4_AT_NODES, corner_vals)
    out = np.empty(mesh.n_nodes)
    out[mesh.elements] = nodal9
    return out


def export_fields(result: RunResult, out_dir) -> list:
    """Write the VTK field file, the nodal fraction CSV and the history CSV."""
    from pathlib import Path

    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-test"
        probe.touch()
        probe.unlink()
    except OSError as exc:
        raise RunnerError(f"output directory {out} is not writable: {exc}") from exc

    mesh = result.mesh
    sol = result.solution
    vm_mean = sol.elastic.element_von_mises
    vtk_path = out / "fields.vtk"
    write_vtk(
        vtk_path,
        mesh,
        point_scalars={
            "temperature": sol.temperature.theta,
            "volume_fraction": vf_on_all_nodes(mesh, result.best_field),
        },
        point_vectors={"displacement": sol.elastic.u},
        cell_scalars={"von_mises_mean": vm_mean},
        title=f"{result.name} best profile",
    )

    vf_path = out / "volume_fraction.csv"
    with vf_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node_id", "x", "y", "vc"])
        for pos, nid in enumerate(mesh.corner_node_ids):
            x, y = mesh.coords[nid]
            writer.writerow([int(nid), repr(float(x)), repr(float(y)), repr(float(result.best_field.values[pos]))])

    hist_path = out / "history.csv"
    with hist_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["generation", "best_fitness", "mean_fitness", "feasible_fraction"])
        for s in result.history:
            writer.writerow([s.generation, repr(s.best_fitness), repr(s.mean_fitness), repr(s.feasible_fraction)])

    summary_path = out / "summary.json"
    with summary_path.open("w") as fh:
        json.dump(
            {
                "name": result.name,
                "seed": result.seed,
                "objective": result.best_objective,
                "violations": list(result.best_violations),
                "generations": len(result.history),
                "evaluations": result.evaluations,
                "wall_clock_s": result.wall_clock,
            },
            fh,
            indent=2,
        )
    return [vtk_path, vf_path, hist_path, summary_path]
