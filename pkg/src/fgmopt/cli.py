"""Command line interface.

Subcommands: run an optimization, evaluate a single profile, emit design
space samples, and inspect a mesh file. Exit code 0 on success, nonzero
with a diagnostic on stderr otherwise.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .gpr import condition
from .materials import VolumeFractionField
from .mesh import load_mesh
from .problems import ProblemSpec, builtin_names, builtin_problem
from .runner import RunnerError, RuntimeProblem, export_fields, run

log = logging.getLogger("fgmopt")


def _load_spec(ref: str) -> ProblemSpec:
    if ref in builtin_names():
        return builtin_problem(ref)
    path = Path(ref)
    if not path.exists():
        raise FileNotFoundError(
            f"{ref!r} is neither a built-in problem ({', '.join(builtin_names())}) "
            f"nor an existing config file"
        )
    with path.open() as fh:
        return ProblemSpec.from_dict(json.load(fh))


def _apply_overrides(spec: ProblemSpec, args) -> ProblemSpec:
    ga = spec.ga
    if getattr(args, "population", None):
        ga = replace(ga, population_size=args.population)
    if getattr(args, "max_generations", None):
        ga = replace(ga, max_generations=args.max_generations)
    if getattr(args, "min_generations", None) is not None:
        ga = replace(ga, min_generations=args.min_generations)
    spec.ga = ga
    return spec


def _cmd_run(args) -> int:
    spec = _apply_overrides(_load_spec(args.problem), args)
    result = run(spec, seed=args.seed, out_dir=args.out, n_workers=args.threads)
    print(
        f"{result.name}: objective {result.best_objective:.6g} "
        f"violations {list(result.best_violations)} "
        f"({len(result.history)} generations, {result.evaluations} evaluations, "
        f"{result.wall_clock:.1f}s)"
    )
    if args.out:
        print(f"artifacts written to {args.out}")
    return 0


def _read_vf_csv(path: Path, n_expected: int) -> dict[int, float]:
    values = {}
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "node_id" not in reader.fieldnames or "vc" not in reader.fieldnames:
            raise ValueError(f"{path}: expected CSV with 'node_id' and 'vc' columns")
        for row in reader:
            values[int(row["node_id"])] = float(row["vc"])
    if len(values) != n_expected:
        raise ValueError(f"{path}: has {len(values)} corner values, mesh needs {n_expected}")
    return values


def _cmd_evaluate(args) -> int:
    spec = _load_spec(args.problem)
    runtime = RuntimeProblem(spec)
    mesh = runtime.mesh
    by_node = _read_vf_csv(Path(args.vf_csv), mesh.n_corner_nodes)
    try:
        values = np.array([by_node[int(nid)] for nid in mesh.corner_node_ids])
    except KeyError as exc:
        raise ValueError(f"{args.vf_csv}: missing value for corner node {exc}") from None
    field = VolumeFractionField(values)
    objective, violations, fields = runtime.evaluate_full(field)
    print(f"objective: {objective:.6g}")
    print(f"violations: {list(violations)}")
    print(f"max von Mises: {fields.elastic.sigma_v_max / 1e6:.6g} MPa")
    print(f"temperature range: {fields.temperature.theta.min():.4g} .. "
          f"{fields.temperature.theta.max():.4g} C")
    if args.out:
        from .runner import RunResult, SolutionFields

        result = RunResult(
            name=spec.name, seed=-1, mesh=mesh, best_field=field,
            best_objective=objective, best_violations=violations,
            history=[], solution=fields, evaluations=1, wall_clock=0.0,
        )
        export_fields(result, args.out)
        print(f"artifacts written to {args.out}")
    return 0


def _cmd_sample(args) -> int:
    spec = _load_spec(args.problem)
    runtime = RuntimeProblem(spec)
    model = runtime.build_model()
    mesh = runtime.mesh
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for m in range(args.count):
        field = model.sample(np.random.default_rng(np.random.SeedSequence((args.seed, m))))
        path = out / f"sample_{m:03d}.csv"
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["node_id", "x", "y", "vc"])
            for pos, nid in enumerate(mesh.corner_node_ids):
                x, y = mesh.coords[nid]
                writer.writerow([int(nid), repr(float(x)), repr(float(y)),
                                 repr(float(field.values[pos]))])
    print(f"wrote {args.count} design-space samples to {out}")
    return 0


def _cmd_mesh_info(args) -> int:
    mesh = load_mesh(args.meshfile)
    print(f"nodes: {mesh.n_nodes}")
    print(f"elements: {mesh.n_elements}")
    print(f"corner nodes: {mesh.n_corner_nodes}")
    print(f"area: {mesh.total_area():.8g}")
    for name, bset in sorted(mesh.boundary_sets.items()):
        print(f"boundary {name}: {len(bset.node_ids)} nodes, {len(bset.edge_list)} edges")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fgmopt",
        description="Graded-material profile optimization on 2D meshes",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log per-generation progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an optimization problem")
    p_run.add_argument("problem", help="built-in problem name or config JSON path")
    p_run.add_argument("--seed", type=int, default=None, help="override the RNG seed")
    p_run.add_argument("--out", default=None, help="directory for result artifacts")
    p_run.add_argument("--threads", type=int, default=1, help="parallel fitness evaluations")
    p_run.add_argument("--population", type=int, default=None, help="override population size")
    p_run.add_argument("--max-generations", type=int, default=None, help="hard generation cap")
    p_run.add_argument("--min-generations", type=int, default=None)
    p_run.set_defaults(func=_cmd_run)

    p_eval = sub.add_parser("evaluate", help="one-shot FEM evaluation of a profile CSV")
    p_eval.add_argument("problem")
    p_eval.add_argument("vf_csv", help="CSV with node_id,x,y,vc rows for all corner nodes")
    p_eval.add_argument("--out", default=None)
    p_eval.set_defaults(func=_cmd_evaluate)

    p_sample = sub.add_parser("sample", help="emit design-space samples as CSVs")
    p_sample.add_argument("problem")
    p_sample.add_argument("--count", type=int, default=5)
    p_sample.add_argument("--seed", type=int, default=0)
    p_sample.add_argument("--out", default="samples")
    p_sample.set_defaults(func=_cmd_sample)

    p_info = sub.add_parser("mesh-info", help="validate and describe a mesh file")
    p_info.add_argument("meshfile")
    p_info.set_defaults(func=_cmd_mesh_info)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (RunnerError, FileNotFoundError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
