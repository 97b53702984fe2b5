"""Graded-material profile optimization on 2D meshes.

Gaussian-process conditioning over mesh corner nodes defines a space of
smooth volume-fraction profiles; a thermoelastic finite-element solver
scores each profile; a genetic algorithm with projection-repaired
crossover searches the space.
"""

from .elastic import ElasticSolution, MechanicalBCs, assemble_and_solve_elastic, max_von_mises, von_mises
from .ga import GaConfig, Individual, deb_fitness, evolve, mutate, sbx_crossover, tournament_select
from .gpr import BoundaryConstraint, KernelConfig, PosteriorModel, build_kernel, condition
from .materials import (
    AL_ZRO2,
    BlendedPointProps,
    MaterialPair,
    MaterialProps,
    VolumeFractionField,
    blend,
    interpolate_vf,
)
from .mesh import BoundarySet, Mesh, Node, Quad9Element, generate_rectangle, load_mesh, save_mesh
from .problems import ProblemSpec, builtin_names, builtin_problem
from .runner import RunResult, RuntimeProblem, SolutionFields, evaluate_profile, export_fields, run
from .thermal import TemperatureField, ThermalBCs, assemble_and_solve_thermal, temperature_at_gauss_points

__version__ = "0.1.0"
