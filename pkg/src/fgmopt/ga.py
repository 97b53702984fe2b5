"""Genetic search over the smooth profile design space.

Simulated binary crossover runs on raw chromosome vectors; each child is
then pulled back into the design space by the spectral projection and
clamped, so profiles stay smooth and keep their prescribed boundary
values through every generation. Mutation adds a scaled draw from the
posterior covariance. Constraints are handled with feasibility rules:
feasible individuals rank by objective, infeasible ones by the worst
feasible objective plus their total violation.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dfield, replace
from typing import Callable, Protocol, Sequence

import numpy as np

from .gpr import PosteriorModel
from .materials import VolumeFractionField

__all__ = [
    "GaConfig",
    "Individual",
    "FitnessProblem",
    "GenerationStats",
    "sbx_crossover",
    "crossover_and_repair",
    "mutate",
    "deb_fitness",
    "tournament_select",
    "evolve",
]

log = logging.getLogger(__name__)

# stream tags for per-(generation, index) derived seeds
_TAG_INIT, _TAG_SELECT, _TAG_CROSS, _TAG_MUTATE = 0, 1, 2, 3


def _stream(master_seed: int, tag: int, gen: int, idx: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((master_seed, tag, gen, idx)))


@dataclass(frozen=True)
class GaConfig:
    """Run parameters of the genetic algorithm.

    The crossover strength follows eta(g) = eta_base * (1 + (1 - e^(-g/eta_ramp)) / 2)
    unless ``eta_fn`` overrides it. Termination: at least min_generations
    completed and the best fitness improved by no more than stall_tolerance
    over the last stall_window generations; max_generations (if set) caps
    the run regardless.
    """

    population_size: int = 200
    tournament_size: int = 4
    eta_base: float = 1.5
    eta_ramp: float = 100.0
    mutation_scale: float = 0.25
    mutation_prob: float = 0.3
    min_generations: int = 100
    stall_window: int = 10
    stall_tolerance: float = 0.1
    max_generations: int | None = None
    rng_seed: int = 0
    eta_fn: Callable[[int], float] | None = dfield(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.population_size < 2 or self.population_size % 2:
            raise ValueError(f"population_size must be even and >= 2, got {self.population_size}")
        if self.population_size < 2 * self.tournament_size:
            raise ValueError(
                f"population_size {self.population_size} must be >= 2 * tournament_size "
                f"{self.tournament_size}"
            )
        if not 0.0 < self.mutation_scale <= 1.0:
            raise ValueError(f"mutation_scale must be in (0, 1], got {self.mutation_scale}")
        if not 0.0 <= self.mutation_prob <= 1.0:
            raise ValueError(f"mutation_prob must be in [0, 1], got {self.mutation_prob}")
        if self.rng_seed < 0:
            raise ValueError("rng_seed must be a non-negative integer")

    def eta(self, generation: int) -> float:
        if self.eta_fn is not None:
            return self.eta_fn(generation)
        return self.eta_base * (1.0 + 0.5 * (1.0 - math.exp(-generation / self.eta_ramp)))


@dataclass
class Individual:
    field: VolumeFractionField
    objective: float = math.nan
    violations: tuple[float, ...] = ()
    fitness: float = math.nan

    @property
    def feasible(self) -> bool:
        return sum(self.violations) == 0.0


class FitnessProblem(Protocol):
    """Lower-is-better objective with non-negative violation magnitudes."""

    def evaluate(self, field: VolumeFractionField) -> tuple[float, Sequence[float]]:
        ...


@dataclass(frozen=True)
class GenerationStats:
    generation: int
    best_fitness: float
    mean_fitness: float
    feasible_fraction: float


def sbx_crossover(p1: np.ndarray, p2: np.ndarray, eta: float, rng, r=None) -> tuple[np.ndarray, np.ndarray]:
    """Simulated binary crossover on raw chromosome vectors.

    Returns unprojected, unclamped children; their nodewise midpoint equals
    the parents' midpoint exactly. ``r`` overrides the per-node uniform
    draws (testing hook).
    """
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    if p1.shape != p2.shape:
        raise ValueError(f"parent shapes differ: {p1.shape} vs {p2.shape}")
    if r is None:
        rng = np.random.default_rng(rng)
        r = rng.random(p1.shape)
    else:
        r = np.broadcast_to(np.asarray(r, dtype=float), p1.shape)
    exponent = 1.0 / (eta + 1.0)
    beta = np.where(r <= 0.5, (2.0 * r) ** exponent, (0.5 / (1.0 - r)) ** exponent)
    c1 = 0.5 * ((1.0 + beta) * p1 + (1.0 - beta) * p2)
    c2 = 0.5 * ((1.0 - beta) * p1 + (1.0 + beta) * p2)
    return c1, c2


def crossover_and_repair(
    p1: VolumeFractionField,
    p2: VolumeFractionField,
    eta: float,
    model: PosteriorModel,
    rng,
) -> tuple[VolumeFractionField, VolumeFractionField]:
    """SBX followed by the design-space projection and clamping of each child."""
    c1, c2 = sbx_crossover(p1.values, p2.values, eta, rng)
    return (
        model.project(VolumeFractionField(np.clip(c1, 0.0, 1.0))),
        model.project(VolumeFractionField(np.clip(c2, 0.0, 1.0))),
    )


def mutate(
    field: VolumeFractionField,
    model: PosteriorModel,
    eps: float,
    mutation_prob: float,
    rng,
) -> VolumeFractionField:
    """With probability mutation_prob, add eps times a posterior-covariance draw.

    eps = 0 degenerates to the identity (no perturbation drawn).
    """
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"eps must be in [0, 1], got {eps}")
    if eps == 0.0 or mutation_prob == 0.0:
        return field
    rng = np.random.default_rng(rng)
    if rng.random() >= mutation_prob:
        return field
    return VolumeFractionField(field.values + eps * model.sample_perturbation(rng))


def deb_fitness(population: list[Individual]) -> list[Individual]:
    """Assign feasibility-rule fitness in place and return the population.

    Feasible individuals keep their objective; infeasible ones get the worst
    feasible objective (0 if nobody is feasible) plus their violation sum,
    so every feasible individual outranks every infeasible one.
    """
    feasible_objs = [ind.objective for ind in population if ind.feasible]
    f_max = max(feasible_objs) if feasible_objs else 0.0
    for ind in population:
        ind.fitness = ind.objective if ind.feasible else f_max + sum(ind.violations)
    return population


def tournament_select(population: list[Individual], k: int, rng) -> list[Individual]:
    """Repeated k-way tournaments (draws without replacement) to full pool size."""
    if k > len(population):
        raise ValueError(f"tournament size {k} exceeds population {len(population)}")
    rng = np.random.default_rng(rng)
    pool = []
    n = len(population)
    for _ in range(n):
        entrants = rng.choice(n, size=k, replace=False)
        winner = min(entrants, key=lambda i: population[i].fitness)
        pool.append(population[int(winner)])
    return pool


def _evaluate_population(
    problem: FitnessProblem,
    fields: list[VolumeFractionField],
    n_workers: int,
) -> list[Individual]:
    def one(field: VolumeFractionField) -> Individual:
        try:
            objective, violations = problem.evaluate(field)
            return Individual(field, float(objective), tuple(float(v) for v in violations))
        except Exception:
            log.exception("profile evaluation failed; assigning worst fitness")
            return Individual(field, math.inf, (math.inf,))

    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as ex:
            return list(ex.map(one, fields))
    return [one(f) for f in fields]


def evolve(
    problem: FitnessProblem,
    model: PosteriorModel,
    ga: GaConfig,
    n_workers: int = 1,
    on_generation: Callable[[GenerationStats], None] | None = None,
) -> tuple[Individual, list[GenerationStats]]:
    """Run the genetic loop; returns the best individual and per-generation stats.

    Deterministic for a fixed seed: every random stream is derived from
    (seed, phase, generation, index), and parallel fitness evaluation
    changes nothing because evaluations are pure.
    """
    seed = ga.rng_seed
    fields = [
        model.sample(_stream(seed, _TAG_INIT, 0, i)) for i in range(ga.population_size)
    ]
    elite: Individual | None = None
    history: list[GenerationStats] = []
    gen = 0
    while True:
        population = _evaluate_population(problem, fields, n_workers)
        deb_fitness(population)
        if elite is not None:
            worst = max(range(len(population)), key=lambda i: population[i].fitness)
            population[worst] = replace(elite)
            deb_fitness(population)
        best = min(population, key=lambda ind: ind.fitness)
        stats = GenerationStats(
            generation=gen,
            best_fitness=best.fitness,
            mean_fitness=float(np.mean([ind.fitness for ind in population])),
            feasible_fraction=float(np.mean([ind.feasible for ind in population])),
        )
        history.append(stats)
        if on_generation is not None:
            on_generation(stats)

        completed = gen + 1
        if ga.max_generations is not None and completed >= ga.max_generations:
            break
        if completed >= ga.min_generations and len(history) > ga.stall_window:
            improvement = history[-1 - ga.stall_window].best_fitness - history[-1].best_fitness
            if improvement <= ga.stall_tolerance:
                break

        elite = replace(best)
        eta = ga.eta(gen)
        pool = tournament_select(population, ga.tournament_size, _stream(seed, _TAG_SELECT, gen))
        order = _stream(seed, _TAG_SELECT, gen, 1).permutation(len(pool))
        children: list[VolumeFractionField] = []
        for pair_idx in range(len(pool) // 2):
            pa = pool[int(order[2 * pair_idx])]
            pb = pool[int(order[2 * pair_idx + 1])]
            c1, c2 = crossover_and_repair(
                pa.field, pb.field, eta, model, _stream(seed, _TAG_CROSS, gen, pair_idx)
            )
            children.extend((c1, c2))
        fields = [
            mutate(child, model, ga.mutation_scale, ga.mutation_prob,
                   _stream(seed, _TAG_MUTATE, gen, i))
            for i, child in enumerate(children)
        ]
        gen += 1

    best_ind = min(population, key=lambda ind: ind.fitness)
    return best_ind, history
