"""Evolutionary refinement of a fitted graph sequence.

Individuals are whole graph sequences. Each generation keeps a few elites,
breeds the rest through tournament selection, blend/swap crossover and
graph-aware mutations (prune, sprout, perturb), then scores every new child
by a short projected-Adam refinement of the joint objective. The refined
genome replaces the child's genome (Lamarckian inheritance).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .linalg import DimensionError
from .model import EcrObjective, GraphSequence, RegimeStats
from .optim import descend


@dataclass
class EvoConfig:
    population_size: int = 16
    generations: int = 20
    prune_threshold: float = 0.05
    prune_rate: float = 1.0
    sprout_weight_scale: float = 0.05
    perturb_sigma: float = 0.05
    blend_beta_range: tuple = (0.25, 0.75)
    mutation_rates: dict = field(default_factory=lambda: {"prune": 0.5, "sprout": 0.5, "perturb": 0.5})
    crossover_rate: float = 0.5
    refinement_steps: int = 25
    elitism_count: int = 2
    tournament_size: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        if self.generations < 0 or self.refinement_steps < 0:
            raise ValueError("generations and refinement_steps must be >= 0")
        rates = dict(self.mutation_rates)
        unknown = set(rates) - {"prune", "sprout", "perturb"}
        if unknown:
            raise ValueError(f"unknown mutation operators: {sorted(unknown)}")
        for name in ("prune", "sprout", "perturb"):
            rates.setdefault(name, 0.0)
        self.mutation_rates = rates
        for r in list(rates.values()) + [self.crossover_rate, self.prune_rate]:
            if not 0.0 <= r <= 1.0:
                raise ValueError("rates must lie in [0, 1]")
        lo, hi = self.blend_beta_range
        if not 0.0 <= lo <= hi <= 1.0:
            raise ValueError("blend_beta_range must be a sub-interval of [0, 1]")
        if not 0 <= self.elitism_count <= self.population_size:
            raise ValueError("elitism_count must lie in [0, population_size]")
        if self.tournament_size < 1:
            raise ValueError("tournament_size must be >= 1")


_ids = itertools.count()


@dataclass
class Individual:
    genome: GraphSequence
    fitness: float | None = None
    lineage: int = field(default_factory=lambda: next(_ids))

    def clone(self):
        return Individual(self.genome.copy(), self.fitness, self.lineage)


def _child(ind, graphs):
    # Any change to the genome invalidates the fitness.
    return Individual(GraphSequence(graphs), None, next(_ids))


def mutate_prune(ind, cfg, rng):
    """Zero small nonzero weights in one randomly chosen regime."""
    g = ind.genome.graphs.copy()
    k = rng.integers(g.shape[0])
    small = (g[k] != 0) & (np.abs(g[k]) < cfg.prune_threshold)
    hit = small & (rng.random(g[k].shape) < cfg.prune_rate)
    if not hit.any():
        return ind.clone()
    g[k][hit] = 0.0
    return _child(ind, g)


def mutate_sprout(ind, cfg, rng):
    """Give one zero entry of one regime a small Gaussian weight."""
    g = ind.genome.graphs.copy()
    k = rng.integers(g.shape[0])
    zeros = np.flatnonzero(g[k] == 0)
    if zeros.size == 0 or cfg.sprout_weight_scale == 0:
        return ind.clone()
    pos = rng.choice(zeros)
    g[k].reshape(-1)[pos] = rng.normal(0.0, cfg.sprout_weight_scale)
    return _child(ind, g)


def mutate_perturb(ind, cfg, rng):
    """Add ``N(0, perturb_sigma^2)`` noise to one nonzero entry of one regime."""
    g = ind.genome.graphs.copy()
    k = rng.integers(g.shape[0])
    nz = np.flatnonzero(g[k])
    if nz.size == 0 or cfg.perturb_sigma == 0:
        return ind.clone()
    pos = rng.choice(nz)
    g[k].reshape(-1)[pos] += rng.normal(0.0, cfg.perturb_sigma)
    return _child(ind, g)


def crossover(parent1, parent2, cfg, rng):
    """Blend the parents with a single ``beta`` or swap whole regime graphs,
    each branch taken with probability 1/2."""
    a, b = parent1.genome.graphs, parent2.genome.graphs
    if a.shape != b.shape:
        raise DimensionError(f"incompatible genomes: {a.shape} vs {b.shape}")
    if rng.random() < 0.5:
        beta = rng.uniform(*cfg.blend_beta_range)
        child = beta * a + (1.0 - beta) * b
    else:
        pick = rng.random(a.shape[0]) < 0.5
        child = np.where(pick[:, None, None], a, b)
    return _child(parent1, child)


def evaluate_fitness(ind, ts, hp, cfg, objective=None):
    """Refine ``ind`` for ``cfg.refinement_steps`` steps and store the best
    refined genome and its objective value on the individual."""
    objective = objective or EcrObjective(ts, hp)
    if cfg.refinement_steps == 0:
        ind.fitness = objective.value(ind.genome.graphs)
        return ind.fitness
    steps = cfg.refinement_steps
    refine_hp = hp.replace(max_iters=steps, eval_every=1, patience=steps + 1)
    params, report = descend(objective, ind.genome.graphs, refine_hp)
    ind.genome = GraphSequence(params)
    ind.fitness = report.final_loss
    return ind.fitness


def _tournament(pop, cfg, rng):
    idx = rng.choice(len(pop), size=min(cfg.tournament_size, len(pop)), replace=False)
    return min((pop[i] for i in idx), key=lambda ind: ind.fitness)


def _mutate(ind, cfg, rng):
    rates = cfg.mutation_rates
    for op, fn in (("prune", mutate_prune), ("sprout", mutate_sprout), ("perturb", mutate_perturb)):
        if rates[op] > 0 and rng.random() < rates[op]:
            ind = fn(ind, cfg, rng)
    return ind


def run_evolution(ts, hp, cfg, seed_init):
    """Evolve a population seeded from a gradient fit.

    Returns ``(best_genome, history)`` where ``history`` holds one dict per
    generation with the best, mean and best-ever fitness. Generation 0 is
    the initial population; the refined seed alone is returned when
    ``cfg.generations == 0``.
    """
    rng = np.random.default_rng(cfg.seed)
    objective = EcrObjective(ts, hp, stats=RegimeStats(ts))
    seed_genome = seed_init if isinstance(seed_init, GraphSequence) else GraphSequence(seed_init)
    if seed_genome.graphs.shape != (ts.K, ts.d, ts.d):
        raise DimensionError(f"seed has shape {seed_genome.graphs.shape}, expected {(ts.K, ts.d, ts.d)}")

    seed = Individual(seed_genome.copy())
    evaluate_fitness(seed, ts, hp, cfg, objective)
    best = seed.clone()
    history = []
    if cfg.generations == 0:
        history.append(_record(0, [seed], best))
        return best.genome, history

    pop = [seed]
    while len(pop) < cfg.population_size:
        pop.append(_mutate(seed.clone(), cfg, rng))
    for g in range(cfg.generations + 1):
        if g > 0:
            pop = _next_generation(pop, cfg, rng)
        for ind in pop:
            if ind.fitness is None:
                evaluate_fitness(ind, ts, hp, cfg, objective)
        gen_best = min(pop, key=lambda ind: ind.fitness)
        if gen_best.fitness < best.fitness:
            best = gen_best.clone()
        history.append(_record(g, pop, best))
    return best.genome, history


def _next_generation(pop, cfg, rng):
    ranked = sorted(pop, key=lambda ind: ind.fitness)
    nxt = [ind.clone() for ind in ranked[: cfg.elitism_count]]
    while len(nxt) < cfg.population_size:
        p1 = _tournament(pop, cfg, rng)
        if cfg.crossover_rate > 0 and rng.random() < cfg.crossover_rate:
            child = crossover(p1, _tournament(pop, cfg, rng), cfg, rng)
        else:
            child = p1.clone()
        nxt.append(_mutate(child, cfg, rng))
    return nxt


def _record(gen, pop, best):
    fit = np.array([ind.fitness for ind in pop], dtype=float)
    return {
        "generation": gen,
        "best_fitness": float(fit.min()),
        "mean_fitness": float(fit.mean()),
        "best_ever": float(best.fitness),
        "population_size": len(pop),
    }
