"""Genetic tuning of the three guidance FISs.

Chromosome layout, per FIS and per variable (three inputs, then the output)::

    [mean_NS, mean_Z, mean_PS, sigma_NB, .., sigma_PB]

followed by the three flattened rule tables as integer genes.  The outer MF
means stay pinned to the variable range so the banks always span the
envelope.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError
from .fuzzy import N_MF, FisParams, RuleTable, VariableSpec
from .guidance import AttitudeGains, Controller
from .harness import EpisodeConfig, run_episode

log = logging.getLogger(__name__)

N_REAL_PER_VAR = 3 + N_MF
SIGMA_MIN_FRAC = 0.005
SIGMA_MAX_FRAC = 0.5
FAILED_FITNESS = 1e6

COLLISION_PENALTY = 1000.0
CORRIDOR_PENALTY = 1000.0
COVERAGE_PENALTY = 10.0


@dataclass
class GaConfig:
    population: int = 200
    generations: int = 500
    tournament_size: int = 4
    crossover_rate: float = 0.8
    mutation_rate: float = 0.1
    elitism_rate: float = 0.1
    seed: int = 0
    mutation_scale_start: float = 0.10
    mutation_scale_end: float = 0.01
    aggregate: str = "mean"
    workers: int = 1

    def __post_init__(self):
        for name in ("crossover_rate", "mutation_rate", "elitism_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigurationError(f"{name} must lie in [0, 1]", key=name)
        if self.population < 2 or self.generations < 1:
            raise ConfigurationError("population >= 2 and generations >= 1 required",
                                     key="population")
        if not 1 <= self.tournament_size <= self.population:
            raise ConfigurationError("tournament_size must be in 1..population",
                                     key="tournament_size")
        if self.n_elite >= self.population:
            raise ConfigurationError("elitism must leave room for children", key="elitism_rate")
        if self.aggregate not in ("mean", "max"):
            raise ConfigurationError("aggregate must be 'mean' or 'max'", key="aggregate")

    @property
    def n_elite(self):
        return int(round(self.elitism_rate * self.population))

    def to_dict(self):
        return asdict(self)


# ---------------------------------------------------------------------------
# encoding


@dataclass(frozen=True)
class Layout:
    """Variable ranges for the 3 x (3 inputs + output) tuned variables."""

    ranges: tuple  # ((lo, hi), ...) in FIS-major order, 12 entries for 3-input FISs
    n_inputs: tuple = (3, 3, 3)

    @classmethod
    def from_controller(cls, controller: Controller):
        ranges = []
        for fis in controller.fis:
            ranges += [(v.lo, v.hi) for v in fis.inputs] + [(fis.output.lo, fis.output.hi)]
        return cls(tuple(ranges), tuple(len(f.inputs) for f in controller.fis))

    @property
    def n_real(self):
        return len(self.ranges) * N_REAL_PER_VAR

    @property
    def n_int(self):
        return sum(N_MF**k for k in self.n_inputs)

    def bounds(self):
        lo, hi = [], []
        for a, b in self.ranges:
            w = b - a
            lo += [a] * 3 + [SIGMA_MIN_FRAC * w] * N_MF
            hi += [b] * 3 + [SIGMA_MAX_FRAC * w] * N_MF
        return np.array(lo), np.array(hi)


@dataclass
class Chromosome:
    reals: np.ndarray
    ints: np.ndarray
    layout: Layout
    gains: AttitudeGains = field(default_factory=AttitudeGains)
    attitude_mode: str = "boresight"

    def __post_init__(self):
        self.reals = np.asarray(self.reals, dtype=float)
        self.ints = np.asarray(self.ints, dtype=np.int64)
        lo, hi = self.layout.bounds()
        if self.reals.shape != lo.shape or self.ints.shape != (self.layout.n_int,):
            raise ConfigurationError("chromosome length does not match its layout")
        if np.any(self.reals < lo) or np.any(self.reals > hi):
            bad = int(np.flatnonzero((self.reals < lo) | (self.reals > hi))[0])
            raise ConfigurationError(f"real gene {bad} = {self.reals[bad]} outside "
                                     f"[{lo[bad]}, {hi[bad]}]")
        if np.any(self.ints < 0) or np.any(self.ints >= N_MF):
            raise ConfigurationError(f"rule genes must lie in 0..{N_MF - 1}")

    @property
    def bounds(self):
        return self.layout.bounds()

    @property
    def genes(self):
        return np.concatenate([self.reals, self.ints.astype(float)])

    def with_genes(self, genes):
        n = self.reals.size
        return Chromosome(genes[:n].copy(), np.rint(genes[n:]).astype(np.int64), self.layout,
                          self.gains, self.attitude_mode)

    def copy(self):
        return self.with_genes(self.genes)


def _encode_var(v: VariableSpec):
    if v.means[0] != v.lo or v.means[-1] != v.hi:
        raise ConfigurationError("outer MF means must sit on the variable range to be encoded")
    return np.concatenate([v.means[1:4], v.sigmas])


def encode(controller: Controller) -> Chromosome:
    layout = Layout.from_controller(controller)
    reals, ints = [], []
    for fis in controller.fis:
        for v in list(fis.inputs) + [fis.output]:
            reals.append(_encode_var(v))
        ints.append(fis.rules.entries)
    return Chromosome(np.concatenate(reals), np.concatenate(ints), layout,
                      controller.gains, controller.attitude_mode)


def _decode_var(genes, lo, hi):
    w = hi - lo
    inner = np.sort(np.clip(genes[:3], lo, hi))
    sigmas = np.maximum(genes[3:], SIGMA_MIN_FRAC * w)
    return VariableSpec(lo, hi, np.concatenate([[lo], inner, [hi]]), sigmas)


def decode(ch: Chromosome) -> Controller:
    """Three FISs from a chromosome; means are sorted and sigmas floored."""
    fis, pos, ipos, v = [], 0, 0, 0
    for n_in in ch.layout.n_inputs:
        specs = []
        for _ in range(n_in + 1):
            lo, hi = ch.layout.ranges[v]
            specs.append(_decode_var(ch.reals[pos:pos + N_REAL_PER_VAR], lo, hi))
            pos += N_REAL_PER_VAR
            v += 1
        n_rules = N_MF**n_in
        rules = RuleTable(ch.ints[ipos:ipos + n_rules], (N_MF,) * n_in)
        ipos += n_rules
        fis.append(FisParams(specs[:-1], specs[-1], rules))
    return Controller(*fis, gains=ch.gains, attitude_mode=ch.attitude_mode)


def random_chromosome(layout: Layout, rng, gains=None, attitude_mode="boresight"):
    lo, hi = layout.bounds()
    return Chromosome(rng.uniform(lo, hi), rng.integers(0, N_MF, layout.n_int), layout,
                      gains or AttitudeGains(), attitude_mode)


# ---------------------------------------------------------------------------
# fitness


def penalty(result, eta_threshold=95.0):
    """Constraint penalty added to delta-v: collisions, corridor exits, coverage shortfall."""
    return (COLLISION_PENALTY * result.violations["collision"]
            + CORRIDOR_PENALTY * result.violations["corridor"]
            + COVERAGE_PENALTY * max(0.0, eta_threshold - result.insp_rate))


def episode_fitness(result, eta_threshold=95.0):
    if result.failed:
        return FAILED_FITNESS
    return result.delta_v + penalty(result, eta_threshold)


def fitness(ch, scenarios: Sequence[EpisodeConfig], aggregate="mean"):
    """Delta-v plus penalties, aggregated over the training scenarios."""
    if not scenarios:
        raise ConfigurationError("at least one training scenario is required")
    controller = decode(ch) if isinstance(ch, Chromosome) else ch
    vals = [episode_fitness(run_episode(cfg, controller), cfg.eta_threshold)
            for cfg in scenarios]
    return float(np.mean(vals) if aggregate == "mean" else np.max(vals))


def training_scenarios(radius=75.0, base: EpisodeConfig = None, count=8):
    """Octant start positions at ``radius`` with zero initial velocity."""
    base = base or EpisodeConfig()
    signs = [(sx, sy, sz) for sx in (1, -1) for sy in (1, -1) for sz in (1, -1)]
    return [base.with_position(np.array(s) * radius / np.sqrt(3.0)) for s in signs[:count]]


# ---------------------------------------------------------------------------
# operators


def tournament_select(fitnesses, k, rng):
    """Index of the fittest (lowest) of ``k`` distinct uniformly drawn individuals."""
    fitnesses = np.asarray(fitnesses)
    if fitnesses.size == 0:
        raise ValueError("empty population")
    cand = rng.choice(fitnesses.size, size=min(k, fitnesses.size), replace=False)
    return int(cand[np.argmin(fitnesses[cand])])


def scattered_crossover(a: Chromosome, b: Chromosome, rate, rng, mask=None):
    if rng.random() >= rate:
        return a.copy(), b.copy()
    ga, gb = a.genes, b.genes
    if mask is None:
        mask = rng.random(ga.size) < 0.5
    mask = np.asarray(mask, dtype=bool)
    return a.with_genes(np.where(mask, ga, gb)), a.with_genes(np.where(mask, gb, ga))


def mutation_scale(generation, max_gen, start=0.10, end=0.01):
    frac = min(max(generation / max_gen, 0.0), 1.0) if max_gen > 0 else 1.0
    return start + (end - start) * frac


def adaptive_mutation(ch: Chromosome, rate, generation, max_gen, rng,
                      scale_start=0.10, scale_end=0.01):
    """Bound-clamped Gaussian steps on real genes, uniform resampling of rule genes.

    The step size shrinks linearly from ``scale_start`` to ``scale_end`` of each
    gene's bound width over the run.
    """
    lo, hi = ch.bounds
    reals = ch.reals.copy()
    ints = ch.ints.copy()
    hit = rng.random(reals.size) < rate
    scale = mutation_scale(generation, max_gen, scale_start, scale_end)
    step = rng.normal(0.0, 1.0, reals.size) * scale * (hi - lo)
    reals[hit] = np.clip(reals[hit] + step[hit], lo[hit], hi[hit])
    ihit = rng.random(ints.size) < rate
    ints[ihit] = rng.integers(0, N_MF, int(ihit.sum()))
    return Chromosome(reals, ints, ch.layout, ch.gains, ch.attitude_mode)


# ---------------------------------------------------------------------------
# driver


@dataclass
class EvolveResult:
    best: Chromosome
    best_fitness: float
    history: list  # per generation: {"generation", "best", "mean", "median"}
    population: list
    fitnesses: np.ndarray


class _ScenarioFitness:
    def __init__(self, scenarios, aggregate):
        self.scenarios = scenarios
        self.aggregate = aggregate

    def __call__(self, ch):
        return fitness(ch, self.scenarios, self.aggregate)


def _evaluate(fn, chromosomes, workers):
    if workers <= 1 or len(chromosomes) <= 1:
        return np.array([fn(c) for c in chromosomes], dtype=float)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return np.array(list(pool.map(fn, chromosomes)), dtype=float)


def initial_population(cfg: GaConfig, layout: Layout, init: Chromosome = None):
    rng = np.random.default_rng([cfg.seed, 0xA11CE])
    if init is None:
        return [random_chromosome(layout, rng) for _ in range(cfg.population)]
    # warm start: the incumbent plus mutated copies of it
    return [init.copy()] + [
        adaptive_mutation(init, cfg.mutation_rate, 0, cfg.generations, rng,
                          cfg.mutation_scale_start, cfg.mutation_scale_end)
        for _ in range(cfg.population - 1)]


def evolve(cfg: GaConfig, scenarios=None, init: Chromosome = None, fitness_fn: Callable = None,
           layout: Layout = None, on_generation: Callable = None) -> EvolveResult:
    """Generational GA with elitism; lower fitness is better.

    ``fitness_fn`` overrides the scenario-based fitness (used for smoke tests).
    ``on_generation(gen, population, fitnesses)`` is called after each evaluation.
    """
    if fitness_fn is None:
        fitness_fn = _ScenarioFitness(list(scenarios), cfg.aggregate)
    if layout is None:
        if init is None:
            raise ConfigurationError("a layout or an initial chromosome is required")
        layout = init.layout
    workers = cfg.workers if cfg.workers else max(1, os.cpu_count() or 1)

    pop = initial_population(cfg, layout, init)
    fit = _evaluate(fitness_fn, pop, workers)
    history = []
    n_elite = cfg.n_elite
    for gen in range(cfg.generations):
        order = np.argsort(fit, kind="stable")
        history.append({"generation": gen, "best": float(fit[order[0]]),
                        "mean": float(np.mean(fit)), "median": float(np.median(fit))})
        log.info("generation %d best %.4f mean %.4f", gen, fit[order[0]], np.mean(fit))
        if on_generation is not None:
            on_generation(gen, pop, fit)
        if gen == cfg.generations - 1:
            break
        elites = [pop[i] for i in order[:n_elite]]
        elite_fit = fit[order[:n_elite]]
        children = []
        n_children = cfg.population - n_elite
        for j in range((n_children + 1) // 2):
            rng = np.random.default_rng([cfg.seed, gen + 1, j])
            a = pop[tournament_select(fit, cfg.tournament_size, rng)]
            b = pop[tournament_select(fit, cfg.tournament_size, rng)]
            c1, c2 = scattered_crossover(a, b, cfg.crossover_rate, rng)
            for c in (c1, c2):
                children.append(adaptive_mutation(c, cfg.mutation_rate, gen + 1, cfg.generations,
                                                  rng, cfg.mutation_scale_start,
                                                  cfg.mutation_scale_end))
        # an odd remainder drops the last second child
        children = children[:n_children]
        child_fit = _evaluate(fitness_fn, children, workers)
        pop = elites + children
        fit = np.concatenate([elite_fit, child_fit])

    i = int(np.argmin(fit))
    return EvolveResult(pop[i], float(fit[i]), history, pop, fit)
