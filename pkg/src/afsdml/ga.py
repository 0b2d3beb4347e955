"""Genetic algorithm over tree/forest hyperparameters.

Integer genomes, tournament selection, uniform per-gene crossover, uniform
resampling mutation, and elitism. Fitness of a genome is the reciprocal of
the model's MSE on the evaluation partition (plus a small epsilon guard), so
best-fitness curves rise as models improve. All randomness flows from one
seeded generator consumed in a fixed order; fitness evaluations are pure
functions of the genome, so they may run on worker threads without changing
any result.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import trees

log = logging.getLogger(__name__)

GENE_NAMES = {
    "DT": ("max_depth", "min_samples_split", "min_samples_leaf"),
    "RF": ("n_estimators", "max_depth", "min_samples_split", "min_samples_leaf"),
}

DEFAULT_GENE_BOUNDS = {
    "max_depth": (1, 20),
    "min_samples_split": (2, 20),
    "min_samples_leaf": (1, 10),
    "n_estimators": (10, 200),
}


@dataclass(frozen=True)
class Genome:
    kind: str  # "DT" or "RF"
    genes: tuple[int, ...]

    def __post_init__(self):
        if self.kind not in GENE_NAMES:
            raise ValueError(f"unknown genome kind {self.kind!r}")
        if len(self.genes) != len(GENE_NAMES[self.kind]):
            raise ValueError(
                f"{self.kind} genome needs {len(GENE_NAMES[self.kind])} genes, "
                f"got {len(self.genes)}"
            )
        object.__setattr__(self, "genes", tuple(int(g) for g in self.genes))

    def named(self) -> dict[str, int]:
        return dict(zip(GENE_NAMES[self.kind], self.genes))


@dataclass
class GAConfig:
    population_size: int = 50
    generations: int = 200
    crossover_prob: float = 0.8
    mutation_prob: float = 0.1
    gene_bounds: dict = field(default_factory=lambda: dict(DEFAULT_GENE_BOUNDS))
    tournament_size: int = 3
    elitism_count: int = 1
    seed: int = 0
    fitness_epsilon: float = 1e-12

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        if self.generations < 1:
            raise ValueError("generations must be >= 1")
        for name in ("crossover_prob", "mutation_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {p}")
        if not 0 <= self.elitism_count < self.population_size:
            raise ValueError("elitism_count must satisfy 0 <= e < population_size")
        if self.tournament_size < 1:
            raise ValueError("tournament_size must be >= 1")
        if self.fitness_epsilon <= 0:
            raise ValueError("fitness_epsilon must be positive")
        for name, (lo, hi) in self.gene_bounds.items():
            if lo > hi:
                raise ValueError(f"gene bound for {name} inverted: ({lo}, {hi})")

    def bounds_for(self, kind: str) -> list[tuple[int, int]]:
        return [tuple(self.gene_bounds[name]) for name in GENE_NAMES[kind]]


@dataclass
class GARunReport:
    best_genome: Genome
    best_fitness: float
    best_mse: float
    curve: np.ndarray  # best fitness per generation
    mse_curve: np.ndarray  # MSE of each generation's best individual
    evaluations: int


def fitness_from_mse(mse: float, epsilon: float) -> float:
    """Reciprocal-MSE score; epsilon keeps a perfect model finite."""
    return 1.0 / (mse + epsilon)


def genome_seed(genome: Genome, ga_seed: int) -> int:
    """Deterministic model seed so re-evaluating a genome is bit-identical."""
    kind_code = 0 if genome.kind == "DT" else 1
    ss = np.random.SeedSequence([int(ga_seed), kind_code, *genome.genes])
    return int(ss.generate_state(1, np.uint64)[0])


def build_model(genome: Genome, X, y, ga_seed: int = 0, bootstrap: bool = True):
    """Fit the model a genome encodes, with its deterministic seed."""
    seed = genome_seed(genome, ga_seed)
    g = genome.named()
    if genome.kind == "DT":
        hp = trees.TreeHyperparams(g["max_depth"], g["min_samples_split"],
                                   g["min_samples_leaf"])
        return trees.fit_tree(X, y, hp, seed=seed)
    hp = trees.ForestHyperparams(
        g["n_estimators"],
        trees.TreeHyperparams(g["max_depth"], g["min_samples_split"],
                              g["min_samples_leaf"]),
    )
    return trees.fit_forest(X, y, hp, seed=seed, bootstrap=bootstrap)


def evaluate_fitness(genome: Genome, train_data, eval_data, *, ga_seed: int = 0,
                     epsilon: float = 1e-12, bootstrap: bool = True):
    """(fitness, mse) of the genome's model fitted on train_data and scored
    on eval_data. A model-fit failure gives fitness 0 (non-viable) with a
    logged warning instead of aborting the run."""
    try:
        model = build_model(genome, *train_data, ga_seed=ga_seed, bootstrap=bootstrap)
        pred = model.predict(eval_data[0])
        mse = float(np.mean((pred - np.asarray(eval_data[1], dtype=np.float64)) ** 2))
    except Exception as exc:  # noqa: BLE001 - non-viable individuals degrade to 0
        log.warning("fitness evaluation failed for %s: %s", genome, exc)
        return 0.0, float("inf")
    return fitness_from_mse(mse, epsilon), mse


def tournament_select(population, fitnesses, k: int, rng: np.random.Generator) -> Genome:
    """Best of k uniform draws (with replacement); ties resolve to the lowest
    population index."""
    draws = rng.integers(0, len(population), size=k)
    best = int(draws[0])
    for d in draws[1:]:
        d = int(d)
        if fitnesses[d] > fitnesses[best] or (fitnesses[d] == fitnesses[best] and d < best):
            best = d
    return population[best]


def crossover(a: Genome, b: Genome, pc: float, rng: np.random.Generator):
    """With probability pc, swap each gene position independently with
    probability 0.5; otherwise return copies of the parents."""
    if a.kind != b.kind:
        raise ValueError(f"cannot cross genomes of kinds {a.kind} and {b.kind}")
    if rng.random() >= pc:
        return a, b
    ga, gb = list(a.genes), list(b.genes)
    for i in range(len(ga)):
        if rng.random() < 0.5:
            ga[i], gb[i] = gb[i], ga[i]
    return Genome(a.kind, tuple(ga)), Genome(b.kind, tuple(gb))


def mutate(g: Genome, pm: float, bounds, rng: np.random.Generator) -> Genome:
    """Each gene independently resampled uniformly within its (inclusive)
    bounds with probability pm; always in-bounds by construction."""
    genes = list(g.genes)
    for i, (lo, hi) in enumerate(bounds):
        if rng.random() < pm:
            genes[i] = int(rng.integers(lo, hi + 1))
    return Genome(g.kind, tuple(genes))


def random_genome(kind: str, bounds, rng: np.random.Generator) -> Genome:
    return Genome(kind, tuple(int(rng.integers(lo, hi + 1)) for lo, hi in bounds))


def optimize(config: GAConfig, kind: str, fitness_fn, workers: int = 1) -> GARunReport:
    """Generic GA loop over integer genomes of the given kind.

    fitness_fn(genome) -> (fitness, mse) must be a pure function of the
    genome; evaluations may be dispatched to worker threads.
    """
    bounds = config.bounds_for(kind)
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 0xA11CE]))
    population = [random_genome(kind, bounds, rng) for _ in range(config.population_size)]

    curve = np.empty(config.generations, dtype=np.float64)
    mse_curve = np.empty(config.generations, dtype=np.float64)
    best_genome = population[0]
    best_fitness = -np.inf
    best_mse = float("inf")
    evaluations = 0

    def eval_all(pop):
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                return list(pool.map(fitness_fn, pop))
        return [fitness_fn(g) for g in pop]

    for gen in range(config.generations):
        results = eval_all(population)
        evaluations += len(population)
        fitnesses = [r[0] for r in results]
        gen_best = int(np.argmax(fitnesses))
        curve[gen] = fitnesses[gen_best]
        mse_curve[gen] = results[gen_best][1]
        if fitnesses[gen_best] > best_fitness:
            best_fitness = fitnesses[gen_best]
            best_mse = results[gen_best][1]
            best_genome = population[gen_best]

        if gen == config.generations - 1:
            break

        # elitism: carry the best unchanged, ties to the lowest index
        order = sorted(range(len(population)), key=lambda i: (-fitnesses[i], i))
        next_pop = [population[i] for i in order[: config.elitism_count]]
        while len(next_pop) < config.population_size:
            p1 = tournament_select(population, fitnesses, config.tournament_size, rng)
            p2 = tournament_select(population, fitnesses, config.tournament_size, rng)
            c1, c2 = crossover(p1, p2, config.crossover_prob, rng)
            next_pop.append(mutate(c1, config.mutation_prob, bounds, rng))
            if len(next_pop) < config.population_size:
                next_pop.append(mutate(c2, config.mutation_prob, bounds, rng))
        population = next_pop

    return GARunReport(
        best_genome=best_genome,
        best_fitness=float(best_fitness),
        best_mse=float(best_mse),
        curve=curve,
        mse_curve=mse_curve,
        evaluations=evaluations,
    )


def run_ga(config: GAConfig, model_kind: str, train_data, eval_data,
           workers: int = 1, bootstrap: bool = True) -> GARunReport:
    """GA search over hyperparameters of the requested model family, scoring
    genomes by reciprocal MSE on eval_data."""
    X_tr = np.ascontiguousarray(np.asarray(train_data[0], dtype=np.float64))
    y_tr = np.ascontiguousarray(np.asarray(train_data[1], dtype=np.float64))
    X_ev = np.ascontiguousarray(np.asarray(eval_data[0], dtype=np.float64))
    y_ev = np.ascontiguousarray(np.asarray(eval_data[1], dtype=np.float64))
    if len(y_tr) == 0 or len(y_ev) == 0:
        raise ValueError("empty train or eval partition")

    def fitness_fn(genome: Genome):
        return evaluate_fitness(
            genome, (X_tr, y_tr), (X_ev, y_ev),
            ga_seed=config.seed, epsilon=config.fitness_epsilon, bootstrap=bootstrap,
        )

    return optimize(config, model_kind, fitness_fn, workers=workers)
