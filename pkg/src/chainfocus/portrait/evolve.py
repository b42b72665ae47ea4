"""Contextual-focus portrait evolution.

The default (analytic) fitness is 80% resemblance, 20% painterly score.
Three triggers move the search:

* stuck: the fittest phenotype repeats for more than three generations, so
  the elite's genotype is swapped for a neutral variant of itself;
* plateau: the best combined score stalls, so the blend slides towards
  painterly rules (associative mode);
* return: in associative mode a marked resemblance gain restores the
  analytic blend.

Individuals with a very high painterly score are archived ("strange
uncles") and crossed with the elite ("patriarch") every generation.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional

import numpy as np

from ..cgp.genome import (
    DEFAULT_NODES,
    CgpGenome,
    MutationRates,
    crossover,
    decode,
    mutate,
    neutral_variant,
    random_genome,
)
from ..cgp.render import ImageSpec, render
from .scoring import RuleScores, SitterAssets, combined_fitness, score_image

W_ANALYTIC = 0.2
W_MAX = 0.8


class Mode(enum.Enum):
    ANALYTIC = "analytic"
    ASSOCIATIVE = "associative"


@dataclass(frozen=True)
class PortraitParams:
    population: int = 40
    generations: int = 300
    n_nodes: int = DEFAULT_NODES
    elitism: int = 1
    tournament: int = 3
    uncle_matings: int = 2
    tau_uncle: float = 0.8
    archive_cap: int = 20
    epsilon: float = 1e-4
    plateau_window: int = 10
    slide_generations: int = 10
    delta_r: float = 0.02
    stuck_limit: int = 3
    point_rate: float = 0.04
    aggregate: str = "max"
    snapshot_every: int = 10
    freeze_variation_after: Optional[int] = None

    def validate(self) -> None:
        from ..evoc.sim import ConfigError
        if self.population < 2:
            raise ConfigError("population", "must be >= 2")
        if self.elitism != 1:
            raise ConfigError("elitism", "only a single elite is supported")
        if not 1 <= self.tournament <= self.population:
            raise ConfigError("tournament", "must lie in [1, population]")
        if not 0 <= self.uncle_matings <= self.population - 2:
            raise ConfigError("uncle_matings", "must lie in [0, population - 2]")
        for key in ("tau_uncle", "point_rate", "delta_r"):
            v = getattr(self, key)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(key, f"{v} outside [0, 1]")
        for key in ("generations", "archive_cap", "plateau_window", "slide_generations",
                    "snapshot_every", "n_nodes"):
            if getattr(self, key) < (0 if key == "generations" else 1):
                raise ConfigError(key, "out of range")
        if self.aggregate not in ("max", "mean"):
            raise ConfigError("aggregate", "must be 'max' or 'mean'")


@dataclass(frozen=True)
class FocusState:
    mode: Mode = Mode.ANALYTIC
    w_painterly: float = W_ANALYTIC
    stuck_counter: int = 0
    plateau_counter: int = 0
    best_R_at_switch: float = 0.0
    slide_step: int = 0
    last_canonical: Optional[str] = None
    last_best: Optional[float] = None
    stuck_fired: bool = False


class GenerationRecord(NamedTuple):
    canonical: str
    best_combined: float
    best_R: float


def update_focus(state: FocusState, record: GenerationRecord,
                 params: PortraitParams = PortraitParams()) -> FocusState:
    # stuck: fittest phenotype unchanged for more than stuck_limit generations
    same = state.last_canonical is not None and record.canonical == state.last_canonical
    stuck = state.stuck_counter + 1 if same else 0
    fired = stuck > params.stuck_limit
    if fired:
        stuck = 0

    mode, w = state.mode, state.w_painterly
    plateau, slide, r_switch = state.plateau_counter, state.slide_step, state.best_R_at_switch
    last_best = record.best_combined

    if mode is Mode.ANALYTIC:
        if state.last_best is not None and record.best_combined - state.last_best < params.epsilon:
            plateau += 1
        else:
            plateau = 0
        if plateau >= params.plateau_window:
            mode, plateau, slide, r_switch = Mode.ASSOCIATIVE, 0, 1, record.best_R
            w = _slide(slide, params)
            last_best = None
    else:
        if record.best_R > state.best_R_at_switch * (1.0 + params.delta_r):
            mode, w, slide, plateau = Mode.ANALYTIC, W_ANALYTIC, 0, 0
            last_best = None
        elif slide < params.slide_generations:
            slide += 1
            w = _slide(slide, params)

    return FocusState(mode, w, stuck, plateau, r_switch, slide, record.canonical, last_best, fired)


def _slide(step: int, params: PortraitParams) -> float:
    frac = min(step, params.slide_generations) / params.slide_generations
    return W_ANALYTIC + (W_MAX - W_ANALYTIC) * frac


@dataclass(frozen=True, eq=False)
class Uncle:
    genome: CgpGenome
    scores: RuleScores
    canonical: str


@dataclass(frozen=True, eq=False)
class Archive:
    uncles: tuple[Uncle, ...] = ()
    cap: int = 20
    threshold: float = 0.8

    def __len__(self):
        return len(self.uncles)

    def admit(self, genome: CgpGenome, scores: RuleScores, canonical: str) -> "Archive":
        if scores.painterly_aggregate < self.threshold:
            return self
        if any(u.canonical == canonical for u in self.uncles):
            return self
        members = list(self.uncles) + [Uncle(genome, scores, canonical)]
        # stable sort keeps older members ahead on ties; worst is evicted first
        members.sort(key=lambda u: -u.scores.painterly_aggregate)
        return replace(self, uncles=tuple(members[: self.cap]))


class Evaluation(NamedTuple):
    scores: list[RuleScores]
    combined: np.ndarray
    canonical: list[str]
    images: list[np.ndarray]


def evaluate(population: list[CgpGenome], assets: SitterAssets, w_painterly: float,
             aggregate: str = "max") -> Evaluation:
    h, w = assets.shape
    spec = ImageSpec(width=w, height=h)
    scores, canon, images = [], [], []
    for g in population:
        ph = decode(g)
        img = render(ph, spec)
        images.append(img)
        scores.append(score_image(img, assets, aggregate))
        canon.append(ph.canonical_form)
    combined = np.array([combined_fitness(s, w_painterly) for s in scores])
    return Evaluation(scores, combined, canon, images)


class GenerationReport(NamedTuple):
    generation: int
    best_index: int
    best_combined: float
    best_scores: RuleScores
    best_R: float
    best_A: float
    mode: Mode
    w_painterly: float
    stuck_counter: int
    stuck_fired: bool
    archive_size: int
    mean_accepted_A: float
    best_image: np.ndarray


def _tournament(combined: np.ndarray, size: int, rng: np.random.Generator) -> int:
    entrants = rng.integers(0, len(combined), size=size)
    # first maximum wins, so ties go to the earlier draw
    return int(entrants[int(np.argmax(combined[entrants]))])


def evolve_generation(population: list[CgpGenome], archive: Archive, assets: SitterAssets,
                      state: FocusState, rng: np.random.Generator, params: PortraitParams,
                      generation: int = 0):
    """Score ``population`` and breed the next one.

    Returns ``(next_population, archive, state, report)``; ``report``
    describes the generation that was just scored.
    """
    ev = evaluate(population, assets, state.w_painterly, params.aggregate)
    best = int(np.argmax(ev.combined))
    r_values = np.array([s.resemblance for s in ev.scores])
    best_r = int(np.argmax(r_values))
    for g, s, c in zip(population, ev.scores, ev.canonical):
        archive = archive.admit(g, s, c)
    new_state = update_focus(
        state, GenerationRecord(ev.canonical[best], float(ev.combined[best]), float(r_values[best_r])),
        params)

    frozen = params.freeze_variation_after is not None and generation >= params.freeze_variation_after
    rates = MutationRates(point=0.0, pm_step=False) if frozen else MutationRates(point=params.point_rate)
    n_special = 0 if frozen else params.uncle_matings

    elite = population[best]
    if new_state.stuck_fired:
        elite = neutral_variant(elite, rng, steps=elite.n_nodes).genome
    nxt = [elite]
    accepted = [best]
    associative = new_state.mode is Mode.ASSOCIATIVE
    if associative:
        # resemblance leaders stay in the mix and keep breeding
        if best_r != best:
            nxt.append(population[best_r])
    elif not archive.uncles:
        n_special = 0
    while len(nxt) < params.population - n_special:
        winner = _tournament(ev.combined, params.tournament, rng)
        accepted.append(winner)
        nxt.append(mutate(population[winner], rng, rates))
    while len(nxt) < params.population:
        if associative:
            nxt.append(mutate(population[best_r], rng, rates))
        else:
            uncle = archive.uncles[int(rng.integers(0, len(archive.uncles)))]
            nxt.append(crossover(uncle.genome, elite, rng))

    report = GenerationReport(
        generation=generation,
        best_index=best,
        best_combined=float(ev.combined[best]),
        best_scores=ev.scores[best],
        best_R=float(r_values[best_r]),
        best_A=max(s.painterly_aggregate for s in ev.scores),
        mode=state.mode,
        w_painterly=state.w_painterly,
        stuck_counter=new_state.stuck_counter,
        stuck_fired=new_state.stuck_fired,
        archive_size=len(archive),
        mean_accepted_A=float(np.mean([ev.scores[i].painterly_aggregate for i in accepted])),
        best_image=ev.images[best],
    )
    return nxt, archive, new_state, report


def initial_population(rng: np.random.Generator, params: PortraitParams) -> list[CgpGenome]:
    return [random_genome(rng, params.n_nodes) for _ in range(params.population)]


@dataclass
class PortraitResult:
    reports: list[GenerationReport] = field(default_factory=list)
    final_population: list[CgpGenome] = field(default_factory=list)
    best_genome: Optional[CgpGenome] = None
    archive: Archive = field(default_factory=Archive)


def run_portrait(assets: SitterAssets, params: PortraitParams = PortraitParams(), seed: int = 0,
                 callback=None) -> PortraitResult:
    """Evolve for ``params.generations`` generations.

    ``callback(report, elite_genome)`` is invoked after each generation.
    """
    params.validate()
    rng = np.random.default_rng(seed)
    population = initial_population(rng, params)
    archive = Archive(cap=params.archive_cap, threshold=params.tau_uncle)
    state = FocusState()
    result = PortraitResult()
    for gen in range(params.generations):
        scored = population
        population, archive, state, report = evolve_generation(
            scored, archive, assets, state, rng, params, generation=gen)
        result.reports.append(report)
        if callback is not None:
            callback(report, scored[report.best_index])
    result.final_population = population
    result.best_genome = population[0] if population else None
    result.archive = archive
    return result
