"""The EVOC artificial society.

One hundred stationary agents sit on a toroidal lattice.  Each tick every
agent either invents (mutates its current action, biased by learned
trends) or imitates (adopts the first strictly fitter action found in a
random scan of its von Neumann neighbours).  Updates are synchronous:
all decisions in a tick read the pre-tick state.

Random draws come from a single ``random.Random`` stream per run and are
consumed in agent index order, then in this order within an agent:
role coin, mutation coins and postures per body part, chain continuation,
neighbour shuffle.
"""
from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional, Sequence

from .model import (
    ARMS,
    DEFAULT_MAX_CHAIN_LENGTH,
    IDLE_ACTION,
    PARTS,
    ActionStep,
    BodyPart,
    ChainedAction,
    FitnessParams,
    Posture,
    fitness_table,
)

BASE_MUTATION_RATE = 1.0 / 6.0
HIGHMOVE_THRESHOLD = 3
MIN_TREND_SAMPLES = 10


class Role(enum.Enum):
    CREATOR = "creator"
    IMITATOR = "imitator"
    MIXED = "mixed"


class RoleMode(enum.Enum):
    MIXED = "mixed"
    SPLIT = "split"


@dataclass
class TrendStats:
    mean_fitness_highmove: float = 0.0
    mean_fitness_lowmove: float = 0.0
    n_highmove: int = 0
    n_lowmove: int = 0

    @property
    def samples(self) -> int:
        return self.n_highmove + self.n_lowmove

    def record(self, step: ActionStep, fitness: float) -> None:
        if step.n_moving >= HIGHMOVE_THRESHOLD:
            self.n_highmove += 1
            self.mean_fitness_highmove += (fitness - self.mean_fitness_highmove) / self.n_highmove
        else:
            self.n_lowmove += 1
            self.mean_fitness_lowmove += (fitness - self.mean_fitness_lowmove) / self.n_lowmove


@dataclass
class Agent:
    current_action: ChainedAction = IDLE_ACTION
    role: Role = Role.MIXED
    trend: TrendStats = field(default_factory=TrendStats)
    mutation_rate: float = BASE_MUTATION_RATE

    def __post_init__(self):
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError("mutation_rate must lie in [0, 1]")


class ConfigError(ValueError):
    """A configuration value lies outside its domain."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class WorldConfig:
    """Parameters of one EVOC run.

    ``p_invent`` and ``p_cont`` are calibration choices; the source model
    does not report the values behind its published curves.
    """

    width: int = 10
    height: int = 10
    chaining_enabled: bool = True
    learning_enabled: bool = True
    p_invent: float = 0.5
    p_cont: float = 0.5
    role_mode: RoleMode = RoleMode.MIXED
    fraction_creators: float = 0.5
    iterations: int = 100
    seed: int = 0
    fitness: FitnessParams = field(default_factory=FitnessParams)
    max_chain_length: int = DEFAULT_MAX_CHAIN_LENGTH

    def validate(self) -> None:
        if self.width < 1:
            raise ConfigError("width", "must be >= 1")
        if self.height < 1:
            raise ConfigError("height", "must be >= 1")
        for key in ("p_invent", "p_cont", "fraction_creators"):
            v = getattr(self, key)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(key, f"{v} outside [0, 1]")
        if self.iterations < 0:
            raise ConfigError("iterations", "must be >= 0")
        if self.max_chain_length < 1:
            raise ConfigError("max_chain_length", "cap must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed", "must be an unsigned 64-bit integer")

    @property
    def n_agents(self) -> int:
        return self.width * self.height


class Metrics(NamedTuple):
    iteration: int
    mean_fitness: float
    max_fitness: float
    diversity: int
    mean_chain_length: float
    mean_mutation_rate: float


METRIC_COLUMNS = Metrics._fields


class PostureSampler(NamedTuple):
    """Weights over postures, indexed by ``Posture`` value."""

    weights: tuple[float, float, float]

    def draw(self, rng: random.Random, exclude: Optional[Posture] = None) -> Posture:
        w = list(self.weights)
        if exclude is not None:
            w[exclude] = 0.0
        total = w[0] + w[1] + w[2]
        u = rng.random() * total
        if u < w[0]:
            return Posture.STILL
        if u < w[0] + w[1] or w[2] == 0.0:
            return Posture.UP
        return Posture.DOWN


UNIFORM = PostureSampler((1 / 3, 1 / 3, 1 / 3))
FAVOUR_MOVING = PostureSampler((0.2, 0.4, 0.4))
FAVOUR_STILL = PostureSampler((0.8, 0.1, 0.1))


def trend_bias(trend: TrendStats, learning_enabled: bool) -> PostureSampler:
    if not learning_enabled or trend.samples < MIN_TREND_SAMPLES:
        return UNIFORM
    if trend.n_highmove == 0 or trend.n_lowmove == 0:
        return UNIFORM
    if trend.mean_fitness_highmove > trend.mean_fitness_lowmove:
        return FAVOUR_MOVING
    if trend.mean_fitness_highmove < trend.mean_fitness_lowmove:
        return FAVOUR_STILL
    return UNIFORM


def action_fitness(action: ChainedAction, table: Sequence[float]) -> float:
    return table[action.steps[0].code] + (len(action.steps) - 1)


def invent(agent: Agent, fitness_params: FitnessParams, config: WorldConfig,
           rng: random.Random) -> ChainedAction:
    """Mutate the first step of the agent's action and, if it moves an arm,
    try to grow a chain behind it.

    A part selected for mutation always changes posture; the replacement is
    drawn from the trend-biased sampler restricted to the other two postures.
    """
    sampler = trend_bias(agent.trend, config.learning_enabled)
    rate = agent.mutation_rate
    postures = list(agent.current_action.steps[0].postures)
    for i in range(len(PARTS)):
        if rng.random() < rate:
            postures[i] = sampler.draw(rng, exclude=postures[i])
    first = ActionStep(postures)
    if not config.chaining_enabled:
        return ChainedAction((first,), None)
    arm = first.first_moving_arm()
    if arm is None:
        return ChainedAction((first,), None)
    steps = [first]
    while len(steps) < config.max_chain_length and rng.random() < config.p_cont:
        nxt = ActionStep([sampler.draw(rng) for _ in PARTS])
        steps.append(nxt)
        if nxt.postures[arm] != steps[-2].postures[arm].opposite():
            break
    return ChainedAction(tuple(steps), arm if len(steps) > 1 else None)


def imitate(agent: Agent, neighbors: Sequence[Agent], fitness_params: FitnessParams,
            rng: random.Random) -> ChainedAction:
    table = fitness_table(fitness_params)
    own = action_fitness(agent.current_action, table)
    order = list(range(len(neighbors)))
    rng.shuffle(order)
    for j in order:
        cand = neighbors[j].current_action
        if action_fitness(cand, table) > own:
            return cand
    return agent.current_action


def von_neumann(index: int, width: int, height: int) -> tuple[int, int, int, int]:
    """Indices of the four orthogonal neighbours on a torus (N, S, W, E)."""
    r, c = divmod(index, width)
    return (
        ((r - 1) % height) * width + c,
        ((r + 1) % height) * width + c,
        r * width + (c - 1) % width,
        r * width + (c + 1) % width,
    )


class World:
    def __init__(self, config: WorldConfig, rng: Optional[random.Random] = None):
        config.validate()
        self.config = config
        self.params = config.fitness
        self.rng = rng if rng is not None else random.Random(config.seed)
        self.iteration = 0
        n = config.n_agents
        self.agents = [Agent() for _ in range(n)]
        if config.role_mode is RoleMode.SPLIT:
            n_creators = round(config.fraction_creators * n)
            creators = set(self.rng.sample(range(n), n_creators))
            for i, a in enumerate(self.agents):
                a.role = Role.CREATOR if i in creators else Role.IMITATOR
        self.neighbors = [von_neumann(i, config.width, config.height) for i in range(n)]

    @property
    def table(self) -> tuple[float, ...]:
        return fitness_table(self.params)

    def fitnesses(self) -> list[float]:
        table = self.table
        return [action_fitness(a.current_action, table) for a in self.agents]

    def metrics(self) -> Metrics:
        fits = self.fitnesses()
        n = len(self.agents)
        return Metrics(
            iteration=self.iteration,
            mean_fitness=sum(fits) / n,
            max_fitness=max(fits),
            diversity=diversity(self),
            mean_chain_length=sum(len(a.current_action) for a in self.agents) / n,
            mean_mutation_rate=sum(a.mutation_rate for a in self.agents) / n,
        )


def diversity(world: World) -> int:
    return len({a.current_action.key for a in world.agents})


def tick(world: World, rng: Optional[random.Random] = None) -> Metrics:
    rng = rng if rng is not None else world.rng
    cfg = world.config
    params = world.params
    table = world.table
    agents = world.agents
    new_actions: list[ChainedAction] = []
    for i, agent in enumerate(agents):
        if agent.role is Role.CREATOR:
            inventing = True
        elif agent.role is Role.IMITATOR:
            inventing = False
        else:
            inventing = rng.random() < cfg.p_invent
        if inventing:
            cand = invent(agent, params, cfg, rng)
            cand_fit = action_fitness(cand, table)
            agent.trend.record(cand.steps[0], cand_fit)
            if cand_fit > action_fitness(agent.current_action, table):
                new_actions.append(cand)
            else:
                new_actions.append(agent.current_action)
        else:
            neigh = [agents[j] for j in world.neighbors[i]]
            new_actions.append(imitate(agent, neigh, params, rng))
    for agent, action in zip(agents, new_actions):
        agent.current_action = action
    world.iteration += 1
    return world.metrics()


def run(config: WorldConfig) -> list[Metrics]:
    """Run ``config.iterations`` ticks; element 0 is the initial state."""
    world = World(config)
    series = [world.metrics()]
    for _ in range(config.iterations):
        series.append(tick(world))
    return series
