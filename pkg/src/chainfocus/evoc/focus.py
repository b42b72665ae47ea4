"""Contextual focus inside EVOC.

The fitness function flips periodically.  Each agent watches its own
fitness; when it falls well below its recent best the agent raises its
mutation rate (associative mode) and, once it starts improving again,
lets the rate decay geometrically back to the base level (analytic mode).
"""
from __future__ import annotations

import enum
import random
from collections import deque
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional

from .model import FitnessParams, HeadMode, SymMode
from .sim import (
    BASE_MUTATION_RATE,
    Agent,
    ConfigError,
    Metrics,
    World,
    WorldConfig,
    tick,
)


class ShiftKind(enum.Enum):
    HEAD_FLIP = "head_flip"
    SYM_FLIP = "sym_flip"
    BOTH = "both"


@dataclass(frozen=True)
class FitnessSchedule:
    period: int = 50
    shift_kind: ShiftKind = ShiftKind.HEAD_FLIP
    enabled: bool = True

    def validate(self) -> None:
        if self.enabled and self.period < 1:
            raise ConfigError("period", "must be >= 1 when the schedule is enabled")

    def is_shift(self, iteration: int) -> bool:
        return self.enabled and iteration > 0 and iteration % self.period == 0


@dataclass(frozen=True)
class FocusController:
    p_lo: float = BASE_MUTATION_RATE
    p_hi: float = 0.5
    theta: float = 0.9
    decay: float = 0.9
    window: int = 10

    def validate(self) -> None:
        if not 0.0 < self.p_lo <= self.p_hi <= 1.0:
            raise ConfigError("p_hi", "need 0 < p_lo <= p_hi <= 1")
        if not 0.0 < self.theta <= 1.0:
            raise ConfigError("theta", f"{self.theta} outside (0, 1]")
        if not 0.0 < self.decay < 1.0:
            raise ConfigError("decay", f"{self.decay} outside (0, 1)")
        if self.window < 1:
            raise ConfigError("window", "must be >= 1")

    @classmethod
    def pinned(cls, rate: float = BASE_MUTATION_RATE) -> "FocusController":
        """A controller that never moves the rate away from ``rate``."""
        return cls(p_lo=rate, p_hi=rate)


def flip_head(mode: HeadMode) -> HeadMode:
    return HeadMode.REWARD_MOVING if mode is HeadMode.REWARD_STILL else HeadMode.REWARD_STILL


def flip_sym(mode: SymMode) -> SymMode:
    return SymMode.REWARD_OPPOSITE if mode is SymMode.REWARD_SAME else SymMode.REWARD_SAME


def shift_fitness(params: FitnessParams, schedule: FitnessSchedule, iteration: int,
                  rng: Optional[random.Random] = None) -> FitnessParams:
    # flips are deterministic; rng is accepted so stochastic shift kinds can slot in
    if not schedule.is_shift(iteration):
        return params
    kind = schedule.shift_kind
    if kind in (ShiftKind.HEAD_FLIP, ShiftKind.BOTH):
        params = replace(params, head_mode=flip_head(params.head_mode))
    if kind in (ShiftKind.SYM_FLIP, ShiftKind.BOTH):
        params = replace(params, sym_mode=flip_sym(params.sym_mode))
    return params


@dataclass
class FocusTrace:
    """Per-agent memory the controller needs between ticks."""

    history: deque = field(default_factory=deque)
    previous: Optional[float] = None
    recovering: bool = False

    def recent_best(self) -> Optional[float]:
        return max(self.history) if self.history else None


def update_mutation_rate(agent: Agent, controller: FocusController, current_fitness: float,
                         recent_best: Optional[float], trace: Optional[FocusTrace] = None) -> float:
    """New mutation rate for ``agent``.

    Falling below ``theta * recent_best`` pins the rate at ``p_hi``.  The
    first improvement afterwards starts a geometric decay towards ``p_lo``
    that continues every tick until the floor is reached or the agent
    underperforms again.
    """
    rate = agent.mutation_rate
    previous = trace.previous if trace is not None else None
    if recent_best is not None and current_fitness < controller.theta * recent_best:
        if trace is not None:
            trace.recovering = False
        return controller.p_hi
    improved = previous is not None and current_fitness > previous
    recovering = trace.recovering if trace is not None else False
    if improved or recovering:
        rate = max(controller.p_lo, controller.decay * rate)
        if trace is not None:
            trace.recovering = rate > controller.p_lo
    return min(rate, controller.p_hi)


class CfMetrics(NamedTuple):
    iteration: int
    mean_fitness: float
    max_fitness: float
    diversity: int
    mean_chain_length: float
    mean_mutation_rate: float
    fitness_mode: str


CF_METRIC_COLUMNS = CfMetrics._fields


def _with_mode(m: Metrics, params: FitnessParams) -> CfMetrics:
    return CfMetrics(*m, fitness_mode=params.encode())


def run_cf(config: WorldConfig, schedule: FitnessSchedule = FitnessSchedule(),
           controller: FocusController = FocusController()) -> list[CfMetrics]:
    """EVOC run with periodic fitness shifts and per-agent rate control.

    Per tick: shift the fitness parameters if due, run an ordinary tick
    under the (possibly new) parameters, then update every agent's rate
    from its post-tick fitness.  The controller draws no random numbers,
    so a pinned controller with a disabled schedule reproduces ``run``.
    """
    schedule.validate()
    controller.validate()
    world = World(config)
    for agent in world.agents:
        agent.mutation_rate = controller.p_lo
    traces = [FocusTrace(history=deque(maxlen=controller.window)) for _ in world.agents]
    for trace, f in zip(traces, world.fitnesses()):
        trace.history.append(f)
        trace.previous = f
    series = [_with_mode(world.metrics(), world.params)]
    for _ in range(config.iterations):
        world.params = shift_fitness(world.params, schedule, world.iteration + 1, world.rng)
        tick(world)
        for agent, trace, f in zip(world.agents, traces, world.fitnesses()):
            agent.mutation_rate = update_mutation_rate(
                agent, controller, f, trace.recent_best(), trace)
            trace.history.append(f)
            trace.previous = f
        series.append(_with_mode(world.metrics(), world.params))
    return series


def recovery_time(series: list, shift_iteration: int, fraction: float = 0.9,
                  horizon: Optional[int] = None) -> Optional[int]:
    """Ticks after ``shift_iteration`` until mean fitness regains ``fraction``
    of its value just before the shift.  ``None`` if it never does within
    ``horizon`` ticks."""
    target = fraction * series[shift_iteration - 1].mean_fitness
    end = len(series) if horizon is None else min(len(series), shift_iteration + horizon + 1)
    for t in range(shift_iteration, end):
        if series[t].mean_fitness >= target:
            return t - shift_iteration
    return None
