from collections import deque

import pytest

from chainfocus.evoc.focus import (
    FitnessSchedule,
    FocusController,
    FocusTrace,
    ShiftKind,
    recovery_time,
    run_cf,
    shift_fitness,
    update_mutation_rate,
)
from chainfocus.evoc.model import (
    ActionStep,
    FitnessParams,
    HeadMode,
    Posture,
    SymMode,
    oracle_enumerate,
    step_fitness,
)
from chainfocus.evoc.sim import Agent, ConfigError, WorldConfig, run

S, U = Posture.STILL, Posture.UP
CF_WORLD = WorldConfig(chaining_enabled=False, iterations=200)


def test_disabled_schedule_never_shifts():
    p = FitnessParams()
    sched = FitnessSchedule(enabled=False)
    assert all(shift_fitness(p, sched, t) is p for t in range(300))


def test_shift_only_on_period_multiples():
    p = FitnessParams()
    sched = FitnessSchedule(period=50)
    assert shift_fitness(p, sched, 49) is p
    assert shift_fitness(p, sched, 0) is p
    assert shift_fitness(p, sched, 50).head_mode is HeadMode.REWARD_MOVING


def test_head_flip_demotes_previous_optimum():
    p = FitnessParams()
    opt = ActionStep([S, U, U, U, U, S])
    assert oracle_enumerate(p).max_fitness == step_fitness(opt, p) == 10
    flipped = shift_fitness(p, FitnessSchedule(), 50)
    assert step_fitness(opt, flipped) == 8
    assert oracle_enumerate(flipped).max_fitness == 10


def test_sym_flip():
    flipped = shift_fitness(FitnessParams(), FitnessSchedule(shift_kind=ShiftKind.SYM_FLIP), 50)
    assert flipped.sym_mode is SymMode.REWARD_OPPOSITE and flipped.head_mode is HeadMode.REWARD_STILL


def test_both_is_an_involution():
    sched = FitnessSchedule(shift_kind=ShiftKind.BOTH)
    p = FitnessParams()
    twice = shift_fitness(shift_fitness(p, sched, 50), sched, 100)
    assert twice == p


def test_controller_elevates_on_drop():
    ctl = FocusController(theta=0.8)
    assert update_mutation_rate(Agent(), ctl, 4.0, 10.0) == ctl.p_hi
    assert update_mutation_rate(Agent(), ctl, 8.0, 10.0) == pytest.approx(1 / 6)
    # default theta also catches a head flip's drop from 10 to 8
    assert update_mutation_rate(Agent(), FocusController(), 8.0, 10.0) == ctl.p_hi


def test_controller_decay_streak_floors_at_p_lo():
    ctl = FocusController()
    agent = Agent(mutation_rate=0.5)
    trace = FocusTrace(history=deque([10.0], maxlen=10), previous=9.0)
    rates = []
    fitness = 9.5
    for _ in range(30):
        agent.mutation_rate = update_mutation_rate(agent, ctl, fitness, 10.0, trace)
        trace.previous = fitness
        rates.append(agent.mutation_rate)
    assert rates[0] == pytest.approx(0.45)
    assert rates[1] == pytest.approx(0.405)
    assert rates[-1] == pytest.approx(1 / 6)
    assert all(a >= b for a, b in zip(rates, rates[1:]))


def test_rate_stays_without_improvement():
    agent = Agent(mutation_rate=0.3)
    trace = FocusTrace(previous=5.0)
    assert update_mutation_rate(agent, FocusController(), 5.0, 5.0, trace) == 0.3


def test_initial_rates_and_bounds():
    ctl = FocusController()
    series = run_cf(CF_WORLD, FitnessSchedule(), ctl)
    assert series[0].mean_mutation_rate == pytest.approx(1 / 6)
    assert all(ctl.p_lo - 1e-12 <= m.mean_mutation_rate <= ctl.p_hi + 1e-12 for m in series)
    assert series[0].fitness_mode == "still/same"
    assert series[50].fitness_mode == "moving/same"
    assert series[100].fitness_mode == "still/same"


def test_pinned_controller_without_shifts_reproduces_plain_run():
    cfg = WorldConfig(seed=4, iterations=60)
    cf = run_cf(cfg, FitnessSchedule(enabled=False), FocusController.pinned())
    plain = run(cfg)
    assert [tuple(m[:-1]) for m in cf] == [tuple(m) for m in plain]


def test_pinned_controller_keeps_base_rate():
    series = run_cf(CF_WORLD, FitnessSchedule(), FocusController.pinned())
    assert all(m.mean_mutation_rate == pytest.approx(1 / 6) for m in series)


def test_shift_dips_fitness_and_raises_rate():
    for seed in range(20):
        cfg = WorldConfig(chaining_enabled=False, iterations=60, seed=seed)
        s = run_cf(cfg, FitnessSchedule(), FocusController())
        assert s[50].mean_fitness < s[49].mean_fitness
        assert s[52].mean_mutation_rate > s[49].mean_mutation_rate


def test_recovery_time():
    class M:
        def __init__(self, f):
            self.mean_fitness = f
    series = [M(f) for f in (10, 10, 6, 7, 9, 9.5)]
    assert recovery_time(series, 2) == 2
    assert recovery_time(series, 2, horizon=1) is None
    assert recovery_time(series, 2, fraction=0.5) == 0


@pytest.mark.parametrize("kwargs, key", [
    (dict(p_lo=0.6, p_hi=0.5), "p_hi"),
    (dict(theta=0.0), "theta"),
    (dict(decay=1.0), "decay"),
    (dict(window=0), "window"),
])
def test_controller_validation(kwargs, key):
    with pytest.raises(ConfigError) as exc:
        FocusController(**kwargs).validate()
    assert exc.value.key == key


def test_schedule_validation():
    with pytest.raises(ConfigError):
        FitnessSchedule(period=0).validate()
    FitnessSchedule(period=0, enabled=False).validate()
