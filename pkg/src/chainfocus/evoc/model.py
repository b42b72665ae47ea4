"""Action space and fitness for the EVOC world.

An action step assigns one of three postures to each of six body parts,
so the step space has 3**6 = 729 members.  Steps are interned: every
posture assignment maps to a single ``ActionStep`` instance addressable by
its integer code, which keeps the simulator's inner loop cheap.
"""
from __future__ import annotations

import enum
import functools
import itertools
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional, Sequence


class Posture(enum.IntEnum):
    STILL = 0
    UP = 1
    DOWN = 2

    @property
    def moving(self) -> bool:
        return self is not Posture.STILL

    def opposite(self) -> "Posture":
        if self is Posture.UP:
            return Posture.DOWN
        if self is Posture.DOWN:
            return Posture.UP
        raise ValueError("STILL has no opposite direction")


class BodyPart(enum.IntEnum):
    HEAD = 0
    LEFT_ARM = 1
    RIGHT_ARM = 2
    LEFT_LEG = 3
    RIGHT_LEG = 4
    HIPS = 5


PARTS = tuple(BodyPart)
ARMS = (BodyPart.LEFT_ARM, BodyPart.RIGHT_ARM)
LEGS = (BodyPart.LEFT_LEG, BodyPart.RIGHT_LEG)
N_STEPS = 3 ** len(PARTS)


class ActionStep:
    """Immutable posture assignment for the six body parts."""

    __slots__ = ("postures", "code")

    postures: tuple[Posture, ...]
    code: int

    def __new__(cls, postures: Iterable[Posture] | dict[BodyPart, Posture]):
        if isinstance(postures, dict):
            missing = set(PARTS) - set(postures)
            if missing:
                raise ValueError(f"missing body parts: {sorted(p.name for p in missing)}")
            postures = [postures[p] for p in PARTS]
        values = tuple(Posture(p) for p in postures)
        if len(values) != len(PARTS):
            raise ValueError(f"expected {len(PARTS)} postures, got {len(values)}")
        return _STEPS[_encode(values)]

    @classmethod
    def from_code(cls, code: int) -> "ActionStep":
        return _STEPS[code]

    @classmethod
    def _build(cls, postures: tuple[Posture, ...]) -> "ActionStep":
        obj = object.__new__(cls)
        object.__setattr__(obj, "postures", postures)
        object.__setattr__(obj, "code", _encode(postures))
        return obj

    def __setattr__(self, name, value):
        raise AttributeError("ActionStep is immutable")

    def __getitem__(self, part: BodyPart) -> Posture:
        return self.postures[part]

    def __eq__(self, other):
        return isinstance(other, ActionStep) and other.code == self.code

    def __hash__(self):
        return self.code

    def __reduce__(self):
        return (ActionStep.from_code, (self.code,))

    def __repr__(self):
        inner = ", ".join(f"{p.name}={self.postures[p].name}" for p in PARTS)
        return f"ActionStep({inner})"

    def replace(self, **changes: Posture) -> "ActionStep":
        values = list(self.postures)
        for name, posture in changes.items():
            values[BodyPart[name.upper()]] = Posture(posture)
        return ActionStep(values)

    @property
    def n_moving(self) -> int:
        return sum(1 for p in self.postures if p.moving)

    def first_moving_arm(self) -> Optional[BodyPart]:
        for arm in ARMS:
            if self.postures[arm].moving:
                return arm
        return None


def _encode(postures: Sequence[int]) -> int:
    code = 0
    for i, p in enumerate(postures):
        code += int(p) * 3 ** i
    return code


_STEPS: list[ActionStep] = [None] * N_STEPS  # type: ignore[list-item]
for _combo in itertools.product(tuple(Posture), repeat=len(PARTS)):
    _values = tuple(reversed(_combo))
    _STEPS[_encode(_values)] = ActionStep._build(_values)
del _combo, _values

STILL_STEP = ActionStep([Posture.STILL] * len(PARTS))


def all_steps() -> tuple[ActionStep, ...]:
    return tuple(_STEPS)


class HeadMode(enum.Enum):
    REWARD_STILL = "still"
    REWARD_MOVING = "moving"


class SymMode(enum.Enum):
    REWARD_SAME = "same"
    REWARD_OPPOSITE = "opposite"


@dataclass(frozen=True)
class FitnessParams:
    w_head_still: float = 2.0
    w_limb_move: float = 1.0
    w_pair_sym: float = 2.0
    head_mode: HeadMode = HeadMode.REWARD_STILL
    sym_mode: SymMode = SymMode.REWARD_SAME

    def __post_init__(self):
        for name in ("w_head_still", "w_limb_move", "w_pair_sym"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @property
    def upper_bound(self) -> float:
        return self.w_head_still + 2 * (2 * self.w_limb_move + self.w_pair_sym)

    def encode(self) -> str:
        """Short label used in CSV output, e.g. ``still/same``."""
        return f"{self.head_mode.value}/{self.sym_mode.value}"


def step_fitness(step: ActionStep, params: FitnessParams) -> float:
    """Single-step fitness: head reward plus per-pair movement and symmetry.

    HIPS never contributes.
    """
    head = step.postures[BodyPart.HEAD]
    if params.head_mode is HeadMode.REWARD_STILL:
        score = params.w_head_still if not head.moving else 0.0
    else:
        score = params.w_head_still if head.moving else 0.0
    for a, b in (ARMS, LEGS):
        pa, pb = step.postures[a], step.postures[b]
        score += params.w_limb_move * (pa.moving + pb.moving)
        if pa.moving and pb.moving:
            same = pa == pb
            if same == (params.sym_mode is SymMode.REWARD_SAME):
                score += params.w_pair_sym
    return score


@functools.lru_cache(maxsize=64)
def fitness_table(params: FitnessParams) -> tuple[float, ...]:
    """``step_fitness`` for every step code, cached per parameter set."""
    return tuple(step_fitness(s, params) for s in _STEPS)


class ChainViolation(NamedTuple):
    rule: str
    step_index: int

    def __str__(self):
        return f"{self.rule} (step {self.step_index})"


class ChainError(ValueError):
    pass


DEFAULT_MAX_CHAIN_LENGTH = 100


def validate_chain(
    steps: Sequence[ActionStep],
    chain_arm: Optional[BodyPart],
    max_chain_length: int = DEFAULT_MAX_CHAIN_LENGTH,
) -> Optional[ChainViolation]:
    """Return ``None`` when the chain is well formed, else the first violation.

    Step indices in violations are 1-based.
    """
    n = len(steps)
    if n == 0:
        return ChainViolation("chain must contain at least one step", 0)
    if n > max_chain_length:
        return ChainViolation(f"chain longer than cap {max_chain_length}", max_chain_length + 1)
    if n == 1:
        return None
    arm = steps[0].first_moving_arm()
    if arm is None:
        return ChainViolation("first step must move an arm", 1)
    if chain_arm != arm:
        return ChainViolation("chain arm must be the first moving arm of step 1", 1)
    # interior alternation; the final step is exempt
    for k in range(1, n - 1):
        prev = steps[k - 1].postures[arm]
        if steps[k].postures[arm] != prev.opposite():
            return ChainViolation("chain arm must reverse direction", k + 1)
    return None


@dataclass(frozen=True)
class ChainedAction:
    steps: tuple[ActionStep, ...]
    chain_arm: Optional[BodyPart] = None

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        if len(self.steps) == 1 and self.chain_arm is not None:
            object.__setattr__(self, "chain_arm", None)

    @classmethod
    def single(cls, step: ActionStep) -> "ChainedAction":
        return cls((step,), None)

    @classmethod
    def checked(
        cls,
        steps: Sequence[ActionStep],
        chain_arm: Optional[BodyPart] = None,
        max_chain_length: int = DEFAULT_MAX_CHAIN_LENGTH,
    ) -> "ChainedAction":
        if chain_arm is None and len(steps) > 1:
            chain_arm = steps[0].first_moving_arm()
        violation = validate_chain(steps, chain_arm, max_chain_length)
        if violation is not None:
            raise ChainError(str(violation))
        return cls(tuple(steps), chain_arm)

    def __len__(self):
        return len(self.steps)

    @property
    def first(self) -> ActionStep:
        return self.steps[0]

    @property
    def key(self) -> tuple[int, ...]:
        return tuple(s.code for s in self.steps)


IDLE_ACTION = ChainedAction.single(STILL_STEP)


def chain_fitness(action: ChainedAction, params: FitnessParams) -> float:
    """First-step fitness plus one per additional chained step."""
    violation = validate_chain(action.steps, action.chain_arm, max(len(action.steps), 1))
    if violation is not None:
        raise ChainError(str(violation))
    return step_fitness(action.steps[0], params) + (len(action.steps) - 1)


class OracleResult(NamedTuple):
    max_fitness: float
    n_optima: int
    table: list[tuple[ActionStep, float]]

    @property
    def optima(self) -> list[ActionStep]:
        return [s for s, f in self.table if f == self.max_fitness]


def oracle_enumerate(params: FitnessParams) -> OracleResult:
    """Evaluate every one of the 729 steps and report the maximum."""
    table = [(s, step_fitness(s, params)) for s in _STEPS]
    best = max(f for _, f in table)
    return OracleResult(best, sum(1 for _, f in table if f == best), table)
