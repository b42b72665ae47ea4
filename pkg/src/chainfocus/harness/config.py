"""TOML run configuration.

A config file is optional; every key has a default.  Layout::

    experiment = "evoc"          # evoc | cf_evoc | portrait | oracle
    seed = 0
    replicates = 1
    output_dir = "runs/evoc"

    [world]                      # EVOC lattice and agents
    chaining_enabled = true
    p_cont = 0.5
    ...

    [fitness]                    # EVOC fitness weights and modes
    [schedule]                   # cf_evoc: periodic fitness flips
    [controller]                 # cf_evoc: mutation-rate controller
    [portrait]                   # portrait: sitter/mask paths + GA params

``cf_evoc`` defaults to chaining off and 200 iterations; set them in
``[world]`` to override.  ``sitter``/``mask`` accept ``"builtin"`` for the
bundled 64x64 test sitter.
"""
from __future__ import annotations

import dataclasses
import enum
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Optional, Union

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..evoc.focus import FitnessSchedule, FocusController, ShiftKind
from ..evoc.model import FitnessParams, HeadMode, SymMode
from ..evoc.sim import ConfigError, RoleMode, WorldConfig
from ..portrait.evolve import PortraitParams


class Experiment(enum.Enum):
    EVOC = "evoc"
    CF_EVOC = "cf_evoc"
    PORTRAIT = "portrait"
    ORACLE = "oracle"


BUILTIN = "builtin"
DATA_DIR = Path(__file__).resolve().parent.parent / "data"

CF_WORLD_DEFAULTS = {"chaining_enabled": False, "iterations": 200}


@dataclass(frozen=True)
class RunConfig:
    experiment: Experiment = Experiment.EVOC
    seed: int = 0
    replicates: int = 1
    output_dir: str = "runs"
    world: WorldConfig = field(default_factory=WorldConfig)
    schedule: FitnessSchedule = field(default_factory=FitnessSchedule)
    controller: FocusController = field(default_factory=FocusController)
    portrait: PortraitParams = field(default_factory=PortraitParams)
    sitter: Optional[str] = None
    mask: Optional[str] = None

    def validate(self) -> None:
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed", "must be an unsigned 64-bit integer")
        if self.replicates < 1:
            raise ConfigError("replicates", "must be >= 1")
        if self.seed + self.replicates - 1 >= 2 ** 64:
            raise ConfigError("replicates", "seed range overflows 64 bits")
        self.world.validate()
        if self.experiment is Experiment.CF_EVOC:
            self.schedule.validate()
            self.controller.validate()
        if self.experiment is Experiment.PORTRAIT:
            self.portrait.validate()
            for key in ("sitter", "mask"):
                value = getattr(self, key)
                if value is None:
                    raise ConfigError(key, "portrait runs need a sitter image and a face mask")
                if value != BUILTIN and not Path(value).is_file():
                    raise ConfigError(key, f"file not found: {value}")

    def seeds(self) -> list[int]:
        return [self.seed + i for i in range(self.replicates)]

    def asset_paths(self) -> tuple[Path, Path]:
        sitter = DATA_DIR / "sitter.png" if self.sitter == BUILTIN else Path(self.sitter)
        mask = DATA_DIR / "mask.png" if self.mask == BUILTIN else Path(self.mask)
        return sitter, mask


_SECTIONS = {
    "world": WorldConfig,
    "fitness": FitnessParams,
    "schedule": FitnessSchedule,
    "controller": FocusController,
    "portrait": PortraitParams,
}
_TOP = {"experiment", "seed", "replicates", "output_dir"}
_PORTRAIT_ASSETS = {"sitter", "mask"}


def _coerce(cls, name: str, value: Any, prefix: str) -> Any:
    key = f"{prefix}.{name}"
    ftype = {f.name: f.type for f in fields(cls)}[name]
    enums = {"head_mode": HeadMode, "sym_mode": SymMode, "role_mode": RoleMode, "shift_kind": ShiftKind}
    if name in enums:
        try:
            return enums[name](str(value).lower())
        except ValueError:
            choices = ", ".join(m.value for m in enums[name])
            raise ConfigError(key, f"{value!r} is not one of: {choices}") from None
    if isinstance(value, bool):
        if "bool" not in str(ftype):
            raise ConfigError(key, f"expected a number, got {value!r}")
        return value
    if "bool" in str(ftype):
        raise ConfigError(key, f"expected true/false, got {value!r}")
    if "float" in str(ftype):
        if not isinstance(value, (int, float)):
            raise ConfigError(key, f"expected a number, got {value!r}")
        return float(value)
    if "int" in str(ftype):
        if not isinstance(value, int):
            raise ConfigError(key, f"expected an integer, got {value!r}")
        return value
    if "str" in str(ftype):
        if not isinstance(value, str):
            raise ConfigError(key, f"expected a string, got {value!r}")
        return value
    return value


def _build(cls, table: dict, prefix: str, defaults: Optional[dict] = None):
    known = {f.name for f in fields(cls)}
    kwargs = dict(defaults or {})
    for name, value in table.items():
        if name not in known or name in ("fitness",):
            raise ConfigError(f"{prefix}.{name}", "unknown key")
        kwargs[name] = _coerce(cls, name, value, prefix)
    try:
        return cls(**kwargs)
    except ValueError as exc:
        raise ConfigError(prefix, str(exc)) from exc


def config_from_dict(doc: dict, experiment: Optional[Experiment] = None) -> RunConfig:
    for key, value in doc.items():
        if key not in _TOP and key not in _SECTIONS:
            raise ConfigError(key, "unknown key")
        if key in _SECTIONS and not isinstance(value, dict):
            raise ConfigError(key, "expected a table")
    exp_raw = doc.get("experiment", Experiment.EVOC.value)
    try:
        exp = Experiment(str(exp_raw).lower())
    except ValueError:
        raise ConfigError("experiment", f"{exp_raw!r} is not one of: "
                          + ", ".join(e.value for e in Experiment)) from None
    if experiment is not None:
        exp = experiment
    top = {}
    for key in ("seed", "replicates"):
        if key in doc:
            if not isinstance(doc[key], int) or isinstance(doc[key], bool):
                raise ConfigError(key, f"expected an integer, got {doc[key]!r}")
            top[key] = doc[key]
    if "output_dir" in doc:
        if not isinstance(doc["output_dir"], str):
            raise ConfigError("output_dir", "expected a string")
        top["output_dir"] = doc["output_dir"]

    fitness = _build(FitnessParams, doc.get("fitness", {}), "fitness")
    world_defaults = {"fitness": fitness}
    if exp is Experiment.CF_EVOC:
        world_defaults.update(CF_WORLD_DEFAULTS)
    world_table = dict(doc.get("world", {}))
    if "seed" in world_table:
        raise ConfigError("world.seed", "unknown key (use the top-level seed)")
    world = _build(WorldConfig, world_table, "world", world_defaults)
    portrait_table = dict(doc.get("portrait", {}))
    assets = {k: portrait_table.pop(k) for k in list(portrait_table) if k in _PORTRAIT_ASSETS}
    for k, v in assets.items():
        if not isinstance(v, str):
            raise ConfigError(f"portrait.{k}", "expected a path string")
    cfg = RunConfig(
        experiment=exp,
        world=world,
        schedule=_build(FitnessSchedule, doc.get("schedule", {}), "schedule"),
        controller=_build(FocusController, doc.get("controller", {}), "controller"),
        portrait=_build(PortraitParams, portrait_table, "portrait"),
        sitter=assets.get("sitter"),
        mask=assets.get("mask"),
        **top,
    )
    return cfg


def load_config(path: Union[str, Path, None], experiment: Optional[Experiment] = None,
                **overrides) -> RunConfig:
    """Read, default-fill and validate a run configuration.

    ``overrides`` (``seed``, ``replicates``, ``output_dir``) come from the
    command line and win over the file.
    """
    doc: dict = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError("config", f"file not found: {p}")
        try:
            doc = tomllib.loads(p.read_text(encoding="utf-8"))
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError("config", f"parse error in {p}: {exc}") from None
    cfg = config_from_dict(doc, experiment)
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
    cfg.validate()
    return cfg


def _toml_value(v: Any) -> str:
    if isinstance(v, enum.Enum):
        return f'"{v.value}"'
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, int):
        return str(v)
    if v is None:
        raise TypeError("None has no TOML form")
    s = str(v).replace("\\", "\\\\").replace('"', '\\"')
    return f'"{s}"'


def dump_config(cfg: RunConfig) -> str:
    """Effective configuration as TOML, defaults included."""
    lines = [f"experiment = {_toml_value(cfg.experiment)}",
             f"seed = {cfg.seed}",
             f"replicates = {cfg.replicates}",
             f"output_dir = {_toml_value(cfg.output_dir)}", ""]
    sections = {
        "world": {k: v for k, v in dataclasses.asdict(cfg.world).items() if k not in ("fitness", "seed")},
        "fitness": dataclasses.asdict(cfg.world.fitness),
        "schedule": dataclasses.asdict(cfg.schedule),
        "controller": dataclasses.asdict(cfg.controller),
        "portrait": {**{k: v for k, v in (("sitter", cfg.sitter), ("mask", cfg.mask)) if v is not None},
                     **{k: v for k, v in dataclasses.asdict(cfg.portrait).items() if v is not None}},
    }
    for name, table in sections.items():
        lines.append(f"[{name}]")
        for k, v in table.items():
            lines.append(f"{k} = {_toml_value(v)}")
        lines.append("")
    return "\n".join(lines)
