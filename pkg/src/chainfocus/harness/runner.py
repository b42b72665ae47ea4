"""Batch execution over seeds with CSV/PNG outputs and a hash manifest.

Output layout for ``output_dir``::

    config.toml              effective config, defaults filled in
    seed_<n>/metrics.csv     per-seed series
    seed_<n>/...             PNGs and genome for portrait runs
    aggregate.csv            per-row mean and sd across seeds
    manifest.json            config snapshot, seeds, sha256 per file, timings
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import logging
import math
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Iterable, Optional, Sequence

from ..evoc.focus import CF_METRIC_COLUMNS, run_cf
from ..evoc.model import PARTS, oracle_enumerate
from ..evoc.sim import METRIC_COLUMNS, run
from .config import Experiment, RunConfig, dump_config

log = logging.getLogger(__name__)

PORTRAIT_COLUMNS = ("generation", "best_combined", "best_R", "best_A", "p1", "p2", "p3",
                    "mode", "w_painterly", "stuck_counter", "archive_size")
ORACLE_COLUMNS = tuple(p.name.lower() for p in PARTS) + ("fitness",)


class RunFailure(RuntimeError):
    pass


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def read_csv(path: Path) -> tuple[list[str], list[dict[str, str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
        return list(reader.fieldnames or []), rows


def sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_oracle(path: Path, params) -> None:
    res = oracle_enumerate(params)
    write_csv(path, ORACLE_COLUMNS,
              ([p.name for p in step.postures] + [f] for step, f in res.table))


def _run_evoc(cfg: RunConfig, seed: int, out: Path) -> None:
    world = dataclasses.replace(cfg.world, seed=seed)
    if cfg.experiment is Experiment.CF_EVOC:
        series = run_cf(world, cfg.schedule, cfg.controller)
        write_csv(out / "metrics.csv", CF_METRIC_COLUMNS, series)
    else:
        series = run(world)
        write_csv(out / "metrics.csv", METRIC_COLUMNS, series)


def _run_portrait(cfg: RunConfig, seed: int, out: Path) -> None:
    from ..cgp.render import save_png
    from ..portrait.evolve import run_portrait
    from ..portrait.scoring import SitterAssets

    sitter, mask = cfg.asset_paths()
    assets = SitterAssets.from_png(sitter, mask)
    params = cfg.portrait
    rows = []
    best = {}

    def on_generation(rep, genome):
        s = rep.best_scores
        rows.append((rep.generation, rep.best_combined, rep.best_R, rep.best_A,
                     s.p1_composition, s.p2_tonal_color, s.p3_dominance,
                     rep.mode.value, rep.w_painterly, rep.stuck_counter, rep.archive_size))
        if rep.generation % params.snapshot_every == 0:
            save_png(rep.best_image, out / f"best_gen_{rep.generation:05d}.png")
        best["image"], best["genome"] = rep.best_image, genome

    run_portrait(assets, params, seed=seed, callback=on_generation)
    write_csv(out / "metrics.csv", PORTRAIT_COLUMNS, rows)
    if best:
        save_png(best["image"], out / "final_best.png")
        (out / "final_best.genome").write_text(best["genome"].dumps(), encoding="utf-8")


def run_seed(cfg: RunConfig, seed: int, out: Path) -> float:
    """Run one replicate into ``out``; returns wall-clock seconds."""
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    if cfg.experiment is Experiment.PORTRAIT:
        _run_portrait(cfg, seed, out)
    elif cfg.experiment is Experiment.ORACLE:
        write_oracle(out / "oracle.csv", cfg.world.fitness)
    else:
        _run_evoc(cfg, seed, out)
    return time.perf_counter() - t0


def _seed_job(args):
    cfg, seed, out = args
    try:
        return seed, run_seed(cfg, seed, out), None
    except Exception:  # recorded per seed; other seeds continue
        return seed, None, traceback.format_exc()


def aggregate(csv_paths: Sequence[Path], out_path: Path) -> None:
    """Mean and sample sd of every numeric column, row by row across seeds."""
    tables = [read_csv(p) for p in csv_paths]
    if not tables:
        return
    columns, _ = tables[0]
    key = columns[0]
    numeric = [c for c in columns[1:]
               if all(_is_number(r[c]) for _, rows in tables for r in rows)]
    n_rows = min(len(rows) for _, rows in tables)
    header = [key] + [f"{c}_{stat}" for c in numeric for stat in ("mean", "sd")]
    out_rows = []
    for i in range(n_rows):
        row = [tables[0][1][i][key]]
        for c in numeric:
            vals = [float(rows[i][c]) for _, rows in tables]
            m = math.fsum(vals) / len(vals)
            sd = math.sqrt(math.fsum((v - m) ** 2 for v in vals) / (len(vals) - 1)) if len(vals) > 1 else 0.0
            row += [m, sd]
        out_rows.append(row)
    write_csv(out_path, header, out_rows)


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


@dataclasses.dataclass
class RunManifest:
    config: str
    seeds: list[int]
    hashes: dict[str, str]
    wall_clock: dict[str, Optional[float]]
    failures: dict[str, str]

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)

    @classmethod
    def load(cls, path: Path) -> "RunManifest":
        return cls(**json.loads(Path(path).read_text(encoding="utf-8")))


def run_experiment(cfg: RunConfig, workers: int = 1) -> RunManifest:
    """Run every replicate seed and write outputs under ``cfg.output_dir``.

    Seeds are independent, so ``workers > 1`` runs them in separate
    processes with identical per-seed files.
    """
    cfg.validate()
    root = Path(cfg.output_dir)
    try:
        root.mkdir(parents=True, exist_ok=True)
        probe = root / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise RunFailure(f"output directory not writable: {root}: {exc}") from exc
    (root / "config.toml").write_text(dump_config(cfg), encoding="utf-8")

    jobs = [(cfg, s, root / f"seed_{s}") for s in cfg.seeds()]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_seed_job, jobs))
    else:
        results = [_seed_job(j) for j in jobs]

    wall, failures = {}, {}
    for seed, seconds, err in results:
        wall[str(seed)] = seconds
        if err is not None:
            log.error("seed %d failed:\n%s", seed, err)
            failures[str(seed)] = err.strip().splitlines()[-1]

    ok = [root / f"seed_{s}" / "metrics.csv" for s, _, err in results if err is None]
    if ok and cfg.experiment is not Experiment.ORACLE:
        aggregate(ok, root / "aggregate.csv")

    hashes = {}
    for path in sorted(root.rglob("*")):
        if path.is_file() and path.name != "manifest.json":
            hashes[path.relative_to(root).as_posix()] = sha256(path)
    manifest = RunManifest(dump_config(cfg), cfg.seeds(), hashes, wall, failures)
    (root / "manifest.json").write_text(manifest.to_json(), encoding="utf-8")
    return manifest
