"""Cartesian GP genomes: representation, decoding, mutation, neutral moves.

Addresses 0 and 1 are the x and y inputs; node ``i`` lives at address
``i + 2`` and may only read addresses below its own (feed-forward, no
levels-back limit).  The three outputs give the H, S and V channels.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .functions import N_FUNCTIONS, USES_B, USES_PM

N_INPUTS = 2
N_OUTPUTS = 3
DEFAULT_NODES = 100
DEFAULT_PM_SIGMA = 16.0
PM_SIGMA_BOUNDS = (0.25, 128.0)
PM_SIGMA_FACTORS = np.array([1.15, 0.87])  # self-adaptive step: up or down, about equal in log


class GenomeError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class CgpGenome:
    func: np.ndarray      # (n,) int, 1..13
    conn_a: np.ndarray    # (n,) int addresses
    conn_b: np.ndarray
    pm: np.ndarray        # (n,) float in [0, 255]
    pm_sigma: np.ndarray  # (n,) float > 0
    outputs: np.ndarray   # (3,) int addresses

    def __post_init__(self):
        for name, dtype in (("func", np.int64), ("conn_a", np.int64), ("conn_b", np.int64),
                            ("pm", np.float64), ("pm_sigma", np.float64), ("outputs", np.int64)):
            arr = np.array(getattr(self, name), dtype=dtype)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_nodes(self) -> int:
        return len(self.func)

    def check(self) -> None:
        n = self.n_nodes
        if not (len(self.conn_a) == len(self.conn_b) == len(self.pm) == len(self.pm_sigma) == n):
            raise GenomeError("gene arrays differ in length")
        if len(self.outputs) != N_OUTPUTS:
            raise GenomeError(f"expected {N_OUTPUTS} outputs")
        if np.any((self.func < 1) | (self.func > N_FUNCTIONS)):
            raise GenomeError("function gene outside 1..13")
        limit = np.arange(n) + N_INPUTS
        for name in ("conn_a", "conn_b"):
            c = getattr(self, name)
            bad = np.nonzero((c < 0) | (c >= limit))[0]
            if len(bad):
                raise GenomeError(f"{name} of node {bad[0]} is not feed-forward: {c[bad[0]]}")
        if np.any((self.outputs < 0) | (self.outputs >= n + N_INPUTS)):
            raise GenomeError("output gene out of range")
        if np.any((self.pm < 0) | (self.pm > 255)) or np.any(self.pm_sigma <= 0):
            raise GenomeError("parameter gene out of range")

    def replace(self, **arrays) -> "CgpGenome":
        fields = {k: getattr(self, k) for k in ("func", "conn_a", "conn_b", "pm", "pm_sigma", "outputs")}
        fields.update(arrays)
        return CgpGenome(**fields)

    def __eq__(self, other):
        if not isinstance(other, CgpGenome):
            return NotImplemented
        return all(np.array_equal(getattr(self, k), getattr(other, k))
                   for k in ("func", "conn_a", "conn_b", "pm", "pm_sigma", "outputs"))

    __hash__ = None  # type: ignore[assignment]

    # -- serialisation -------------------------------------------------
    def dumps(self) -> str:
        out = io.StringIO()
        for i in range(self.n_nodes):
            out.write(f"{self.func[i]} {self.conn_a[i]} {self.conn_b[i]} "
                      f"{float(self.pm[i])!r} {float(self.pm_sigma[i])!r}\n")
        out.write("outputs " + " ".join(str(int(o)) for o in self.outputs) + "\n")
        return out.getvalue()

    @classmethod
    def loads(cls, text: str) -> "CgpGenome":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[-1].startswith("outputs"):
            raise GenomeError("missing outputs line")
        rows = [ln.split() for ln in lines[:-1]]
        try:
            genome = cls(
                func=[int(r[0]) for r in rows],
                conn_a=[int(r[1]) for r in rows],
                conn_b=[int(r[2]) for r in rows],
                pm=[float(r[3]) for r in rows],
                pm_sigma=[float(r[4]) for r in rows],
                outputs=[int(v) for v in lines[-1].split()[1:]],
            )
        except (IndexError, ValueError) as exc:
            raise GenomeError(f"malformed genome text: {exc}") from exc
        genome.check()
        return genome


def random_genome(rng: np.random.Generator, n_nodes: int = DEFAULT_NODES,
                  pm_sigma: float = DEFAULT_PM_SIGMA) -> CgpGenome:
    limit = np.arange(n_nodes) + N_INPUTS
    return CgpGenome(
        func=rng.integers(1, N_FUNCTIONS + 1, size=n_nodes),
        conn_a=(rng.random(n_nodes) * limit).astype(np.int64),
        conn_b=(rng.random(n_nodes) * limit).astype(np.int64),
        pm=rng.random(n_nodes) * 255.0,
        pm_sigma=np.full(n_nodes, pm_sigma),
        outputs=rng.integers(0, n_nodes + N_INPUTS, size=N_OUTPUTS),
    )


class Phenotype(NamedTuple):
    """Active subgraph in evaluation order.

    ``src_a``/``src_b`` index a value buffer whose slots 0 and 1 hold the
    inputs and slot ``j + 2`` holds the ``j``-th active node, so the graph
    can be evaluated without the full genome.
    """

    active_nodes: np.ndarray
    func: np.ndarray
    src_a: np.ndarray
    src_b: np.ndarray
    pm: np.ndarray
    out_src: np.ndarray
    canonical_form: str


def _active_mask(genome: CgpGenome) -> np.ndarray:
    n = genome.n_nodes
    active = np.zeros(n, dtype=bool)
    for o in genome.outputs:
        if o >= N_INPUTS:
            active[o - N_INPUTS] = True
    for i in range(n - 1, -1, -1):
        if not active[i]:
            continue
        a = genome.conn_a[i]
        if a >= N_INPUTS:
            active[a - N_INPUTS] = True
        if genome.func[i] in USES_B:
            b = genome.conn_b[i]
            if b >= N_INPUTS:
                active[b - N_INPUTS] = True
    return active


def decode(genome: CgpGenome) -> Phenotype:
    genome.check()
    active_nodes = np.nonzero(_active_mask(genome))[0]
    slot = {0: 0, 1: 1}
    for j, node in enumerate(active_nodes):
        slot[int(node) + N_INPUTS] = j + N_INPUTS
    func = genome.func[active_nodes].copy()
    src_a = np.array([slot[int(genome.conn_a[i])] for i in active_nodes], dtype=np.int64)
    src_b = np.array([slot[int(genome.conn_b[i])] if genome.func[i] in USES_B else 0
                      for i in active_nodes], dtype=np.int64)
    pm = np.array([genome.pm[i] if genome.func[i] in USES_PM else 0.0
                   for i in active_nodes], dtype=np.float64)
    out_src = np.array([slot[int(o)] for o in genome.outputs], dtype=np.int64)
    parts = []
    for j in range(len(active_nodes)):
        k = int(func[j])
        term = f"{k}:{src_a[j]}"
        if k in USES_B:
            term += f",{src_b[j]}"
        if k in USES_PM:
            term += f"@{float(pm[j])!r}"
        parts.append(term)
    canonical = ";".join(parts) + "|" + ",".join(str(int(s)) for s in out_src)
    return Phenotype(active_nodes, func, src_a, src_b, pm, out_src, canonical)


@dataclass(frozen=True)
class MutationRates:
    point: float = 0.04
    pm_step: bool = True


def mutate(genome: CgpGenome, rng: np.random.Generator, rates: MutationRates = MutationRates()) -> CgpGenome:
    """Point-mutate function and connection genes; perturb every ``pm`` by a
    normal step of its own ``pm_sigma``, then scale each ``pm_sigma`` by a
    randomly chosen factor of 1.15 or 0.87."""
    n = genome.n_nodes
    limit = np.arange(n) + N_INPUTS
    func = genome.func.copy()
    conn_a = genome.conn_a.copy()
    conn_b = genome.conn_b.copy()
    outputs = genome.outputs.copy()
    pm = genome.pm.copy()
    sigma = genome.pm_sigma.copy()

    hit = rng.random((3, n)) < rates.point
    func[hit[0]] = rng.integers(1, N_FUNCTIONS + 1, size=int(hit[0].sum()))
    conn_a[hit[1]] = (rng.random(int(hit[1].sum())) * limit[hit[1]]).astype(np.int64)
    conn_b[hit[2]] = (rng.random(int(hit[2].sum())) * limit[hit[2]]).astype(np.int64)
    out_hit = rng.random(N_OUTPUTS) < rates.point
    outputs[out_hit] = rng.integers(0, n + N_INPUTS, size=int(out_hit.sum()))
    if rates.pm_step:
        pm = np.clip(pm + rng.standard_normal(n) * sigma, 0.0, 255.0)
        sigma = np.clip(sigma * PM_SIGMA_FACTORS[rng.integers(0, 2, size=n)], *PM_SIGMA_BOUNDS)
    return CgpGenome(func, conn_a, conn_b, pm, sigma, outputs)


def inactive_genes(genome: CgpGenome) -> list[tuple[str, int]]:
    """Genes whose value cannot reach the rendered image."""
    active = _active_mask(genome)
    slots: list[tuple[str, int]] = []
    for i in range(genome.n_nodes):
        k = int(genome.func[i])
        if not active[i]:
            slots += [("func", i), ("conn_a", i), ("conn_b", i), ("pm", i), ("pm_sigma", i)]
            continue
        if k not in USES_B:
            slots.append(("conn_b", i))
        if k not in USES_PM:
            slots.append(("pm", i))
    return slots


class NeutralResult(NamedTuple):
    genome: CgpGenome
    saturated: bool


def neutral_variant(genome: CgpGenome, rng: np.random.Generator, steps: int = 1) -> NeutralResult:
    """Apply ``steps`` point mutations restricted to inactive genes."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    slots = inactive_genes(genome)
    if not slots:
        return NeutralResult(genome, True)
    arrays = {k: getattr(genome, k).copy() for k in ("func", "conn_a", "conn_b", "pm", "pm_sigma")}
    for idx in rng.integers(0, len(slots), size=steps):
        gene, i = slots[int(idx)]
        if gene == "func":
            arrays["func"][i] = rng.integers(1, N_FUNCTIONS + 1)
        elif gene in ("conn_a", "conn_b"):
            arrays[gene][i] = rng.integers(0, i + N_INPUTS)
        elif gene == "pm":
            arrays["pm"][i] = rng.random() * 255.0
        else:
            step = PM_SIGMA_FACTORS[rng.integers(0, 2)]
            arrays["pm_sigma"][i] = float(np.clip(arrays["pm_sigma"][i] * step, *PM_SIGMA_BOUNDS))
    return NeutralResult(genome.replace(**arrays), False)


def crossover(a: CgpGenome, b: CgpGenome, rng: np.random.Generator) -> CgpGenome:
    """Node-wise uniform crossover; outputs are taken per channel."""
    if a.n_nodes != b.n_nodes:
        raise GenomeError("parents differ in node count")
    pick = rng.random(a.n_nodes) < 0.5
    out_pick = rng.random(N_OUTPUTS) < 0.5
    return CgpGenome(
        func=np.where(pick, a.func, b.func),
        conn_a=np.where(pick, a.conn_a, b.conn_a),
        conn_b=np.where(pick, a.conn_b, b.conn_b),
        pm=np.where(pick, a.pm, b.pm),
        pm_sigma=np.where(pick, a.pm_sigma, b.pm_sigma),
        outputs=np.where(out_pick, a.outputs, b.outputs),
    )
