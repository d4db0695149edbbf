"""Step operators of the reversible register machine as basis permutations.

A configuration is ``(node, input_reg, output_reg)``.  One forward step is

1. rotate the input register right if the node reads,
2. apply the machine table to ``(node, input bit 0, output bit 0)``,
3. rotate the output register left if the new node is a writing node.

Each stage is a bijection, so a backward step just undoes them in reverse
order.  :class:`Dynamics` also provides numpy-vectorised versions used by
the Grover simulator.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .codec import initial_register
from .compiler import CompiledMachine, RevMachine
from .fsm import Symbol


class Direction(Enum):
    FORWARD = "forward"
    BACKWARD = "backward"


FORWARD = Direction.FORWARD
BACKWARD = Direction.BACKWARD


class MachineConfig(NamedTuple):
    node: int
    input_reg: int
    output_reg: int


Triple = tuple[int, int, int]


@dataclass(frozen=True)
class UmTable:
    rows: dict[Triple, Triple]
    specified: frozenset[Triple]
    node_width: int

    def __post_init__(self):
        if sorted(self.rows.values()) != sorted(self.rows):
            raise ValueError("table is not a permutation")

    def forward_array(self) -> np.ndarray:
        arr = np.empty(len(self.rows), dtype=np.int64)
        for (n, i, o), (n2, i2, o2) in self.rows.items():
            arr[n << 2 | i << 1 | o] = n2 << 2 | i2 << 1 | o2
        return arr

    def format(self, specified_only: bool = False) -> str:
        keys = sorted(self.specified if specified_only else self.rows)
        return "\n".join(f"{n},{i},{o} -> {'{},{},{}'.format(*self.rows[(n, i, o)])}" for n, i, o in keys)


def _bit(sym: Symbol) -> int:
    return 0 if sym == Symbol.EPS else int(sym)


def build_um(machine: RevMachine, node_width: int) -> UmTable:
    """Machine transform on ``(node, i0, o0)`` as a full permutation.

    Reading arcs clear the input bit they consumed; epsilon arcs pass it
    through.  Both write the arc's output bit (0 when it writes nothing).
    Codes past the last node are fixed points; everything else unspecified is
    matched to the unused images in lexicographic order.
    """
    size = 1 << node_width
    if machine.node_count > size:
        raise ValueError(f"{machine.node_count} nodes do not fit in {node_width} bits")
    rows: dict[Triple, Triple] = {}
    for a in machine.arcs:
        t = _bit(a.out_sym)
        if a.in_sym == Symbol.EPS:
            pairs = [((a.src, i, 0), (a.dst, i, t)) for i in (0, 1)]
        else:
            pairs = [((a.src, int(a.in_sym), 0), (a.dst, 0, t))]
        for dom, img in pairs:
            rows[dom] = img
    images = list(rows.values())
    if len(set(images)) != len(images):
        raise ValueError("specified rows collide")
    specified = frozenset(rows)
    for n in range(machine.node_count, size):
        for i in (0, 1):
            for o in (0, 1):
                rows[(n, i, o)] = (n, i, o)
    used = set(rows.values())
    points = [(n, i, o) for n in range(size) for i in (0, 1) for o in (0, 1)]
    free_dom = (p for p in points if p not in rows)
    free_img = (p for p in points if p not in used)
    for dom, img in zip(free_dom, free_img):
        rows[dom] = img
    return UmTable(rows, specified, node_width)


def _rotr(x, width):
    return (x >> 1) | ((x & 1) << (width - 1)) if width else x


def _rotl(x, width):
    if not width:
        return x
    return ((x << 1) & ((1 << width) - 1)) | (x >> (width - 1))


class Dynamics:
    """Precomputed step operators for one compiled machine."""

    def __init__(self, compiled: CompiledMachine):
        self.compiled = compiled
        regs = compiled.registers
        self.in_width = regs.input_width
        self.out_width = regs.output_width
        self.table = build_um(compiled.machine, regs.node_width)
        self.fwd = self.table.forward_array()
        self.bwd = np.empty_like(self.fwd)
        self.bwd[self.fwd] = np.arange(len(self.fwd))
        size = 1 << regs.node_width
        self.reading = np.zeros(size, dtype=bool)
        self.reading[list(compiled.machine.reading)] = True
        self.writing = np.zeros(size, dtype=bool)
        self.writing[list(compiled.machine.writing)] = True
        self.marked = np.zeros(size, dtype=bool)
        self.marked[list(compiled.marked_nodes)] = True
        # int64 holds registers up to 62 bits; wider ones fall back to Python ints
        self.out_dtype = np.int64 if self.out_width <= 62 else object

    # -- scalar ----------------------------------------------------------

    def step(self, cfg: MachineConfig, direction: Direction = FORWARD) -> MachineConfig:
        node, inp, out = cfg
        if direction is FORWARD:
            if self.reading[node]:
                inp = _rotr(inp, self.in_width)
            img = int(self.fwd[node << 2 | (inp & 1) << 1 | (out & 1)])
            node = img >> 2
            inp = (inp & ~1) | (img >> 1 & 1)
            out = (out & ~1) | (img & 1)
            if self.writing[node]:
                out = _rotl(out, self.out_width)
        else:
            if self.writing[node]:
                out = _rotr(out, self.out_width)
            pre = int(self.bwd[node << 2 | (inp & 1) << 1 | (out & 1)])
            node = pre >> 2
            inp = (inp & ~1) | (pre >> 1 & 1)
            out = (out & ~1) | (pre & 1)
            if self.reading[node]:
                inp = _rotl(inp, self.in_width)
        return MachineConfig(node, inp, out)

    def run(self, cfg: MachineConfig, steps: int, direction: Direction = FORWARD, trace: bool = False):
        """Apply ``steps`` steps; returns ``(final, trace)`` where trace lists every config visited."""
        visited = [cfg] if trace else None
        for _ in range(steps):
            cfg = self.step(cfg, direction)
            if trace:
                visited.append(cfg)
        return cfg, visited

    # -- vectorised ------------------------------------------------------

    def advance(self, nodes: np.ndarray, inp: np.ndarray, out: np.ndarray, steps: int,
                direction: Direction = FORWARD):
        """Vectorised :meth:`step` applied ``steps`` times to parallel arrays."""
        wi, wo = self.in_width, self.out_width
        for _ in range(steps):
            if direction is FORWARD:
                r = self.reading[nodes]
                inp = np.where(r, _rotr(inp, wi), inp)
                img = self.fwd[nodes << 2 | (inp & 1) << 1 | (out & 1).astype(np.int64)]
                nodes = img >> 2
                inp = (inp & ~1) | (img >> 1 & 1)
                out = (out & ~1) | (img & 1)
                out = np.where(self.writing[nodes], _rotl(out, wo), out)
            else:
                out = np.where(self.writing[nodes], _rotr(out, wo), out)
                pre = self.bwd[nodes << 2 | (inp & 1) << 1 | (out & 1).astype(np.int64)]
                nodes = pre >> 2
                inp = (inp & ~1) | (pre >> 1 & 1)
                out = (out & ~1) | (pre & 1)
                inp = np.where(self.reading[nodes], _rotl(inp, wi), inp)
            if out.dtype != self.out_dtype:
                out = out.astype(self.out_dtype)
        return nodes, inp, out


@lru_cache(maxsize=64)
def dynamics(compiled: CompiledMachine) -> Dynamics:
    return Dynamics(compiled)


def step(compiled: CompiledMachine, cfg: MachineConfig, direction: Direction = FORWARD) -> MachineConfig:
    return dynamics(compiled).step(cfg, direction)


def run(compiled: CompiledMachine, start: MachineConfig, steps: int | None = None,
        direction: Direction = FORWARD, trace: bool = False):
    if steps is None:
        steps = compiled.schedule.steps
    return dynamics(compiled).run(start, steps, direction, trace)


def read_output_trace(compiled: CompiledMachine, trace: list[MachineConfig]) -> list[int]:
    """Output bits written along a forward trace, first-written first."""
    dyn = dynamics(compiled)
    bits = []
    for prev, cur in zip(trace, trace[1:]):
        if dyn.step(prev, FORWARD) != cur:
            raise ValueError("not a forward trace")
        if dyn.writing[cur.node]:
            # the written bit sits at position 1 right after the rotation
            bits.append(cur.output_reg >> 1 & 1 if dyn.out_width > 1 else cur.output_reg & 1)
    return bits


def initial_config(compiled: CompiledMachine, value: int) -> MachineConfig:
    return MachineConfig(compiled.machine.start, initial_register(value), 0)
