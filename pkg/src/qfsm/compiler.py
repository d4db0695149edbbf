"""Machine-to-machine passes producing a reversible register machine.

Pipeline used by :func:`compile_machine`::

    complete_with_sink -> build_tracker -> split_fanin -> assign_outputs
                       -> analyze_schedule

Without targets the sink and tracker passes are skipped and the machine is
reversibilized as given, keeping its node numbering.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Union

from .codec import RegisterSpec, node_width_for
from .fsm import Arc, Fsm, Symbol, check


class CompileError(ValueError):
    pass


# -- provenance --------------------------------------------------------------

@dataclass(frozen=True)
class Original:
    node: int

    def __str__(self):
        return f"node {self.node}"


@dataclass(frozen=True)
class Tracked:
    """Product state: machine node plus the node at the most recent 1-read."""
    node: int
    last: int | None

    def __str__(self):
        return f"track {self.node} {'-' if self.last is None else self.last}"


@dataclass(frozen=True)
class Split:
    target: int

    def __str__(self):
        return f"split {self.target}"


Origin = Union[Original, Tracked, Split]


@dataclass(frozen=True)
class MarkedFsm:
    fsm: Fsm
    marked: frozenset[int] = frozenset()
    provenance: tuple[Origin, ...] = ()


def plain(fsm: Fsm) -> MarkedFsm:
    return MarkedFsm(fsm, frozenset(), tuple(Original(i) for i in range(fsm.node_count)))


# -- reversible machines -----------------------------------------------------

class RevArc(NamedTuple):
    src: int
    in_sym: Symbol
    dst: int
    out_sym: Symbol

    def __str__(self):
        return f"{self.src} {self.in_sym} -> {self.dst} {self.out_sym}"


def _arc_key(a):
    return (a.src, a.in_sym if isinstance(a, RevArc) else a.sym)


@dataclass(frozen=True)
class RevMachine:
    node_count: int
    arcs: tuple[RevArc, ...]
    start: int
    provenance: tuple[Origin, ...] = ()

    @property
    def reading(self) -> frozenset[int]:
        return frozenset(a.src for a in self.arcs if a.in_sym != Symbol.EPS)

    @property
    def writing(self) -> frozenset[int]:
        return frozenset(a.dst for a in self.arcs if a.out_sym != Symbol.EPS)

    def upstream(self, node: int) -> list[RevArc]:
        return sorted((a for a in self.arcs if a.dst == node), key=_arc_key)


def validate_rev(machine: RevMachine, strict: bool = True) -> list[str]:
    """Diagnostics for a reversible machine.

    ``strict`` also requires single-entry nodes to write nothing, which holds
    for :func:`assign_outputs` results but not for inverses of partial
    machines.
    """
    diags = []
    ups: dict[int, list[RevArc]] = {}
    outs: dict[int, list[Symbol]] = {}
    for a in machine.arcs:
        ups.setdefault(a.dst, []).append(a)
        outs.setdefault(a.src, []).append(a.in_sym)
    for node, syms in sorted(outs.items()):
        if Symbol.EPS in syms and len(syms) > 1:
            diags.append(f"node {node}: eps not exclusive")
        if len(set(syms)) != len(syms):
            diags.append(f"node {node}: nondeterministic")
    for node, arcs in sorted(ups.items()):
        written = [a.out_sym for a in arcs]
        if len(arcs) > 2:
            diags.append(f"node {node}: fan-in {len(arcs)} > 2")
        elif len(arcs) == 2 and sorted(written) != [Symbol.ZERO, Symbol.ONE]:
            diags.append(f"node {node}: entries not distinguished by output")
        elif len(arcs) == 1 and strict and written[0] != Symbol.EPS:
            diags.append(f"node {node}: single entry writes output")
    return diags


def invert(machine: RevMachine) -> RevMachine:
    """Reverse every arc, swapping the read and written symbols."""
    arcs = sorted((RevArc(a.dst, a.out_sym, a.src, a.in_sym) for a in machine.arcs), key=_arc_key)
    inv = RevMachine(machine.node_count, tuple(arcs), machine.start, machine.provenance)
    diags = validate_rev(inv, strict=False)
    if diags:
        raise CompileError("inverse is not a function: " + "; ".join(diags))
    return inv


# -- passes ------------------------------------------------------------------

def complete_with_sink(machine: Fsm) -> Fsm:
    """Add an absorbing dead node and route every missing read to it."""
    dead = machine.node_count
    arcs = list(machine.arcs)
    for node in range(machine.node_count):
        out = machine.out[node]
        if Symbol.EPS in out:
            continue
        for s in (Symbol.ZERO, Symbol.ONE):
            if s not in out:
                arcs.append(Arc(node, s, dead))
    arcs += [Arc(dead, Symbol.ZERO, dead), Arc(dead, Symbol.ONE, dead)]
    return Fsm(machine.node_count + 1, tuple(arcs), machine.start, machine.accepts)


def build_tracker(machine: Fsm, targets: Iterable[int]) -> MarkedFsm:
    """Product of ``machine`` with a register holding the node of the last 1-read.

    When the encoded input's marker bit is read, the tracked node is exactly
    where the original machine halted on the unencoded word; later zero reads
    leave it alone.  Only states reachable from ``(start, None)`` exist.
    """
    targets = frozenset(targets)
    start = (machine.start, None)
    ids = {start: 0}
    order = [start]
    arcs = []
    queue = deque([start])
    while queue:
        m, c = state = queue.popleft()
        out = machine.out[m]
        if Symbol.EPS in out:
            succ = [(Symbol.EPS, (out[Symbol.EPS], c))]
        else:
            succ = [(s, (out[s], m if s == Symbol.ONE else c)) for s in (Symbol.ZERO, Symbol.ONE) if s in out]
        for sym, nxt in succ:
            if nxt not in ids:
                ids[nxt] = len(order)
                order.append(nxt)
                queue.append(nxt)
            arcs.append(Arc(ids[state], sym, ids[nxt]))
    marked = frozenset(i for i, (_, c) in enumerate(order) if c in targets)
    fsm = Fsm(len(order), tuple(sorted(arcs, key=_arc_key)), 0)
    return MarkedFsm(fsm, marked, tuple(Tracked(m, c) for m, c in order))


def split_fanin(machine: MarkedFsm) -> MarkedFsm:
    """Chain fresh epsilon nodes in front of any node entered by more than two arcs.

    The two lowest upstream arcs by ``(src, symbol)`` are redirected to a
    fresh node, which falls through to the original; repeat until every
    fan-in is at most two.
    """
    fsm = machine.fsm
    arcs = [list(a) for a in fsm.arcs]
    prov = list(machine.provenance)
    marked = set(machine.marked)
    count = fsm.node_count
    ups: dict[int, list[int]] = {}
    for i, a in enumerate(arcs):
        ups.setdefault(a[2], []).append(i)

    node = 0
    while node < count:
        while len(ups.get(node, ())) > 2:
            mine = sorted(ups[node], key=lambda i: (arcs[i][0], arcs[i][1]))
            fresh = count
            count += 1
            for i in mine[:2]:
                arcs[i][2] = fresh
            ups[fresh] = mine[:2]
            ups[node] = mine[2:] + [len(arcs)]
            arcs.append([fresh, Symbol.EPS, node])
            origin = prov[node]
            prov.append(origin if isinstance(origin, Split) else Split(node))
            if node in marked:
                marked.add(fresh)
        node += 1

    out = Fsm(count, tuple(sorted((Arc(*a) for a in arcs), key=_arc_key)), fsm.start, fsm.accepts)
    return MarkedFsm(out, frozenset(marked), tuple(prov))


def assign_outputs(machine: MarkedFsm) -> RevMachine:
    """Give the two entries of each fan-in-2 node distinct output bits.

    The lower entry by ``(src, symbol)`` writes 1 and the other writes 0;
    single-entry nodes write nothing.
    """
    fsm = machine.fsm
    ups: dict[int, list[Arc]] = {}
    for a in fsm.arcs:
        ups.setdefault(a.dst, []).append(a)
    written = {}
    for node, arcs in ups.items():
        if len(arcs) > 2:
            raise CompileError(f"node {node} has fan-in {len(arcs)}; split first")
        if len(arcs) == 2:
            first, second = sorted(arcs, key=_arc_key)
            written[first] = Symbol.ONE
            written[second] = Symbol.ZERO
    rev = tuple(RevArc(a.src, a.sym, a.dst, written.get(a, Symbol.EPS)) for a in fsm.arcs)
    result = RevMachine(fsm.node_count, tuple(sorted(rev, key=_arc_key)), fsm.start, machine.provenance)
    diags = validate_rev(result)
    if diags:
        raise CompileError("; ".join(diags))
    return result


def reversibilize(machine: MarkedFsm) -> RevMachine:
    return assign_outputs(split_fanin(machine))


# -- step budget -------------------------------------------------------------

@dataclass(frozen=True)
class Schedule:
    steps: int  # global step budget T
    eps_run: int  # longest chain of consecutive eps arcs E
    reads_required: int


def longest_eps_run(machine: RevMachine) -> int:
    nxt = {a.src: a.dst for a in machine.arcs if a.in_sym == Symbol.EPS}
    depth: dict[int, int] = {}
    for root in nxt:
        path = []
        node = root
        while node in nxt and node not in depth:
            if node in path:
                raise CompileError(f"eps cycle through node {node}")
            path.append(node)
            node = nxt[node]
        d = depth.get(node, 0)
        for n in reversed(path):
            d += 1
            depth[n] = d
    return max(depth.values(), default=0)


def analyze_schedule(machine: RevMachine, max_len: int) -> Schedule:
    """Step budget guaranteeing ``max_len + 1`` reads on every branch.

    At most ``E`` epsilon steps separate consecutive reads, so
    ``(K+1)(E+1)`` steps suffice for the reads and ``E`` more drain any
    trailing epsilon chain.
    """
    e = longest_eps_run(machine)
    reads = max_len + 1
    return Schedule(reads * (e + 1) + e, e, reads)


# -- full pipeline -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CompiledMachine:
    machine: RevMachine
    registers: RegisterSpec
    schedule: Schedule
    max_len: int
    marked_nodes: frozenset[int]
    source: Fsm
    targets: frozenset[int] | None = None
    tracker: bool = field(default=False)

    @property
    def domain_size(self) -> int:
        return 1 << (self.max_len + 1)


def compile_machine(machine: Fsm, targets: Iterable[int] | None, max_len: int) -> CompiledMachine:
    """Compile ``machine`` for halting queries on words of length <= ``max_len``.

    With ``targets=None`` the machine is only reversibilized (no sink, no
    tracker) and nothing is marked.
    """
    check(machine)
    if max_len < 0:
        raise CompileError("max length must be >= 0")
    if targets is None:
        tagged = plain(machine)
    else:
        targets = frozenset(targets)
        if not targets:
            raise CompileError("targets must be nonempty")
        bad = sorted(t for t in targets if not 0 <= t < machine.node_count)
        if bad:
            raise CompileError(f"target {bad[0]} is not a node")
        tagged = build_tracker(complete_with_sink(machine), targets)
    split = split_fanin(tagged)
    rev = assign_outputs(split)
    schedule = analyze_schedule(rev, max_len)
    # at most one write per step; room for T + E steps keeps overshoot harmless
    regs = RegisterSpec(max_len + 2, schedule.steps + schedule.eps_run, node_width_for(rev.node_count))
    return CompiledMachine(rev, regs, schedule, max_len, split.marked, machine, targets, targets is not None)
