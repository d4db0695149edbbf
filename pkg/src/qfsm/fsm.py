"""Classical binary finite state machines.

Machines read words over {0, 1} and may contain epsilon arcs that are
traversed without consuming input.  Words are plain strings of ``'0'`` and
``'1'`` characters; ``word[0]`` is the first symbol read.

The brute-force runner here (:func:`run_word`, :func:`halting_set`) is the
reference every quantum result is checked against.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from enum import IntEnum
from functools import cached_property
from typing import Iterable, NamedTuple

MAX_ENUM_LEN = 16


class FsmError(ValueError):
    """Malformed machine text or an invalid machine."""


class Symbol(IntEnum):
    ZERO = 0
    ONE = 1
    EPS = 2

    def __str__(self) -> str:
        return "e" if self is Symbol.EPS else str(int(self))

    @classmethod
    def parse(cls, text: str) -> "Symbol":
        try:
            return {"0": cls.ZERO, "1": cls.ONE, "e": cls.EPS}[text]
        except KeyError:
            raise FsmError(f"symbol must be 0, 1, or e (got {text!r})") from None


class Arc(NamedTuple):
    src: int
    sym: Symbol
    dst: int


@dataclass(frozen=True)
class Fsm:
    node_count: int
    arcs: tuple[Arc, ...]
    start: int = 0
    accepts: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "arcs", tuple(Arc(a.src, Symbol(a.sym), a.dst) for a in self.arcs))
        object.__setattr__(self, "accepts", frozenset(self.accepts))

    @cached_property
    def out(self) -> tuple[dict[Symbol, int], ...]:
        """Per-node ``{symbol: destination}``; assumes a validated machine."""
        table: list[dict[Symbol, int]] = [{} for _ in range(self.node_count)]
        for a in self.arcs:
            table[a.src][a.sym] = a.dst
        return tuple(table)

    def upstream(self, node: int) -> list[Arc]:
        return [a for a in self.arcs if a.dst == node]

    def eps_chase(self, node: int) -> int:
        for _ in range(self.node_count + 1):
            nxt = self.out[node].get(Symbol.EPS)
            if nxt is None:
                return node
            node = nxt
        raise FsmError("eps cycle")


# -- halting semantics -------------------------------------------------------

@dataclass(frozen=True)
class HaltsAt:
    node: int


@dataclass(frozen=True)
class Stuck:
    node: int
    consumed: int


HaltReport = HaltsAt | Stuck


def run_word(machine: Fsm, word: str) -> HaltReport:
    """Run ``word`` from the start node.

    A missing transition mid-word is ``Stuck``; otherwise the whole word is
    consumed, epsilon arcs are chased, and the final node is reported.
    """
    node = machine.eps_chase(machine.start)
    for i, bit in enumerate(word):
        nxt = machine.out[node].get(Symbol(int(bit)))
        if nxt is None:
            return Stuck(node, i)
        node = machine.eps_chase(nxt)
    return HaltsAt(node)


def all_words(max_len: int) -> Iterable[str]:
    for k in range(max_len + 1):
        for bits in itertools.product("01", repeat=k):
            yield "".join(bits)


def halting_set(machine: Fsm, targets: Iterable[int], max_len: int) -> frozenset[str]:
    """Every word of length <= ``max_len`` that halts at one of ``targets``."""
    if max_len > MAX_ENUM_LEN:
        raise ValueError(f"max_len {max_len} exceeds enumeration limit {MAX_ENUM_LEN}")
    targets = set(targets)
    found = set()
    for w in all_words(max_len):
        r = run_word(machine, w)
        if isinstance(r, HaltsAt) and r.node in targets:
            found.add(w)
    return frozenset(found)


# -- validation --------------------------------------------------------------

def validate(machine: Fsm) -> list[str]:
    """Return one diagnostic per violated invariant (empty when valid)."""
    diags = []
    n = machine.node_count
    if not 0 <= machine.start < n:
        diags.append(f"start {machine.start} out of range")
    for a in sorted(machine.accepts):
        if not 0 <= a < n:
            diags.append(f"accept {a} out of range")
    by_node: dict[int, list[Arc]] = {}
    for a in machine.arcs:
        if not (0 <= a.src < n and 0 <= a.dst < n):
            diags.append(f"arc {a.src} {a.sym} {a.dst}: node out of range")
            continue
        by_node.setdefault(a.src, []).append(a)
    for node in sorted(by_node):
        syms = [a.sym for a in by_node[node]]
        if Symbol.EPS in syms and len(syms) > 1:
            if syms.count(Symbol.EPS) > 1:
                diags.append(f"node {node}: multiple eps arcs")
            if any(s != Symbol.EPS for s in syms):
                diags.append(f"node {node}: eps not exclusive")
        for s in (Symbol.ZERO, Symbol.ONE):
            if syms.count(s) > 1:
                diags.append(f"node {node}: multiple arcs on {s}")
    # eps cycles: follow eps successors (any of them) with colouring DFS
    eps: dict[int, list[int]] = {}
    for a in machine.arcs:
        if a.sym == Symbol.EPS and 0 <= a.src < n and 0 <= a.dst < n:
            eps.setdefault(a.src, []).append(a.dst)
    state = [0] * n
    for root in range(n):
        if state[root]:
            continue
        stack = [(root, iter(eps.get(root, ())))]
        state[root] = 1
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                state[node] = 2
                stack.pop()
            elif state[nxt] == 1:
                diags.append(f"eps cycle through node {nxt}")
            elif state[nxt] == 0:
                state[nxt] = 1
                stack.append((nxt, iter(eps.get(nxt, ()))))
    return diags


def check(machine: Fsm) -> Fsm:
    diags = validate(machine)
    if diags:
        raise FsmError("; ".join(diags))
    return machine


# -- text format -------------------------------------------------------------

_LINE = re.compile(r"^(start|accept)\s+(\S+)$|^arc\s+(\S+)\s+(\S+)\s+(\S+)$")


def _node_id(text: str, lineno: int) -> int:
    if not text.isdigit():
        raise FsmError(f"line {lineno}: bad node id {text!r}")
    return int(text)


def parse_fsm(text: str) -> Fsm:
    """Parse the line-oriented machine format and validate the result.

    Recognised lines are ``start <id>``, ``arc <src> <0|1|e> <dst>`` and
    ``accept <id>``; ``#`` starts a comment.  Node ids must be contiguous
    from 0 across ``start`` and ``arc`` lines.
    """
    start = None
    arcs = []
    accepts = set()
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _LINE.match(line)
        if m is None:
            raise FsmError(f"line {lineno}: syntax error: {line!r}")
        if m.group(1) == "start":
            if start is not None:
                raise FsmError(f"line {lineno}: duplicate start")
            start = _node_id(m.group(2), lineno)
            seen.add(start)
        elif m.group(1) == "accept":
            accepts.add((_node_id(m.group(2), lineno), lineno))
        else:
            src = _node_id(m.group(3), lineno)
            try:
                sym = Symbol.parse(m.group(4))
            except FsmError as exc:
                raise FsmError(f"line {lineno}: {exc}") from None
            dst = _node_id(m.group(5), lineno)
            arcs.append(Arc(src, sym, dst))
            seen.update((src, dst))
    if start is None:
        raise FsmError("missing start line")
    count = max(seen) + 1
    missing = sorted(set(range(count)) - seen)
    if missing:
        raise FsmError(f"node ids not contiguous: undeclared node {missing[0]}")
    for node, lineno in sorted(accepts):
        if node >= count:
            raise FsmError(f"line {lineno}: accept references undeclared node {node}")
    return check(Fsm(count, tuple(arcs), start, frozenset(n for n, _ in accepts)))


def format_fsm(machine: Fsm) -> str:
    lines = [f"start {machine.start}"]
    lines += [f"arc {a.src} {a.sym} {a.dst}" for a in machine.arcs]
    lines += [f"accept {n}" for n in sorted(machine.accepts)]
    return "\n".join(lines) + "\n"
