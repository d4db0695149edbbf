"""Sparse simulation of amplitude amplification over a compiled machine.

Every operator except diffusion permutes basis configurations, so the state
is stored as parallel arrays of configurations and complex amplitudes whose
length never exceeds the ``2**(K+1)`` initial inputs.  One Grover round is
evolve ``T`` steps, flip the sign of marked configurations, devolve ``T``
steps, then reflect about the uniform superposition of inputs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .codec import decode
from .compiler import CompiledMachine
from .fsm import HaltsAt, run_word
from .unitaries import BACKWARD, FORWARD, Direction, dynamics

MAX_QUERY_LEN = 20
BBHT_GROWTH = 6 / 5


class SupportError(RuntimeError):
    """Diffusion applied to a state that left the input domain."""


@dataclass(frozen=True, eq=False)
class QState:
    nodes: np.ndarray
    inp: np.ndarray
    out: np.ndarray
    amp: np.ndarray

    def __len__(self):
        return len(self.amp)

    def norm(self) -> float:
        return float(np.sum(np.abs(self.amp) ** 2))

    def as_dict(self) -> dict[tuple[int, int, int], complex]:
        return {(int(n), int(i), int(o)): complex(a)
                for n, i, o, a in zip(self.nodes, self.inp, self.out, self.amp)}


def init_superposition(compiled: CompiledMachine) -> QState:
    if compiled.max_len > MAX_QUERY_LEN:
        raise ValueError(f"max length {compiled.max_len} exceeds simulator limit {MAX_QUERY_LEN}")
    n = compiled.domain_size
    values = np.arange(n, dtype=np.int64)
    return QState(
        nodes=np.full(n, compiled.machine.start, dtype=np.int64),
        inp=values << 1,
        out=np.zeros(n, dtype=dynamics(compiled).out_dtype),
        amp=np.full(n, 1 / math.sqrt(n), dtype=np.complex128),
    )


def evolve(state: QState, compiled: CompiledMachine, steps: int | None = None,
           direction: Direction = FORWARD) -> QState:
    if steps is None:
        steps = compiled.schedule.steps
    nodes, inp, out = dynamics(compiled).advance(state.nodes, state.inp, state.out, steps, direction)
    return QState(nodes, inp, out, state.amp)


def devolve(state: QState, compiled: CompiledMachine, steps: int | None = None) -> QState:
    return evolve(state, compiled, steps, BACKWARD)


def mark(state: QState, compiled: CompiledMachine) -> QState:
    flip = dynamics(compiled).marked[state.nodes]
    return replace(state, amp=np.where(flip, -state.amp, state.amp))


def marked_mass(state: QState, compiled: CompiledMachine) -> float:
    flip = dynamics(compiled).marked[state.nodes]
    return float(np.sum(np.abs(state.amp[flip]) ** 2))


def in_domain(state: QState, compiled: CompiledMachine) -> bool:
    return bool(np.all(state.nodes == compiled.machine.start)
                and np.all(state.out == 0)
                and np.all((state.inp & 1) == 0)
                and np.all((state.inp >> 1) < compiled.domain_size))


def diffuse(state: QState, compiled: CompiledMachine) -> QState:
    """Inversion about the mean over the full input domain."""
    if not in_domain(state, compiled):
        raise SupportError("diffusion needs a devolved state (support outside the input domain)")
    n = compiled.domain_size
    dense = np.zeros(n, dtype=np.complex128)
    dense[state.inp >> 1] = state.amp
    dense = 2 * dense.mean() - dense
    fresh = init_superposition(compiled)
    return replace(fresh, amp=dense)


def grover_round(state: QState, compiled: CompiledMachine) -> QState:
    state = mark(evolve(state, compiled), compiled)
    return diffuse(devolve(state, compiled), compiled)


def grover_iterations_for(n: int, m: int) -> int:
    """Rounds maximising the marked probability for ``m`` marked of ``n``."""
    if m <= 0:
        raise ValueError("no marked states: no finite schedule (use bbht)")
    if m > n:
        raise ValueError("more marked states than the domain holds")
    theta = math.asin(math.sqrt(m / n))
    return math.floor(math.pi / (4 * theta))


def success_probability(n: int, m: int, rounds: int) -> float:
    theta = math.asin(math.sqrt(m / n))
    return math.sin((2 * rounds + 1) * theta) ** 2


def input_probabilities(state: QState, compiled: CompiledMachine) -> np.ndarray:
    if not in_domain(state, compiled):
        raise SupportError("measurement of the input register needs a devolved state")
    probs = np.zeros(compiled.domain_size)
    probs[state.inp >> 1] = np.abs(state.amp) ** 2
    return probs


def exact_marked_values(compiled: CompiledMachine) -> list[int]:
    """Encoded inputs whose evolved configuration lands on a marked node.

    The marked configurations are run backwards to recover their inputs.
    """
    state = evolve(init_superposition(compiled), compiled)
    hit = dynamics(compiled).marked[state.nodes]
    back = devolve(QState(state.nodes[hit], state.inp[hit], state.out[hit], state.amp[hit]), compiled)
    return sorted(int(v) for v in back.inp >> 1)


def classify(compiled: CompiledMachine, value: int) -> tuple[str | None, bool]:
    """Decode a measured input and confirm it with the classical runner."""
    if value == 0:
        return None, False
    word = decode(value, compiled.max_len)
    report = run_word(compiled.source, word)
    return word, isinstance(report, HaltsAt) and report.node in compiled.targets


# -- search --------------------------------------------------------------------

@dataclass(frozen=True)
class Sample:
    word: str | None  # None for the all-zero register, which encodes no word
    count: int
    marked: bool


@dataclass(frozen=True)
class QueryResult:
    samples: list[Sample]
    iterations: int
    marked_mass: float
    seed: int
    mode: str
    shots: int
    history: list[float] = field(default_factory=list)

    @property
    def found(self) -> bool:
        return any(s.marked for s in self.samples)

    @property
    def marked_count(self) -> int:
        return sum(s.count for s in self.samples if s.marked)


def _tally(compiled: CompiledMachine, values) -> list[Sample]:
    counts = np.bincount(np.asarray(values, dtype=np.int64), minlength=compiled.domain_size)
    out = []
    for v in np.flatnonzero(counts):
        word, ok = classify(compiled, int(v))
        out.append(Sample(word, int(counts[v]), ok))
    return out


def _amplify(compiled: CompiledMachine, rounds: int, history: list[float] | None = None) -> QState:
    state = init_superposition(compiled)
    for _ in range(rounds):
        state = grover_round(state, compiled)
        if history is not None:
            history.append(marked_mass(evolve(state, compiled), compiled))
    return state


def search(compiled: CompiledMachine, mode: str | int = "auto", shots: int = 200, seed: int = 0,
           record: bool = False) -> QueryResult:
    """Amplify and sample the inputs that halt at the compiled targets.

    ``mode`` is a fixed round count, ``"auto"`` (rounds from the marked count
    read off the simulator), or ``"bbht"`` (randomised growing round counts
    for an unknown marked count; ``shots`` is ignored and each attempt
    samples once).
    """
    if compiled.targets is None:
        raise ValueError("machine was compiled without targets")
    if shots < 1:
        raise ValueError("shots must be >= 1")
    rng = np.random.default_rng(seed)
    n = compiled.domain_size
    history: list[float] | None = [] if record else None

    if mode == "bbht":
        return _bbht(compiled, rng, seed, history)

    if mode == "auto":
        m = round(marked_mass(evolve(init_superposition(compiled), compiled), compiled) * n)
        rounds = grover_iterations_for(n, m) if m else 0
    else:
        rounds = int(mode)
        if rounds < 0:
            raise ValueError("iteration count must be >= 0")
    state = _amplify(compiled, rounds, history)
    probs = input_probabilities(state, compiled)
    values = rng.choice(n, size=shots, p=probs / probs.sum())
    return QueryResult(
        samples=_tally(compiled, values),
        iterations=rounds,
        marked_mass=marked_mass(evolve(state, compiled), compiled),
        seed=seed,
        mode="auto" if mode == "auto" else "fixed",
        shots=shots,
        history=history or [],
    )


def _bbht(compiled: CompiledMachine, rng: np.random.Generator, seed: int, history) -> QueryResult:
    n = compiled.domain_size
    cap = math.sqrt(n)
    cutoff = 3 * cap
    m = 1.0
    total = 0
    drawn = []
    while True:
        rounds = int(rng.integers(0, math.ceil(m)))
        total += rounds
        state = _amplify(compiled, rounds, history)
        probs = input_probabilities(state, compiled)
        value = int(rng.choice(n, p=probs / probs.sum()))
        drawn.append(value)
        if classify(compiled, value)[1]:
            break
        m = min(BBHT_GROWTH * m, cap)
        if total > cutoff:
            break
    return QueryResult(
        samples=_tally(compiled, drawn),
        iterations=total,
        marked_mass=marked_mass(evolve(state, compiled), compiled),
        seed=seed,
        mode="bbht",
        shots=len(drawn),
        history=history or [],
    )
