"""Reversible compilation of binary finite state machines and Grover search
over their bounded-length inputs."""

from .codec import decode, encode, enumerate_inputs, initial_register
from .compiler import CompiledMachine, RevMachine, compile_machine, invert
from .fsm import Fsm, FsmError, HaltsAt, Stuck, halting_set, parse_fsm, run_word, validate
from .grover import QueryResult, search
from .regex import parse_regex

__all__ = [
    "CompiledMachine", "Fsm", "FsmError", "HaltsAt", "QueryResult", "RevMachine", "Stuck",
    "compile_machine", "decode", "encode", "enumerate_inputs", "halting_set", "initial_register",
    "invert", "parse_fsm", "parse_regex", "run_word", "search", "validate",
]
