"""Command-line driver: ``compile``, ``run``, ``query`` and ``verify``.

Exit status is 0 on success, 1 when a verification or round trip fails and
2 for usage or parse errors.  Output is byte-deterministic for fixed inputs,
flags and seed (``--timing`` adds wall-clock time and breaks that).
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from . import grover
from .codec import encode
from .compiler import CompileError, CompiledMachine, compile_machine
from .fsm import FsmError, HaltsAt, halting_set, parse_fsm, run_word
from .regex import parse_regex
from .unitaries import BACKWARD, FORWARD, MachineConfig, dynamics, initial_config, read_output_trace

EXIT_OK, EXIT_MISMATCH, EXIT_USAGE = 0, 1, 2
CLOSED_FORM_TOL = 1e-9

QUERY_SCHEMA = {
    "type": "object",
    "required": ["query", "search", "samples", "timing_ms"],
    "additionalProperties": False,
    "properties": {
        "query": {
            "type": "object",
            "required": ["source", "targets", "K"],
            "additionalProperties": False,
            "properties": {
                "source": {"type": "string"},
                "targets": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                "K": {"type": "integer", "minimum": 0},
            },
        },
        "search": {
            "type": "object",
            "required": ["mode", "iterations", "marked_mass", "seed"],
            "additionalProperties": False,
            "properties": {
                "mode": {"enum": ["fixed", "auto", "bbht"]},
                "iterations": {"type": "integer", "minimum": 0},
                "marked_mass": {"type": "number", "minimum": 0, "maximum": 1},
                "seed": {"type": "integer", "minimum": 0},
            },
        },
        "samples": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["word", "count", "marked"],
                "additionalProperties": False,
                "properties": {
                    "word": {"type": ["string", "null"], "pattern": "^[01]*$"},
                    "count": {"type": "integer", "minimum": 1},
                    "marked": {"type": "boolean"},
                },
            },
        },
        "timing_ms": {"type": ["number", "null"]},
    },
}


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    source: str
    machine: object
    targets: frozenset[int] | None
    max_len: int


def _load(args, need_targets: bool) -> RunConfig:
    if args.fsm is not None:
        machine = parse_fsm(Path(args.fsm).read_text())
        source = args.fsm
    else:
        machine = parse_regex(args.regex)
        source = f"regex:{args.regex}"
    if args.accepts:
        targets = machine.accepts
        if not targets:
            raise UsageError("--accepts given but the machine has no accept nodes")
    elif args.halts_at is not None:
        try:
            targets = frozenset(int(t) for t in args.halts_at.split(","))
        except ValueError:
            raise UsageError(f"bad --halts-at list {args.halts_at!r}") from None
    elif need_targets:
        raise UsageError("a target is required: --halts-at <ids> or --accepts")
    else:
        targets = None
    if args.max_len < 0:
        raise UsageError("--max-len must be >= 0")
    return RunConfig(source, machine, targets, args.max_len)


def _compiled(cfg: RunConfig) -> CompiledMachine:
    return compile_machine(cfg.machine, cfg.targets, cfg.max_len)


def word_text(word: str | None) -> str:
    if word is None:
        return "<none>"
    return word or "ε"


# -- compile -------------------------------------------------------------------

def compiled_to_dict(cm: CompiledMachine, source: str) -> dict:
    rev = cm.machine
    table = dynamics(cm).table
    return {
        "source": source,
        "K": cm.max_len,
        "targets": None if cm.targets is None else sorted(cm.targets),
        "registers": {"node": cm.registers.node_width, "input": cm.registers.input_width,
                      "output": cm.registers.output_width},
        "schedule": {"E": cm.schedule.eps_run, "T": cm.schedule.steps},
        "start": rev.start,
        "nodes": [{"id": i, "origin": str(rev.provenance[i]), "reading": i in rev.reading,
                   "writing": i in rev.writing, "marked": i in cm.marked_nodes}
                  for i in range(rev.node_count)],
        "arcs": [[a.src, str(a.in_sym), a.dst, str(a.out_sym)] for a in rev.arcs],
        "um": [[list(k), list(table.rows[k])] for k in sorted(table.specified)],
        "um_completion": [[list(k), list(v)] for k, v in sorted(table.rows.items()) if k not in table.specified],
    }


def format_compiled(cm: CompiledMachine, source: str) -> str:
    d = compiled_to_dict(cm, source)
    targets = "none" if d["targets"] is None else ",".join(map(str, d["targets"]))
    lines = [
        f"source {source}",
        f"max-len {cm.max_len}",
        f"targets {targets}",
        "registers node={node} input={input} output={output}".format(**d["registers"]),
        "schedule E={E} T={T}".format(**d["schedule"]),
        f"start {d['start']}",
        "marked " + " ".join(str(n) for n in sorted(cm.marked_nodes)),
        "[nodes]",
    ]
    for n in d["nodes"]:
        flags = [f for f in ("reading", "writing", "marked") if n[f]]
        lines.append(" ".join([str(n["id"]), n["origin"], *flags]))
    lines.append("[arcs]")
    lines += [str(a) for a in cm.machine.arcs]
    table = dynamics(cm).table
    lines.append("[um]")
    lines.append(table.format(specified_only=True))
    lines.append("[um.completion]")
    lines += [f"{k[0]},{k[1]},{k[2]} -> {v[0]},{v[1]},{v[2]}"
              for k, v in sorted(table.rows.items()) if k not in table.specified]
    return "\n".join(lines) + "\n"


def cmd_compile(args) -> int:
    cfg = _load(args, need_targets=False)
    cm = _compiled(cfg)
    if args.json:
        print(json.dumps(compiled_to_dict(cm, cfg.source), indent=2))
    else:
        sys.stdout.write(format_compiled(cm, cfg.source))
    return EXIT_OK


# -- run -----------------------------------------------------------------------

def _cfg_text(cm: CompiledMachine, c: MachineConfig) -> str:
    r = cm.registers
    return f"{c.node:>4} {c.input_reg:0{r.input_width}b} {c.output_reg:0{r.output_width}b}"


def cmd_run(args) -> int:
    cfg = _load(args, need_targets=False)
    word = args.word
    if any(ch not in "01" for ch in word):
        raise UsageError(f"word must be binary: {word!r}")
    if len(word) > cfg.max_len:
        raise UsageError(f"word of length {len(word)} exceeds --max-len {cfg.max_len}")
    cm = _compiled(cfg)
    dyn = dynamics(cm)
    steps = cm.schedule.steps
    start = initial_config(cm, encode(word, cfg.max_len))
    final, trace = dyn.run(start, steps, FORWARD, trace=True)
    back, _ = dyn.run(final, steps, BACKWARD)

    out = [f"word {word_text(word)} encoded {encode(word, cfg.max_len)} T={steps}",
           "step node input output"]
    for i, c in enumerate(trace):
        tag = " read" if i < steps and dyn.reading[c.node] else ""
        out.append(f"{i:>4} {_cfg_text(cm, c)}{tag}")
    bits = read_output_trace(cm, trace)
    out.append("written " + ("".join(map(str, bits)) or "-"))
    if cm.targets is not None:
        report = run_word(cfg.machine, word)
        classical = isinstance(report, HaltsAt) and report.node in cm.targets
        out.append(f"classical {report}")
        out.append(f"marked {'yes' if final.node in cm.marked_nodes else 'no'} "
                   f"(classical {'yes' if classical else 'no'})")
    ok = back == start
    out.append(f"reverse {_cfg_text(cm, back)} {'ok' if ok else 'MISMATCH'}")
    print("\n".join(out))
    return EXIT_OK if ok else EXIT_MISMATCH


# -- query ---------------------------------------------------------------------

def _parse_mode(text: str):
    if text in ("auto", "bbht"):
        return text
    try:
        value = int(text)
    except ValueError:
        raise UsageError(f"--iterations must be auto, bbht or an integer (got {text!r})") from None
    if value < 0:
        raise UsageError("--iterations must be >= 0")
    return value


def result_to_dict(result: grover.QueryResult, cfg: RunConfig, timing_ms: float | None = None) -> dict:
    return {
        "query": {"source": cfg.source, "targets": sorted(cfg.targets), "K": cfg.max_len},
        "search": {"mode": result.mode, "iterations": result.iterations,
                   "marked_mass": result.marked_mass, "seed": result.seed},
        "samples": [{"word": s.word, "count": s.count, "marked": s.marked} for s in result.samples],
        "timing_ms": timing_ms,
    }


def result_from_dict(data: dict) -> grover.QueryResult:
    samples = [grover.Sample(s["word"], s["count"], s["marked"]) for s in data["samples"]]
    search = data["search"]
    return grover.QueryResult(samples, search["iterations"], search["marked_mass"], search["seed"],
                              search["mode"], sum(s.count for s in samples))


def format_result(result: grover.QueryResult, cfg: RunConfig, timing_ms: float | None = None) -> str:
    lines = [
        f"query source={cfg.source} targets={','.join(map(str, sorted(cfg.targets)))} K={cfg.max_len}",
        f"search mode={result.mode} iterations={result.iterations} "
        f"marked_mass={result.marked_mass:.12f} seed={result.seed} shots={result.shots}",
        "word\tcount\tmarked",
    ]
    lines += [f"{word_text(s.word)}\t{s.count}\t{'yes' if s.marked else 'no'}" for s in result.samples]
    if not result.found:
        lines.append("no solution found")
    if result.history:
        lines += [f"round {i + 1} marked_mass={m:.12f}" for i, m in enumerate(result.history)]
    if timing_ms is not None:
        lines.append(f"timing_ms {timing_ms:.3f}")
    return "\n".join(lines) + "\n"


def cmd_query(args) -> int:
    cfg = _load(args, need_targets=True)
    mode = _parse_mode(args.iterations)
    t0 = time.perf_counter()
    result = grover.search(_compiled(cfg), mode, args.shots, args.seed, record=args.trace)
    timing = (time.perf_counter() - t0) * 1000 if args.timing else None
    if args.json:
        print(json.dumps(result_to_dict(result, cfg, timing), indent=2))
    else:
        sys.stdout.write(format_result(result, cfg, timing))
    return EXIT_OK


# -- verify --------------------------------------------------------------------

def verify(cm: CompiledMachine, mode="auto") -> dict:
    """Compare the quantum marked set with brute force, and the closed form."""
    classical = halting_set(cm.source, cm.targets, cm.max_len)
    quantum = frozenset(grover.classify(cm, v)[0] for v in grover.exact_marked_values(cm))
    report = {"classical": sorted(classical, key=lambda w: (len(w), w[::-1])),
              "quantum": sorted(quantum, key=lambda w: (len(w), w[::-1])),
              "sets_equal": classical == quantum}
    if mode != "bbht":
        n, m = cm.domain_size, len(classical)
        if mode == "auto":
            rounds = grover.grover_iterations_for(n, m) if m else 0
        else:
            rounds = int(mode)
        state = grover.init_superposition(cm)
        for _ in range(rounds):
            state = grover.grover_round(state, cm)
        measured = grover.marked_mass(grover.evolve(state, cm), cm)
        predicted = grover.success_probability(n, m, rounds) if m else 0.0
        report["closed_form"] = {"N": n, "M": m, "rounds": rounds, "predicted": predicted,
                                 "measured": measured,
                                 "ok": abs(predicted - measured) <= CLOSED_FORM_TOL}
    report["ok"] = report["sets_equal"] and report.get("closed_form", {}).get("ok", True)
    return report


def cmd_verify(args) -> int:
    cfg = _load(args, need_targets=True)
    report = verify(_compiled(cfg), _parse_mode(args.iterations))
    if args.json:
        print(json.dumps(report, indent=2))
    else:
        lines = [f"classical {len(report['classical'])} words",
                 f"quantum {len(report['quantum'])} words",
                 f"sets {'PASS' if report['sets_equal'] else 'FAIL'}"]
        cf = report.get("closed_form")
        if cf:
            lines.append(f"closed-form N={cf['N']} M={cf['M']} rounds={cf['rounds']} "
                         f"predicted={cf['predicted']:.12f} measured={cf['measured']:.12f} "
                         f"{'PASS' if cf['ok'] else 'FAIL'}")
        if args.trace:
            lines += [word_text(w) for w in report["classical"]]
        lines.append(f"verify {'PASS' if report['ok'] else 'FAIL'}")
        print("\n".join(lines))
    return EXIT_OK if report["ok"] else EXIT_MISMATCH


# -- entry point ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qfsm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group(required=True)
    src.add_argument("--fsm", metavar="PATH", help="machine file")
    src.add_argument("--regex", metavar="PATTERN", help="binary regular expression")
    tgt = common.add_mutually_exclusive_group()
    tgt.add_argument("--halts-at", metavar="IDS", help="comma-separated target nodes")
    tgt.add_argument("--accepts", action="store_true", help="target the machine's accept nodes")
    common.add_argument("--max-len", type=int, default=6, metavar="K")
    common.add_argument("--json", action="store_true")
    common.add_argument("--trace", action="store_true", help="per-round detail")

    sub.add_parser("compile", parents=[common], help="emit the compiled machine").set_defaults(func=cmd_compile)

    p = sub.add_parser("run", parents=[common], help="classical forward/backward run of one word")
    p.add_argument("word", nargs="?", default="")
    p.set_defaults(func=cmd_run)

    search = argparse.ArgumentParser(add_help=False)
    search.add_argument("--iterations", default="auto", help="auto, bbht or a round count")
    search.add_argument("--shots", type=int, default=200)
    search.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("query", parents=[common, search], help="Grover search for halting inputs")
    p.add_argument("--timing", action="store_true", help="report wall-clock time")
    p.set_defaults(func=cmd_query)

    sub.add_parser("verify", parents=[common, search],
                   help="check quantum marking against brute force").set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, FsmError, CompileError, OSError, ValueError) as exc:
        print(f"qfsm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
