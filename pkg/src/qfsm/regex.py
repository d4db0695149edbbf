"""Binary regular expressions compiled to deterministic machines.

Grammar::

    alt  := cat ('|' cat)*
    cat  := rep*
    rep  := atom '*'?
    atom := '0' | '1' | '(' alt ')'

An empty ``cat`` denotes the empty word.  The result is a partial DFA: the
empty subset is never materialised, so rejected continuations are missing
transitions and the machine gets stuck on them.
"""
from __future__ import annotations

from .fsm import Arc, Fsm, FsmError, Symbol


class RegexError(FsmError):
    pass


class _Nfa:
    def __init__(self):
        self.eps: list[list[int]] = []
        self.sym: list[dict[int, list[int]]] = []

    def state(self) -> int:
        self.eps.append([])
        self.sym.append({})
        return len(self.eps) - 1


class _Parser:
    # each fragment is an (entry, exit) pair of NFA states

    def __init__(self, pattern: str, nfa: _Nfa):
        self.s = pattern
        self.i = 0
        self.nfa = nfa

    def peek(self):
        return self.s[self.i] if self.i < len(self.s) else None

    def parse(self) -> tuple[int, int]:
        frag = self.alt()
        if self.i != len(self.s):
            c = self.s[self.i]
            if c == ")":
                raise RegexError(f"unbalanced ')' at position {self.i}")
            raise RegexError(f"unexpected {c!r} at position {self.i}")
        return frag

    def alt(self):
        frags = [self.cat()]
        while self.peek() == "|":
            self.i += 1
            frags.append(self.cat())
        if len(frags) == 1:
            return frags[0]
        a, b = self.nfa.state(), self.nfa.state()
        for x, y in frags:
            self.nfa.eps[a].append(x)
            self.nfa.eps[y].append(b)
        return a, b

    def cat(self):
        a = b = self.nfa.state()
        while self.peek() not in (None, "|", ")"):
            x, y = self.rep()
            self.nfa.eps[b].append(x)
            b = y
        return a, b

    def rep(self):
        x, y = self.atom()
        if self.peek() == "*":
            self.i += 1
            a, b = self.nfa.state(), self.nfa.state()
            self.nfa.eps[a] += [x, b]
            self.nfa.eps[y] += [x, b]
            x, y = a, b
        if self.peek() == "*":
            raise RegexError(f"dangling '*' at position {self.i}")
        return x, y

    def atom(self):
        c = self.peek()
        if c in ("0", "1"):
            self.i += 1
            a, b = self.nfa.state(), self.nfa.state()
            self.nfa.sym[a].setdefault(int(c), []).append(b)
            return a, b
        if c == "(":
            self.i += 1
            frag = self.alt()
            if self.peek() != ")":
                raise RegexError("unbalanced '(': missing ')'")
            self.i += 1
            return frag
        if c == "*":
            raise RegexError(f"dangling '*' at position {self.i}")
        raise RegexError(f"unexpected {c!r} at position {self.i}")


def _closure(nfa: _Nfa, states) -> frozenset[int]:
    seen = set(states)
    stack = list(states)
    while stack:
        for t in nfa.eps[stack.pop()]:
            if t not in seen:
                seen.add(t)
                stack.append(t)
    return frozenset(seen)


def parse_regex(pattern: str) -> Fsm:
    """Compile ``pattern`` to a DFA whose accept set recognises its language."""
    nfa = _Nfa()
    entry, final = _Parser(pattern, nfa).parse()
    start = _closure(nfa, [entry])
    ids = {start: 0}
    order = [start]
    arcs = []
    for subset in order:  # grows while iterating: BFS over subsets
        for bit in (0, 1):
            moved = [t for s in subset for t in nfa.sym[s].get(bit, ())]
            if not moved:
                continue
            nxt = _closure(nfa, moved)
            if nxt not in ids:
                ids[nxt] = len(order)
                order.append(nxt)
            arcs.append(Arc(ids[subset], Symbol(bit), ids[nxt]))
    accepts = frozenset(i for i, s in enumerate(order) if final in s)
    return Fsm(len(order), tuple(arcs), 0, accepts)
