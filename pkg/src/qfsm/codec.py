"""Marker-prefixed integer encoding of bounded-length words.

A word ``a`` of length ``k <= K`` becomes ``sum(a[i] << i) + (1 << k)``: the
high-order 1 marks where the word ends.  Values fit in ``K + 1`` bits and
cover ``[1, 2**(K+1))`` exactly once; 0 encodes nothing.
"""
from __future__ import annotations

from dataclasses import dataclass

MAX_LEN = 16


def encode(word: str, max_len: int) -> int:
    if len(word) > max_len:
        raise ValueError(f"word of length {len(word)} exceeds max length {max_len}")
    value = 1 << len(word)
    for i, bit in enumerate(word):
        if bit == "1":
            value |= 1 << i
        elif bit != "0":
            raise ValueError(f"not a binary word: {word!r}")
    return value


def decode(value: int, max_len: int) -> str:
    if value <= 0:
        raise ValueError("no marker: value 0 encodes no word")
    if value >= 1 << (max_len + 1):
        raise ValueError(f"value {value} does not fit in {max_len + 1} bits")
    k = value.bit_length() - 1
    return "".join("1" if value >> i & 1 else "0" for i in range(k))


def initial_register(value: int) -> int:
    """Input register image: the encoding shifted left so bit 0 starts clear."""
    return value << 1


def enumerate_inputs(max_len: int) -> list[tuple[int, str]]:
    if max_len > MAX_LEN:
        raise ValueError(f"max length {max_len} exceeds limit {MAX_LEN}")
    return [(v, decode(v, max_len)) for v in range(1, 1 << (max_len + 1))]


@dataclass(frozen=True)
class RegisterSpec:
    input_width: int
    output_width: int
    node_width: int

    @property
    def total_width(self) -> int:
        return self.input_width + self.output_width + self.node_width


def node_width_for(node_count: int) -> int:
    return max(node_count - 1, 0).bit_length()
