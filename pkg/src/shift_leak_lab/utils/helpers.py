"""
Common helper functions used throughout the lab.
"""

import hashlib
import time
from contextlib import contextmanager
from typing import Dict, Iterable, Iterator, List, Sequence


def derive_seed(base: int, *labels: object) -> int:
    """
    Derive a stable sub-seed from a base seed and labels.
    Python's hash() is salted per process, so a digest is used instead.
    """
    text = ":".join([str(base), *map(str, labels)])
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big")


def bits_to_text(bits: Iterable[int]) -> str:
    return "".join(str(int(b)) for b in bits)


def text_to_bits(text: str) -> List[int]:
    """
    Parse a bit string. Whitespace and line breaks are ignored.
    """
    bits = []
    for ch in text:
        if ch in "01":
            bits.append(int(ch))
        elif not ch.isspace():
            raise ValueError(f"invalid bit character {ch!r}")
    return bits


def reverse_shift_sequence(values: Sequence[int], length: int) -> List[int]:
    """
    Serial stream that leaves values[j] in stage j of a `length`-stage shift path
    after `length` pulses. Stage 0 is nearest the serial input.
    """
    stream = [0] * length
    for j, value in enumerate(values):
        stream[length - 1 - j] = value
    return stream


@contextmanager
def phase_timer(durations: Dict[str, float], phase: str) -> Iterator[None]:
    """Accumulate wall-clock seconds spent in a phase."""
    start = time.perf_counter()
    try:
        yield
    finally:
        durations[phase] = durations.get(phase, 0.0) + time.perf_counter() - start
