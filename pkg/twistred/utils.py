import hashlib
from typing import Any, Callable, List, Sequence, TypeVar

import numpy as np

T = TypeVar("T")


def stable_key(text: str) -> int:
    """Process-independent 32-bit integer for a string (unlike hash())."""
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:4], "little")


def rng_for(seed: int, *keys: Any) -> np.random.Generator:
    """Counter-based stream determined by (seed, *keys).

    String keys are mapped through stable_key, so a stream can be addressed by
    (seed, "scenario", "stage", index) regardless of call order or thread.
    """
    entropy = [int(seed)] + [
        stable_key(k) if isinstance(k, str) else int(k) for k in keys
    ]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def run_indexed(
    func: Callable[[int], T], count: int, threads: int = 1
) -> List[T]:
    """Evaluate func(0..count-1) into pre-allocated slots, optionally in threads."""
    results: List[Any] = [None] * count
    if threads <= 1 or count <= 1:
        for i in range(count):
            results[i] = func(i)
        return results

    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=threads) as pool:
        for i, value in zip(range(count), pool.map(func, range(count))):
            results[i] = value
    return results


def complex_pairs(values: Sequence[complex]) -> List[List[float]]:
    """JSON-friendly [re, im] pairs."""
    return [[float(np.real(v)), float(np.imag(v))] for v in values]

