"""Deterministic random streams and parameter-binding samplers.

A single user-facing seed fans out into independent, label-addressed
streams so that adding one more draw in one place never shifts any other
stream.
"""

from __future__ import annotations

import zlib
from fractions import Fraction

import numpy as np


def spawn_rng(seed: int, *labels: object) -> np.random.Generator:
    """Independent generator for (seed, labels); stable across platforms."""
    entropy = [int(seed) & 0xFFFFFFFF]
    entropy += [zlib.crc32(str(label).encode("utf8")) for label in labels]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def random_binding(
    param_ids,
    rng: np.random.Generator,
    low: float = 0.25,
    high: float = 2.0,
    signed: bool = True,
) -> dict[str, float]:
    """Magnitudes uniform in [low, high], random signs; never zero."""
    out = {}
    for pid in param_ids:
        mag = float(rng.uniform(low, high))
        sign = int(rng.integers(0, 2)) * 2 - 1 if signed else 1
        out[pid] = sign * mag
    return out


def rational_binding(
    param_ids,
    rng: np.random.Generator,
    denominator: int = 16,
    signed: bool = True,
) -> dict[str, Fraction]:
    """Exact-rational bindings with magnitudes in [1/4, 2]."""
    out = {}
    lo = denominator // 4
    hi = 2 * denominator
    for pid in param_ids:
        num = int(rng.integers(lo, hi + 1))
        sign = int(rng.integers(0, 2)) * 2 - 1 if signed else 1
        out[pid] = Fraction(sign * num, denominator)
    return out
