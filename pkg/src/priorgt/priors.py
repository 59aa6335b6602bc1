"""Prior probability vectors and the generators used by the experiment harness.

Every item i of a population carries an independent probability ``p_i`` of
being defective.  This module owns the vector of those probabilities, its two
summary statistics (expected number of defectives and total binary entropy),
and deterministic generators for the three experimental families: uniform,
linear, and exponential.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

import numpy as np

PRIOR_FAMILIES = ("uniform", "linear", "exponential")
DEFAULT_EXPONENTIAL_DECAY = 0.99


def binary_entropy(p: float) -> float:
    """Entropy in bits of a Bernoulli(p) variable, with h(0) = h(1) = 0."""
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


@dataclass(frozen=True)
class PriorVector:
    """Per-item defect probabilities, indexed by item ids 0..n-1.

    Immutable after construction; the derived statistics are cached.  Entropy
    is accumulated with ``math.fsum`` so it is exactly rounded and therefore
    independent of item order.
    """

    probs: tuple[float, ...]

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probs)
        if len(probs) < 1:
            raise ValueError("prior vector must contain at least one item")
        for i, p in enumerate(probs):
            if not (0.0 <= p <= 1.0) or math.isnan(p):
                raise ValueError(f"probability out of [0, 1] at item {i}: {p}")
        object.__setattr__(self, "probs", probs)

    @property
    def n(self) -> int:
        return len(self.probs)

    @property
    def item_ids(self) -> range:
        return range(len(self.probs))

    @cached_property
    def mu(self) -> float:
        """Expected number of defective items, sum of all p_i."""
        return math.fsum(self.probs)

    @cached_property
    def entropy_bits(self) -> float:
        """Total entropy in bits, sum of the per-item binary entropies."""
        return math.fsum(binary_entropy(p) for p in self.probs)

    @cached_property
    def max_prob(self) -> float:
        return max(self.probs)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=np.float64)

    def restricted_mu(self, items: Iterable[int]) -> float:
        return math.fsum(self.probs[i] for i in items)


def entropy(p: PriorVector) -> float:
    """Entropy of the population vector in bits."""
    return p.entropy_bits


def mu(p: PriorVector) -> float:
    """Expected number of defective items."""
    return p.mu


@dataclass(frozen=True)
class PopulationVector:
    """The true defectiveness vector (1 = defective)."""

    bits: tuple[int, ...]

    def __post_init__(self):
        bits = tuple(int(bool(b)) for b in self.bits)
        object.__setattr__(self, "bits", bits)

    @property
    def n(self) -> int:
        return len(self.bits)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.bits, dtype=bool)

    @classmethod
    def from_array(cls, arr) -> "PopulationVector":
        return cls(tuple(int(b) for b in arr))


@dataclass(frozen=True)
class RecoveredVector:
    """A decoder's estimate of the population vector."""

    bits: tuple[int, ...]

    def __post_init__(self):
        bits = tuple(int(bool(b)) for b in self.bits)
        object.__setattr__(self, "bits", bits)

    @property
    def n(self) -> int:
        return len(self.bits)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.bits, dtype=bool)

    @classmethod
    def from_array(cls, arr) -> "RecoveredVector":
        return cls(tuple(int(b) for b in arr))

    def matches(self, truth: PopulationVector) -> bool:
        return self.bits == truth.bits


def generate_prior(
    family: str,
    n: int,
    target_mu: float,
    seed: int | None = None,
    rho: float = DEFAULT_EXPONENTIAL_DECAY,
) -> PriorVector:
    """Build one of the three experimental prior families.

    uniform:      p_i = target_mu / n for every item.
    linear:       p_i proportional to i + 1, scaled to sum target_mu.
    exponential:  p_i proportional to rho**i, scaled to sum target_mu.

    Generation is fully deterministic given (family, n, target_mu, rho); the
    ``seed`` argument is accepted for interface symmetry with the samplers
    but has no effect.  Parameters that would force any entry to 1/2 or
    above are rejected.
    """
    del seed
    if family not in PRIOR_FAMILIES:
        raise ValueError(f"unknown prior family {family!r}; expected one of {PRIOR_FAMILIES}")
    if n < 1:
        raise ValueError("n must be at least 1")
    if not (0.0 < target_mu < n / 2):
        raise ValueError(f"target_mu must lie in (0, n/2); got {target_mu} with n={n}")

    if family == "uniform":
        probs = [target_mu / n] * n
    elif family == "linear":
        total = n * (n + 1) / 2
        probs = [target_mu * (i + 1) / total for i in range(n)]
    else:
        if not (0.0 < rho < 1.0):
            raise ValueError(f"exponential decay must lie in (0, 1); got {rho}")
        weights = rho ** np.arange(n)
        probs = list(target_mu * weights / weights.sum())

    worst = max(probs)
    if worst >= 0.5:
        raise ValueError(
            f"parameters produce an entry >= 1/2 (max p_i = {worst:.6g}); "
            "reduce target_mu or flatten the family"
        )
    return PriorVector(tuple(probs))


def prior_to_json_dict(p: PriorVector) -> dict:
    """Serializable form; float repr is shortest-roundtrip, so probabilities
    survive a write/read cycle bit-for-bit."""
    return {"probs": list(p.probs)}


def prior_from_json_dict(data: dict) -> PriorVector:
    """Parse either an explicit {"probs": [...]} vector or a generator spec
    {"family": ..., "n": ..., "mu": ..., "rho"?: ...}."""
    if "probs" in data:
        return PriorVector(tuple(float(x) for x in data["probs"]))
    if "family" in data:
        rho = float(data.get("rho", DEFAULT_EXPONENTIAL_DECAY))
        return generate_prior(data["family"], int(data["n"]), float(data["mu"]), rho=rho)
    raise ValueError("prior spec needs either a 'probs' list or a 'family' generator block")


def load_prior(path: str) -> PriorVector:
    with open(path, "r", encoding="utf-8") as fh:
        return prior_from_json_dict(json.load(fh))
