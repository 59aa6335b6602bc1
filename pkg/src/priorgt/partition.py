"""Pre-partitioning of a prior vector into probability bands.

Items are sorted by probability and trimmed into three regions: a zero set
(probability at most eps/2n, declared non-defective without testing), a tail
(probability at least 1/2, tested individually), and a middle covered by
bands with repeatedly squared boundaries 1/2, 1/4, 1/16, ...  Squaring makes
every band well balanced: for members i, j of one band, p_i**2 <= p_j.  Bands
with fewer than ``gamma`` members lack the size needed for group-level
guarantees and are routed to individual testing as well.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .priors import PriorVector


def measure_factor(n: int, eps: float) -> int:
    """Granularity factor ceil(log2(log2(2n/eps))), at least 1.

    Controls both the number of probability bands and the minimum band size
    admitted to group testing.  Requires 2n/eps > 2 so the double logarithm
    is positive.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    ratio = 2.0 * n / eps
    if ratio <= 2.0:
        raise ValueError(f"2n/eps must exceed 2 for the double log to be positive (got {ratio})")
    return max(1, math.ceil(math.log2(math.log2(ratio))))


def is_skewed(p: PriorVector, eps: float) -> bool:
    """True when the entropy budget is too small for concentration guarantees.

    A prior is skewed when H(X) <= max(2*mu, gamma**2); the pre-partitioned
    guarantees only hold on non-skewed inputs.  Callers may still run every
    algorithm on skewed priors; bound reports mark themselves inapplicable.
    """
    gamma = measure_factor(p.n, eps)
    return p.entropy_bits <= max(2.0 * p.mu, float(gamma * gamma))


@dataclass(frozen=True)
class Band:
    """One middle subset: items whose probability falls in [lo, hi)."""

    lo: float
    hi: float
    items: tuple[int, ...]

    @property
    def size(self) -> int:
        return len(self.items)


@dataclass(frozen=True)
class Partition:
    """Ordered classification of items into zero / band / individual routes.

    ``num_combined`` and ``concentration_void`` are populated by
    :func:`combine_for_concentration`.
    """

    n: int
    eps: float
    gamma: int
    order: tuple[int, ...]
    zero_items: tuple[int, ...]
    bands: tuple[Band, ...]
    tail_items: tuple[int, ...]
    num_combined: int | None = None
    concentration_void: bool = False

    @property
    def num_subsets(self) -> int:
        """Total subset count: zero set + bands + tail."""
        return len(self.bands) + 2

    def ample_bands(self) -> tuple[Band, ...]:
        return tuple(b for b in self.bands if b.size >= self.gamma)

    def not_ample_bands(self) -> tuple[Band, ...]:
        return tuple(b for b in self.bands if b.size < self.gamma)

    def individual_route(self) -> tuple[int, ...]:
        """Items tested one at a time: under-sized bands then the tail."""
        route: list[int] = []
        for band in self.not_ample_bands():
            route.extend(band.items)
        route.extend(self.tail_items)
        return tuple(route)

    def to_json_dict(self) -> dict:
        subsets: list[dict] = [{"kind": "zero", "items": list(self.zero_items)}]
        for band in self.bands:
            subsets.append(
                {
                    "kind": "group",
                    "items": list(band.items),
                    "lo": band.lo,
                    "hi": band.hi,
                    "ample": band.size >= self.gamma,
                }
            )
        subsets.append({"kind": "individual", "items": list(self.tail_items)})
        out = {"n": self.n, "eps": self.eps, "gamma": self.gamma, "subsets": subsets}
        if self.num_combined is not None:
            out["num_combined"] = self.num_combined
            out["concentration_void"] = self.concentration_void
        return out


def band_boundaries(n: int, eps: float) -> list[float]:
    """Descending boundaries 1/2, 1/4, 1/16, ... down to the first value at or
    below eps/2n.  Squaring powers of two is exact in floating point."""
    lo_cut = eps / (2.0 * n)
    bounds = [0.5]
    while bounds[-1] > lo_cut:
        bounds.append(bounds[-1] * bounds[-1])
    return bounds


def build_partition(p: PriorVector, eps: float) -> Partition:
    """Sort, trim, and band a prior vector.

    Items with probability exactly on a band boundary join the band above it;
    probability exactly 0 lands in the zero set and exactly 1 in the tail.
    Sorting is stable on (probability, item id) so the result is
    deterministic.
    """
    n = p.n
    gamma = measure_factor(n, eps)
    lo_cut = eps / (2.0 * n)
    order = tuple(sorted(range(n), key=lambda i: (p.probs[i], i)))

    zero_items: list[int] = []
    tail_items: list[int] = []
    middle: list[int] = []
    for i in order:
        q = p.probs[i]
        if q <= lo_cut:
            zero_items.append(i)
        elif q >= 0.5:
            tail_items.append(i)
        else:
            middle.append(i)

    bounds = band_boundaries(n, eps)
    # Ascending band ranges [lo, hi); the lowest is clipped at eps/2n.
    ranges = [
        (max(bounds[k + 1], lo_cut), bounds[k])
        for k in reversed(range(len(bounds) - 1))
    ]
    bands: list[Band] = []
    idx = 0
    for lo, hi in ranges:
        members: list[int] = []
        while idx < len(middle) and p.probs[middle[idx]] < hi:
            members.append(middle[idx])
            idx += 1
        if members:
            bands.append(Band(lo=lo, hi=hi, items=tuple(members)))

    return Partition(
        n=n,
        eps=eps,
        gamma=gamma,
        order=order,
        zero_items=tuple(zero_items),
        bands=tuple(bands),
        tail_items=tuple(tail_items),
    )


def combine_for_concentration(part: Partition, p: PriorVector) -> Partition:
    """Merge leading ample bands until their probability mass reaches 1/2.

    Bands are consumed in ascending probability order.  ``num_combined``
    records how many were folded into the merged band.  If the ample mass
    never reaches 1/2 the partition is returned structurally unchanged with
    ``concentration_void`` set; the concentration guarantee is then
    unavailable.  The merged band is not re-checked for balance: guarantees
    fall back on the band count staying below the measure factor.
    """
    ample = [b for b in part.bands if b.size >= part.gamma]
    if not ample:
        return replace(part, num_combined=0, concentration_void=True)

    cumulative = 0.0
    taken = 0
    for band in ample:
        cumulative += p.restricted_mu(band.items)
        taken += 1
        if cumulative >= 0.5:
            break
    else:
        return replace(part, num_combined=taken, concentration_void=True)

    if taken == 1:
        return replace(part, num_combined=1, concentration_void=False)

    merged_members = tuple(i for band in ample[:taken] for i in band.items)
    merged = Band(lo=ample[0].lo, hi=ample[taken - 1].hi, items=merged_members)
    absorbed = set(id(b) for b in ample[:taken])
    new_bands: list[Band] = []
    placed = False
    for band in part.bands:
        if id(band) in absorbed:
            if not placed:
                new_bands.append(merged)
                placed = True
            continue
        new_bands.append(band)
    return replace(
        part,
        bands=tuple(new_bands),
        num_combined=taken,
        concentration_void=False,
    )
