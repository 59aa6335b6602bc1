"""Adaptive nested test plans and their execution.

Two plan constructions are provided.  The maximum-entropy construction grows
first-stage pools whose probability of containing no defective is as close to
1/2 as possible, then splits positive pools so that each child carries
conditional probability closest to 1/2.  The source-code construction
restricts first-stage pools to keep the product of (1 - p_i) at or above 1/2
(which forces the pool's probability mass to at most 1), then builds a
balanced-weight or bottom-up-merge code tree over each pool using the item
probabilities as weights.

Plans are laminar: children partition their parent, leaves are singletons.
Execution descends only through positive pools, so a noiseless run recovers
the true population vector exactly.
"""

from __future__ import annotations

import csv
import heapq
import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .partition import Partition, build_partition, combine_for_concentration
from .priors import PopulationVector, PriorVector, RecoveredVector

CONSTRUCTIONS = ("max_entropy", "shannon_fano", "huffman")


@dataclass(frozen=True)
class PlanNode:
    """One pool in the test tree; internal nodes split into two children."""

    items: tuple[int, ...]
    left: "PlanNode | None" = None
    right: "PlanNode | None" = None

    def __post_init__(self):
        if (self.left is None) != (self.right is None):
            raise ValueError("plan nodes need either two children or none")
        if self.left is None:
            if len(self.items) != 1:
                raise ValueError(f"leaf pools must be singletons, got {self.items}")
        else:
            merged = sorted(self.left.items + self.right.items)
            if merged != sorted(self.items) or not self.left.items or not self.right.items:
                raise ValueError("children must partition their parent into nonempty pools")

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    @cached_property
    def items_array(self) -> np.ndarray:
        return np.asarray(self.items, dtype=np.int64)


@dataclass(frozen=True)
class NestedPlan:
    """A laminar family of pools ready for adaptive execution.

    ``auto_defective`` and ``auto_clear`` hold items declared without testing
    (probability exactly 1 or 0); the trees cover everything else.
    ``mu_covered`` is the prior mass over all covered items, used by the
    small-mass shortcut at execution time.
    """

    n: int
    construction: str
    root_groups: tuple[PlanNode, ...]
    auto_defective: tuple[int, ...] = ()
    auto_clear: tuple[int, ...] = ()
    counts_both_children: bool = True
    mu_covered: float = 0.0

    def covered_items(self) -> tuple[int, ...]:
        out = list(self.auto_defective) + list(self.auto_clear)
        for g in self.root_groups:
            out.extend(g.items)
        return tuple(sorted(out))


@dataclass(frozen=True)
class AdaptiveRunResult:
    recovered: RecoveredVector
    tests_used: int
    transcript: tuple[tuple[tuple[int, ...], int], ...]


def _prefix_products(p: PriorVector, items: Sequence[int]) -> np.ndarray:
    q = 1.0 - np.asarray([p.probs[i] for i in items])
    return np.cumprod(q)


def me_first_stage(p: PriorVector, items: Sequence[int] | None = None) -> list[tuple[int, ...]]:
    """Greedy first-stage pools: repeatedly take the prefix whose product of
    (1 - p_i) is closest to 1/2.

    Certain defectives (p = 1) are emitted first as their own singleton
    pools; impossible items (p = 0) are left out entirely, since they are
    cleared without testing.  Ties go to the shorter prefix.
    """
    if items is None:
        items = list(p.item_ids)
    groups = [(i,) for i in items if p.probs[i] >= 1.0]
    rest = [i for i in items if 0.0 < p.probs[i] < 1.0]
    start = 0
    while start < len(rest):
        cp = _prefix_products(p, rest[start:])
        r = int(np.argmin(np.abs(cp - 0.5))) + 1
        groups.append(tuple(rest[start : start + r]))
        start += r
    return groups


def me_split(items: Sequence[int], p: PriorVector) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Split a pool at the prefix whose conditional positive probability,
    given the pool itself is positive, lies closest to 1/2.

    Only contiguous prefixes of the pool's stored order are considered; ties
    go to the shorter prefix.  Both sides are nonempty.
    """
    if len(items) < 2:
        raise ValueError("cannot split a pool with fewer than two items")
    cp = _prefix_products(p, items)
    denom = 1.0 - cp[-1]
    if denom <= 0.0:
        # No positive-probability member; balance sizes deterministically.
        k = len(items) // 2
    else:
        ratios = (1.0 - cp[:-1]) / denom
        k = int(np.argmin(np.abs(ratios - 0.5))) + 1
    return tuple(items[:k]), tuple(items[k:])


def sf_first_stage(p: PriorVector, items: Sequence[int] | None = None) -> list[tuple[int, ...]]:
    """Greedy maximal prefixes whose product of (1 - p_i) stays at or above
    1/2, which caps each pool's probability mass at 1.

    An item that alone drops the product below 1/2 (p > 1/2) forms a
    singleton pool.  Certain defectives are emitted first as singletons and
    impossible items are left out, as in :func:`me_first_stage`.
    """
    if items is None:
        items = list(p.item_ids)
    groups = [(i,) for i in items if p.probs[i] >= 1.0]
    rest = [i for i in items if 0.0 < p.probs[i] < 1.0]
    start = 0
    while start < len(rest):
        grp = [rest[start]]
        prod = 1.0 - p.probs[rest[start]]
        k = start + 1
        while k < len(rest) and prod * (1.0 - p.probs[rest[k]]) >= 0.5:
            prod *= 1.0 - p.probs[rest[k]]
            grp.append(rest[k])
            k += 1
        groups.append(tuple(grp))
        start = k
    return groups


def _assemble_tree(
    items: Sequence[int],
    split: Callable[[Sequence[int]], tuple[Sequence[int], Sequence[int]]],
) -> PlanNode:
    """Top-down split driver that assembles the immutable tree without
    recursion, so adversarial spine-shaped plans cannot overflow the stack."""
    pools: list[tuple[int, ...]] = []
    children: list[list[int | None]] = []
    stack: list[tuple[tuple[int, ...], int, bool]] = [(tuple(items), -1, False)]
    while stack:
        pool, parent, is_right = stack.pop()
        idx = len(pools)
        pools.append(pool)
        children.append([None, None])
        if parent >= 0:
            children[parent][1 if is_right else 0] = idx
        if len(pool) > 1:
            left, right = split(pool)
            stack.append((tuple(right), idx, True))
            stack.append((tuple(left), idx, False))
    built: list[PlanNode | None] = [None] * len(pools)
    for idx in range(len(pools) - 1, -1, -1):
        li, ri = children[idx]
        built[idx] = PlanNode(
            items=pools[idx],
            left=built[li] if li is not None else None,
            right=built[ri] if ri is not None else None,
        )
    root = built[0]
    assert root is not None
    return root


def build_me_tree(items: Sequence[int], p: PriorVector) -> PlanNode:
    return _assemble_tree(items, lambda pool: me_split(pool, p))


def sf_build_tree(items: Sequence[int], p: PriorVector, kind: str) -> PlanNode:
    """Source-code tree over a pool, weights w_i = p_i.

    ``shannon_fano`` sorts by descending weight and recursively splits where
    the two sides' weights are most nearly equal; on pools whose product of
    (1 - p_i) is at least 1/2 the resulting depths stay within
    ceil(log2(1/p_i)).  ``huffman`` merges the two lightest subtrees bottom
    up, which minimizes the expected depth.  Zero-weight items sort last and
    sink to the deepest leaves under either kind; weight ties break on the
    smallest item id.
    """
    if kind == "shannon_fano":
        ordered = sorted(items, key=lambda i: (-p.probs[i], i))

        def split(pool: Sequence[int]):
            weights = [p.probs[i] for i in pool]
            total = math.fsum(weights)
            acc = 0.0
            best_k, best_d = 1, None
            for k in range(1, len(pool)):
                acc += weights[k - 1]
                d = abs(2.0 * acc - total)
                if best_d is None or d < best_d:
                    best_d, best_k = d, k
            return pool[:best_k], pool[best_k:]

        return _assemble_tree(ordered, split)

    if kind == "huffman":
        heap: list[tuple[float, int, PlanNode]] = [
            (p.probs[i], i, PlanNode(items=(i,))) for i in items
        ]
        heapq.heapify(heap)
        while len(heap) > 1:
            w1, t1, n1 = heapq.heappop(heap)
            w2, t2, n2 = heapq.heappop(heap)
            merged = PlanNode(items=tuple(sorted(n1.items + n2.items)), left=n1, right=n2)
            heapq.heappush(heap, (w1 + w2, min(t1, t2), merged))
        return heap[0][2]

    raise ValueError(f"unknown source-code kind {kind!r}")


def build_plan(
    p: PriorVector,
    construction: str,
    items: Sequence[int] | None = None,
    counts_both_children: bool = True,
    sort_ascending: bool = False,
) -> NestedPlan:
    """Build a complete nested plan over ``items`` (default: all items).

    Items are kept in the given order unless ``sort_ascending`` is set, which
    orders them by (probability, id) as the pre-partitioned path does.
    Certain and impossible items never enter the trees.
    """
    if construction not in CONSTRUCTIONS:
        raise ValueError(f"unknown construction {construction!r}; expected one of {CONSTRUCTIONS}")
    if items is None:
        items = list(p.item_ids)
    else:
        items = list(items)
    if sort_ascending:
        items.sort(key=lambda i: (p.probs[i], i))

    auto_defective = tuple(i for i in items if p.probs[i] >= 1.0)
    auto_clear = tuple(i for i in items if p.probs[i] <= 0.0)
    testable = [i for i in items if 0.0 < p.probs[i] < 1.0]

    if construction == "max_entropy":
        groups = me_first_stage(p, testable)
        trees = tuple(build_me_tree(g, p) for g in groups)
    else:
        groups = sf_first_stage(p, testable)
        trees = tuple(sf_build_tree(g, p, construction) for g in groups)

    return NestedPlan(
        n=p.n,
        construction=construction,
        root_groups=trees,
        auto_defective=auto_defective,
        auto_clear=auto_clear,
        counts_both_children=counts_both_children,
        mu_covered=p.restricted_mu(items),
    )


def _execute(plan: NestedPlan, truth: np.ndarray):
    """Depth-first descent over the plan trees against a boolean truth array.

    With ``counts_both_children`` both children of a positive pool are
    measured.  Otherwise the left child is measured first and, when it comes
    back negative, the right child is inferred positive without spending a
    test.
    """
    transcript: list[tuple[tuple[int, ...], int]] = []
    defective: list[int] = list(plan.auto_defective)

    def measure(node: PlanNode) -> bool:
        outcome = bool(truth[node.items_array].any())
        transcript.append((node.items, int(outcome)))
        return outcome

    # Stack entries: (node, needs_test).  A node pushed with needs_test=False
    # is already known positive.
    stack: list[tuple[PlanNode, bool]] = [(g, True) for g in reversed(plan.root_groups)]
    while stack:
        node, needs_test = stack.pop()
        positive = measure(node) if needs_test else True
        if not positive:
            continue
        if node.is_leaf:
            defective.append(node.items[0])
            continue
        assert node.left is not None and node.right is not None
        if plan.counts_both_children:
            stack.append((node.right, True))
            stack.append((node.left, True))
        else:
            left_positive = measure(node.left)
            if left_positive:
                stack.append((node.right, True))
                if node.left.is_leaf:
                    defective.append(node.left.items[0])
                else:
                    stack.append((node.left, False))
            else:
                stack.append((node.right, False))
    return defective, transcript


def run_adaptive(plan: NestedPlan, truth: PopulationVector, eps: float = 0.0) -> AdaptiveRunResult:
    """Execute a plan against a truth vector with noiseless OR pools.

    When ``eps`` is positive and the plan's covered prior mass is below it,
    the run returns all-zero without testing; that shortcut errs only when
    the truth is nonzero, which happens with probability at most the covered
    mass.  Pass ``eps=0`` to disable the shortcut.
    """
    if truth.n != plan.n:
        raise ValueError(f"truth length {truth.n} does not match plan universe {plan.n}")
    if eps > 0.0 and plan.mu_covered < eps:
        return AdaptiveRunResult(
            recovered=RecoveredVector((0,) * plan.n),
            tests_used=0,
            transcript=(),
        )
    truth_arr = truth.as_array()
    defective, transcript = _execute(plan, truth_arr)
    bits = [0] * plan.n
    for i in defective:
        bits[i] = 1
    return AdaptiveRunResult(
        recovered=RecoveredVector(tuple(bits)),
        tests_used=len(transcript),
        transcript=tuple(transcript),
    )


def run_prepartitioned_adaptive(
    p: PriorVector,
    eps: float,
    truth: PopulationVector,
    construction: str = "max_entropy",
    counts_both_children: bool = True,
) -> AdaptiveRunResult:
    """Partition-then-test: zero-set items are declared clear with no tests,
    under-sized bands and the high-probability tail are tested one item at a
    time, and every remaining band (after mass-combining) runs its own nested
    plan over items sorted ascending by probability.

    The small-mass shortcut applies once, to the whole vector, before
    partitioning; per-band runs never shortcut.
    """
    if truth.n != p.n:
        raise ValueError(f"truth length {truth.n} does not match prior length {p.n}")
    if eps > 0.0 and p.mu < eps:
        return AdaptiveRunResult(
            recovered=RecoveredVector((0,) * p.n),
            tests_used=0,
            transcript=(),
        )
    part: Partition = combine_for_concentration(build_partition(p, eps), p)
    truth_arr = truth.as_array()
    bits = [0] * p.n
    transcript: list[tuple[tuple[int, ...], int]] = []

    for i in part.individual_route():
        outcome = int(truth_arr[i])
        transcript.append(((i,), outcome))
        bits[i] = outcome

    for band in part.ample_bands():
        plan = build_plan(
            p,
            construction,
            items=band.items,
            counts_both_children=counts_both_children,
        )
        result = run_adaptive(plan, truth, eps=0.0)
        transcript.extend(result.transcript)
        for i in band.items:
            if result.recovered.bits[i]:
                bits[i] = 1

    return AdaptiveRunResult(
        recovered=RecoveredVector(tuple(bits)),
        tests_used=len(transcript),
        transcript=tuple(transcript),
    )


def _node_to_dict(node: PlanNode) -> dict:
    done: dict[int, dict] = {}
    stack: list[tuple[PlanNode, bool]] = [(node, False)]
    while stack:
        cur, expanded = stack.pop()
        if expanded:
            done[id(cur)] = {
                "items": list(cur.items),
                "left": done[id(cur.left)] if cur.left is not None else None,
                "right": done[id(cur.right)] if cur.right is not None else None,
            }
        else:
            stack.append((cur, True))
            if cur.left is not None:
                stack.append((cur.left, False))
            if cur.right is not None:
                stack.append((cur.right, False))
    return done[id(node)]


def _node_from_dict(data: dict) -> PlanNode:
    # Iterative two-pass mirror of _node_to_dict.
    specs: list[dict] = []
    children: list[list[int | None]] = []
    stack: list[tuple[dict, int, bool]] = [(data, -1, False)]
    while stack:
        cur, parent, is_right = stack.pop()
        idx = len(specs)
        specs.append(cur)
        children.append([None, None])
        if parent >= 0:
            children[parent][1 if is_right else 0] = idx
        if cur.get("left") is not None:
            stack.append((cur["right"], idx, True))
            stack.append((cur["left"], idx, False))
    built: list[PlanNode | None] = [None] * len(specs)
    for idx in range(len(specs) - 1, -1, -1):
        li, ri = children[idx]
        built[idx] = PlanNode(
            items=tuple(int(i) for i in specs[idx]["items"]),
            left=built[li] if li is not None else None,
            right=built[ri] if ri is not None else None,
        )
    root = built[0]
    assert root is not None
    return root


def plan_to_json_dict(plan: NestedPlan) -> dict:
    return {
        "n": plan.n,
        "construction": plan.construction,
        "counts_both_children": plan.counts_both_children,
        "auto_defective": list(plan.auto_defective),
        "auto_clear": list(plan.auto_clear),
        "mu_covered": plan.mu_covered,
        "root_groups": [_node_to_dict(g) for g in plan.root_groups],
    }


def plan_from_json_dict(data: dict) -> NestedPlan:
    return NestedPlan(
        n=int(data["n"]),
        construction=data["construction"],
        root_groups=tuple(_node_from_dict(d) for d in data["root_groups"]),
        auto_defective=tuple(int(i) for i in data["auto_defective"]),
        auto_clear=tuple(int(i) for i in data["auto_clear"]),
        counts_both_children=bool(data["counts_both_children"]),
        mu_covered=float(data["mu_covered"]),
    )


def write_plan_json(path: str, plan: NestedPlan) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(plan_to_json_dict(plan), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_transcript_csv(path: str, result: AdaptiveRunResult, trial_id: int = 0) -> None:
    """Transcript rows as (trial_id, step, subset_size, outcome)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["trial_id", "step", "subset_size", "outcome"])
        for step, (items, outcome) in enumerate(result.transcript):
            writer.writerow([trial_id, step, len(items), outcome])
