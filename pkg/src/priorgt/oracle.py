"""Brute-force ground truth for the small-scale claims.

Everything here is deliberately exhaustive or exact: full truth-vector
enumeration, exact rational arithmetic, and the complete inclusion-exclusion
sum for the collection stopping time.  Size guards keep each check cheap
enough for CI.  The test suite trusts these verifiers over the production
algorithms wherever both can answer.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .adaptive import NestedPlan, run_adaptive
from .nonadaptive import TestMatrix, run_nonadaptive
from .priors import PopulationVector, PriorVector

MAX_STOPPING_TIME_ITEMS = 20
MAX_PLAN_ITEMS = 12
MAX_MATRIX_ITEMS = 15
MAX_EXACT_RATIONAL_N = 25


def check_lemma1(ps: Sequence[float]) -> bool:
    """Instance check of the implication: if prod(1 - p_i) >= 1/2 then
    sum(p_i) <= 1.  Vacuously true when the premise fails."""
    for p in ps:
        if not (0.0 < p < 1.0):
            raise ValueError("entries must lie strictly between 0 and 1")
    premise = math.prod(1.0 - p for p in ps) >= 0.5
    if not premise:
        return True
    return math.fsum(ps) <= 1.0


def check_lemma2(n: int) -> tuple[Fraction, Fraction]:
    """Both sides of the alternating-binomial harmonic identity
    sum_r (-1)**(r-1) C(n,r)/r == sum_r 1/r, in exact rationals."""
    if not (1 <= n <= MAX_EXACT_RATIONAL_N):
        raise ValueError(f"n must lie in 1..{MAX_EXACT_RATIONAL_N}")
    lhs = Fraction(0)
    for r in range(1, n + 1):
        term = Fraction(math.comb(n, r), r)
        lhs += term if (r - 1) % 2 == 0 else -term
    rhs = sum((Fraction(1, r) for r in range(1, n + 1)), Fraction(0))
    return lhs, rhs


def exact_stopping_time(p_hat: Sequence[float]) -> float:
    """Expected number of draws to see every item at least once, by the full
    inclusion-exclusion sum over nonempty subsets.

    Subset sums are built by doubling and the alternating series is summed
    exactly with fsum, so only the per-term divisions round.  Zero entries
    are rejected: an item that is never drawn has infinite collection time.
    """
    weights = [float(w) for w in p_hat]
    n = len(weights)
    if n < 1:
        raise ValueError("need at least one item")
    if n > MAX_STOPPING_TIME_ITEMS:
        raise ValueError(f"subset enumeration capped at {MAX_STOPPING_TIME_ITEMS} items")
    if any(w <= 0.0 for w in weights):
        raise ValueError("zero-probability entries make the stopping time infinite")
    if abs(math.fsum(weights) - 1.0) > 1e-9:
        raise ValueError("sampling probabilities must sum to 1")

    size = 1 << n
    totals = np.zeros(size)
    parity = np.zeros(size, dtype=np.int8)
    for i in range(n):
        lo = 1 << i
        totals[lo : 2 * lo] = totals[:lo] + weights[i]
        parity[lo : 2 * lo] = parity[:lo] ^ 1
    signs = np.where(parity[1:] == 1, 1.0, -1.0)
    return math.fsum((signs / totals[1:]).tolist())


@dataclass(frozen=True)
class ExactExpectation:
    value: float
    terms: int


def _truth_weights(p: PriorVector) -> np.ndarray:
    """Probability of every truth vector, indexed by bitmask (bit i = item i)."""
    weights = np.ones(1)
    for q in p.probs:
        weights = np.concatenate([weights * (1.0 - q), weights * q])
    return weights


def _mask_truth(mask: int, n: int) -> PopulationVector:
    return PopulationVector(tuple((mask >> i) & 1 for i in range(n)))


def exact_expected_tests(plan: NestedPlan, p: PriorVector) -> ExactExpectation:
    """Exact expected test count of a plan: run the executor on every truth
    vector and weight by the prior."""
    n = p.n
    if plan.n != n:
        raise ValueError("plan and prior disagree on the universe size")
    if n > MAX_PLAN_ITEMS:
        raise ValueError(f"exhaustive enumeration capped at {MAX_PLAN_ITEMS} items")
    weights = _truth_weights(p)
    total = 0.0
    contributions = []
    for mask in range(1 << n):
        result = run_adaptive(plan, _mask_truth(mask, n), eps=0.0)
        contributions.append(weights[mask] * result.tests_used)
    total = math.fsum(contributions)
    return ExactExpectation(value=total, terms=1 << n)


@dataclass(frozen=True)
class DecodeCheck:
    passed: bool
    error_probability: float | None = None

    def __bool__(self) -> bool:
        return self.passed


def exhaustive_decode_check(target: NestedPlan | TestMatrix, p: PriorVector) -> DecodeCheck:
    """Full truth-vector decode audit.

    For a plan: exact recovery must hold for every truth vector (shortcut
    disabled); requires every covered item to sit in a tree, so priors with
    entries exactly 0 or 1 are out of scope.  For a matrix: recovery must
    never miss a defective outside the pre-cleared set, and the exact
    full-vector error probability is returned.
    """
    n = p.n
    if isinstance(target, NestedPlan):
        if n > MAX_PLAN_ITEMS:
            raise ValueError(f"plan enumeration capped at {MAX_PLAN_ITEMS} items")
        for mask in range(1 << n):
            truth = _mask_truth(mask, n)
            result = run_adaptive(target, truth, eps=0.0)
            if not result.recovered.matches(truth):
                return DecodeCheck(passed=False)
        return DecodeCheck(passed=True)

    if isinstance(target, TestMatrix):
        if n > MAX_MATRIX_ITEMS:
            raise ValueError(f"matrix enumeration capped at {MAX_MATRIX_ITEMS} items")
        weights = _truth_weights(p)
        err_terms = []
        for mask in range(1 << n):
            truth = _mask_truth(mask, n)
            _, recovered = run_nonadaptive(target, truth)
            for i in range(n):
                if truth.bits[i] and not recovered.bits[i] and i not in target.zero_assigned:
                    return DecodeCheck(passed=False)
            if not recovered.matches(truth):
                err_terms.append(weights[mask])
        return DecodeCheck(passed=True, error_probability=math.fsum(err_terms))

    raise TypeError(f"expected a NestedPlan or TestMatrix, got {type(target).__name__}")


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def run_all_checks(seed: int = 20240801) -> list[CheckResult]:
    """The oracle battery used by the command-line front end."""
    from .adaptive import build_plan
    from .bounds import adaptive_expected_upper
    from .nonadaptive import build_cca_matrix
    from .priors import generate_prior

    rng = np.random.default_rng(seed)
    results: list[CheckResult] = []

    def record(name: str, fn) -> None:
        start = time.perf_counter()
        try:
            passed, detail = fn()
        except Exception as exc:  # a crashed check is a failed check
            passed, detail = False, f"raised {type(exc).__name__}: {exc}"
        results.append(CheckResult(name, passed, detail, time.perf_counter() - start))

    def lemma1_audit():
        bad = 0
        for _ in range(10_000):
            k = int(rng.integers(1, 9))
            ps = rng.uniform(0.001, 0.6, size=k)
            if not check_lemma1(ps):
                bad += 1
        return bad == 0, f"{bad} violations in 10000 random instances"

    def lemma2_range():
        for n in range(1, 21):
            lhs, rhs = check_lemma2(n)
            if lhs != rhs:
                return False, f"mismatch at n={n}"
        return True, "exact equality for n=1..20"

    def stopping_identity():
        for n in range(1, 13):
            value = exact_stopping_time([1.0 / n] * n)
            harmonic = n * math.fsum(1.0 / r for r in range(1, n + 1))
            if abs(value - harmonic) > 1e-9:
                return False, f"identity off by {abs(value - harmonic):.3g} at n={n}"
        return True, "matches n * H_n to 1e-9 for n=1..12"

    def expectation_bound():
        for _ in range(10):
            k = int(rng.integers(4, 11))
            p = PriorVector(tuple(rng.uniform(0.05, 0.45, size=k)))
            for construction in ("max_entropy", "huffman"):
                plan = build_plan(p, construction)
                et = exact_expected_tests(plan, p).value
                if et > adaptive_expected_upper(p):
                    return False, f"E[T]={et:.4f} exceeds bound for n={k} ({construction})"
        return True, "expected tests within 2H+2mu on 10 random priors"

    def decode_exactness():
        for _ in range(5):
            k = int(rng.integers(2, 11))
            p = PriorVector(tuple(rng.uniform(0.02, 0.98, size=k)))
            plan = build_plan(p, "max_entropy")
            if not exhaustive_decode_check(plan, p):
                return False, f"adaptive decode mismatch at n={k}"
        p = generate_prior("uniform", 10, 1.0)
        m = build_cca_matrix(p, t=5, g=4, seed=seed)
        check = exhaustive_decode_check(m, p)
        if not check:
            return False, "matrix decode missed a defective"
        return True, "adaptive exact; matrix one-sided"

    record("lemma1_randomized_audit", lemma1_audit)
    record("lemma2_exact_rational", lemma2_range)
    record("stopping_time_harmonic_identity", stopping_identity)
    record("expected_tests_bound", expectation_bound)
    record("exhaustive_decode", decode_exactness)
    return results
