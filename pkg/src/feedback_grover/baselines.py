"""Reference searchers: known-m Grover, the randomized unknown-m schedule, classical sampling."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import subspace as ss
from .analytic import optimal_rotation_count
from .problem import DomainError, SearchProblem

ALGORITHMS = ("canonical", "bbht", "classical")


@dataclass
class BaselineResult:
    algorithm: str
    found_index: int | None
    oracle_queries: int
    iterations_or_samples: int
    success: bool
    attempts: int = 1


def _measure_after(problem: SearchProblem, r: int, rng: np.random.Generator) -> tuple[int, bool]:
    """r iterates from uniform, measure, verify. Charges r + 1 queries."""
    state = ss.grover_rotate(ss.from_search_problem(problem), r)
    problem.charge(r)
    index = ss.measure_search_register(state, problem, rng)
    return index, bool(problem.oracle(index))


def canonical_grover(problem: SearchProblem, m_known: int, rng: np.random.Generator,
                     max_attempts: int = 64) -> BaselineResult:
    """Grover with the optimal iterate count for a known number of targets."""
    if m_known != problem.m:
        raise DomainError(f"m_known={m_known} does not match |targets|={problem.m}")
    r = optimal_rotation_count(problem.m / problem.N)
    start = problem.query_counter
    for attempt in range(1, max_attempts + 1):
        index, ok = _measure_after(problem, r, rng)
        if ok:
            break
    return BaselineResult("canonical", index if ok else None, problem.query_counter - start,
                          r * attempt, ok, attempt)


def bbht_search(problem: SearchProblem, rng: np.random.Generator, growth: float = 6 / 5,
                max_rounds: int = 10_000) -> BaselineResult:
    """Unknown-m search with a geometrically growing random iterate range.

    Each round draws ``r`` uniformly from ``{0, ..., ceil(M) - 1}``; after a
    failed round ``M`` grows by ``growth`` up to ``ceil(sqrt(N))``.
    """
    if not growth > 1:
        raise DomainError("growth must exceed 1")
    limit = math.ceil(math.sqrt(problem.N))
    M = 1.0
    start = problem.query_counter
    total_r = 0
    ok = False
    index = None
    for rnd in range(1, max_rounds + 1):
        r = int(rng.integers(0, max(1, math.ceil(M))))
        total_r += r
        index, ok = _measure_after(problem, r, rng)
        if ok:
            break
        M = min(growth * M, limit)
    return BaselineResult("bbht", index if ok else None, problem.query_counter - start,
                          total_r, ok, rnd)


def classical_sampling(problem: SearchProblem, rng: np.random.Generator,
                       cap: int | None = None, chunk: int = 4096) -> BaselineResult:
    """Uniform sampling with replacement, one query per sample, up to ``10 N`` samples."""
    cap = 10 * problem.N if cap is None else cap
    taken = 0
    while taken < cap:
        size = min(chunk, cap - taken)
        xs = rng.integers(0, problem.N, size=size)
        hits = problem.mask(xs)
        if hits.any():
            j = int(np.argmax(hits))
            taken += j + 1
            problem.charge(j + 1)
            return BaselineResult("classical", int(xs[j]), taken, taken, True)
        taken += size
        problem.charge(size)
    return BaselineResult("classical", None, taken, taken, False)


def classical_expected_queries(N: int, m: int) -> tuple[float, float]:
    """Mean queries with replacement (``N/m``) and without replacement (``(N+1)/(m+1)``)."""
    return N / m, (N + 1) / (m + 1)
