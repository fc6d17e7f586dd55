"""Exact two-angle simulation of the feedback search on the Grover plane.

Write ``|t>`` for the uniform superposition over marked states and ``|u>``
for the uniform superposition over unmarked states. The initial state is
``sin(theta)|t> + cos(theta)|u>`` with ``theta = asin(sqrt(m/N))``; call the
angle ``phi`` so the success probability is ``sin(phi)**2``.

* The Grover iterate rotates the plane by ``2*theta``: ``phi -> phi + 2*theta``.
* The flag oracle entangles the flag with the plane basis:
  ``sin(phi)|t>|1> + cos(phi)|u>|0>``. The iterate acts on the register
  only, so the branch weights are untouched and a subsequent flag
  measurement returns 1 with probability ``sin(phi)**2``.
* On outcome 1 the register collapses to ``G|t>`` (``phi = pi/2 + 2*theta``),
  on outcome 0 to ``G|u>`` (``phi = 2*theta``), up to a global sign.

Hence each fed-back iteration is memoryless: the post-measurement angle
depends only on the bit just observed. Angles are kept unreduced; every
probability goes through ``sin**2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .problem import DomainError, SearchProblem
from .statevector import MeasurementOutcome


@dataclass(frozen=True)
class SubspaceState:
    phi: float
    theta: float
    queries: int = 0

    def __post_init__(self):
        if not (0.0 < self.theta <= math.pi / 2) or not math.isfinite(self.phi):
            raise DomainError(f"invalid subspace angles phi={self.phi!r}, theta={self.theta!r}")


def from_problem(m: int, N: int) -> SubspaceState:
    if N < 2 or m < 1 or m >= N:
        raise DomainError(f"need 1 <= m < N and N >= 2, got m={m}, N={N}")
    theta = math.asin(math.sqrt(m / N))
    return SubspaceState(theta, theta)


def from_search_problem(problem: SearchProblem) -> SubspaceState:
    return from_problem(problem.m, problem.N)


def grover_rotate(state: SubspaceState, count: int = 1) -> SubspaceState:
    """Apply ``count`` Grover iterates, one query each."""
    phi = state.phi
    for _ in range(count):
        phi = phi + 2.0 * state.theta
    return replace(state, phi=phi, queries=state.queries + count)


def success_probability(state: SubspaceState) -> float:
    return math.sin(state.phi) ** 2


def flag_probability(state: SubspaceState) -> float:
    return success_probability(state)


def iterate_and_measure(
    state: SubspaceState, rng: np.random.Generator
) -> tuple[MeasurementOutcome, SubspaceState]:
    """Flag oracle, Grover iterate, flag measurement: one ``rng.random()`` draw, two queries."""
    p1 = success_probability(state)
    bit = int(rng.random() < p1)
    phi = 2.0 * state.theta + (math.pi / 2 if bit else 0.0)
    return MeasurementOutcome(bit, p1), replace(state, phi=phi, queries=state.queries + 2)


def measure_search_register(
    state: SubspaceState, problem: SearchProblem, rng: np.random.Generator
) -> int:
    """Two-draw sampling matching the statevector engine: subset, then uniform member."""
    u, v = rng.random(), rng.random()
    if u < success_probability(state):
        return problem.nth_target(min(int(v * problem.m), problem.m - 1))
    rest = problem.N - problem.m
    return problem.nth_non_target(min(int(v * rest), rest - 1))
