"""Full Hilbert-space simulation of the feedback search circuit.

The stored register is the ``n``-qubit search register plus one flag qubit.
The flag is the most significant index bit, so ``amplitudes.reshape(2, N)``
gives the flag-0 and flag-1 branches as contiguous rows.

The kickback ancilla used inside the Grover iterate is not stored: the
marked-state phase flip is applied directly, which is exactly what an
ancilla prepared in ``|->`` produces. :func:`apply_grover_iterate_kickback`
builds the ancilla explicitly and exists to check that equivalence.

All operations mutate the state in place and return it.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problem import ConfigurationError, SearchProblem

DEFAULT_MAX_QUBITS = 24
NORM_TOL = 1e-12


@dataclass(frozen=True)
class MeasurementOutcome:
    bit: int
    probability_of_one: float


@dataclass
class QuantumState:
    amplitudes: np.ndarray
    n: int

    @property
    def N(self) -> int:
        return 1 << self.n

    @property
    def branches(self) -> np.ndarray:
        """``(2, N)`` view: row 0 is the flag-0 branch, row 1 flag-1."""
        return self.amplitudes.reshape(2, self.N)

    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.amplitudes, self.amplitudes).real))

    def copy(self) -> "QuantumState":
        return QuantumState(self.amplitudes.copy(), self.n)

    def check(self, tol: float = NORM_TOL) -> None:
        if self.amplitudes.shape != (2 << self.n,):
            raise AssertionError("amplitude vector has wrong length")
        if not np.all(np.isfinite(self.amplitudes)):
            raise AssertionError("non-finite amplitude")
        if abs(self.norm() - 1.0) > tol:
            raise AssertionError(f"state not normalised: {self.norm()!r}")


def init_uniform(problem: SearchProblem, max_qubits: int = DEFAULT_MAX_QUBITS) -> QuantumState:
    """Uniform superposition over the search register, flag in ``|0>``."""
    n = problem.n
    if n > max_qubits:
        raise ConfigurationError(
            f"n={n} exceeds the statevector memory cap of {max_qubits} qubits; "
            "use the compact engine"
        )
    amps = np.zeros(2 << n, dtype=np.complex128)
    amps[: 1 << n] = 2.0 ** (-n / 2)
    return QuantumState(amps, n)


def apply_flag_oracle(state: QuantumState, problem: SearchProblem) -> QuantumState:
    """``|x>|b> -> |x>|b xor Or(x)>``; one oracle query."""
    problem.charge()
    b = state.branches
    idx = problem.index()
    b[0, idx], b[1, idx] = b[1, idx].copy(), b[0, idx].copy()
    return state


def _diffuse(branches: np.ndarray) -> None:
    # Inversion about the mean, independently on each flag branch.
    mean = branches.mean(axis=1, keepdims=True)
    np.subtract(2.0 * mean, branches, out=branches)


def apply_grover_iterate(state: QuantumState, problem: SearchProblem) -> QuantumState:
    """Marked-state phase flip (one query) then diffusion on the search register."""
    problem.charge()
    b = state.branches
    b[:, problem.index()] *= -1.0
    _diffuse(b)
    return state


def apply_grover_iterate_kickback(state: QuantumState, problem: SearchProblem) -> QuantumState:
    """Grover iterate with an explicit phase-kickback qubit prepared in ``|->``.

    The ancilla is appended as a new least significant axis, the XOR oracle
    is applied to it, diffusion acts on the search register, and the
    (still unentangled) ancilla is projected back out.
    """
    problem.charge()
    minus = np.array([1.0, -1.0]) / np.sqrt(2.0)
    ext = state.branches[:, :, None] * minus  # (flag, x, ancilla)
    idx = problem.index()
    ext[:, idx, :] = ext[:, idx, ::-1].copy()
    mean = ext.mean(axis=1, keepdims=True)
    ext = 2.0 * mean - ext
    # Contract the ancilla with <-| to recover the register amplitudes.
    state.branches[...] = ext @ minus
    return state


def branch_probability(state: QuantumState, bit: int) -> float:
    row = state.branches[bit]
    return float(np.vdot(row, row).real)


def measure_flag(state: QuantumState, rng: np.random.Generator) -> tuple[MeasurementOutcome, QuantumState]:
    """Projective measurement of the flag; collapses and renormalises the state.

    Consumes exactly one ``rng.random()`` draw: the outcome is 1 iff the draw
    is below the flag-1 branch weight.
    """
    p1 = branch_probability(state, 1)
    p1 = min(max(p1 / (p1 + branch_probability(state, 0)), 0.0), 1.0)
    bit = int(rng.random() < p1)
    b = state.branches
    b[1 - bit] = 0.0
    # Renormalise from the surviving branch itself to absorb drift.
    b[bit] /= np.sqrt(np.vdot(b[bit], b[bit]).real)
    return MeasurementOutcome(bit, p1), state


def reset_flag(state: QuantumState, last_outcome: MeasurementOutcome, tol: float = 1e-12) -> QuantumState:
    """Return the flag to ``|0>`` with a classically controlled X."""
    b = state.branches
    other = b[1 - last_outcome.bit]
    assert float(np.vdot(other, other).real) <= tol, "flag is not in the recorded basis state"
    if last_outcome.bit == 1:
        b[0] = b[1]
        b[1] = 0.0
    return state


def marginal_probabilities(state: QuantumState) -> np.ndarray:
    return (np.abs(state.branches) ** 2).sum(axis=0)


def success_probability(state: QuantumState, problem: SearchProblem) -> float:
    """Weight on marked states, both flag branches (no query charged)."""
    return float(marginal_probabilities(state)[problem.index()].sum())


def measure_search_register(
    state: QuantumState, problem: SearchProblem, rng: np.random.Generator
) -> int:
    """Sample a basis index from the flag-marginalised distribution.

    Sampling is two-stage with two ``rng.random()`` draws: the first decides
    marked vs unmarked from the exact subset weight, the second inverts the
    conditional CDF inside the chosen subset. The compact engine uses the same
    protocol, which keeps the two engines draw-for-draw aligned.
    """
    probs = marginal_probabilities(state)
    mask = np.zeros(state.N, dtype=bool)
    mask[problem.index()] = True
    p_t = float(probs[mask].sum())
    p_t /= float(probs.sum())
    u, v = rng.random(), rng.random()
    in_targets = u < p_t
    subset = np.flatnonzero(mask if in_targets else ~mask)
    cdf = np.cumsum(probs[subset])
    if cdf[-1] <= 0.0:
        # Subset has zero weight only if u hit it with probability zero.
        return int(subset[min(int(v * subset.size), subset.size - 1)])
    k = int(np.searchsorted(cdf / cdf[-1], v, side="right"))
    return int(subset[min(k, subset.size - 1)])


def plane_residual(state: QuantumState, problem: SearchProblem) -> float:
    """Norm of the part of each flag branch outside span{uniform-marked, uniform-unmarked}."""
    mask = np.zeros(state.N, dtype=bool)
    mask[problem.index()] = True
    res = 0.0
    for row in state.branches:
        r = row.copy()
        r[mask] -= row[mask].mean()
        r[~mask] -= row[~mask].mean()
        res += float(np.vdot(r, r).real)
    return float(np.sqrt(res))
