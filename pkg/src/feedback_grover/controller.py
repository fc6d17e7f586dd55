"""Measurement-feedback search loop with flag counters and a ratio stopping rule.

Each loop iteration resets the flag, writes the oracle bit into it, applies
one Grover iterate and measures the flag, incrementing ``c0`` or ``c1``.
Once ``c1 / c0`` reaches ``set_val`` the search register is measured and the
outcome checked with one classical oracle call; failed attempts restart
from scratch with fresh counters.

Two dynamics are supported:

``physical``
    The flag measurement collapses the entangled register (genuine
    projective measurement).
``idealized``
    The flag bit is drawn with the undisturbed success probability after
    ``k`` iterates and the rotation carries on unaffected. This is the
    process whose expected counts the analytic ratio model describes.

Either dynamics runs over the ``full`` statevector engine or the ``compact``
plane engine; with the step kernel both consume the random stream
identically. The ``fast`` kernel (compact only) is a vectorised idealized
loop that reproduces the step kernel draw-for-draw, and for physical
dynamics a run-length sampler that is exact in distribution but consumes
the stream differently.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import statevector as sv
from . import subspace as ss
from .problem import ConfigurationError, SearchProblem

MODES = ("idealized", "physical")
ENGINES = ("full", "compact")
KERNELS = ("step", "fast")


def default_iteration_cap(N: int) -> int:
    return math.ceil(10 * math.sqrt(N))


@dataclass(frozen=True)
class ControllerConfig:
    set_val: float = 1.0
    mode: str = "idealized"
    engine: str = "compact"
    max_iterations_per_attempt: int | None = None
    max_attempts: int = 64
    seed: int = 0
    kernel: str = "step"
    record_trace: bool = False
    max_qubits: int = sv.DEFAULT_MAX_QUBITS

    def __post_init__(self):
        if not self.set_val > 0:
            raise ConfigurationError("set_val must be positive")
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}")
        if self.engine not in ENGINES:
            raise ConfigurationError(f"engine must be one of {ENGINES}")
        if self.kernel not in KERNELS:
            raise ConfigurationError(f"kernel must be one of {KERNELS}")
        if self.kernel == "fast" and self.engine != "compact":
            raise ConfigurationError("the fast kernel requires the compact engine")
        cap = self.max_iterations_per_attempt
        if cap is not None and cap < 1:
            raise ConfigurationError("max_iterations_per_attempt must be >= 1")
        if self.max_attempts < 1:
            raise ConfigurationError("max_attempts must be >= 1")

    def iteration_cap(self, N: int) -> int:
        if self.max_iterations_per_attempt is None:
            return default_iteration_cap(N)
        return self.max_iterations_per_attempt


@dataclass
class Counters:
    c0: int = 0
    c1: int = 0

    def record(self, bit: int) -> None:
        if bit:
            self.c1 += 1
        else:
            self.c0 += 1


@dataclass
class AttemptRecord:
    iterations: int
    counters: Counters
    oracle_queries: int
    stop_reason: str
    measured_index: int
    success: bool
    final_success_probability: float
    trace: list[tuple[float, int]] | None = None


@dataclass
class SearchResult:
    attempts: list[AttemptRecord] = field(default_factory=list)
    found_index: int | None = None
    total_queries: int = 0


def ratio_reached(counters: Counters, set_val: float) -> bool:
    """``c1 / c0 >= set_val`` with ``c0 == 0`` read as an infinite ratio."""
    if counters.c0 == 0:
        return counters.c1 >= 1
    return counters.c1 / counters.c0 >= set_val


class _FullRun:
    def __init__(self, problem: SearchProblem, mode: str, max_qubits: int):
        self.problem = problem
        self.mode = mode
        self.state = sv.init_uniform(problem, max_qubits)
        self.last: sv.MeasurementOutcome | None = None

    def step(self, rng) -> sv.MeasurementOutcome:
        st, pr = self.state, self.problem
        if self.last is not None:
            sv.reset_flag(st, self.last)
        sv.apply_flag_oracle(st, pr)
        sv.apply_grover_iterate(st, pr)
        if self.mode == "physical":
            self.last, _ = sv.measure_flag(st, rng)
            return self.last
        p1 = sv.branch_probability(st, 1)
        bit = int(rng.random() < p1)
        # Idealized readout leaves the register untouched. G acted linearly on
        # both rows, so their sum is the undisturbed register G^k|s>; fold it
        # back onto flag 0 (free: a modelling device, not a circuit step).
        b = st.branches
        b[0] += b[1]
        b[1] = 0.0
        self.last = None
        return sv.MeasurementOutcome(bit, p1)

    def success_probability(self) -> float:
        return sv.success_probability(self.state, self.problem)

    def measure(self, rng) -> int:
        return sv.measure_search_register(self.state, self.problem, rng)


class _CompactRun:
    def __init__(self, problem: SearchProblem, mode: str):
        self.problem = problem
        self.mode = mode
        self.state = ss.from_search_problem(problem)

    def step(self, rng) -> sv.MeasurementOutcome:
        self.problem.charge(2)
        if self.mode == "physical":
            out, self.state = ss.iterate_and_measure(self.state, rng)
            return out
        p1 = ss.flag_probability(self.state)
        bit = int(rng.random() < p1)
        self.state = ss.grover_rotate(self.state)
        return sv.MeasurementOutcome(bit, p1)

    def success_probability(self) -> float:
        return ss.success_probability(self.state)

    def measure(self, rng) -> int:
        return ss.measure_search_register(self.state, self.problem, rng)


def _finish(problem, runner_measure, rng, start_queries, iterations, counters, reason, p_success, trace):
    index = runner_measure(rng)
    success = bool(problem.oracle(index))
    return AttemptRecord(
        iterations=iterations,
        counters=counters,
        oracle_queries=problem.query_counter - start_queries,
        stop_reason=reason,
        measured_index=index,
        success=success,
        final_success_probability=p_success,
        trace=trace,
    )


def run_attempt(problem: SearchProblem, config: ControllerConfig, rng: np.random.Generator) -> AttemptRecord:
    """One pass of the feedback loop followed by the verified register measurement."""
    if config.kernel == "fast" and not config.record_trace:
        if config.mode == "idealized":
            return _fast_idealized_attempt(problem, config, rng)
        return _skip_ahead_physical_attempt(problem, config, rng)
    start = problem.query_counter
    if config.engine == "full":
        runner = _FullRun(problem, config.mode, config.max_qubits)
    else:
        runner = _CompactRun(problem, config.mode)
    cap = config.iteration_cap(problem.N)
    counters = Counters()
    trace = [] if config.record_trace else None
    reason = "iteration_cap"
    k = 0
    while k < cap:
        out = runner.step(rng)
        k += 1
        counters.record(out.bit)
        if trace is not None:
            trace.append((out.probability_of_one, out.bit))
        if ratio_reached(counters, config.set_val):
            reason = "threshold"
            break
    return _finish(problem, runner.measure, rng, start, k, counters, reason,
                   runner.success_probability(), trace)


def _fast_idealized_attempt(problem, config, rng) -> AttemptRecord:
    start = problem.query_counter
    cap = config.iteration_cap(problem.N)
    state = ss.from_search_problem(problem)
    theta, step = state.theta, 2.0 * state.theta
    phi = state.phi
    c0 = c1 = k = 0
    reason = "iteration_cap"
    chunk = 64
    while k < cap:
        size = min(chunk, cap - k)
        saved = rng.bit_generator.state
        u = rng.random(size)
        incr = np.full(size, step)
        incr[0] = phi
        # Sequential accumulation, identical to repeated scalar addition.
        phis = np.add.accumulate(incr)
        bits = (u < np.sin(phis) ** 2).astype(np.int64)
        ones = c1 + np.cumsum(bits)
        zeros = c0 + np.arange(1, size + 1) - np.cumsum(bits)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(zeros > 0, ones / np.maximum(zeros, 1), np.inf)
        hit = np.where(zeros == 0, ones >= 1, ratio >= config.set_val)
        if hit.any():
            j = int(np.argmax(hit))
            rng.bit_generator.state = saved
            rng.random(j + 1)
            k += j + 1
            c1, c0 = int(ones[j]), int(zeros[j])
            phi = float(phis[j]) + step
            reason = "threshold"
            break
        k += size
        c1, c0 = int(ones[-1]), int(zeros[-1])
        phi = float(phis[-1]) + step
        chunk = min(chunk * 2, 1 << 16)
    problem.charge(2 * k)
    final = ss.SubspaceState(phi, theta)
    return _finish(problem, lambda r: ss.measure_search_register(final, problem, r), rng,
                   start, k, Counters(c0, c1), reason, ss.success_probability(final), None)


def _first_stop_in_ones(c0: int, c1: int, set_val: float) -> int:
    """Smallest j >= 1 with ratio_reached(c0, c1 + j)."""
    if c0 == 0:
        return 1
    j = max(1, math.ceil(set_val * c0 - c1))
    while j > 1 and (c1 + j - 1) / c0 >= set_val:
        j -= 1
    while (c1 + j) / c0 < set_val:
        j += 1
    return j


def _skip_ahead_physical_attempt(problem, config, rng) -> AttemptRecord:
    """Physical dynamics sampled run by run.

    After the first flag bit (one with probability p), every later bit
    differs from its predecessor with probability ``sin(2 theta)**2``
    whichever the predecessor was, so runs of equal bits are i.i.d.
    geometric. The ratio can only cross the threshold inside a run of ones,
    where the crossing point is found arithmetically.
    """
    start = problem.query_counter
    cap = config.iteration_cap(problem.N)
    theta = math.asin(math.sqrt(problem.p))
    flip = math.sin(2 * theta) ** 2
    bit = int(rng.random() < problem.p)
    c0 = c1 = k = 0
    reason = "iteration_cap"
    while k < cap:
        run = int(rng.geometric(flip)) if flip > 0 else cap
        run = min(run, cap - k)
        if bit == 0:
            c0 += run
            k += run
        else:
            j = _first_stop_in_ones(c0, c1, config.set_val)
            if j <= run:
                c1 += j
                k += j
                reason = "threshold"
                break
            c1 += run
            k += run
        if k < cap:
            bit ^= 1
    problem.charge(2 * k)
    final = ss.SubspaceState(2 * theta + (math.pi / 2 if bit else 0.0), theta)
    return _finish(problem, lambda r: ss.measure_search_register(final, problem, r), rng,
                   start, k, Counters(c0, c1), reason, ss.success_probability(final), None)


def run_search(problem: SearchProblem, config: ControllerConfig, rng: np.random.Generator) -> SearchResult:
    """Repeat attempts until one verifies or ``max_attempts`` is exhausted."""
    result = SearchResult()
    for _ in range(config.max_attempts):
        rec = run_attempt(problem, config, rng)
        result.attempts.append(rec)
        result.total_queries += rec.oracle_queries
        if rec.success:
            result.found_index = rec.measured_index
            break
    return result


def idealized_horizon_counts(
    p: float, horizon: int, trials: int, rng: np.random.Generator, batch: int = 1 << 22
) -> np.ndarray:
    """Ones count over a fixed horizon of ``horizon + 1`` undisturbed flag samples.

    The stopping rule is disabled; sample ``r`` uses the success law at
    ``r`` iterates, ``r = 0..horizon``. Returns one ``c1`` per trial.
    """
    theta = math.asin(math.sqrt(p))
    probs = np.sin((2 * np.arange(horizon + 1) + 1) * theta) ** 2
    out = np.empty(trials, dtype=np.int64)
    rows = max(1, batch // (horizon + 1))
    for lo in range(0, trials, rows):
        hi = min(trials, lo + rows)
        out[lo:hi] = (rng.random((hi - lo, horizon + 1)) < probs).sum(axis=1)
    return out


def run_fixed_horizon(problem: SearchProblem, config: ControllerConfig, horizon: int,
                      rng: np.random.Generator) -> tuple[Counters, list[int]]:
    """Loop without the stopping rule for exactly ``horizon + 1`` iterations.

    Returns the counters and the flag-bit sequence.
    """
    if config.engine == "full":
        runner = _FullRun(problem, config.mode, config.max_qubits)
    else:
        runner = _CompactRun(problem, config.mode)
    counters = Counters()
    bits = []
    for _ in range(horizon + 1):
        bit = runner.step(rng).bit
        counters.record(bit)
        bits.append(bit)
    return counters, bits
