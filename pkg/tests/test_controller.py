import math

import numpy as np
import pytest
from scipy import stats

from feedback_grover import controller as ctl
from feedback_grover.controller import ControllerConfig, Counters, ratio_reached
from feedback_grover.harness.stats import wilson_interval
from feedback_grover.problem import ConfigurationError, DomainError, SearchProblem
from oracles import exact_first_attempt

ENGINES = ["full", "compact"]


@pytest.mark.parametrize("c1,c0,expected", [(0, 5, False), (3, 3, True), (1, 0, True), (0, 0, False), (2, 3, False)])
def test_ratio_reached(c1, c0, expected):
    assert ratio_reached(Counters(c0=c0, c1=c1), 1.0) is expected


def test_config_validation():
    with pytest.raises(ConfigurationError):
        ControllerConfig(set_val=0)
    with pytest.raises(ConfigurationError):
        ControllerConfig(mode="quantum")
    with pytest.raises(ConfigurationError):
        ControllerConfig(engine="full", kernel="fast")
    with pytest.raises(ConfigurationError):
        ControllerConfig(max_attempts=0)


def test_default_cap():
    assert ControllerConfig().iteration_cap(1024) == 320
    assert ControllerConfig(max_iterations_per_attempt=7).iteration_cap(1024) == 7


@pytest.mark.parametrize("engine", ENGINES)
def test_idealized_forced_one_stops_immediately(engine, scripted):
    pr = SearchProblem(2, [3])
    cfg = ControllerConfig(mode="idealized", engine=engine, record_trace=True)
    rec = ctl.run_attempt(pr, cfg, scripted([scripted.force(1), 0.0, 0.0]))
    assert rec.iterations == 1 and rec.counters == Counters(0, 1)
    assert rec.stop_reason == "threshold"
    assert rec.final_success_probability == pytest.approx(1.0, abs=1e-12)
    assert rec.success and rec.measured_index == 3


@pytest.mark.parametrize("engine", ENGINES)
def test_idealized_forced_zero_one(engine, scripted):
    pr = SearchProblem(2, [3])
    cfg = ControllerConfig(mode="idealized", engine=engine, record_trace=True)
    rec = ctl.run_attempt(pr, cfg, scripted([scripted.force(0), scripted.force(1), 0.5, 0.5]))
    assert rec.iterations == 2 and rec.counters == Counters(1, 1)
    assert [b for _, b in rec.trace] == [0, 1]
    assert rec.trace[1][0] == pytest.approx(1.0)
    assert rec.final_success_probability == pytest.approx(math.sin(5 * math.pi / 6) ** 2)
    assert rec.final_success_probability == pytest.approx(0.25)


@pytest.mark.parametrize("engine", ENGINES)
def test_physical_forced_zero_one(engine, scripted):
    pr = SearchProblem(2, [3])
    cfg = ControllerConfig(mode="physical", engine=engine, record_trace=True)
    rec = ctl.run_attempt(pr, cfg, scripted([scripted.force(0), scripted.force(1), 0.9, 0.5]))
    assert rec.trace[0][0] == pytest.approx(0.25)
    assert rec.trace[1][0] == pytest.approx(0.75)
    assert rec.final_success_probability == pytest.approx(0.25)
    assert rec.counters == Counters(1, 1)


def test_cap_stops_and_still_measures(scripted):
    pr = SearchProblem.with_count(4, 1)
    cfg = ControllerConfig(mode="physical", max_iterations_per_attempt=3)
    rec = ctl.run_attempt(pr, cfg, scripted([scripted.force(0)] * 3 + [0.99, 0.5]))
    assert rec.stop_reason == "iteration_cap" and rec.iterations == 3
    assert rec.oracle_queries == 7
    assert not rec.success


@pytest.mark.parametrize("mode", ["idealized", "physical"])
@pytest.mark.parametrize("engine,kernel", [("full", "step"), ("compact", "step"), ("compact", "fast")])
def test_query_and_counter_accounting(mode, engine, kernel):
    rng = np.random.default_rng(8)
    cfg = ControllerConfig(mode=mode, engine=engine, kernel=kernel, record_trace=kernel == "step")
    for _ in range(50):
        pr = SearchProblem.with_count(5, int(rng.integers(1, 12)))
        rec = ctl.run_attempt(pr, cfg, rng)
        assert rec.oracle_queries == 2 * rec.iterations + 1
        assert rec.counters.c0 + rec.counters.c1 == rec.iterations
        assert rec.success == pr.is_target(rec.measured_index)
        if rec.trace is not None:
            assert len(rec.trace) == rec.iterations


def test_search_result_invariants():
    rng = np.random.default_rng(1)
    for mode in ("idealized", "physical"):
        pr = SearchProblem.with_count(4, 3)
        res = ctl.run_search(pr, ControllerConfig(mode=mode), rng)
        assert res.total_queries == sum(a.oracle_queries for a in res.attempts) == pr.query_counter
        assert (res.found_index is not None) == res.attempts[-1].success
        assert all(not a.success for a in res.attempts[:-1])


def test_search_exhausts_attempts():
    pr = SearchProblem.with_count(6, 1)
    cfg = ControllerConfig(mode="physical", max_iterations_per_attempt=1, max_attempts=2)
    res = ctl.run_search(pr, cfg, np.random.default_rng(0))
    if res.found_index is None:
        assert len(res.attempts) == 2


def test_all_marked_problem_is_rejected():
    with pytest.raises(DomainError):
        SearchProblem(2, range(4))


def test_determinism():
    def go():
        pr = SearchProblem.with_count(6, 5)
        res = ctl.run_search(pr, ControllerConfig(mode="physical", engine="full", record_trace=True),
                             np.random.default_rng(123))
        return res
    assert go() == go()


@pytest.mark.parametrize("mode", ["idealized", "physical"])
def test_per_attempt_success_quarter_exceeds_fifth(mode):
    rng = np.random.default_rng(2024)
    cfg = ControllerConfig(mode=mode, kernel="fast")
    trials = 100_000
    wins = sum(ctl.run_attempt(SearchProblem(2, [1]), cfg, rng).success for _ in range(trials))
    lo, _ = wilson_interval(wins, trials)
    assert lo > 0.2


def test_first_flag_bit_is_bernoulli_p_in_both_modes():
    p = 3 / 16
    for mode in ("idealized", "physical"):
        rng = np.random.default_rng(5)
        cfg = ControllerConfig(mode=mode, max_iterations_per_attempt=1, record_trace=True)
        ones = sum(ctl.run_attempt(SearchProblem.with_count(4, 3), cfg, rng).trace[0][1] for _ in range(100_000))
        assert ones / 100_000 == pytest.approx(p, abs=0.01)


def test_physical_flag_sequence_is_first_order_markov():
    theta = math.asin(math.sqrt(1 / 8))
    rng = np.random.default_rng(17)
    bits = []
    for _ in range(200):
        _, seq = ctl.run_fixed_horizon(SearchProblem.with_count(3, 1), ControllerConfig(mode="physical"), 400, rng)
        bits.append(np.array(seq))
    prev2 = np.concatenate([b[:-2] for b in bits])
    prev1 = np.concatenate([b[1:-1] for b in bits])
    nxt = np.concatenate([b[2:] for b in bits])
    for last, expected in ((0, math.sin(2 * theta) ** 2), (1, math.cos(2 * theta) ** 2)):
        sel = prev1 == last
        assert nxt[sel].mean() == pytest.approx(expected, abs=0.01)
        table = [[np.sum(sel & (prev2 == a) & (nxt == b)) for b in (0, 1)] for a in (0, 1)]
        assert stats.chi2_contingency(table).pvalue > 1e-3


def test_fixed_horizon_default_engine_matches_full():
    pr_a, pr_b = SearchProblem.with_count(5, 2), SearchProblem.with_count(5, 2)
    a = ctl.run_fixed_horizon(pr_a, ControllerConfig(mode="physical", engine="full"), 30, np.random.default_rng(4))
    b = ctl.run_fixed_horizon(pr_b, ControllerConfig(mode="physical"), 30, np.random.default_rng(4))
    assert a == b


@pytest.mark.parametrize("mode", ["idealized", "physical"])
def test_engines_agree_bit_for_bit(mode):
    rng = np.random.default_rng(99)
    for n in range(1, 9):
        for _ in range(10):
            pr = SearchProblem.random(n, int(rng.integers(1, 2**n)), rng)
            seed = int(rng.integers(2**63))
            recs = []
            for engine in ENGINES:
                pcopy = SearchProblem(n, pr.targets)
                recs.append(ctl.run_attempt(pcopy, ControllerConfig(mode=mode, engine=engine, record_trace=True),
                                            np.random.default_rng(seed)))
            full, comp = recs
            assert [b for _, b in full.trace] == [b for _, b in comp.trace]
            assert np.allclose([q for q, _ in full.trace], [q for q, _ in comp.trace], atol=1e-9)
            assert (full.measured_index, full.counters, full.oracle_queries, full.stop_reason) == \
                   (comp.measured_index, comp.counters, comp.oracle_queries, comp.stop_reason)


@pytest.mark.parametrize("n,m", [(4, 1), (6, 4), (10, 3), (20, 1), (3, 3)])
def test_fast_idealized_kernel_reproduces_step_kernel(n, m):
    for seed in range(60):
        a = ctl.run_attempt(SearchProblem.with_count(n, m), ControllerConfig(), np.random.default_rng(seed))
        b = ctl.run_attempt(SearchProblem.with_count(n, m), ControllerConfig(kernel="fast"), np.random.default_rng(seed))
        a.trace = b.trace = None
        assert a.final_success_probability == pytest.approx(b.final_success_probability, abs=1e-12)
        a.final_success_probability = b.final_success_probability
        assert a == b


@pytest.mark.parametrize("mode", ["idealized", "physical"])
@pytest.mark.parametrize("p_num,n", [(1, 4), (1, 2), (3, 3), (1, 6)])
def test_first_attempt_success_matches_exact_enumeration(mode, p_num, n):
    p = p_num / 2**n
    cap = ctl.default_iteration_cap(2**n)
    exact, mean_iters = exact_first_attempt(p, 1.0, mode, cap)
    trials = 20_000
    for kernel in ("step", "fast"):
        rng = np.random.default_rng(31)
        cfg = ControllerConfig(mode=mode, kernel=kernel)
        recs = [ctl.run_attempt(SearchProblem.with_count(n, p_num), cfg, rng) for _ in range(trials)]
        wins = sum(r.success for r in recs)
        iters = np.array([r.iterations for r in recs])
        # 99.9% interval keeps the fixed-seed suite robust over many cells.
        lo, hi = wilson_interval(wins, trials, z=3.29)
        assert lo <= exact <= hi, (kernel, wins / trials, exact)
        assert abs(iters.mean() - mean_iters) <= 3.29 * iters.std() / math.sqrt(trials) + 1e-12


def test_idealized_quarter_hand_trace():
    exact, _ = exact_first_attempt(0.25, 1.0, "idealized", 20)
    assert exact == pytest.approx(0.25 * 1.0 + 0.75 * 0.25)


def test_skip_ahead_distribution_matches_step_kernel():
    n, m = 5, 2
    iters = {}
    for kernel in ("step", "fast"):
        rng = np.random.default_rng(77)
        cfg = ControllerConfig(mode="physical", kernel=kernel)
        iters[kernel] = np.array([ctl.run_attempt(SearchProblem.with_count(n, m), cfg, rng).iterations
                                  for _ in range(20_000)])
    edges = np.unique(np.quantile(np.concatenate(list(iters.values())), np.linspace(0, 1, 12)))
    table = [np.histogram(v, bins=edges)[0] for v in iters.values()]
    table = np.array(table)
    table = table[:, table.sum(axis=0) > 0]
    assert stats.chi2_contingency(table).pvalue > 1e-3


def test_idealized_horizon_counts_mean():
    rng = np.random.default_rng(0)
    p, horizon = 1 / 16, 5
    ones = ctl.idealized_horizon_counts(p, horizon, 200_000, rng)
    expected = sum(math.sin((2 * r + 1) * math.asin(math.sqrt(p))) ** 2 for r in range(horizon + 1))
    assert ones.mean() == pytest.approx(expected, abs=4 * ones.std() / math.sqrt(ones.size))
