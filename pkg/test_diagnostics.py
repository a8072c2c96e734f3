"""
Tests for per-run statistics and their aggregation.
"""

import numpy as np
import pytest

from diagnostics import (
    ACCEPT_RATE, LAG1_CORR, MEAN_ALPHA, MODE_JUMP_RATE, NORMCONST_RECIP, SELECT_RATE,
    RunSummary, acceptance_rate, aggregate, lag1_correlation, mean_alpha, mode_jump_rate,
    normconst_estimate, print_aggregate_report, selection_rates, summarize_run,
)
from model_zoo import mode_index
from sampler import NO_CANDIDATE, ChainTrace, StepRecord
from sampling_model import ContractViolation


def _trace(states, alphas=None, log_weights=None, groups=None):
    """Trace whose step t is accepted exactly when the state changes"""
    states = np.asarray(states, dtype=float)
    if states.ndim == 1:
        states = states[:, None]
    steps = states.shape[0] - 1
    alphas = alphas if alphas is not None else [0.5] * steps
    records = []
    for t in range(steps):
        moved = not np.array_equal(states[t], states[t + 1])
        records.append(StepRecord(
            current=states[t], candidates=np.empty((0, states.shape[1])),
            selected_k=0 if groups is None or groups[t] is not None else NO_CANDIDATE,
            W_y=1.0, W_x=1.0, alpha=alphas[t], accepted=moved,
            raw_log_weights=np.asarray(log_weights[t]) if log_weights else np.zeros(1),
            reference_log_weights=np.zeros(1),
            proposed=states[t + 1],
            group_index=groups[t] if groups is not None else 0,
        ))
    return ChainTrace(states=states, records=records)


class TestRunStatistics:

    def test_acceptance_and_mean_alpha(self):
        trace = _trace([0, 1, 1, 2, 2], alphas=[1.0, 0.2, 0.6, 0.2])
        assert acceptance_rate(trace) == pytest.approx(0.5)
        assert mean_alpha(trace) == pytest.approx(0.5)

    def test_lag1_of_a_line_is_one(self):
        assert lag1_correlation(_trace(np.arange(10.0))) == pytest.approx(1.0)

    def test_lag1_of_alternating_chain(self):
        assert lag1_correlation(_trace([-1, 1] * 6)) == pytest.approx(-1.0)

    def test_lag1_of_constant_chain_is_undefined(self):
        assert lag1_correlation(_trace([3.0] * 8)) is None

    def test_lag1_needs_three_states(self):
        with pytest.raises(ContractViolation):
            lag1_correlation(_trace([0.0, 1.0]))
        with pytest.raises(ContractViolation):
            lag1_correlation(_trace(np.arange(5.0)), coordinate=1)

    def test_mode_jumps(self):
        states = [[-7.0, 35.0], [-6.5, 34.0], [7.0, 35.0], [0.0, 10.0]]
        assert mode_jump_rate(_trace(states), mode_index) == pytest.approx(2 / 3)

    def test_normconst_estimate(self):
        log_w = [np.log([1.0, 3.0]), np.log([2.0, 2.0])]
        assert normconst_estimate(_trace([0, 1, 2], log_weights=log_w).records) == pytest.approx(0.5)

    def test_normconst_counts_zero_weights(self):
        log_w = [np.array([-np.inf, np.log(4.0)]), np.array([-np.inf, -np.inf])]
        assert normconst_estimate(_trace([0, 1, 2], log_weights=log_w).records) == pytest.approx(1.0)

    def test_normconst_all_zero(self):
        log_w = [np.full(3, -np.inf)]
        assert normconst_estimate(_trace([0, 0], log_weights=log_w).records) is None

    def test_selection_rates(self):
        trace = _trace([0, 1, 2, 3, 3], groups=[0, 1, 1, None])
        assert selection_rates(trace, 2) == pytest.approx([0.25, 0.5])


class TestSummaries:

    def test_summary_row_in_requested_order(self):
        trace = _trace([[0, 0], [1, 2], [1, 2], [3, 1], [2, 2]])
        summary = summarize_run(trace, [MEAN_ALPHA, LAG1_CORR, ACCEPT_RATE])
        assert list(summary.as_row()) == [MEAN_ALPHA, "lag1_corr_1", "lag1_corr_2", ACCEPT_RATE]

    def test_selection_columns(self):
        trace = _trace([0, 1, 2, 3], groups=[0, 1, 1])
        row = summarize_run(trace, [SELECT_RATE], groups=2).as_row()
        assert row == pytest.approx({"select_rate_1": 1 / 3, "select_rate_2": 2 / 3})

    def test_unknown_statistic(self):
        with pytest.raises(ContractViolation):
            summarize_run(_trace([0, 1, 2]), ["ess"])

    def test_mode_jumps_need_mode_function(self):
        with pytest.raises(ContractViolation):
            summarize_run(_trace([0, 1, 2]), [MODE_JUMP_RATE])

    def test_mode_jumps_cannot_exceed_acceptance(self):
        with pytest.raises(ContractViolation):
            RunSummary(acceptance_rate=0.2, mean_alpha=0.3, mode_jump_rate=0.5)

    def test_normconst_in_summary(self):
        log_w = [np.log([2.0]), np.log([2.0])]
        row = summarize_run(_trace([0, 1, 2], log_weights=log_w), [NORMCONST_RECIP]).as_row()
        assert row[NORMCONST_RECIP] == pytest.approx(0.5)


class TestAggregate:

    def test_mean_and_sample_std(self):
        runs = [RunSummary(0.2, 0.3, statistics=(ACCEPT_RATE,)),
                RunSummary(0.4, 0.5, statistics=(ACCEPT_RATE,))]
        summary = aggregate(runs)
        assert summary.runs == 2
        assert summary.means[ACCEPT_RATE] == pytest.approx(0.3)
        assert summary.stds[ACCEPT_RATE] == pytest.approx(np.sqrt(0.02))
        assert summary.as_row() == pytest.approx({"accept_rate_mean": 0.3, "accept_rate_std": np.sqrt(0.02)})

    def test_single_run_has_zero_std(self):
        summary = aggregate([RunSummary(0.7, 0.8)])
        assert summary.stds[MEAN_ALPHA] == 0.0

    def test_undefined_statistic_propagates(self):
        runs = [RunSummary(0.2, 0.3, lag1_corr=[0.5]), RunSummary(0.4, 0.5, lag1_corr=[None])]
        summary = aggregate(runs)
        assert summary.means["lag1_corr_1"] is None
        assert summary.stds["lag1_corr_1"] is None

    def test_empty_and_mismatched(self):
        with pytest.raises(ContractViolation):
            aggregate([])
        with pytest.raises(ContractViolation):
            aggregate([RunSummary(0.2, 0.3), RunSummary(0.2, 0.3, statistics=(ACCEPT_RATE,))])

    def test_report(self, capsys):
        row = {"accept_rate_mean": 0.5, "accept_rate_std": 0.01,
               "lag1_corr_1_mean": None, "lag1_corr_1_std": None}
        print_aggregate_report("RESULTS", {"technique": "MTM-rw", "N": "5"}, row)
        out = capsys.readouterr().out
        assert "MTM-rw" in out
        assert "0.5000" in out
        assert "(undefined)" in out
